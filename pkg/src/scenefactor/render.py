"""Deterministic SVG rendering of layouts and inferred scene graphs."""

from __future__ import annotations

import numpy as np

__all__ = ["render_svg"]

_PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]

_EDGE_COLOR = {"same_room": "#1f77b4", "same_wall": "#d62728"}


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _bounds(planes, origins, pad=0.5):
    pts = []
    for p in planes:
        a, b = p.endpoints()
        pts.extend([a, b])
    pts.extend(np.asarray(o, dtype=np.float64) for o in origins)
    if not pts:
        return (-1.0, -1.0, 2.0, 2.0)
    arr = np.array(pts)
    lo = arr.min(axis=0) - pad
    hi = arr.max(axis=0) + pad
    return (float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def render_svg(planes, clusters=(), edges=(), origins=(),
               show_edges=True, show_origins=True, scale=80.0) -> str:
    """Render a scene as an SVG string.

    Parameters
    ----------
    planes : dict of int -> Plane2D
        Planes keyed by node id; drawn as line segments with a short
        normal tick at the centroid.
    clusters : sequence of ConceptCluster
        Member planes of each cluster share a palette color.
    edges : sequence of (pair, label)
        Classified edges drawn centroid-to-centroid, colored by label.
    origins : sequence of (x, y)
        Concept origins drawn as filled dots.
    show_edges, show_origins : bool
        Layer toggles.
    scale : float
        Pixels per meter.

    Returns
    -------
    str
        A complete SVG document.  Output is byte-identical for
        identical inputs.
    """
    plane_ids = sorted(planes)
    color_of = {}
    for ci, cluster in enumerate(sorted(clusters, key=lambda c: c.members)):
        for pid in cluster.members:
            color_of[pid] = _PALETTE[ci % len(_PALETTE)]

    x0, y0, w, h = _bounds([planes[i] for i in plane_ids],
                           [o for o in origins])
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(w * scale)}" height="{_fmt(h * scale)}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}">',
        # Flip y so +y points up, as in world coordinates.
        f'<g transform="translate(0,{_fmt(2 * y0 + h)}) scale(1,-1)">',
    ]

    if show_edges:
        for (u, v), label in sorted(edges, key=lambda e: tuple(e[0])):
            if label not in _EDGE_COLOR:
                continue
            cu, cv = planes[u].centroid, planes[v].centroid
            lines.append(
                f'<line x1="{_fmt(cu[0])}" y1="{_fmt(cu[1])}" '
                f'x2="{_fmt(cv[0])}" y2="{_fmt(cv[1])}" '
                f'stroke="{_EDGE_COLOR[label]}" stroke-width="0.02" '
                f'stroke-dasharray="0.05,0.05"/>')

    for pid in plane_ids:
        p = planes[pid]
        a, b = p.endpoints()
        color = color_of.get(pid, "#333333")
        lines.append(
            f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" '
            f'x2="{_fmt(b[0])}" y2="{_fmt(b[1])}" '
            f'stroke="{color}" stroke-width="0.04"/>')
        tip = p.centroid + 0.12 * p.normal
        lines.append(
            f'<line x1="{_fmt(p.centroid[0])}" y1="{_fmt(p.centroid[1])}" '
            f'x2="{_fmt(tip[0])}" y2="{_fmt(tip[1])}" '
            f'stroke="{color}" stroke-width="0.02"/>')

    if show_origins:
        for o in sorted((tuple(np.asarray(o, dtype=np.float64)) for o in origins)):
            lines.append(
                f'<circle cx="{_fmt(o[0])}" cy="{_fmt(o[1])}" r="0.08" '
                f'fill="#000000"/>')

    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
