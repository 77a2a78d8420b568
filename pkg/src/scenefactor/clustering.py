"""Concept clustering from classified edges.

Rooms are recovered as simple cycles in the ``same_room`` subgraph
(bounded length, longest first); walls as a greedy matching on the
``same_wall`` subgraph.  Both procedures are deterministic: ties are
broken lexicographically on the sorted member tuple, so the output is
a pure function of the classified edge set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "ConceptCluster",
    "MAX_CYCLE_LEN",
    "enumerate_cycles",
    "cluster_rooms",
    "cluster_walls",
    "cluster_concepts",
]

#: Maximum room-cycle length considered during clustering.
MAX_CYCLE_LEN = 10

#: Safety cap on the number of cycle-extension steps explored per
#: connected subgraph; prevents pathological blowup on dense graphs.
_ENUM_BUDGET = 200_000


@dataclass(frozen=True)
class ConceptCluster:
    """A clustered concept hypothesis (one room or one wall).

    Attributes
    ----------
    kind : str
        ``"room"`` or ``"wall"``.
    members : tuple of int
        Sorted plane node ids belonging to the concept.
    score : float
        Mean classifier probability over the supporting edges.
    acyclic : bool
        True when a room was recovered from a leftover acyclic
        component rather than a closed cycle.
    """

    kind: str
    members: tuple
    score: float
    acyclic: bool = False

    def __post_init__(self):
        if self.kind not in ("room", "wall"):
            raise ValueError(f"unknown concept kind {self.kind!r}")
        if tuple(sorted(self.members)) != tuple(self.members):
            raise ValueError("members must be sorted")
        if len(set(self.members)) != len(self.members):
            raise ValueError("members must be unique")


def _adjacency(edges):
    adj = {}
    for (u, v) in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def enumerate_cycles(edges, max_len=MAX_CYCLE_LEN):
    """Enumerate simple cycles of length 3..max_len in an undirected graph.

    Parameters
    ----------
    edges : iterable of (int, int)
        Undirected edges as node-id pairs.
    max_len : int
        Longest cycle length to report.

    Returns
    -------
    list of tuple
        Each cycle as a tuple of node ids in traversal order, starting
        at its smallest node.  Each undirected cycle appears exactly
        once.  The list is sorted by (length, members) for determinism.
    """
    adj = _adjacency(edges)
    cycles = []
    budget = _ENUM_BUDGET
    for start in sorted(adj):
        # Only visit nodes >= start so every cycle is found exactly once,
        # rooted at its minimum node.
        stack = [(start, [start], {start})]
        while stack:
            if budget <= 0:
                break
            node, path, seen = stack.pop()
            for nxt in sorted(adj[node], reverse=True):
                budget -= 1
                if nxt == start and len(path) >= 3:
                    # Dedupe the two traversal directions: keep the one
                    # whose second node is smaller than its last.
                    if path[1] < path[-1]:
                        cycles.append(tuple(path))
                    continue
                if nxt <= start or nxt in seen or len(path) >= max_len:
                    continue
                stack.append((nxt, path + [nxt], seen | {nxt}))
    cycles.sort(key=lambda c: (len(c), tuple(sorted(c))))
    return cycles


def _components(adj):
    seen = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        comps.append(sorted(comp))
    return comps


def cluster_rooms(edges, probs, max_len=MAX_CYCLE_LEN):
    """Cluster ``same_room`` edges into room concepts.

    Enumerates simple cycles up to ``max_len`` and greedily packs
    vertex-disjoint cycles, preferring longer cycles, then higher mean
    edge probability, then the lexicographically smallest member set.
    Remaining connected components of size >= 2 are kept as acyclic
    room hypotheses.

    Parameters
    ----------
    edges : sequence of (int, int)
        Undirected edges classified as ``same_room``.
    probs : sequence of float
        Classifier probability for each edge, parallel to ``edges``.

    Returns
    -------
    list of ConceptCluster
    """
    edges = [tuple(sorted(e)) for e in edges]
    prob_of = {e: float(p) for e, p in zip(edges, probs)}
    cycles = enumerate_cycles(edges, max_len=max_len)

    def mean_prob(nodes):
        ring = list(nodes) + [nodes[0]]
        vals = [prob_of[tuple(sorted((ring[i], ring[i + 1])))]
                for i in range(len(nodes))]
        return sum(vals) / len(vals)

    order = sorted(
        cycles,
        key=lambda c: (-len(c), -mean_prob(c), tuple(sorted(c))),
    )
    used = set()
    clusters = []
    for cyc in order:
        if any(n in used for n in cyc):
            continue
        used.update(cyc)
        clusters.append(ConceptCluster(
            kind="room",
            members=tuple(sorted(cyc)),
            score=mean_prob(cyc),
        ))

    leftover = [e for e in edges if e[0] not in used and e[1] not in used]
    if leftover:
        adj = _adjacency(leftover)
        for comp in _components(adj):
            if len(comp) < 2:
                continue
            comp_set = set(comp)
            vals = [prob_of[e] for e in leftover
                    if e[0] in comp_set and e[1] in comp_set]
            clusters.append(ConceptCluster(
                kind="room",
                members=tuple(comp),
                score=sum(vals) / len(vals),
                acyclic=True,
            ))

    clusters.sort(key=lambda c: c.members)
    return clusters


def cluster_walls(edges, probs):
    """Cluster ``same_wall`` edges into wall concepts.

    Greedy matching: edges are taken in descending probability order
    (ties broken by the sorted node pair); each plane joins at most one
    wall.

    Parameters
    ----------
    edges : sequence of (int, int)
        Undirected edges classified as ``same_wall``.
    probs : sequence of float
        Classifier probability for each edge, parallel to ``edges``.

    Returns
    -------
    list of ConceptCluster
    """
    order = sorted(
        zip((tuple(sorted(e)) for e in edges), (float(p) for p in probs)),
        key=lambda ep: (-ep[1], ep[0]),
    )
    used = set()
    clusters = []
    for (u, v), p in order:
        if u in used or v in used:
            continue
        used.update((u, v))
        clusters.append(ConceptCluster(kind="wall", members=(u, v), score=p))
    clusters.sort(key=lambda c: c.members)
    return clusters


def cluster_concepts(classified):
    """Cluster a full set of classified edges into rooms and walls.

    Parameters
    ----------
    classified : sequence of (pair, label, prob)
        Output of the edge classifier: node pair, class label string,
        and the probability of the predicted class.

    Returns
    -------
    (list of ConceptCluster, list of ConceptCluster)
        Room clusters and wall clusters.
    """
    room_e, room_p, wall_e, wall_p = [], [], [], []
    for pair, label, prob in classified:
        if label == "same_room":
            room_e.append(pair)
            room_p.append(prob)
        elif label == "same_wall":
            wall_e.append(pair)
            wall_p.append(prob)
    rooms = cluster_rooms(room_e, room_p)
    walls = cluster_walls(wall_e, wall_p)
    return rooms, walls
