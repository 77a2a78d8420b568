"""Command-line interface.

Every intermediate artifact is a JSON-lines file; model checkpoints are
npz archives.  ``scenefactor --help`` lists the subcommands; the main
flow is generate -> train-edges / train-origins -> pipeline -> optimize
-> eval, with classify / cluster / infer-origins exposing the
individual stages and render producing SVG figures.
"""

from __future__ import annotations

import json
import sys
import time

import click
import numpy as np

from . import dataio
from .clustering import ConceptCluster, cluster_concepts
from .edge_classifier import GGnnModel, classify_edges, edge_labels, \
    train_edge_classifier
from .factors import LMConfig, optimize as lm_optimize
from .generator import GeneratorConfig, generate_dataset
from .geometry import Origin2D, param_to_plane
from .graphs import EDGE_CLASSES, build_proximity_graph
from .metrics import evaluate_edges, evaluate_origins
from .origin_regressor import FGnnModel, concept_training_set, infer_origin, \
    train_origin_regressor
from .pipeline import problem_from_scene, run_pipeline


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Base RNG seed for stochastic commands.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config file (command-specific keys).")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for per-building evaluation.")
@click.option("--verbose", is_flag=True, help="Chatty progress output.")
@click.pass_context
def main(ctx, seed, config_path, threads, verbose):
    """Metric-semantic factor graphs from planar segments."""
    cfg = {}
    if config_path:
        with open(config_path) as fh:
            cfg = json.load(fh)
    ctx.obj = {"seed": seed, "config": cfg, "threads": threads,
               "verbose": verbose}


def _log(ctx, msg):
    if ctx.obj["verbose"]:
        click.echo(msg, err=True)


def _load_samples(path):
    return [dataio.sample_from_record(rec) for rec in dataio.read_jsonl(path)]


def _load_scenes(path):
    return [dataio.scene_from_record(rec) for rec in dataio.read_jsonl(path)]


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Output dataset (jsonl).")
@click.option("--n", "n_buildings", type=int, default=None,
              help="Override the number of buildings.")
@click.pass_context
def generate(ctx, out, n_buildings):
    """Generate a synthetic building dataset."""
    d = dict(ctx.obj["config"])
    d.setdefault("seed", ctx.obj["seed"])
    if n_buildings is not None:
        d["n_buildings"] = n_buildings
    cfg = GeneratorConfig.from_dict(d)
    t0 = time.perf_counter()
    dataio.write_jsonl(out, (dataio.sample_to_record(s)
                             for s in generate_dataset(cfg)))
    _log(ctx, f"wrote {cfg.n_buildings} buildings to {out} "
              f"in {time.perf_counter() - t0:.2f}s")


@main.command("train-edges")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--epochs", type=int, default=60, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch", type=int, default=16, show_default=True)
@click.pass_context
def train_edges(ctx, data, out, epochs, lr, batch):
    """Train the edge classifier (G-GNN)."""
    samples = _load_samples(data)
    cfg = dict(ctx.obj["config"])
    cfg.update(epochs=epochs, lr=lr, batch_size=batch)
    rng = np.random.default_rng(ctx.obj["seed"])
    model, report = train_edge_classifier(samples, cfg, rng=rng)
    model.save(out)
    _log(ctx, f"best epoch {report.best_epoch}, "
              f"val loss {min(report.val_loss):.4f}")


@main.command("train-origins")
@click.option("--kind", required=True, type=click.Choice(["room", "wall"]))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--epochs", type=int, default=80, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.pass_context
def train_origins(ctx, kind, data, out, epochs, lr, batch):
    """Train an origin regressor (F-GNN) for rooms or walls."""
    samples = _load_samples(data)
    dataset = concept_training_set(samples, kind)
    cfg = dict(ctx.obj["config"])
    cfg.update(epochs=epochs, lr=lr, batch_size=batch)
    rng = np.random.default_rng(ctx.obj["seed"])
    model, report = train_origin_regressor(dataset, kind, cfg, rng=rng)
    model.save(out)
    _log(ctx, f"best epoch {report.best_epoch}, "
              f"val loss {min(report.val_loss):.4f}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--k", type=int, default=10, show_default=True)
def classify(model_path, scene_path, out, k):
    """Classify proximity edges of each scene."""
    model = GGnnModel.load(model_path)
    records = []
    for scene in _load_scenes(scene_path):
        graph = build_proximity_graph(scene.planes(), k)
        classified = classify_edges(model, graph)
        records.append({
            "planes": [dataio.plane_to_record(pid, p)
                       for pid, p in sorted(scene.planes().items())],
            "edges": [{"src": u, "dst": v, "label": label,
                       "proba": proba.tolist()}
                      for (u, v), (label, proba) in sorted(classified.items())],
        })
    dataio.write_jsonl(out, records)


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--classified", "classified_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def cluster(scene_path, classified_path, out):
    """Cluster classified edges into room/wall concepts."""
    scenes = _load_scenes(scene_path)
    records = []
    for scene, crec in zip(scenes, dataio.read_jsonl(classified_path)):
        triples = [((e["src"], e["dst"]), e["label"],
                    e["proba"][EDGE_CLASSES.index(e["label"])])
                   for e in crec["edges"]]
        rooms, walls = cluster_concepts(triples)
        records.append({
            "planes": [dataio.plane_to_record(pid, p)
                       for pid, p in sorted(scene.planes().items())],
            "clusters": [{"kind": c.kind, "members": list(c.members),
                          "score": c.score, "acyclic": c.acyclic}
                         for c in rooms + walls],
        })
    dataio.write_jsonl(out, records)


@main.command("infer-origins")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--clusters", "clusters_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def infer_origins(model_path, clusters_path, out):
    """Infer origins for the clusters matching the model's concept kind."""
    model = FGnnModel.load(model_path)
    records = []
    for rec in dataio.read_jsonl(clusters_path):
        planes = dict(dataio.plane_from_record(pr) for pr in rec["planes"])
        origins = []
        for c in rec["clusters"]:
            if c["kind"] != model.kind:
                continue
            origin = infer_origin(model, [planes[p] for p in c["members"]])
            origins.append({"kind": c["kind"], "members": c["members"],
                            "origin": origin.xy.tolist()})
        records.append({"origins": origins})
    dataio.write_jsonl(out, records)


@main.command("optimize")
@click.option("--problem", "problem_path", required=True,
              type=click.Path(exists=True))
@click.option("--room-model", required=True, type=click.Path(exists=True))
@click.option("--wall-model", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--lambda0", type=float, default=1e-4, show_default=True)
@click.option("--max-iters", type=int, default=100, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.pass_context
def optimize_cmd(ctx, problem_path, room_model, wall_model, out,
                 lambda0, max_iters, tol):
    """Optimize scene graphs with Levenberg-Marquardt."""
    room = FGnnModel.load(room_model).freeze()
    wall = FGnnModel.load(wall_model).freeze()
    cfg = LMConfig(lambda0=lambda0, max_iters=max_iters, tol=tol)
    records = []
    for scene in _load_scenes(problem_path):
        problem = problem_from_scene(scene, room, wall)
        report = lm_optimize(problem, cfg, verbose=ctx.obj["verbose"])
        for pid, var in problem.plane_vars.items():
            old = scene.nodes[pid].plane
            scene.add_plane(pid, param_to_plane(var.param, old.centroid,
                                                old.length))
        for oid, var in problem.origin_vars.items():
            node = scene.nodes[oid]
            scene.add_concept(oid, node.kind, Origin2D(var.value))
        rec = dataio.scene_to_record(scene)
        rec["optimization"] = {"costs": report.costs,
                               "converged": report.converged}
        records.append(rec)
    dataio.write_jsonl(out, records)


@main.command("pipeline")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--g-model", required=True, type=click.Path(exists=True))
@click.option("--room-model", required=True, type=click.Path(exists=True))
@click.option("--wall-model", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--timings", is_flag=True,
              help="Embed per-stage wall-clock timings in each record "
                   "(makes the output non-deterministic).")
@click.pass_context
def pipeline_cmd(ctx, scene_path, g_model, room_model, wall_model, out, k,
                 timings):
    """Full scene-graph generation: classify, cluster, infer origins."""
    g = GGnnModel.load(g_model)
    room = FGnnModel.load(room_model).freeze()
    wall = FGnnModel.load(wall_model).freeze()
    records = []
    for i, scene in enumerate(_load_scenes(scene_path)):
        result = run_pipeline(scene.planes(), g, room, wall, k=k)
        rec = dataio.scene_to_record(result.scene, scene_id=i)
        if timings:
            rec["timings"] = {k_: round(v, 6)
                              for k_, v in result.timings.items()}
        records.append(rec)
        _log(ctx, f"scene {i}: {len(result.clusters)} concepts "
                  f"in {result.total_time:.3f}s")
    dataio.write_jsonl(out, records)


@main.command("eval")
@click.option("--data", required=True, type=click.Path(exists=True),
              help="Ground-truth dataset (jsonl).")
@click.option("--g-model", required=True, type=click.Path(exists=True))
@click.option("--room-model", required=True, type=click.Path(exists=True))
@click.option("--wall-model", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--k", type=int, default=10, show_default=True)
@click.pass_context
def eval_cmd(ctx, data, g_model, room_model, wall_model, out, k):
    """Evaluate trained models against a ground-truth dataset."""
    g = GGnnModel.load(g_model)
    room = FGnnModel.load(room_model).freeze()
    wall = FGnnModel.load(wall_model).freeze()
    samples = _load_samples(data)
    report = evaluate_models(samples, g, room, wall, k=k)
    lines = [f"{key} = {value}" for key, value in sorted(report.items())]
    text = "\n".join(lines) + "\n"
    with open(out, "w") as fh:
        fh.write(text)
    if ctx.obj["verbose"]:
        click.echo(text, err=True)


def evaluate_models(samples, g_model, room_model, wall_model, k=10):
    """Aggregate edge and origin metrics over a list of BuildingSamples.

    Returns a flat dict: the MetricsReport as written by ``eval``.
    """
    y_true, y_pred, probas = [], [], []
    room_pm, room_po, room_gm, room_go = [], [], [], []
    wall_pm, wall_po, wall_gm, wall_go = [], [], [], []
    gen_times, n_factors, factor_time = [], 0, 0.0
    for si, sample in enumerate(samples):
        if len(sample.observed) < 2:
            continue
        graph = build_proximity_graph(sample.observed, k)
        labels = edge_labels(sample, graph)
        t0 = time.perf_counter()
        result = run_pipeline(sample.observed, g_model, room_model,
                              wall_model, k=k)
        gen_times.append(time.perf_counter() - t0)
        pred_of = {}
        for pair, (label, proba) in classify_edges(g_model, graph).items():
            pred_of[pair] = (EDGE_CLASSES.index(label), proba)
        for e, lab in zip(graph.edges_of_kind("proximity"), labels):
            cls, proba = pred_of[(e.src, e.dst)]
            y_true.append(int(lab))
            y_pred.append(cls)
            probas.append(proba)
        # Origins: predictions live in observed-plane id space; map
        # ground truth through provenance.  Member ids are prefixed
        # with the sample index so concepts never match across
        # buildings.
        inv = sample.provenance
        for ci, cluster in enumerate(result.clusters):
            oid = result.concept_of_cluster[ci]
            members = {(si, inv[p]) for p in cluster.members}
            xy = result.origins[oid].xy
            if cluster.kind == "room":
                room_pm.append(members)
                room_po.append(xy)
            else:
                wall_pm.append(members)
                wall_po.append(xy)
        for r in sample.rooms:
            room_gm.append({(si, p) for p in r.plane_ids})
            room_go.append(np.asarray(r.origin, dtype=np.float64))
        for w in sample.walls:
            wall_gm.append({(si, p) for p in w.plane_ids})
            wall_go.append(np.asarray(w.origin, dtype=np.float64))
        for factor in result.problem.factors:
            params = [result.problem.plane_vars[pid].param
                      for pid in factor.plane_ids]
            t0 = time.perf_counter()
            factor.evaluate(params)
            factor_time += time.perf_counter() - t0
            n_factors += 1

    report = {}
    em = evaluate_edges(y_true, y_pred, np.array(probas))
    report["edge.precision"] = round(em.precision, 6)
    report["edge.recall"] = round(em.recall, 6)
    report["edge.auc"] = round(em.auc, 6)
    for kind, pm, po, gm, go in (("room", room_pm, room_po, room_gm, room_go),
                                 ("wall", wall_pm, wall_po, wall_gm, wall_go)):
        try:
            om = evaluate_origins(pm, po, gm, go)
            report[f"origin.{kind}.rmse_m"] = round(om.rmse_m, 6)
            report[f"origin.{kind}.mse_m2"] = round(om.mse_m2, 6)
            report[f"origin.{kind}.matched"] = om.n_matched
            report[f"origin.{kind}.total_gt"] = om.n_gt
        except ValueError:
            report[f"origin.{kind}.rmse_m"] = "nan"
    report["time.generation_s_median"] = round(float(np.median(gen_times)), 6) \
        if gen_times else 0.0
    report["time.factor_eval_us_mean"] = round(1e6 * factor_time / n_factors, 3) \
        if n_factors else 0.0
    report["n.samples"] = len(samples)
    report["n.edges"] = len(y_true)
    return report


@main.command("render")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--index", type=int, default=0, show_default=True,
              help="Record index within the jsonl file.")
@click.option("--no-edges", is_flag=True)
@click.option("--no-origins", is_flag=True)
def render_cmd(scene_path, out, index, no_edges, no_origins):
    """Render a scene record to SVG."""
    from .render import render_svg
    scenes = _load_scenes(scene_path)
    if not 0 <= index < len(scenes):
        raise click.UsageError(f"index {index} out of range (file has "
                               f"{len(scenes)} records)")
    scene = scenes[index]
    members = {}
    for e in scene.edges_of_kind("membership"):
        members.setdefault(e.src, []).append(e.dst)
    clusters = [ConceptCluster(kind=scene.nodes[oid].kind,
                               members=tuple(sorted(m)), score=1.0)
                for oid, m in sorted(members.items())]
    edges = [((e.src, e.dst), e.kind) for e in scene.edges
             if e.kind in ("same_room", "same_wall")]
    origins = [scene.nodes[oid].origin.xy for oid in sorted(members)]
    svg = render_svg(scene.planes(), clusters=clusters, edges=edges,
                     origins=origins, show_edges=not no_edges,
                     show_origins=not no_origins)
    with open(out, "w") as fh:
        fh.write(svg)


if __name__ == "__main__":
    main()
