"""Closed-loop simulation episodes and the collision/detour experiment.

An episode drives an agent around a roadmap through a fixed target list.
After every traversed edge the agent replans with a fresh risk table built
from the latest observations, so prediction quality feeds straight into the
realized collision count. The experiment sweeps the risk weight r over the
same world and reports collisions avoided versus detour relative to r = 0.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import config_hash, resolve_config
from .planner import EscapeController, plan
from .prediction import (
    HORIZON,
    ConstantVelocityPredictor,
    OraclePredictor,
    TrainedPredictor,
    buffers_from_history,
)
from .prediction.training import ModelSet
from .riskgraph import EMPTY_TABLE, classification_table, regression_table
from .roadmap import build_roadmap
from .world import make_world, stream_seed


class HarnessError(RuntimeError):
    """An episode could not finish; the message carries diagnostics."""


def draw_targets(node_count: int, count: int, master_seed: int):
    """Start node plus a target sequence, consecutive entries distinct.

    Depends only on (node_count, count, master_seed), so every r value of a
    sweep visits the same places.
    """
    rng = np.random.default_rng(stream_seed(master_seed, "targets"))
    start = int(rng.integers(node_count))
    targets = []
    prev = start
    for _ in range(count):
        nxt = int(rng.integers(node_count))
        while nxt == prev:
            nxt = int(rng.integers(node_count))
        targets.append(nxt)
        prev = nxt
    return start, targets


def make_predictor(prediction_cfg: dict, world, v_max: float):
    kind = prediction_cfg["predictor"]
    if kind == "baseline":
        return ConstantVelocityPredictor(v_max)
    if kind == "oracle":
        return OraclePredictor(world, v_max)
    path = prediction_cfg.get("model_path")
    if not path:
        raise ValueError("trained predictor needs prediction.model_path")
    return TrainedPredictor(ModelSet.load(path))


def make_table_fn(world, roadmap, prediction_cfg: dict, v_max: float):
    """Risk-table provider keyed by integer observation time.

    Returns a callable t_obs -> StepRiskTable. Tables are cached because
    several short edges are often traversed within one observation interval.
    """
    pipeline = prediction_cfg["pipeline"]
    if pipeline == "none":
        return lambda t_obs: EMPTY_TABLE
    predictor = make_predictor(prediction_cfg, world, v_max)
    needs_future = isinstance(predictor, OraclePredictor)
    history: dict = {}
    cache: dict = {}
    seen = [-1]

    def table_fn(t_obs: int):
        if t_obs in cache:
            return cache[t_obs]
        if needs_future:
            world.ensure_time(t_obs + HORIZON)
        for ti in range(seen[0] + 1, t_obs + 1):
            for oid, pos in world.observe(float(ti)):
                history.setdefault(oid, []).append(pos)
        seen[0] = max(seen[0], t_obs)
        buffers = buffers_from_history(history, t_obs)
        if pipeline == "regression":
            trajectories = [
                (buf.anchor, predictor.predict_points(buf)) for buf in buffers
            ]
            table = regression_table(roadmap, trajectories)
        else:
            grid_sets = [predictor.predict_grids(buf) for buf in buffers]
            table = classification_table(roadmap, grid_sets)
        cache[t_obs] = table
        return table

    return table_fn


@dataclass
class EpisodeResult:
    r: float
    length: float
    collisions: int
    edges: int
    end_time: float
    escape_activations: int
    legs: list = field(default_factory=list)
    visits: list = field(default_factory=list)  # (time, node) when recorded


def run_episode(
    world,
    roadmap,
    start: int,
    targets,
    r: float,
    table_fn,
    escape: bool = True,
    planner_cfg: dict = None,
    max_steps: int = 5000,
    record_visits: bool = False,
) -> EpisodeResult:
    """Drive the agent through all targets, replanning after every edge.

    max_steps bounds the edges spent on a single target; exceeding it raises
    HarnessError with the loop diagnostics instead of spinning forever.
    """
    pc = planner_cfg or {}
    T = 0.0
    node = start
    total_length = 0.0
    total_collisions = 0
    total_edges = 0
    activations = 0
    legs = []
    visits = [(0.0, start)] if record_visits else []
    for target in targets:
        controller = None
        if escape and r > 0.0:
            controller = EscapeController(
                base_r=r,
                revisit_threshold=pc.get("revisit_threshold", 3),
                window=pc.get("revisit_window", 12),
                progress_steps=pc.get("progress_steps", 5),
            )
        leg_edges = 0
        leg_length = 0.0
        leg_collisions = 0
        while node != target:
            if leg_edges >= max_steps:
                raise HarnessError(
                    f"no progress after {leg_edges} edges: node {node}, "
                    f"target {target}, time {T:.2f}, r {r}, "
                    f"halvings {controller.halvings if controller else 0}"
                )
            t_obs = int(math.floor(T + 1e-9))
            t0 = max(0.0, T - t_obs)
            eff_r = controller.effective_r if controller else r
            table = table_fn(t_obs) if eff_r > 0.0 else EMPTY_TABLE
            result = plan(roadmap, node, target, t0, eff_r, table)
            if result is None:
                raise HarnessError(f"target {target} unreachable from {node}")
            nxt = result.nodes[1]
            length = roadmap.distance(node, nxt)
            arrival = T + length
            world.ensure_time(arrival)
            p = roadmap.node_xy(node)
            q = roadmap.node_xy(nxt)
            for track in world.tracks.values():
                if track.crosses(p, q, T, arrival):
                    leg_collisions += 1
            leg_edges += 1
            leg_length += length
            T = arrival
            node = nxt
            if record_visits:
                visits.append((T, node))
            if controller is not None:
                tx, ty = roadmap.node_xy(target)
                nx, ny = roadmap.node_xy(node)
                controller.on_arrival(node, math.hypot(nx - tx, ny - ty))
        if controller is not None:
            activations += controller.activations
        total_edges += leg_edges
        total_length += leg_length
        total_collisions += leg_collisions
        legs.append(
            {
                "target": target,
                "edges": leg_edges,
                "length": leg_length,
                "collisions": leg_collisions,
            }
        )
    return EpisodeResult(
        r=r,
        length=total_length,
        collisions=total_collisions,
        edges=total_edges,
        end_time=T,
        escape_activations=activations,
        legs=legs,
        visits=visits,
    )


def build_assets(cfg: dict, master_seed: int):
    """World, roadmap, start node and target list for one (config, seed)."""
    world = make_world(cfg["world"], master_seed)
    rm = cfg["roadmap"]
    rng = np.random.default_rng(stream_seed(master_seed, "roadmap"))
    roadmap = build_roadmap(
        world.mapspec, rm["nodes"], rm["radius"], rm["max_edge_length"], rng
    )
    start, targets = draw_targets(
        roadmap.node_count, cfg["experiment"]["targets"], master_seed
    )
    return world, roadmap, start, targets


def run_single(cfg: dict, master_seed: int, r: float, record_visits=False):
    """One episode at one risk weight; fresh world, shared determinism."""
    world, roadmap, start, targets = build_assets(cfg, master_seed)
    table_fn = make_table_fn(
        world, roadmap, cfg["prediction"], cfg["world"]["v_max"]
    )
    return run_episode(
        world,
        roadmap,
        start,
        targets,
        r,
        table_fn,
        escape=cfg["planner"]["escape"],
        planner_cfg=cfg["planner"],
        max_steps=cfg["experiment"]["max_steps"],
        record_visits=record_visits,
    )


def sweep(cfg: dict, master_seed: int):
    """All r values on the same traffic; relative metrics against r = 0."""
    r_values = sorted(float(r) for r in cfg["experiment"]["r_values"])
    if r_values[0] != 0.0:
        raise ValueError("r_values must include 0 for the baseline")
    episodes = [run_single(cfg, master_seed, r) for r in r_values]
    base = episodes[0]
    rows = []
    for ep in episodes:
        if base.collisions > 0:
            avoided = 100.0 * (1.0 - ep.collisions / base.collisions)
        else:
            avoided = 100.0 if ep.collisions == 0 else float("nan")
        detour = 100.0 * (ep.length / base.length - 1.0)
        rows.append(
            {
                "r": ep.r,
                "collisions": ep.collisions,
                "avoided_pct": avoided,
                "length": ep.length,
                "detour_pct": detour,
                "edges": ep.edges,
                "escape_activations": ep.escape_activations,
            }
        )
    return rows


@dataclass
class ExperimentResult:
    config: dict
    master_seed: int
    rows: list  # one list of sweep rows per repeat
    aggregate: list  # one dict per r value

    @property
    def r_values(self):
        return [row["r"] for row in self.aggregate]


def run_experiment(cfg: dict, master_seed: int) -> ExperimentResult:
    repeats = cfg["experiment"]["repeats"]
    per_repeat = [sweep(cfg, master_seed + i) for i in range(repeats)]
    aggregate = []
    for j in range(len(per_repeat[0])):
        rows = [rep[j] for rep in per_repeat]
        agg = {"r": rows[0]["r"]}
        for key in ("collisions", "avoided_pct", "length", "detour_pct"):
            vals = [row[key] for row in rows]
            agg[key + "_mean"] = float(np.mean(vals))
            agg[key + "_min"] = float(min(vals))
            agg[key + "_max"] = float(max(vals))
        aggregate.append(agg)
    return ExperimentResult(
        config=cfg, master_seed=master_seed, rows=per_repeat, aggregate=aggregate
    )


COMPARISON_COLUMNS = [
    "r",
    "collisions_mean",
    "collisions_min",
    "collisions_max",
    "avoided_pct_mean",
    "avoided_pct_min",
    "avoided_pct_max",
    "length_mean",
    "length_min",
    "length_max",
    "detour_pct_mean",
    "detour_pct_min",
    "detour_pct_max",
]


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def render_outputs(result: ExperimentResult) -> dict:
    """All experiment artifacts as path-less text, keyed by file name."""
    comparison = _csv_text(
        COMPARISON_COLUMNS,
        [[agg[c] for c in COMPARISON_COLUMNS] for agg in result.aggregate],
    )
    absolute = _csv_text(
        ["r", "collisions", "length"],
        [
            [agg["r"], agg["collisions_mean"], agg["length_mean"]]
            for agg in result.aggregate
        ],
    )
    relative = _csv_text(
        ["r", "avoided_pct", "detour_pct"],
        [
            [agg["r"], agg["avoided_pct_mean"], agg["detour_pct_mean"]]
            for agg in result.aggregate
        ],
    )
    outputs = {
        "comparison.csv": comparison,
        "plot_absolute.csv": absolute,
        "plot_relative.csv": relative,
    }
    log = {
        "version": __version__,
        "master_seed": result.master_seed,
        "config": result.config,
        "config_hash": config_hash(result.config),
        "rows": result.rows,
        "aggregate": result.aggregate,
        "csv_sha256": {
            name: hashlib.sha256(text.encode()).hexdigest()
            for name, text in outputs.items()
        },
    }
    outputs["run_log.json"] = json.dumps(log, indent=2, sort_keys=True) + "\n"
    return outputs


def write_outputs(result: ExperimentResult, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    outputs = render_outputs(result)
    for name, text in outputs.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)
    return outputs


@dataclass
class ReplayResult:
    ok: bool
    mismatches: list


def replay(log_path: str) -> ReplayResult:
    """Re-run the experiment recorded in a run log and compare artifacts.

    The embedded config and master seed drive a fresh run; the regenerated
    CSV text must match the recorded sha256 digests byte for byte.
    """
    with open(log_path) as fh:
        log = json.load(fh)
    cfg = resolve_config(log["config"])
    if config_hash(cfg) != log["config_hash"]:
        return ReplayResult(False, ["config_hash"])
    result = run_experiment(cfg, log["master_seed"])
    outputs = render_outputs(result)
    mismatches = []
    for name, digest in log["csv_sha256"].items():
        fresh = hashlib.sha256(outputs[name].encode()).hexdigest()
        if fresh != digest:
            mismatches.append(name)
    return ReplayResult(not mismatches, mismatches)


def write_trajectories(world, path: str):
    """Observation history as CSV rows (t, obstacle_id, x, y)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "obstacle_id", "x", "y"])
        for t, oid, x, y in world.observation_rows():
            writer.writerow([repr(t), oid, repr(float(x)), repr(float(y))])
