"""Command line front end.

Subcommands: gen-graph, gen-data, train, simulate, experiment, replay.
Errors print one JSON object to stderr and exit nonzero (2 for bad input,
3 for runtime failures), so scripts can parse failures reliably.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import deep_merge, load_config_file, resolve_config
from .harness import (
    HarnessError,
    build_assets,
    make_table_fn,
    replay,
    run_episode,
    run_experiment,
    write_outputs,
    write_trajectories,
)
from .prediction.training import (
    generate_training_data,
    load_dataset_csv,
    save_dataset_csv,
    train_model_set,
)
from .roadmap import build_roadmap, save_roadmap
from .world import make_world, stream_seed


def _fail(kind: str, exc: BaseException, code: int) -> int:
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)
    return code


def _parse_r_list(text: str):
    return [float(part) for part in text.split(",") if part.strip() != ""]


def _config(args) -> dict:
    overrides = load_config_file(args.config) if args.config else {}
    flags: dict = {}
    if getattr(args, "pipeline", None):
        flags.setdefault("prediction", {})["pipeline"] = args.pipeline
    if getattr(args, "predictor", None):
        flags.setdefault("prediction", {})["predictor"] = args.predictor
    if getattr(args, "model", None):
        flags.setdefault("prediction", {})["model_path"] = args.model
    if getattr(args, "r", None) is not None:
        flags.setdefault("experiment", {})["r_values"] = _parse_r_list(args.r)
    if getattr(args, "repeats", None) is not None:
        flags.setdefault("experiment", {})["repeats"] = args.repeats
    if getattr(args, "targets", None) is not None:
        flags.setdefault("experiment", {})["targets"] = args.targets
    overrides = deep_merge(overrides, flags)
    return resolve_config(overrides, scenario=args.scenario)


def cmd_gen_graph(args) -> int:
    cfg = _config(args)
    world = make_world(cfg["world"], args.seed)
    rm = cfg["roadmap"]
    rng = np.random.default_rng(stream_seed(args.seed, "roadmap"))
    roadmap = build_roadmap(
        world.mapspec, rm["nodes"], rm["radius"], rm["max_edge_length"], rng
    )
    save_roadmap(roadmap, args.out)
    print(
        json.dumps(
            {
                "out": args.out,
                "nodes": roadmap.node_count,
                "edges": len(roadmap.edges),
            }
        )
    )
    return 0


def cmd_gen_data(args) -> int:
    cfg = _config(args)
    data = generate_training_data(cfg["world"], args.sequences, args.seed)
    save_dataset_csv(data, args.out)
    print(json.dumps({"out": args.out, "sequences": len(data)}))
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    w = cfg["world"]
    data = load_dataset_csv(args.data, w["width"], w["height"], w["v_max"])
    models = train_model_set(
        data,
        args.seed,
        hidden=args.hidden,
        epochs=args.epochs,
    )
    models.save(args.out)
    losses = models.meta.get("validation_losses", {})
    print(json.dumps({"out": args.out, "validation_losses": losses}))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    world, roadmap, start, targets = build_assets(cfg, args.seed)
    table_fn = make_table_fn(world, roadmap, cfg["prediction"], cfg["world"]["v_max"])
    episode = run_episode(
        world,
        roadmap,
        start,
        targets,
        args.episode_r,
        table_fn,
        escape=cfg["planner"]["escape"],
        planner_cfg=cfg["planner"],
        max_steps=cfg["experiment"]["max_steps"],
        record_visits=True,
    )
    os.makedirs(args.out, exist_ok=True)
    doc = {
        "r": episode.r,
        "length": episode.length,
        "collisions": episode.collisions,
        "edges": episode.edges,
        "end_time": episode.end_time,
        "escape_activations": episode.escape_activations,
        "legs": episode.legs,
        "visits": episode.visits,
    }
    with open(os.path.join(args.out, "episode.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
    write_trajectories(world, os.path.join(args.out, "trajectories.csv"))
    print(
        json.dumps(
            {
                "out": args.out,
                "collisions": episode.collisions,
                "length": episode.length,
            }
        )
    )
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg, args.seed)
    write_outputs(result, args.out)
    print(json.dumps({"out": args.out, "rows": result.aggregate}))
    return 0


def cmd_replay(args) -> int:
    result = replay(args.log)
    print(json.dumps({"ok": result.ok, "mismatches": result.mismatches}))
    return 0 if result.ok else 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file with overrides")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--scenario", choices=["a", "b", "c"], help="named setup")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskplan",
        description="Predictive collision management on roadmaps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="sample a roadmap and save it")
    _add_common(p)
    p.add_argument("--out", default="graph.json")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("gen-data", help="generate a training dataset CSV")
    _add_common(p)
    p.add_argument("--sequences", type=int, default=20000)
    p.add_argument("--out", default="dataset.csv")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train prediction models on a dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset CSV from gen-data")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--out", default="models.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="run one episode and export logs")
    _add_common(p)
    p.add_argument("--r", dest="episode_r", type=float, default=0.0)
    p.add_argument("--pipeline", choices=["none", "regression", "classification"])
    p.add_argument("--predictor", choices=["baseline", "oracle", "trained"])
    p.add_argument("--model", help="model set JSON for --predictor trained")
    p.add_argument("--targets", type=int, help="number of targets to visit")
    p.add_argument("--out", default="simulate-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="sweep r and export the comparison")
    _add_common(p)
    p.add_argument("--r", help="comma separated r values, must include 0")
    p.add_argument("--pipeline", choices=["none", "regression", "classification"])
    p.add_argument("--predictor", choices=["baseline", "oracle", "trained"])
    p.add_argument("--model", help="model set JSON for --predictor trained")
    p.add_argument("--targets", type=int, help="number of targets per episode")
    p.add_argument("--repeats", type=int, help="seeds master..master+n-1")
    p.add_argument("--out", default="experiment-out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="verify a run log reproduces its CSVs")
    p.add_argument("--log", required=True, help="run_log.json to verify")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        return _fail("input", exc, 2)
    except HarnessError as exc:
        return _fail("runtime", exc, 3)


if __name__ == "__main__":
    sys.exit(main())
