"""Experiment configuration: defaults, scenario presets, hashing."""

import copy
import hashlib
import json


DEFAULTS = {
    "world": {
        "width": 30.0,
        "height": 30.0,
        "obstacle_count": 8,
        "speed_min": 0.3,
        "speed_max": 0.5,
        "v_max": 0.5,
        "micro_step": 0.05,
        "linear_fraction": 0.5,
    },
    "roadmap": {
        "nodes": 300,
        "radius": 3.0,
        "max_edge_length": 3.0,
    },
    "prediction": {
        "pipeline": "none",  # none | regression | classification
        "predictor": "oracle",  # baseline | oracle | trained
        "model_path": None,
    },
    "planner": {
        "escape": True,
        "revisit_threshold": 3,
        "revisit_window": 12,
        "progress_steps": 5,
    },
    "experiment": {
        "targets": 50,
        "r_values": [0.0, 1.0, 10.0, 100.0],
        "repeats": 1,
        "max_steps": 5000,
    },
}

# Named setups used throughout the result tables: (a) the reference map,
# (b) a sparse roadmap with longer edges, (c) doubled traffic on (a).
SCENARIOS = {
    "a": {},
    "b": {"roadmap": {"nodes": 100, "radius": 4.0, "max_edge_length": 4.0}},
    "c": {"world": {"obstacle_count": 16}},
}


def deep_merge(base: dict, override: dict) -> dict:
    """Nested dict merge; override wins, non-dict leaves replace."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(overrides: dict = None, scenario: str = None) -> dict:
    """Defaults, then scenario preset, then explicit overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if scenario is not None:
        if scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {scenario!r}")
        cfg = deep_merge(cfg, SCENARIOS[scenario])
    if overrides:
        cfg = deep_merge(cfg, overrides)
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    w = cfg["world"]
    if w["width"] <= 0 or w["height"] <= 0:
        raise ValueError("map dimensions must be positive")
    if not 0.0 < w["speed_min"] <= w["speed_max"] <= w["v_max"]:
        raise ValueError("need 0 < speed_min <= speed_max <= v_max")
    if w["micro_step"] <= 0:
        raise ValueError("micro_step must be positive")
    if not 0.0 <= w["linear_fraction"] <= 1.0:
        raise ValueError("linear_fraction must be in [0, 1]")
    rm = cfg["roadmap"]
    if rm["nodes"] < 2 or rm["radius"] <= 0 or rm["max_edge_length"] <= 0:
        raise ValueError("bad roadmap parameters")
    if rm["max_edge_length"] > rm["radius"]:
        raise ValueError("max_edge_length must not exceed radius")
    pred = cfg["prediction"]
    if pred["pipeline"] not in ("none", "regression", "classification"):
        raise ValueError("pipeline must be none, regression or classification")
    if pred["predictor"] not in ("baseline", "oracle", "trained"):
        raise ValueError("predictor must be baseline, oracle or trained")
    exp = cfg["experiment"]
    if exp["targets"] < 1:
        raise ValueError("need at least one target")
    if not exp["r_values"] or any(r < 0 for r in exp["r_values"]):
        raise ValueError("r_values must be non-negative and non-empty")
    if exp["repeats"] < 1:
        raise ValueError("repeats must be >= 1")


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON encoding; stable across key order."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc
