"""Training data generation and model fitting for the trained predictors.

One model is trained per prediction step and head: four coordinate regressors
and four grid classifiers. Sequences are sampled from a simulated world with
the same obstacle population as the experiments; inputs are normalized to
[0, 1] and pre-padded, labels are the positions (regression) or occupied
relative grid cells (classification) 1..HORIZON steps past the last
observation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from ..world import make_world, stream_seed
from .buffers import PAD_VALUE
from .grids import HISTORY_LENGTH, HORIZON, grid_geometry_for
from .lstm import Adam, LSTMNet, TrainingError


@dataclass
class TrainingData:
    inputs: np.ndarray  # (N, HISTORY_LENGTH, 2) normalized, pre-padded
    mask: np.ndarray  # (N, HISTORY_LENGTH)
    targets_xy: np.ndarray  # (N, HORIZON, 2) normalized absolute positions
    targets_cell: np.ndarray  # (N, HORIZON) flat cell index per step
    meta: dict  # map_width, map_height, v_max

    def __len__(self):
        return len(self.inputs)


def generate_training_data(world_cfg: dict, n_sequences: int, master_seed: int) -> TrainingData:
    """Simulate obstacle traffic and cut observation windows out of it."""
    width = float(world_cfg["width"])
    height = float(world_cfg["height"])
    v_max = float(world_cfg.get("v_max", world_cfg.get("speed_max", 0.5)))
    world = make_world(world_cfg, master_seed)
    n_obs = len(world.obstacles)
    horizon_max = max(100, (n_sequences + n_obs - 1) // (2 * n_obs) + HISTORY_LENGTH)
    world.ensure_time(float(horizon_max))
    positions = np.stack(
        [
            np.array([pos for _, pos in world.observe(float(t))])
            for t in range(horizon_max + 1)
        ]
    )  # (T+1, n_obs, 2)

    rng = np.random.default_rng(stream_seed(master_seed, "dataset"))
    inputs = np.full((n_sequences, HISTORY_LENGTH, 2), PAD_VALUE)
    mask = np.zeros((n_sequences, HISTORY_LENGTH))
    targets_xy = np.empty((n_sequences, HORIZON, 2))
    targets_cell = np.empty((n_sequences, HORIZON), dtype=int)
    scale = np.array([width, height])
    for s in range(n_sequences):
        oid = int(rng.integers(0, n_obs))
        te = int(rng.integers(0, horizon_max - HORIZON + 1))
        length = min(int(rng.integers(1, HISTORY_LENGTH + 1)), te + 1)
        window = positions[te - length + 1 : te + 1, oid, :]
        inputs[s, HISTORY_LENGTH - length :, :] = window / scale
        mask[s, HISTORY_LENGTH - length :] = 1.0
        anchor = positions[te, oid, :]
        for t in range(1, HORIZON + 1):
            fut = positions[te + t, oid, :]
            targets_xy[s, t - 1, :] = fut / scale
            geom = grid_geometry_for(anchor, t, v_max)
            ix, iy = geom.cell_of_offset(fut[0] - anchor[0], fut[1] - anchor[1])
            targets_cell[s, t - 1] = geom.flat_index(ix, iy)
    return TrainingData(
        inputs=inputs,
        mask=mask,
        targets_xy=targets_xy,
        targets_cell=targets_cell,
        meta={"map_width": width, "map_height": height, "v_max": v_max},
    )


def save_dataset_csv(data: TrainingData, path: str):
    """Rows (sequence id, step, x, y, mask); steps -15..0 are inputs, 1..4 labels."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "step", "x", "y", "mask"])
        for s in range(len(data)):
            for j in range(HISTORY_LENGTH):
                step = j - (HISTORY_LENGTH - 1)
                writer.writerow(
                    [
                        s,
                        step,
                        repr(float(data.inputs[s, j, 0])),
                        repr(float(data.inputs[s, j, 1])),
                        int(data.mask[s, j]),
                    ]
                )
            for t in range(1, HORIZON + 1):
                writer.writerow(
                    [
                        s,
                        t,
                        repr(float(data.targets_xy[s, t - 1, 0])),
                        repr(float(data.targets_xy[s, t - 1, 1])),
                        1,
                    ]
                )


def load_dataset_csv(path: str, width: float, height: float, v_max: float) -> TrainingData:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sequence", "step", "x", "y", "mask"]:
            raise ValueError("unexpected dataset CSV header")
        for seq, step, x, y, m in reader:
            rows.setdefault(int(seq), {})[int(step)] = (float(x), float(y), int(m))
    n = len(rows)
    inputs = np.full((n, HISTORY_LENGTH, 2), PAD_VALUE)
    mask = np.zeros((n, HISTORY_LENGTH))
    targets_xy = np.empty((n, HORIZON, 2))
    targets_cell = np.empty((n, HORIZON), dtype=int)
    scale = np.array([width, height])
    for s in range(n):
        seq = rows[s]
        for j in range(HISTORY_LENGTH):
            step = j - (HISTORY_LENGTH - 1)
            x, y, m = seq[step]
            inputs[s, j] = (x, y)
            mask[s, j] = m
        anchor = inputs[s, -1] * scale
        for t in range(1, HORIZON + 1):
            x, y, _ = seq[t]
            targets_xy[s, t - 1] = (x, y)
            fut = np.array([x, y]) * scale
            geom = grid_geometry_for(anchor, t, v_max)
            ix, iy = geom.cell_of_offset(fut[0] - anchor[0], fut[1] - anchor[1])
            targets_cell[s, t - 1] = geom.flat_index(ix, iy)
    return TrainingData(
        inputs=inputs,
        mask=mask,
        targets_xy=targets_xy,
        targets_cell=targets_cell,
        meta={"map_width": width, "map_height": height, "v_max": v_max},
    )


def fit(
    net: LSTMNet,
    x,
    mask,
    target,
    kind: str,
    rng,
    epochs: int = 30,
    batch_size: int = 64,
    lr: float = 3e-3,
    val_fraction: float = 0.1,
    patience: int = 5,
):
    """Minibatch Adam with a held-out split and early stopping.

    The learning rate halves after two epochs without validation improvement
    (floor lr/32), which buys most of the late-stage precision the constant
    rate leaves on the table. Returns (best validation loss, history).
    Raises TrainingError when the loss stops being finite.
    """
    n = len(x)
    if n < 10:
        raise TrainingError("dataset too small to split")
    order = rng.permutation(n)
    n_val = max(1, int(n * val_fraction))
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    opt = Adam(net.params, lr=lr)
    best_val = np.inf
    best_params = {k: v.copy() for k, v in net.params.items()}
    bad_epochs = 0
    history = []
    for epoch in range(epochs):
        perm = rng.permutation(len(train_idx))
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, len(perm), batch_size):
            sel = train_idx[perm[lo : lo + batch_size]]
            loss, grads = net.loss_and_grads(x[sel], mask[sel], target[sel], kind)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} batch {batches}: {loss}"
                )
            opt.step(net.params, grads)
            epoch_loss += loss
            batches += 1
        val_loss, _ = net.loss_and_grads(x[val_idx], mask[val_idx], target[val_idx], kind)
        history.append((epoch_loss / max(batches, 1), val_loss))
        if val_loss < best_val - 1e-9:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in net.params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= patience:
                break
            if bad_epochs % 2 == 0:
                opt.lr = max(opt.lr * 0.5, lr / 32.0)
    net.params = best_params
    return best_val, history


class ModelSet:
    """Trained nets for both heads and every step, plus shared metadata."""

    def __init__(self, regression: dict, classification: dict, meta: dict):
        self.regression = regression
        self.classification = classification
        self.meta = meta

    def save(self, path: str):
        doc = {
            "format_version": 1,
            "meta": self.meta,
            "regression": {str(t): n.state_dict() for t, n in self.regression.items()},
            "classification": {
                str(t): n.state_dict() for t, n in self.classification.items()
            },
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path: str) -> "ModelSet":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format_version") != 1:
            raise ValueError("unsupported model file version")
        return cls(
            regression={int(t): LSTMNet.from_state(s) for t, s in doc["regression"].items()},
            classification={
                int(t): LSTMNet.from_state(s) for t, s in doc["classification"].items()
            },
            meta=doc["meta"],
        )


def train_model_set(
    data: TrainingData,
    master_seed: int,
    hidden: int = 16,
    epochs: int = 30,
    batch_size: int = 64,
    lr: float = 3e-3,
    config_hash: str = "",
) -> ModelSet:
    """Train all HORIZON regression and classification models."""
    regression = {}
    classification = {}
    losses = {}
    for t in range(1, HORIZON + 1):
        init_rng = np.random.default_rng(stream_seed(master_seed, f"init-reg-{t}"))
        shuffle_rng = np.random.default_rng(stream_seed(master_seed, f"train-reg-{t}"))
        net = LSTMNet(2, hidden, 2, rng=init_rng, residual_steps=t)
        val, _ = fit(
            net,
            data.inputs,
            data.mask,
            data.targets_xy[:, t - 1, :],
            "mse",
            shuffle_rng,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
        )
        regression[t] = net
        losses[f"regression_{t}"] = val

        cells = (2 * t) ** 2
        init_rng = np.random.default_rng(stream_seed(master_seed, f"init-cls-{t}"))
        shuffle_rng = np.random.default_rng(stream_seed(master_seed, f"train-cls-{t}"))
        net = LSTMNet(2, hidden, cells, rng=init_rng)
        val, _ = fit(
            net,
            data.inputs,
            data.mask,
            data.targets_cell[:, t - 1],
            "ce",
            shuffle_rng,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
        )
        classification[t] = net
        losses[f"classification_{t}"] = val
    meta = dict(data.meta)
    meta["hidden"] = hidden
    meta["config_hash"] = config_hash
    meta["validation_losses"] = losses
    return ModelSet(regression, classification, meta)
