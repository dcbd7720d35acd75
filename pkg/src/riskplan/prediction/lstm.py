"""Small LSTM implemented on numpy, sized for desk-scale experiments.

Architecture: masking over pre-padded sequences, one recurrent layer with
sigmoid gates and ReLU as the cell activation, then a linear head (two units
for coordinates, or one logit per grid cell behind a softmax). The coordinate
head can add a constant-velocity extrapolation of the observed window to its
output, so the recurrent part only has to model the deviation from
straight-line motion. Everything is float64; gradients come from explicit
backprop through time and are verified against finite differences in the
test suite.
"""

from __future__ import annotations

import numpy as np


class TrainingError(RuntimeError):
    """Training diverged or was misconfigured; carries diagnostics."""


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _relu(z):
    return np.maximum(z, 0.0)


def _softmax(y):
    shifted = y - y.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _orthogonal(rows, cols, rng):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, _ = np.linalg.qr(a)
    q = q[:rows, :cols] if q.shape[0] >= rows else q.T[:rows, :cols]
    return q


class LSTMNet:
    """Recurrent network with a linear output head, optionally residual."""

    def __init__(
        self,
        input_dim: int,
        hidden: int,
        output_dim: int,
        rng=None,
        residual_steps=None,
    ):
        """residual_steps, when set, adds the constant-velocity position that
        many steps past the last observation to the head output (0 means the
        last observation itself); the head then models the correction."""
        if residual_steps is not None and output_dim != input_dim:
            raise ValueError("residual head needs output_dim == input_dim")
        self.input_dim = input_dim
        self.hidden = hidden
        self.output_dim = output_dim
        self.residual_steps = None if residual_steps is None else int(residual_steps)
        if rng is None:
            rng = np.random.default_rng(0)
        h = hidden
        limit = np.sqrt(6.0 / (input_dim + 4 * h))
        self.params = {
            "W": rng.uniform(-limit, limit, (input_dim, 4 * h)),
            "U": np.concatenate(
                [_orthogonal(h, h, rng) for _ in range(4)], axis=1
            ),
            "b": np.zeros(4 * h),
            "Wo": rng.uniform(
                -np.sqrt(6.0 / (h + output_dim)),
                np.sqrt(6.0 / (h + output_dim)),
                (h, output_dim),
            ),
            "bo": np.zeros(output_dim),
        }
        self.params["b"][h : 2 * h] = 1.0  # forget gate bias

    def _scan(self, x, mask):
        """Run the recurrence; returns output and per-step cache for backprop."""
        B, T, D = x.shape
        h = self.hidden
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        h_t = np.zeros((B, h))
        c_t = np.zeros((B, h))
        steps = []
        for t in range(T):
            m = mask[:, t : t + 1]
            z = x[:, t, :] @ W + h_t @ U + b
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = _relu(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c_raw = f * c_t + i * g
            h_raw = o * _relu(c_raw)
            c_new = m * c_raw + (1.0 - m) * c_t
            h_new = m * h_raw + (1.0 - m) * h_t
            steps.append((m, z, i, f, g, o, c_t, h_t, c_raw))
            h_t, c_t = h_new, c_new
        return h_t, steps

    def forward(self, x, mask, softmax: bool = False):
        x = np.asarray(x, dtype=float)
        mask = np.asarray(mask, dtype=float)
        h_T, _ = self._scan(x, mask)
        y = h_T @ self.params["Wo"] + self.params["bo"]
        if self.residual_steps is not None:
            y = y + self._extrapolate(x, mask)
        return _softmax(y) if softmax else y

    def _extrapolate(self, x, mask):
        # single-observation windows extrapolate as stationary, matching the
        # constant-velocity predictor
        last = x[:, -1, :]
        vel = (last - x[:, -2, :]) * mask[:, -2:-1]
        return last + self.residual_steps * vel

    def loss_and_grads(self, x, mask, target, kind: str):
        """Mean loss over the batch plus gradients for every parameter.

        kind "mse": target is (B, output_dim) coordinates.
        kind "ce": target is (B,) integer class labels, head is softmax.
        """
        x = np.asarray(x, dtype=float)
        mask = np.asarray(mask, dtype=float)
        B, T, D = x.shape
        h = self.hidden
        W, U = self.params["W"], self.params["U"]
        h_T, steps = self._scan(x, mask)
        y = h_T @ self.params["Wo"] + self.params["bo"]
        if self.residual_steps is not None:
            # constant w.r.t. the parameters, so backprop is unchanged
            y = y + self._extrapolate(x, mask)

        if kind == "mse":
            diff = y - target
            loss = float(np.mean(diff * diff))
            dy = 2.0 * diff / diff.size
        elif kind == "ce":
            labels = np.asarray(target, dtype=int)
            shifted = y - y.max(axis=1, keepdims=True)
            logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            logp = shifted - logz
            loss = float(-np.mean(logp[np.arange(B), labels]))
            dy = np.exp(logp)
            dy[np.arange(B), labels] -= 1.0
            dy /= B
        else:
            raise ValueError(f"unknown loss kind {kind!r}")

        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        grads["Wo"] = h_T.T @ dy
        grads["bo"] = dy.sum(axis=0)
        dh = dy @ self.params["Wo"].T
        dc = np.zeros_like(dh)
        for t in range(T - 1, -1, -1):
            m, z, i, f, g, o, c_prev, h_prev, c_raw = steps[t]
            dh_raw = m * dh
            dh_skip = (1.0 - m) * dh
            dc_raw = m * dc
            dc_skip = (1.0 - m) * dc
            relu_c = _relu(c_raw)
            do = dh_raw * relu_c
            dc_raw = dc_raw + dh_raw * o * (c_raw > 0)
            di = dc_raw * g
            dg = dc_raw * i
            df = dc_raw * c_prev
            dc_prev = dc_raw * f + dc_skip
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (z[:, 2 * h : 3 * h] > 0),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            grads["W"] += x[:, t, :].T @ dz
            grads["U"] += h_prev.T @ dz
            grads["b"] += dz.sum(axis=0)
            dh = dz @ U.T + dh_skip
            dc = dc_prev
        return loss, grads

    def state_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "output_dim": self.output_dim,
            "residual_steps": self.residual_steps,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }

    @classmethod
    def from_state(cls, doc: dict) -> "LSTMNet":
        net = cls(
            doc["input_dim"],
            doc["hidden"],
            doc["output_dim"],
            residual_steps=doc.get("residual_steps"),
        )
        for k, v in doc["params"].items():
            arr = np.array(v, dtype=float)
            if arr.shape != net.params[k].shape:
                raise ValueError(f"bad shape for parameter {k}")
            net.params[k] = arr
        return net


class Adam:
    """Standard first-order adaptive optimizer."""

    def __init__(self, params, lr=3e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, clip_norm=5.0):
        total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        scale = clip_norm / total if total > clip_norm else 1.0
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k, p in params.items():
            g = grads[k] * scale
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            p -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)
