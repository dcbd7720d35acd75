"""Trajectory and occupancy predictors.

All three predictors share the same surface: predict_points gives one
position per step 1..HORIZON, predict_grids one occupancy grid per step.
Outputs are functions of the observation buffer only (plus, for the oracle,
the ground-truth trajectory log it wraps).
"""

from __future__ import annotations

import numpy as np

from .buffers import ObservationBuffer
from .grids import HORIZON, GridSet, OccupancyGrid, grid_geometry_for


class ConstantVelocityPredictor:
    """Extrapolates the displacement of the last observation interval.

    A single-observation buffer predicts a stationary obstacle.
    """

    def __init__(self, v_max: float):
        self.v_max = float(v_max)

    def predict_points(self, buffer: ObservationBuffer) -> np.ndarray:
        ax, ay = buffer.anchor
        vx, vy = buffer.velocity()
        return np.array(
            [(ax + t * vx, ay + t * vy) for t in range(1, HORIZON + 1)]
        )

    def predict_grids(self, buffer: ObservationBuffer) -> GridSet:
        ax, ay = buffer.anchor
        vx, vy = buffer.velocity()
        grids = {}
        for t in range(1, HORIZON + 1):
            geom = grid_geometry_for((ax, ay), t, self.v_max)
            ix, iy = geom.cell_of_offset(
                _clamp(t * vx, geom.half_width), _clamp(t * vy, geom.half_width)
            )
            grids[t] = OccupancyGrid.one_hot(geom, ix, iy)
        return GridSet(anchor=(ax, ay), grids=grids)


def _clamp(v: float, half: float) -> float:
    # two noise-free observations can never overestimate the speed, so any
    # excess here is floating point dust
    if v > half:
        return half
    if v < -half:
        return -half
    return v


class OraclePredictor:
    """Reads ground-truth future positions from the world's trajectory log.

    Test and upper-bound instrument; requires the world to have advanced at
    least HORIZON beyond the buffer's end time.
    """

    def __init__(self, world, v_max: float):
        self.world = world
        self.v_max = float(v_max)

    def _future(self, buffer: ObservationBuffer):
        track = self.world.tracks[buffer.obstacle_id]
        return [
            track.position_at(float(buffer.end_time + t))
            for t in range(1, HORIZON + 1)
        ]

    def predict_points(self, buffer: ObservationBuffer) -> np.ndarray:
        return np.array(self._future(buffer))

    def predict_grids(self, buffer: ObservationBuffer) -> GridSet:
        ax, ay = buffer.anchor
        grids = {}
        for t, (px, py) in enumerate(self._future(buffer), start=1):
            geom = grid_geometry_for((ax, ay), t, self.v_max)
            ix, iy = geom.cell_of_offset(px - ax, py - ay)
            grids[t] = OccupancyGrid.one_hot(geom, ix, iy)
        return GridSet(anchor=(ax, ay), grids=grids)


class TrainedPredictor:
    """Wraps a trained model set (one model per step and head)."""

    def __init__(self, model_set):
        self.models = model_set
        self.v_max = float(model_set.meta["v_max"])
        self._w = float(model_set.meta["map_width"])
        self._h = float(model_set.meta["map_height"])

    def predict_points(self, buffer: ObservationBuffer) -> np.ndarray:
        x, mask = buffer.padded(self._w, self._h)
        out = np.empty((HORIZON, 2))
        for t in range(1, HORIZON + 1):
            net = self.models.regression[t]
            y = net.forward(x[None, :, :], mask[None, :])[0]
            out[t - 1, 0] = y[0] * self._w
            out[t - 1, 1] = y[1] * self._h
        return out

    def predict_grids(self, buffer: ObservationBuffer) -> GridSet:
        x, mask = buffer.padded(self._w, self._h)
        ax, ay = buffer.anchor
        grids = {}
        for t in range(1, HORIZON + 1):
            net = self.models.classification[t]
            probs = net.forward(x[None, :, :], mask[None, :], softmax=True)[0]
            n = 2 * t
            geom = grid_geometry_for((ax, ay), t, self.v_max)
            grids[t] = OccupancyGrid(geom, probs.reshape(n, n))
        return GridSet(anchor=(ax, ay), grids=grids)
