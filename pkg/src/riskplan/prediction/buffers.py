"""Observation history buffers fed to predictors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import HISTORY_LENGTH

PAD_VALUE = -1.0  # padding coordinate in normalized space


@dataclass
class ObservationBuffer:
    """Chronological positions of one obstacle, newest last (time end_time).

    Holds between 1 and HISTORY_LENGTH rows; anything shorter than the full
    history is represented explicitly by a mask when padded for a model.
    """

    obstacle_id: int
    positions: np.ndarray  # (m, 2)
    end_time: int

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        m = len(self.positions)
        if not 1 <= m <= HISTORY_LENGTH:
            raise ValueError(f"buffer must hold 1..{HISTORY_LENGTH} observations")

    @property
    def anchor(self):
        """Last observed position; grids and offsets are relative to it."""
        return (float(self.positions[-1, 0]), float(self.positions[-1, 1]))

    def velocity(self):
        """Displacement of the last observation interval, zero for one row."""
        if len(self.positions) < 2:
            return (0.0, 0.0)
        d = self.positions[-1] - self.positions[-2]
        return (float(d[0]), float(d[1]))

    def padded(self, map_width: float, map_height: float):
        """Normalized model input: (HISTORY_LENGTH, 2) pre-padded, plus mask."""
        m = len(self.positions)
        x = np.full((HISTORY_LENGTH, 2), PAD_VALUE)
        mask = np.zeros(HISTORY_LENGTH)
        x[HISTORY_LENGTH - m :, 0] = self.positions[:, 0] / map_width
        x[HISTORY_LENGTH - m :, 1] = self.positions[:, 1] / map_height
        mask[HISTORY_LENGTH - m :] = 1.0
        return x, mask


def buffers_from_history(history: dict, t: int, length: int = HISTORY_LENGTH):
    """Build one buffer per obstacle from an observation history.

    history maps obstacle id to a list of (x, y) indexed by integer
    observation time; entries up to and including t are used.
    """
    out = []
    for oid in sorted(history):
        rows = history[oid][: t + 1]
        if not rows:
            raise ValueError(f"no observations for obstacle {oid} at time {t}")
        window = np.array(rows[-length:], dtype=float)
        out.append(ObservationBuffer(oid, window, t))
    return out
