"""Relative occupancy grids.

A prediction step t covers every position an obstacle moving at most v_max
can reach within t time units: a square of half-width t * v_max centered on
the last observed position, divided into (2t) x (2t) cells. Cell values are
occupancy probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HORIZON = 4  # prediction steps ahead; exceeds the longest edge usage time
HISTORY_LENGTH = 16  # observations fed to a predictor


class GridExtentError(ValueError):
    """An offset landed outside the grid square; v_max is misconfigured."""


@dataclass(frozen=True)
class GridGeometry:
    center_x: float
    center_y: float
    half_width: float
    cells_per_side: int

    @property
    def cell_size(self) -> float:
        return 2.0 * self.half_width / self.cells_per_side

    @property
    def lo(self):
        return (self.center_x - self.half_width, self.center_y - self.half_width)

    @property
    def hi(self):
        return (self.center_x + self.half_width, self.center_y + self.half_width)

    def cell_box(self, ix: int, iy: int):
        """Closed square of cell (ix, iy) in absolute map coordinates."""
        w = self.cell_size
        x0 = self.center_x - self.half_width + ix * w
        y0 = self.center_y - self.half_width + iy * w
        return (x0, y0), (x0 + w, y0 + w)

    def cell_of_offset(self, dx: float, dy: float, tol: float = 1e-9):
        """Cell index containing the offset (dx, dy) from the grid center.

        Offsets exactly on the outer boundary clamp inward; offsets beyond
        the square raise GridExtentError.
        """
        h = self.half_width
        if abs(dx) > h + tol or abs(dy) > h + tol:
            raise GridExtentError(
                f"offset ({dx}, {dy}) outside grid of half-width {h}"
            )
        w = self.cell_size
        n = self.cells_per_side
        ix = int(math.floor((dx + h) / w))
        iy = int(math.floor((dy + h) / w))
        ix = min(max(ix, 0), n - 1)
        iy = min(max(iy, 0), n - 1)
        return ix, iy

    def flat_index(self, ix: int, iy: int) -> int:
        return iy * self.cells_per_side + ix


def grid_geometry_for(anchor, t: int, v_max: float) -> GridGeometry:
    """Geometry of the step-t grid anchored at the last observed position."""
    if not 1 <= t:
        raise ValueError("prediction step must be >= 1")
    return GridGeometry(
        center_x=float(anchor[0]),
        center_y=float(anchor[1]),
        half_width=t * v_max,
        cells_per_side=2 * t,
    )


@dataclass
class OccupancyGrid:
    geometry: GridGeometry
    values: np.ndarray  # (n, n) indexed [iy, ix]

    def __post_init__(self):
        n = self.geometry.cells_per_side
        if self.values.shape != (n, n):
            raise ValueError("grid value shape does not match geometry")

    def value(self, ix: int, iy: int) -> float:
        return float(self.values[iy, ix])

    def total(self) -> float:
        return float(self.values.sum())

    def nonzero_cells(self):
        iys, ixs = np.nonzero(self.values)
        return [(int(ix), int(iy), float(self.values[iy, ix])) for iy, ix in zip(iys, ixs)]

    @classmethod
    def one_hot(cls, geometry: GridGeometry, ix: int, iy: int) -> "OccupancyGrid":
        n = geometry.cells_per_side
        values = np.zeros((n, n))
        values[iy, ix] = 1.0
        return cls(geometry, values)


@dataclass
class GridSet:
    """One occupancy grid per prediction step 1..HORIZON for one obstacle."""

    anchor: tuple
    grids: dict  # t -> OccupancyGrid

    def grid(self, t: int) -> OccupancyGrid:
        return self.grids[t]

    def steps(self):
        return sorted(self.grids)
