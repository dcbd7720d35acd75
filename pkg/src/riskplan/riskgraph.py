"""Turning predictions into time-dependent edge risk.

Per obstacle and prediction step, an edge collects the occupancy values of
every grid cell its segment touches (sum, clamped to 1). Risks of several
obstacles combine as independent events. The result per edge is a step
function over unit time intervals; a planner asks for the risk of using an
edge over a period either as the maximum level touched (trajectory pipeline)
or as the time-weighted average (grid pipeline).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import segment_box_overlap, segment_hits_many
from .prediction.grids import HORIZON, OccupancyGrid

RULE_MAX = "max"
RULE_AVERAGE = "average"


def combine_risks(values) -> float:
    """Total risk of independent per-obstacle risks: 1 - prod(1 - k)."""
    prod = 1.0
    for k in values:
        if not 0.0 <= k <= 1.0:
            raise ValueError("risk values must lie in [0, 1]")
        prod *= 1.0 - k
    return 1.0 - prod


def cells_for_edge(p, q, geometry, tol: float = 1e-9):
    """All cells of the grid whose closed square the segment p-q touches.

    Scans the cells under the segment's bounding box; a touch on a shared
    cell boundary assigns both neighbors.
    """
    n = geometry.cells_per_side
    w = geometry.cell_size
    gx0, gy0 = geometry.lo
    lo_x = min(p[0], q[0]) - gx0
    hi_x = max(p[0], q[0]) - gx0
    lo_y = min(p[1], q[1]) - gy0
    hi_y = max(p[1], q[1]) - gy0
    ix0 = max(0, int(math.floor((lo_x - tol) / w)))
    ix1 = min(n - 1, int(math.floor((hi_x + tol) / w)))
    iy0 = max(0, int(math.floor((lo_y - tol) / w)))
    iy1 = min(n - 1, int(math.floor((hi_y + tol) / w)))
    out = []
    for iy in range(iy0, iy1 + 1):
        for ix in range(ix0, ix1 + 1):
            lo, hi = geometry.cell_box(ix, iy)
            if segment_box_overlap(p, q, lo, hi, tol):
                out.append((ix, iy))
    return out


def edge_risk_from_grid(p, q, grid: OccupancyGrid, tol: float = 1e-9) -> float:
    """Single-obstacle edge risk: sum of touched cell values, clamped to 1."""
    geometry = grid.geometry
    glo, ghi = geometry.lo, geometry.hi
    if not segment_box_overlap(p, q, glo, ghi, tol):
        return 0.0
    total = 0.0
    for ix, iy in cells_for_edge(p, q, geometry, tol):
        total += grid.value(ix, iy)
    return min(total, 1.0)


def step_value(levels, t: float) -> float:
    """Step function value at time t; level i covers (i, i+1], zero beyond."""
    if t < 0.0:
        return 0.0
    idx = int(math.ceil(t - 1e-12)) - 1
    if idx < 0:
        idx = 0
    if idx >= len(levels):
        return 0.0
    return float(levels[idx])


def period_max(levels, t: float, d: float) -> float:
    """Maximum level over the usage period (t, t + d]."""
    if d <= 0:
        raise ValueError("usage duration must be positive")
    worst = 0.0
    for i in range(len(levels)):
        if t < i + 1 and t + d > i:
            if levels[i] > worst:
                worst = float(levels[i])
    return worst


def period_weighted_average(levels, t: float, d: float) -> float:
    """Time-fraction weighted average of levels over (t, t + d].

    Intervals beyond the horizon contribute zero risk but full weight.
    """
    if d <= 0:
        raise ValueError("usage duration must be positive")
    acc = 0.0
    for i in range(len(levels)):
        overlap = min(t + d, i + 1.0) - max(t, float(i))
        if overlap > 0:
            acc += levels[i] * overlap
    return acc / d


def period_risk(levels, t: float, d: float, rule: str) -> float:
    if rule == RULE_MAX:
        return period_max(levels, t, d)
    if rule == RULE_AVERAGE:
        return period_weighted_average(levels, t, d)
    raise ValueError(f"unknown period rule {rule!r}")


def edge_key(u: int, v: int):
    return (u, v) if u < v else (v, u)


class StepRiskTable:
    """Per-edge step risk functions plus the period rule to evaluate them."""

    def __init__(self, rule: str, levels=None):
        if rule not in (RULE_MAX, RULE_AVERAGE):
            raise ValueError(f"unknown period rule {rule!r}")
        self.rule = rule
        self.levels = levels or {}

    def levels_for(self, u: int, v: int):
        return self.levels.get(edge_key(u, v))

    def value(self, u: int, v: int, t: float) -> float:
        lv = self.levels_for(u, v)
        return 0.0 if lv is None else step_value(lv, t)

    def period(self, u: int, v: int, t: float, d: float) -> float:
        lv = self.levels_for(u, v)
        return 0.0 if lv is None else period_risk(lv, t, d, self.rule)

    def to_json(self) -> dict:
        """Debug dump: edge "u-v" -> [level_1 .. level_H]."""
        return {
            f"{u}-{v}": [float(x) for x in lv]
            for (u, v), lv in sorted(self.levels.items())
        }


EMPTY_TABLE = StepRiskTable(RULE_MAX)


def regression_edge_sets(roadmap, trajectories):
    """Edges cut by predicted obstacle trajectories, per prediction step.

    trajectories: list of (anchor, points) with points an (H, 2) array of
    predicted positions at steps 1..H. The sub-segment from step t-1 to t is
    intersected with every edge; a hit puts the edge in set K_t.
    """
    sets = [set() for _ in range(HORIZON)]
    a, b = roadmap.edge_arrays()
    if len(roadmap.edges) == 0:
        return sets
    bb_lo = np.minimum(a, b)
    bb_hi = np.maximum(a, b)
    for anchor, points in trajectories:
        prev = (float(anchor[0]), float(anchor[1]))
        for t in range(1, HORIZON + 1):
            cur = (float(points[t - 1, 0]), float(points[t - 1, 1]))
            lo_x, hi_x = min(prev[0], cur[0]), max(prev[0], cur[0])
            lo_y, hi_y = min(prev[1], cur[1]), max(prev[1], cur[1])
            near = (
                (bb_lo[:, 0] <= hi_x + 1e-9)
                & (bb_hi[:, 0] >= lo_x - 1e-9)
                & (bb_lo[:, 1] <= hi_y + 1e-9)
                & (bb_hi[:, 1] >= lo_y - 1e-9)
            )
            idx = np.nonzero(near)[0]
            if idx.size:
                hits = segment_hits_many(prev, cur, a[idx], b[idx])
                for j in idx[np.nonzero(hits)[0]]:
                    u, v, _ = roadmap.edges[j]
                    sets[t - 1].add(edge_key(u, v))
            prev = cur
    return sets


def regression_table(roadmap, trajectories) -> StepRiskTable:
    """Binary step functions from predicted trajectories, period rule max."""
    sets = regression_edge_sets(roadmap, trajectories)
    levels = {}
    for t, cut in enumerate(sets):
        for key in cut:
            if key not in levels:
                levels[key] = np.zeros(HORIZON)
            levels[key][t] = 1.0
    return StepRiskTable(RULE_MAX, levels)


def classification_table(roadmap, grid_sets) -> StepRiskTable:
    """Combined per-edge step functions from per-obstacle occupancy grids.

    grid_sets: one GridSet per obstacle. Combination across obstacles treats
    per-obstacle risks as independent. Period rule: weighted average.
    """
    a, b = roadmap.edge_arrays()
    if len(roadmap.edges) == 0:
        return StepRiskTable(RULE_AVERAGE)
    bb_lo = np.minimum(a, b)
    bb_hi = np.maximum(a, b)
    complement = {}
    for gs in grid_sets:
        for t in gs.steps():
            grid = gs.grid(t)
            glo = grid.geometry.lo
            ghi = grid.geometry.hi
            near = (
                (bb_lo[:, 0] <= ghi[0] + 1e-9)
                & (bb_hi[:, 0] >= glo[0] - 1e-9)
                & (bb_lo[:, 1] <= ghi[1] + 1e-9)
                & (bb_hi[:, 1] >= glo[1] - 1e-9)
            )
            for j in np.nonzero(near)[0]:
                u, v, _ = roadmap.edges[j]
                p = (a[j, 0], a[j, 1])
                q = (b[j, 0], b[j, 1])
                k = edge_risk_from_grid(p, q, grid)
                if k <= 0.0:
                    continue
                key = edge_key(u, v)
                if key not in complement:
                    complement[key] = np.ones(HORIZON)
                complement[key][t - 1] *= 1.0 - k
    levels = {key: 1.0 - comp for key, comp in complement.items()}
    return StepRiskTable(RULE_AVERAGE, levels)
