"""Time- and risk-dependent A* over a roadmap.

Edge cost is length plus r times the period risk of using the edge at its
departure time; departure times follow from the prefix of edge lengths since
the agent moves at unit speed. The search is label setting: a node finished
once is never reopened, which is only guaranteed optimal for FIFO costs. The
step risk functions here are not FIFO in general, so optimality is a measured
property (see the acceptance suite), not an assumption.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

from .riskgraph import EMPTY_TABLE


def edge_cost(length: float, departure: float, r: float, period_risk_value: float) -> float:
    """c(t) = l + r * k_period(t). Split out for tests; the planner inlines it."""
    if length <= 0:
        raise ValueError("edge length must be positive")
    if r < 0:
        raise ValueError("risk weight must be non-negative")
    return length + r * period_risk_value


@dataclass
class PlanResult:
    nodes: list
    departures: list  # departure time at each node except the last
    cost: float
    length: float
    risk_sum: float

    @property
    def arrival_time(self) -> float:
        return self.departures[0] + self.length if self.departures else 0.0

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "departures": [float(t) for t in self.departures],
            "cost": float(self.cost),
            "length": float(self.length),
            "risk_sum": float(self.risk_sum),
        }


def plan(roadmap, start: int, dest: int, t0: float, r: float, risk=EMPTY_TABLE):
    """Least-cost path from start (departing at t0) to dest.

    Returns a PlanResult or None when dest is unreachable. Ties in the
    priority queue break toward lower g, then lower node id.
    """
    if not 0.0 <= t0 < 1.0:
        raise ValueError("t0 must lie in [0, 1)")
    if r < 0:
        raise ValueError("risk weight must be non-negative")
    n = roadmap.node_count
    if not (0 <= start < n and 0 <= dest < n):
        raise ValueError("node id out of range")
    points = roadmap.points
    dx = points[:, 0] - points[dest, 0]
    dy = points[:, 1] - points[dest, 1]
    heuristic = (dx * dx + dy * dy) ** 0.5

    g = {start: 0.0}
    t_arr = {start: t0}
    parent = {}
    finished = set()
    heap = [(heuristic[start], 0.0, start)]
    found = False
    while heap:
        f, gv, v = heapq.heappop(heap)
        if v in finished:
            continue
        if gv > g.get(v, math.inf) + 1e-15:
            continue  # stale queue entry
        if v == dest:
            found = True
            break
        finished.add(v)
        tv = t_arr[v]
        for w, length in roadmap.adjacency[v]:
            if w in finished:
                continue
            k = risk.period(v, w, tv, length) if r > 0 else 0.0
            gw = gv + length + r * k
            if gw < g.get(w, math.inf) - 1e-15:
                g[w] = gw
                t_arr[w] = tv + length
                parent[w] = v
                heapq.heappush(heap, (gw + heuristic[w], gw, w))
    if not found:
        return None
    nodes = [dest]
    while nodes[-1] != start:
        nodes.append(parent[nodes[-1]])
    nodes.reverse()
    departures = []
    total_len = 0.0
    risk_sum = 0.0
    t = t0
    for u, v in zip(nodes, nodes[1:]):
        departures.append(t)
        length = roadmap.distance(u, v)
        risk_sum += risk.period(u, v, t, length)
        total_len += length
        t += length
    return PlanResult(
        nodes=nodes,
        departures=departures,
        cost=g[dest],
        length=total_len,
        risk_sum=risk_sum,
    )


@dataclass
class EscapeController:
    """Dead-end escape: halve the effective risk weight while the agent loops.

    A trigger fires when some node is revisited at least revisit_threshold
    times within the sliding window while the straight-line distance to the
    target has not improved. progress_steps consecutive improving arrivals
    restore the configured weight.
    """

    base_r: float
    revisit_threshold: int = 3
    window: int = 12
    progress_steps: int = 5
    halvings: int = 0
    activations: int = 0
    _visits: deque = field(default_factory=lambda: deque(maxlen=12))
    _best: float = math.inf
    _streak: int = 0

    def __post_init__(self):
        self._visits = deque(maxlen=self.window)

    @property
    def effective_r(self) -> float:
        return self.base_r / (2.0 ** self.halvings)

    def on_arrival(self, node: int, distance_to_target: float):
        improved = distance_to_target < self._best - 1e-9
        if improved:
            self._best = distance_to_target
            self._streak += 1
            if self._streak >= self.progress_steps and self.halvings:
                self.halvings = 0
        else:
            self._streak = 0
        self._visits.append(node)
        if not improved and self._visits.count(node) >= self.revisit_threshold:
            self.halvings += 1
            self.activations += 1
            self._visits.clear()
        return self.effective_r
