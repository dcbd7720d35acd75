"""Shared test oracles: exhaustive path enumeration under time-dependent
costs, and random planning instance generation."""

import math

import numpy as np

from riskplan.riskgraph import RULE_AVERAGE, RULE_MAX, StepRiskTable, edge_key
from riskplan.roadmap import Roadmap


def evaluate_path(roadmap, table, path, t0, r):
    """(cost, length, risk_sum) of a concrete path departing at t0."""
    t = t0
    cost = 0.0
    length = 0.0
    risk_sum = 0.0
    for u, v in zip(path, path[1:]):
        edge_len = roadmap.distance(u, v)
        k = table.period(u, v, t, edge_len)
        cost += edge_len + r * k
        length += edge_len
        risk_sum += k
        t += edge_len
    return cost, length, risk_sum


def exhaustive_best(roadmap, table, start, dest, t0, r):
    """Minimum-cost simple path by brute force.

    Ties resolve to the lowest risk sum, then the shortest length, then the
    lexicographically smallest node sequence, so callers get a stable
    representative. Returns (cost, length, risk_sum, path) or None.
    """
    best = None
    stack = [(start, (start,), frozenset((start,)))]
    while stack:
        u, path, visited = stack.pop()
        if u == dest:
            cost, length, risk_sum = evaluate_path(roadmap, table, path, t0, r)
            key = (round(cost, 12), round(risk_sum, 12), round(length, 12), path)
            if best is None or key < best:
                best = key
            continue
        for v, _ in roadmap.adjacency[u]:
            if v not in visited:
                stack.append((v, path + (v,), visited | {v}))
    if best is None:
        return None
    cost, risk_sum, length, path = best
    return cost, length, risk_sum, list(path)


def random_instance(rng, n_lo=5, n_hi=12, risky_fraction=0.4):
    """Random connected mini roadmap with random step risk functions.

    Returns (roadmap, table, start, dest, t0, r). Half the instances carry
    binary levels under the max rule, half continuous levels under the
    average rule.
    """
    while True:
        n = int(rng.integers(n_lo, n_hi + 1))
        pts = rng.uniform(0, 10, (n, 2))
        radius = rng.uniform(3.5, 6.0)
        edges = []
        for u in range(n):
            for v in range(u + 1, n):
                d = math.hypot(*(pts[u] - pts[v]))
                if 1e-9 < d <= radius:
                    edges.append((u, v, float(d)))
        if not edges:
            continue
        rm = Roadmap(points=pts, edges=edges)
        start, dest = (int(x) for x in rng.choice(n, 2, replace=False))
        # reachability probe
        seen = {start}
        frontier = [start]
        while frontier:
            x = frontier.pop()
            for y, _ in rm.adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        if dest not in seen:
            continue
        binary = bool(rng.integers(0, 2))
        levels = {}
        for u, v, _ in edges:
            if rng.uniform() < risky_fraction:
                if binary:
                    lv = (rng.uniform(0, 1, 4) < 0.5).astype(float)
                else:
                    lv = rng.uniform(0, 1, 4)
                if lv.any():
                    levels[edge_key(u, v)] = lv
        table = StepRiskTable(RULE_MAX if binary else RULE_AVERAGE, levels)
        t0 = float(rng.uniform(0, 1))
        r = float(rng.uniform(0, 1000))
        return rm, table, start, dest, t0, r
