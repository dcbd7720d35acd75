"""Random roadmap construction and static shortest paths.

Nodes are sampled uniformly on the map, pairs within the connection radius
(and below the edge length cap) are joined, and everything outside the
largest connected component is dropped. Node ids are dense integers in
sampling order, re-packed after pruning, so a seed pins the graph exactly.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Roadmap:
    points: np.ndarray  # (n, 2) node coordinates
    edges: list  # (u, v, length) with u < v
    adjacency: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.adjacency:
            adj = {i: [] for i in range(len(self.points))}
            for u, v, length in self.edges:
                adj[u].append((v, length))
                adj[v].append((u, length))
            for u in adj:
                adj[u].sort()
            self.adjacency = adj

    @property
    def node_count(self) -> int:
        return len(self.points)

    def node_xy(self, v: int):
        return (float(self.points[v, 0]), float(self.points[v, 1]))

    def distance(self, u: int, v: int) -> float:
        return math.hypot(
            self.points[u, 0] - self.points[v, 0],
            self.points[u, 1] - self.points[v, 1],
        )

    def edge_arrays(self):
        """Endpoint coordinate arrays (m, 2) and (m, 2), cached."""
        if not hasattr(self, "_edge_a"):
            self._edge_a = np.array([self.points[u] for u, _, _ in self.edges])
            self._edge_b = np.array([self.points[v] for _, v, _ in self.edges])
        return self._edge_a, self._edge_b

    def to_json(self) -> dict:
        return {
            "nodes": [
                {"id": i, "x": float(x), "y": float(y)}
                for i, (x, y) in enumerate(self.points)
            ],
            "edges": [
                {"u": u, "v": v, "length": length} for u, v, length in self.edges
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Roadmap":
        nodes = sorted(doc["nodes"], key=lambda n: n["id"])
        if [n["id"] for n in nodes] != list(range(len(nodes))):
            raise ValueError("roadmap node ids must be dense integers")
        points = np.array([[n["x"], n["y"]] for n in nodes])
        edges = [(e["u"], e["v"], e["length"]) for e in doc["edges"]]
        return cls(points=points, edges=edges)


def build_roadmap(mapspec, n_nodes: int, connect_radius: float, max_edge_length: float, rng) -> Roadmap:
    """Sample a roadmap; returns the largest connected component re-indexed."""
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    if max_edge_length > connect_radius:
        raise ValueError("max_edge_length must not exceed connect_radius")
    pts = np.column_stack(
        (
            rng.uniform(0.0, mapspec.width, n_nodes),
            rng.uniform(0.0, mapspec.height, n_nodes),
        )
    )
    cap = min(connect_radius, max_edge_length)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    raw_edges = []
    for u in range(n_nodes):
        for v in range(u + 1, n_nodes):
            d = dist[u, v]
            if 1e-9 < d <= cap:
                raw_edges.append((u, v, float(d)))

    # largest connected component via union-find
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in raw_edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = [find(i) for i in range(n_nodes)]
    sizes = {}
    for r in roots:
        sizes[r] = sizes.get(r, 0) + 1
    best = max(sizes.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    keep = [i for i in range(n_nodes) if roots[i] == best]
    if len(keep) < 2:
        raise ValueError("largest component has fewer than two nodes")
    remap = {old: new for new, old in enumerate(keep)}
    edges = [
        (remap[u], remap[v], d) for u, v, d in raw_edges if roots[u] == best
    ]
    return Roadmap(points=pts[keep], edges=edges)


def shortest_path_static(roadmap: Roadmap, start: int, dest: int):
    """Dijkstra on static edge lengths. Returns (path nodes, length) or None.

    Ties break toward the lower node id so results are reproducible.
    """
    n = roadmap.node_count
    if not (0 <= start < n and 0 <= dest < n):
        raise ValueError("node id out of range")
    dist = {start: 0.0}
    parent = {}
    done = set()
    heap = [(0.0, start)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if d > dist.get(u, math.inf) + 1e-15:
            continue
        done.add(u)
        if u == dest:
            break
        for v, length in roadmap.adjacency[u]:
            if v in done:
                continue
            nd = d + length
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    if dest not in done:
        return None
    path = [dest]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path, dist[dest]


def save_roadmap(roadmap: Roadmap, path: str):
    with open(path, "w") as fh:
        json.dump(roadmap.to_json(), fh)


def load_roadmap(path: str) -> Roadmap:
    with open(path) as fh:
        return Roadmap.from_json(json.load(fh))
