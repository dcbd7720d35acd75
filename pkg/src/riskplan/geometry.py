"""Planar segment and box intersection primitives.

Shared by the obstacle simulator (continuous collision test), the risk layer
(grid cell assignment) and the prediction layer. All predicates treat touches
within TOL as hits: the downstream consumers want conservative geometry.
"""

from __future__ import annotations

import math

import numpy as np

TOL = 1e-9


def cross_from(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    """Cross product (a - o) x (b - o)."""
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _within(a: float, b: float, v: float, tol: float) -> bool:
    if a > b:
        a, b = b, a
    return a - tol <= v <= b + tol


def _point_in_bbox(px, py, qx, qy, x, y, tol):
    return _within(px, qx, x, tol) and _within(py, qy, y, tol)


def segments_cross(p, q, a, b, tol: float = TOL) -> bool:
    """True if segment p-q intersects segment a-b.

    Includes endpoint touches and collinear overlap. Degenerate (zero length)
    segments behave as points.
    """
    px, py = p
    qx, qy = q
    ax, ay = a
    bx, by = b
    d1 = cross_from(px, py, qx, qy, ax, ay)
    d2 = cross_from(px, py, qx, qy, bx, by)
    d3 = cross_from(ax, ay, bx, by, px, py)
    d4 = cross_from(ax, ay, bx, by, qx, qy)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    # collinear or touching cases
    if abs(d1) <= tol and _point_in_bbox(px, py, qx, qy, ax, ay, tol):
        return True
    if abs(d2) <= tol and _point_in_bbox(px, py, qx, qy, bx, by, tol):
        return True
    if abs(d3) <= tol and _point_in_bbox(ax, ay, bx, by, px, py, tol):
        return True
    if abs(d4) <= tol and _point_in_bbox(ax, ay, bx, by, qx, qy, tol):
        return True
    return False


def segment_hits_many(p, q, a: np.ndarray, b: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Vectorized segments_cross of one segment p-q against m segments (a[i], b[i]).

    a, b: float arrays of shape (m, 2). Returns a boolean mask of shape (m,).
    Mirrors segments_cross exactly so the scalar predicate is the reference.
    """
    px, py = p
    qx, qy = q
    ax, ay = a[:, 0], a[:, 1]
    bx, by = b[:, 0], b[:, 1]
    rx, ry = qx - px, qy - py
    d1 = rx * (ay - py) - ry * (ax - px)
    d2 = rx * (by - py) - ry * (bx - px)
    sx, sy = bx - ax, by - ay
    d3 = sx * (py - ay) - sy * (px - ax)
    d4 = sx * (qy - ay) - sy * (qx - ax)

    proper = (((d1 > tol) & (d2 < -tol)) | ((d1 < -tol) & (d2 > tol))) & (
        ((d3 > tol) & (d4 < -tol)) | ((d3 < -tol) & (d4 > tol))
    )

    lo_x, hi_x = min(px, qx) - tol, max(px, qx) + tol
    lo_y, hi_y = min(py, qy) - tol, max(py, qy) + tol
    a_on = (np.abs(d1) <= tol) & (ax >= lo_x) & (ax <= hi_x) & (ay >= lo_y) & (ay <= hi_y)
    b_on = (np.abs(d2) <= tol) & (bx >= lo_x) & (bx <= hi_x) & (by >= lo_y) & (by <= hi_y)

    elo_x, ehi_x = np.minimum(ax, bx) - tol, np.maximum(ax, bx) + tol
    elo_y, ehi_y = np.minimum(ay, by) - tol, np.maximum(ay, by) + tol
    p_on = (np.abs(d3) <= tol) & (px >= elo_x) & (px <= ehi_x) & (py >= elo_y) & (py <= ehi_y)
    q_on = (np.abs(d4) <= tol) & (qx >= elo_x) & (qx <= ehi_x) & (qy >= elo_y) & (qy <= ehi_y)

    return proper | a_on | b_on | p_on | q_on


def segment_box_overlap(p, q, lo, hi, tol: float = TOL) -> bool:
    """True if segment p-q intersects the closed axis-aligned box [lo, hi].

    The box is inflated by tol, so boundary touches count. Liang-Barsky style
    slab clipping; handles axis-parallel and degenerate segments.
    """
    t0, t1 = 0.0, 1.0
    for axis in (0, 1):
        o = p[axis]
        d = q[axis] - o
        a = lo[axis] - tol
        b = hi[axis] + tol
        if abs(d) < 1e-15:
            if o < a or o > b:
                return False
            continue
        ta = (a - o) / d
        tb = (b - o) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


def segment_box_clip(p, q, lo, hi, tol: float = TOL):
    """Parameter interval [t0, t1] of p + t*(q - p) inside the tol-inflated box.

    Returns None when the segment misses the box.
    """
    t0, t1 = 0.0, 1.0
    for axis in (0, 1):
        o = p[axis]
        d = q[axis] - o
        a = lo[axis] - tol
        b = hi[axis] + tol
        if abs(d) < 1e-15:
            if o < a or o > b:
                return None
            continue
        ta = (a - o) / d
        tb = (b - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def point_segment_distance(x, y, ax, ay, bx, by) -> float:
    """Euclidean distance from point (x, y) to segment a-b."""
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den < 1e-30:
        return math.hypot(x - ax, y - ay)
    u = ((x - ax) * dx + (y - ay) * dy) / den
    u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
    return math.hypot(x - (ax + u * dx), y - (ay + u * dy))
