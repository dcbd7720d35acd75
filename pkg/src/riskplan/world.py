"""Obstacle world simulation.

The world advances on a fixed micro-step grid (default 0.05 time units) and
snapshots obstacle positions once per observation interval (1 time unit).
Obstacle motion between snapshots is logged as a continuous piecewise-linear
track per obstacle; that polyline is the ground truth used by the collision
predicate and by the oracle predictor. Obstacles never react to the agent, so
a given seed yields one fixed traffic pattern regardless of what the planner
does.
"""

from __future__ import annotations

import math
import zlib
from array import array
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .geometry import segments_cross

OBSERVATION_INTERVAL = 1.0
# wall-proximity turn rule: full turn probability only right at the wall,
# fading linearly to zero at 15% of the map diagonal
WALL_TURN_P_MAX = 0.5
WALL_BAND_FRACTION = 0.15
PARABOLA_SEGMENTS = 256


class LogGapError(ValueError):
    """Collision query outside the time range covered by the trajectory log."""


@dataclass(frozen=True)
class MapSpec:
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("map dimensions must be positive")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        return -tol <= x <= self.width + tol and -tol <= y <= self.height + tol

    def wall_distance(self, x: float, y: float) -> float:
        return min(x, self.width - x, y, self.height - y)


def wall_turn_probability(mapspec: MapSpec, x: float, y: float) -> float:
    """Direction-change probability per unit time near walls."""
    band = WALL_BAND_FRACTION * mapspec.diagonal
    closeness = 1.0 - mapspec.wall_distance(x, y) / band
    if closeness < 0.0:
        closeness = 0.0
    elif closeness > 1.0:
        closeness = 1.0
    return closeness * WALL_TURN_P_MAX


class LinearRandomTarget:
    """Straight-line motion toward a target that is resampled on arrival.

    Near walls the target is additionally resampled with probability
    wall_turn_probability * dt per step, which keeps the statistics
    independent of the micro-step size.
    """

    def __init__(self, target):
        self.target = (float(target[0]), float(target[1]))

    def advance(self, ob, dt, mapspec, rng):
        kinks = []
        if rng is not None:
            p = wall_turn_probability(mapspec, ob.x, ob.y) * dt
            if rng.random() < p:
                self.target = _sample_point(rng, mapspec)
        remaining = ob.speed * dt
        t_off = 0.0
        while remaining > 1e-12:
            tx, ty = self.target
            dx, dy = tx - ob.x, ty - ob.y
            dist = math.hypot(dx, dy)
            if dist <= remaining + 1e-15:
                ob.x, ob.y = tx, ty
                remaining -= dist
                t_off += dist / ob.speed
                if remaining > 1e-12 and t_off < dt - 1e-12:
                    kinks.append((t_off, ob.x, ob.y))
                if rng is None:
                    break  # rng-less test obstacle parks at its target
                self.target = _sample_point(rng, mapspec)
            else:
                ob.x += dx / dist * remaining
                ob.y += dy / dist * remaining
                remaining = 0.0
        return kinks


class ParabolicOscillator:
    """Back-and-forth motion along a parabolic arc at constant path speed.

    The arc from endpoint_a to endpoint_b (apex offset arc_height along the
    left normal) is sampled into a polyline and re-parameterized by arc
    length; that polyline is the exact motion. phase is the starting position
    as a fraction of the one-way arc length.
    """

    def __init__(self, endpoint_a, endpoint_b, arc_height, phase=0.0):
        ax, ay = float(endpoint_a[0]), float(endpoint_a[1])
        bx, by = float(endpoint_b[0]), float(endpoint_b[1])
        if not 0.0 <= phase < 1.0:
            raise ValueError("phase must be in [0, 1)")
        ux, uy = bx - ax, by - ay
        chord = math.hypot(ux, uy)
        if chord < 1e-9:
            raise ValueError("oscillator endpoints coincide")
        nx, ny = -uy / chord, ux / chord
        m = PARABOLA_SEGMENTS
        u = np.linspace(0.0, 1.0, m + 1)
        bump = 4.0 * u * (1.0 - u) * arc_height
        self.vertices = np.empty((m + 1, 2))
        self.vertices[:, 0] = ax + u * ux + bump * nx
        self.vertices[:, 1] = ay + u * uy + bump * ny
        steps = np.hypot(np.diff(self.vertices[:, 0]), np.diff(self.vertices[:, 1]))
        self.cum = np.concatenate(([0.0], np.cumsum(steps)))
        self.total_length = float(self.cum[-1])
        self.endpoint_a = (ax, ay)
        self.endpoint_b = (bx, by)
        self.arc_height = float(arc_height)
        self.s = phase * self.total_length
        self.direction = 1

    def position_at_arc(self, s):
        s = min(max(s, 0.0), self.total_length)
        j = bisect_right(self.cum, s) - 1
        if j >= len(self.cum) - 1:
            j = len(self.cum) - 2
        seg = self.cum[j + 1] - self.cum[j]
        f = 0.0 if seg <= 0 else (s - self.cum[j]) / seg
        vx = self.vertices[j]
        vy = self.vertices[j + 1]
        return (vx[0] + f * (vy[0] - vx[0]), vx[1] + f * (vy[1] - vx[1]))

    def advance(self, ob, dt, mapspec, rng):
        kinks = []
        remaining = ob.speed * dt
        t_off = 0.0
        cum = self.cum
        top = len(cum) - 1
        while remaining > 1e-12:
            if self.direction > 0:
                if self.total_length - self.s <= 1e-12:
                    self.direction = -1
                    continue
                j = bisect_right(cum, self.s + 1e-12) - 1
                gap = cum[j + 1] - self.s
                if gap <= remaining + 1e-15:
                    self.s = cum[j + 1]
                    remaining -= gap
                    t_off += gap / ob.speed
                    ob.x, ob.y = self.vertices[j + 1]
                    if remaining > 1e-12 and t_off < dt - 1e-12:
                        kinks.append((t_off, ob.x, ob.y))
                    if j + 1 == top:
                        self.direction = -1
                else:
                    self.s += remaining
                    ob.x, ob.y = self.position_at_arc(self.s)
                    remaining = 0.0
            else:
                if self.s <= 1e-12:
                    self.direction = 1
                    continue
                j = bisect_left(cum, self.s - 1e-12) - 1
                if j < 0:
                    j = 0
                gap = self.s - cum[j]
                if gap <= remaining + 1e-15:
                    self.s = cum[j]
                    remaining -= gap
                    t_off += gap / ob.speed
                    ob.x, ob.y = self.vertices[j]
                    if remaining > 1e-12 and t_off < dt - 1e-12:
                        kinks.append((t_off, ob.x, ob.y))
                    if j == 0:
                        self.direction = 1
                else:
                    self.s -= remaining
                    ob.x, ob.y = self.position_at_arc(self.s)
                    remaining = 0.0
        return kinks


def _sample_point(rng, mapspec):
    return (rng.uniform(0.0, mapspec.width), rng.uniform(0.0, mapspec.height))


class Obstacle:
    __slots__ = ("oid", "x", "y", "speed", "motion", "rng")

    def __init__(self, oid: int, position, speed: float, motion, rng=None):
        if speed < 0:
            raise ValueError("obstacle speed must be non-negative")
        self.oid = oid
        self.x = float(position[0])
        self.y = float(position[1])
        self.speed = float(speed)
        self.motion = motion
        self.rng = rng


class Track:
    """Piecewise-linear trajectory of one obstacle: breakpoints (t, x, y)."""

    def __init__(self, t0: float, x: float, y: float):
        self.ts = array("d", [t0])
        self.xs = array("d", [x])
        self.ys = array("d", [y])

    def append(self, t: float, x: float, y: float):
        if t <= self.ts[-1] + 1e-15:
            return
        self.ts.append(t)
        self.xs.append(x)
        self.ys.append(y)

    @property
    def end_time(self) -> float:
        return self.ts[-1]

    def position_at(self, t: float):
        ts = self.ts
        if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
            raise LogGapError(f"time {t} outside logged range [{ts[0]}, {ts[-1]}]")
        i = bisect_right(ts, t) - 1
        if i < 0:
            i = 0
        if i >= len(ts) - 1:
            return (self.xs[-1], self.ys[-1])
        span = ts[i + 1] - ts[i]
        f = 0.0 if span <= 0 else (t - ts[i]) / span
        return (
            self.xs[i] + f * (self.xs[i + 1] - self.xs[i]),
            self.ys[i] + f * (self.ys[i + 1] - self.ys[i]),
        )

    def crosses(self, p, q, t_a: float, t_b: float) -> bool:
        """Does the obstacle path over [t_a, t_b] intersect segment p-q?"""
        ts = self.ts
        if ts[0] > t_a + 1e-9 or ts[-1] < t_b - 1e-9:
            raise LogGapError(
                f"interval [{t_a}, {t_b}] not covered by log [{ts[0]}, {ts[-1]}]"
            )
        i = bisect_right(ts, t_a) - 1
        if i < 0:
            i = 0
        ax, ay = self.position_at(t_a)
        t_cur = t_a
        n = len(ts)
        while t_cur < t_b - 1e-15:
            if i + 1 >= n:
                break
            t_next = ts[i + 1]
            if t_next > t_b:
                t_next = t_b
                bx, by = self.position_at(t_next)
            else:
                bx, by = self.xs[i + 1], self.ys[i + 1]
            if segments_cross((ax, ay), (bx, by), p, q):
                return True
            ax, ay = bx, by
            t_cur = t_next
            i += 1
        return False


class World:
    """All obstacles plus the clock, the trajectory log and the observation
    history. Time only moves forward, in whole micro cells."""

    def __init__(self, mapspec: MapSpec, obstacles, micro_step: float = 0.05):
        k = round(1.0 / micro_step)
        if k < 1 or abs(k * micro_step - 1.0) > 1e-9:
            raise ValueError("micro_step must evenly divide the observation interval")
        self.mapspec = mapspec
        self.obstacles = list(obstacles)
        self.micro_step = micro_step
        self._k = k
        self._cells = 0
        self.tracks = {ob.oid: Track(0.0, ob.x, ob.y) for ob in self.obstacles}
        self._snapshots = [np.array([[ob.x, ob.y] for ob in self.obstacles])]

    @property
    def time(self) -> float:
        return self._cells / self._k

    @property
    def observed_until(self) -> int:
        return len(self._snapshots) - 1

    def ensure_time(self, t: float):
        """Advance the clock until world time covers t."""
        needed = math.ceil(t * self._k - 1e-9)
        while self._cells < needed:
            self._advance_cell()

    def _advance_cell(self):
        t0 = self._cells / self._k
        t1 = (self._cells + 1) / self._k
        dt = t1 - t0
        for ob in self.obstacles:
            track = self.tracks[ob.oid]
            kinks = ob.motion.advance(ob, dt, self.mapspec, ob.rng)
            for (t_off, x, y) in kinks:
                track.append(t0 + t_off, x, y)
            track.append(t1, ob.x, ob.y)
        self._cells += 1
        if self._cells % self._k == 0:
            self._snapshots.append(np.array([[ob.x, ob.y] for ob in self.obstacles]))

    def observe(self, t: float):
        """Exact obstacle positions at integer observation time t."""
        ti = round(t)
        if abs(t - ti) > 1e-9:
            raise ValueError(f"observation time {t} is not a multiple of the interval")
        if ti < 0 or ti > self.observed_until:
            raise ValueError(f"time {t} not observed yet")
        snap = self._snapshots[ti]
        return [(ob.oid, (snap[i, 0], snap[i, 1])) for i, ob in enumerate(self.obstacles)]

    def observation_rows(self):
        """(t, obstacle_id, x, y) rows for CSV export."""
        for ti, snap in enumerate(self._snapshots):
            for i, ob in enumerate(self.obstacles):
                yield (float(ti), ob.oid, snap[i, 0], snap[i, 1])


def detect_collision(tracks, p, q, t_a: float, t_b: float) -> bool:
    """True when any obstacle's continuous path over [t_a, t_b] crosses the
    edge segment p-q. tracks is any iterable of Track objects."""
    if not t_a < t_b:
        raise ValueError("usage interval must have positive length")
    for track in tracks:
        if track.crosses(p, q, t_a, t_b):
            return True
    return False


def stream_seed(master_seed: int, name: str) -> np.random.SeedSequence:
    """Named, independent seed stream derived from the master seed."""
    return np.random.SeedSequence([int(master_seed), zlib.crc32(name.encode())])


def make_world(cfg: dict, master_seed: int) -> World:
    """Build a world from the `world` config section and a master seed.

    Obstacle placement and motion use dedicated seed streams, so the traffic
    pattern depends only on (config, master seed).
    """
    mapspec = MapSpec(cfg["width"], cfg["height"])
    count = int(cfg["obstacle_count"])
    frac = float(cfg.get("linear_fraction", 0.5))
    n_linear = round(count * frac)
    place = np.random.default_rng(stream_seed(master_seed, "placement"))
    motion_children = stream_seed(master_seed, "motion").spawn(count)
    speed_lo = float(cfg.get("speed_min", 0.3))
    speed_hi = float(cfg.get("speed_max", 0.5))
    obstacles = []
    for i in range(count):
        speed = place.uniform(speed_lo, speed_hi)
        rng = np.random.default_rng(motion_children[i])
        if i < n_linear:
            pos = _sample_point(place, mapspec)
            motion = LinearRandomTarget(_sample_point(place, mapspec))
            obstacles.append(Obstacle(i, pos, speed, motion, rng))
        else:
            motion = _sample_parabola(place, mapspec)
            obstacles.append(
                Obstacle(i, motion.position_at_arc(motion.s), speed, motion, rng)
            )
    return World(mapspec, obstacles, micro_step=float(cfg.get("micro_step", 0.05)))


def _sample_parabola(rng, mapspec) -> ParabolicOscillator:
    # rejected draws keep the arc fully inside the map
    min_chord = 0.3 * min(mapspec.width, mapspec.height)
    h_max = 0.25 * min(mapspec.width, mapspec.height)
    for _ in range(500):
        a = _sample_point(rng, mapspec)
        b = _sample_point(rng, mapspec)
        if math.hypot(b[0] - a[0], b[1] - a[1]) < min_chord:
            continue
        height = rng.uniform(-h_max, h_max)
        if abs(height) < 0.5:
            continue
        phase = rng.uniform(0.0, 1.0)
        osc = ParabolicOscillator(a, b, height, phase)
        xs, ys = osc.vertices[:, 0], osc.vertices[:, 1]
        if xs.min() >= 0 and xs.max() <= mapspec.width and ys.min() >= 0 and ys.max() <= mapspec.height:
            return osc
    raise RuntimeError("could not place a parabolic obstacle inside the map")
