"""Vehicle lifecycle: departures, routes, kinematic motion and GPS drift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import networkx as nx
import numpy as np

from . import kernels
from .geo import RoadMap, Vec2
from .simcore import RngStream

URBAN_PATTERNS = ("uniform-crossing", "upper-confined", "lower-confined")
HIGHWAY_PATTERNS = ("highway-west-to-east", "highway-east-to-west")
PATTERNS = URBAN_PATTERNS + HIGHWAY_PATTERNS

URBAN_SPEED = (8.0, 14.0)
HIGHWAY_SPEED = (25.0, 36.0)


@dataclass(frozen=True)
class Route:
    waypoints: tuple[Vec2, ...]
    pattern: str
    round_trip: bool = True

    @cached_property
    def path(self) -> np.ndarray:
        """Driven polyline ``(P, 2)``: out and back for round trips, no repeated points."""
        pts = list(self.waypoints)
        if self.round_trip and len(pts) > 1:
            pts = pts + pts[-2::-1]
        arr = np.asarray(pts, dtype=float).reshape(-1, 2)
        if len(arr) > 1:
            keep = np.ones(len(arr), dtype=bool)
            keep[1:] = np.any(np.diff(arr, axis=0) != 0.0, axis=1)
            arr = arr[keep]
        return arr

    @cached_property
    def cumulative(self) -> np.ndarray:
        steps = np.hypot(*np.diff(self.path, axis=0).T) if len(self.path) > 1 else np.zeros(0)
        return np.concatenate(([0.0], np.cumsum(steps)))

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])


@dataclass(frozen=True)
class VehicleState:
    id: int
    true_pos: Vec2
    speed: float
    heading: Vec2
    route: Route
    waypoint_index: int = 0
    active: bool = True
    odometer: float = 0.0


def place(route: Route, odometer: float) -> tuple[Vec2, Vec2, int]:
    """Position, unit heading and segment index at ``odometer`` metres along the route."""
    path, cum = route.path, route.cumulative
    if len(path) == 1:
        return Vec2(*path[0]), Vec2(0.0, 0.0), 0
    k = int(np.searchsorted(cum, odometer, side="right")) - 1
    k = min(max(k, 0), len(path) - 2)
    seg = cum[k + 1] - cum[k]
    e = path[k + 1] - path[k]
    frac = (odometer - cum[k]) / seg
    p = path[k] + frac * e
    return Vec2(float(p[0]), float(p[1])), Vec2(float(e[0] / seg), float(e[1] / seg)), k


def spawn(vid: int, route: Route, speed: float, odometer: float = 0.0) -> VehicleState:
    pos, heading, k = place(route, odometer)
    return VehicleState(vid, pos, speed, heading, route, k, True, odometer)


def advance(v: VehicleState, dt: float) -> VehicleState:
    """Move ``v`` by ``speed * dt`` along its route; deactivate at the end of the trip."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0 or not v.active:
        return v
    s = v.odometer + v.speed * dt
    total = v.route.length
    if s >= total:
        end = v.route.path[-1]
        return replace(v, true_pos=Vec2(float(end[0]), float(end[1])), odometer=total,
                       waypoint_index=len(v.route.path) - 1, active=False)
    pos, heading, k = place(v.route, s)
    return replace(v, true_pos=pos, heading=heading, waypoint_index=k, odometer=s)


# --- GPS drift ----------------------------------------------------------------

@dataclass(frozen=True)
class DriftModel:
    deviation: float = 0.0
    resample_period: float = 1.0

    def __post_init__(self):
        if self.deviation < 0:
            raise ValueError("deviation must be >= 0")
        if self.resample_period <= 0:
            raise ValueError("resample_period must be > 0")


class GpsReceiver:
    """Reports ``true_pos + offset``; the offset has length ``deviation`` and a
    uniformly random direction, held constant within each resample period."""

    def __init__(self, drift: DriftModel, rng: RngStream) -> None:
        self.drift = drift
        self.rng = rng
        self._cache: dict[int, tuple[int, Vec2]] = {}

    def read(self, v: VehicleState, now: float = 0.0) -> Vec2:
        if self.drift.deviation == 0:
            return v.true_pos
        epoch = math.floor(now / self.drift.resample_period)
        hit = self._cache.get(v.id)
        if hit is None or hit[0] != epoch:
            theta = self.rng.uniform(0.0, 2 * math.pi)
            d = self.drift.deviation
            hit = (epoch, Vec2(d * math.cos(theta), d * math.sin(theta)))
            self._cache[v.id] = hit
        return v.true_pos + hit[1]


def gps_read(v: VehicleState, drift: DriftModel, rng: RngStream, now: float = 0.0,
             receiver: GpsReceiver | None = None) -> Vec2:
    receiver = receiver or GpsReceiver(drift, rng)
    return receiver.read(v, now)


# --- departures -----------------------------------------------------------------

@dataclass(frozen=True)
class DepartureProcess:
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("departure rate must be >= 0")

    @classmethod
    def from_density(cls, density: float, area_km2: float, mean_trip_time: float) -> "DepartureProcess":
        """Steady-state occupancy = rate * mean trip time (Little's law)."""
        if mean_trip_time <= 0:
            raise ValueError("mean trip time must be positive")
        return cls(density * area_km2 / mean_trip_time)

    @classmethod
    def from_flow(cls, vph: float) -> "DepartureProcess":
        return cls(vph / 3600.0)


def departure_schedule(process: DepartureProcess, horizon: float, rng: RngStream) -> list[float]:
    """Poisson arrival times in ``[0, horizon)``."""
    times: list[float] = []
    if horizon <= 0 or process.rate <= 0:
        return times
    scale = 1.0 / process.rate
    t = 0.0
    while True:
        t += float(rng.exponential(scale))
        if t >= horizon:
            return times
        times.append(t)


# --- routes ---------------------------------------------------------------------

def assign_route(road_map: RoadMap, pattern: str, rng: RngStream) -> Route:
    if pattern not in PATTERNS:
        raise ValueError(f"unknown route pattern {pattern!r}")
    if pattern in HIGHWAY_PATTERNS:
        if road_map.kind != "highway":
            raise ValueError(f"pattern {pattern!r} needs a highway map")
        return _highway_route(road_map, pattern, rng)
    if road_map.kind == "highway":
        raise ValueError(f"pattern {pattern!r} needs an urban map")
    return _urban_route(road_map, pattern, rng)


def _highway_route(road_map: RoadMap, pattern: str, rng: RngStream) -> Route:
    seg = road_map.segments[0]
    lanes = max(seg.lanes, 1)
    lane_width = (road_map.bounds[3] - road_map.bounds[1]) / (2 * lanes)
    lane = int(rng.integers(0, lanes))
    offset = (lane + 0.5) * lane_width
    x0, x1 = min(seg.a.x, seg.b.x), max(seg.a.x, seg.b.x)
    y = seg.a.y
    if pattern == "highway-west-to-east":
        wps = (Vec2(x0, y - offset), Vec2(x1, y - offset))
    else:
        wps = (Vec2(x1, y + offset), Vec2(x0, y + offset))
    return Route(wps, pattern, round_trip=False)


def _urban_route(road_map: RoadMap, pattern: str, rng: RngStream) -> Route:
    g = road_map.graph
    mid = road_map.midline
    nodes = sorted(g.nodes)
    if pattern == "uniform-crossing":
        lower = [n for n in nodes if n.y < mid]
        upper = [n for n in nodes if n.y > mid]
        if not lower or not upper:
            raise ValueError("map has no nodes on both sides of the midline")
        a = lower[int(rng.integers(0, len(lower)))]
        b = upper[int(rng.integers(0, len(upper)))]
        if rng.random() < 0.5:
            a, b = b, a
    else:
        keep = [n for n in nodes if (n.y >= mid if pattern == "upper-confined" else n.y <= mid)]
        g = g.subgraph(keep)
        if len(keep) < 2:
            raise ValueError("confined half has fewer than two nodes")
        i, j = rng.integers(0, len(keep), size=2)
        while i == j:
            j = rng.integers(0, len(keep))
        a, b = keep[int(i)], keep[int(j)]
    # randomised edge costs give route diversity between equal-length paths
    mult = rng.uniform(1.0, 1.5, size=len(road_map.segments))
    try:
        path = nx.dijkstra_path(g, a, b, weight=lambda u, v, d: d["length"] * mult[d["idx"]])
    except nx.NetworkXNoPath:
        raise ValueError(f"no road path for pattern {pattern!r}") from None
    return Route(tuple(path), pattern, round_trip=True)


def draw_speed(kind: str, rng: RngStream, urban=URBAN_SPEED, highway=HIGHWAY_SPEED) -> float:
    lo, hi = highway if kind == "highway" else urban
    return float(rng.uniform(lo, hi))


# --- fleet (struct of arrays used by the simulation loop) ----------------------

@dataclass
class Fleet:
    """Positions and routes of every node, stored as arrays for the kernels.

    Slots are never reused: slot ``i`` is node id ``i`` for the whole run.
    Fixed nodes (source, receiver) have a single-point route and never move.
    """

    pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    heading: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    offset: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    odo: np.ndarray = field(default_factory=lambda: np.zeros(0))
    speed: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        self.routes: list[Route] = []
        self._pts: np.ndarray = np.zeros((0, 2))
        self._cum: np.ndarray = np.zeros(0)
        self._offsets: np.ndarray = np.zeros(1, dtype=np.int64)
        self._dirty = False

    def __len__(self) -> int:
        return len(self.routes)

    def add(self, route: Route, speed: float, odometer: float = 0.0, fixed: bool = False) -> int:
        vid = len(self.routes)
        pos, heading, _ = place(route, odometer)
        self.routes.append(route)
        self.pos = np.vstack([self.pos, [pos]])
        self.heading = np.vstack([self.heading, [heading]])
        self.offset = np.vstack([self.offset, [[0.0, 0.0]]])
        self.odo = np.append(self.odo, odometer)
        self.speed = np.append(self.speed, 0.0 if fixed else speed)
        self.active = np.append(self.active, True)
        self.fixed = np.append(self.fixed, fixed)
        self._dirty = True
        return vid

    def add_fixed(self, p: Vec2) -> int:
        return self.add(Route((Vec2(*p),), "fixed", round_trip=False), 0.0, fixed=True)

    def _rebuild(self) -> None:
        self._pts = np.concatenate([r.path for r in self.routes])
        self._cum = np.concatenate([r.cumulative for r in self.routes])
        sizes = [len(r.path) for r in self.routes]
        self._offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
        self._dirty = False

    def step(self, dt: float) -> np.ndarray:
        """Advance every moving vehicle; return ids whose trip just ended."""
        if self._dirty:
            self._rebuild()
        moving = self.active & ~self.fixed
        if not moving.any():
            return np.zeros(0, dtype=np.int64)
        done = np.zeros(len(self.routes), dtype=bool)
        kernels.advance_fleet(self._pts, self._cum, self._offsets, self.odo, self.speed,
                              moving, float(dt), self.pos, self.heading, done)
        self.active &= ~done
        return np.nonzero(done)[0]

    def resample_drift(self, deviation: float, rng: RngStream) -> None:
        n = len(self.routes)
        if deviation == 0 or n == 0:
            self.offset[:] = 0.0
            return
        theta = rng.uniform(0.0, 2 * math.pi, size=n)
        self.offset = deviation * np.column_stack([np.cos(theta), np.sin(theta)])

    def reported(self, vid: int) -> Vec2:
        p = self.pos[vid] + self.offset[vid]
        return Vec2(float(p[0]), float(p[1]))

    def direction(self, vid: int) -> Vec2:
        h = self.heading[vid]
        return Vec2(float(h[0]), float(h[1]))

    def state(self, vid: int) -> VehicleState:
        route = self.routes[vid]
        _, _, k = place(route, float(self.odo[vid]))
        return VehicleState(vid, Vec2(*map(float, self.pos[vid])), float(self.speed[vid]),
                            self.direction(vid), route, k, bool(self.active[vid]),
                            float(self.odo[vid]))
