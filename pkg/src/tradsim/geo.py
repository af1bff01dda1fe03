"""Planar geometry, the road-network model and synthetic map generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import networkx as nx
import numpy as np

from .simcore import RngStream

MERGE_RADIUS = 1.0
NO_INTERSECTION = math.inf


class Vec2(NamedTuple):
    x: float
    y: float

    def __sub__(self, other):  # type: ignore[override]
        return Vec2(self.x - other[0], self.y - other[1])

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def scale(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = math.hypot(self.x, self.y)
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)


ZERO = Vec2(0.0, 0.0)


def angle_between(v1: Sequence[float], v2: Sequence[float]) -> float:
    """Angle in ``[0, pi]`` between two non-zero vectors, via the dot product."""
    n1 = math.hypot(v1[0], v1[1])
    n2 = math.hypot(v2[0], v2[1])
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("angle_between needs non-zero vectors")
    c = (v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)
    return math.acos(min(1.0, max(-1.0, c)))


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection; touching and collinear overlap count."""
    d1 = _orient(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _orient(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1]):
        return True
    if d2 == 0 and _on_segment(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1]):
        return True
    if d3 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1]):
        return True
    if d4 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1]):
        return True
    return False


def point_in_convex(poly: Sequence[Sequence[float]], p: Sequence[float]) -> bool:
    """True if ``p`` is inside or on the boundary of a convex polygon."""
    sign = 0
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        o = _orient(a[0], a[1], b[0], b[1], p[0], p[1])
        if o == 0:
            continue
        s = 1 if o > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def segment_hits_polygon(a, b, poly) -> bool:
    if point_in_convex(poly, a) or point_in_convex(poly, b):
        return True
    n = len(poly)
    return any(segments_intersect(a, b, poly[i], poly[(i + 1) % n]) for i in range(n))


@dataclass(frozen=True)
class Segment:
    a: Vec2
    b: Vec2
    lanes: int = 1

    @property
    def length(self) -> float:
        return distance(self.a, self.b)


@dataclass(frozen=True)
class RoadMap:
    segments: tuple[Segment, ...]
    intersections: tuple[Vec2, ...]
    buildings: tuple[tuple[Vec2, ...], ...]
    bounds: tuple[float, float, float, float]
    kind: str = "custom"

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def area_km2(self) -> float:
        return self.width * self.height / 1e6

    @property
    def center(self) -> Vec2:
        return Vec2((self.bounds[0] + self.bounds[2]) / 2, (self.bounds[1] + self.bounds[3]) / 2)

    @property
    def midline(self) -> float:
        return (self.bounds[1] + self.bounds[3]) / 2

    @cached_property
    def intersection_array(self) -> np.ndarray:
        return np.asarray(self.intersections, dtype=float).reshape(-1, 2)

    @cached_property
    def building_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded vertex array ``(M, K, 2)``, vertex counts ``(M,)`` and bboxes ``(M, 4)``."""
        m = len(self.buildings)
        k = max((len(b) for b in self.buildings), default=3)
        verts = np.zeros((m, k, 2))
        counts = np.zeros(m, dtype=np.int64)
        boxes = np.zeros((m, 4))
        for i, poly in enumerate(self.buildings):
            arr = np.asarray(poly, dtype=float)
            verts[i, : len(poly)] = arr
            verts[i, len(poly):] = arr[-1]
            counts[i] = len(poly)
            boxes[i] = (arr[:, 0].min(), arr[:, 1].min(), arr[:, 0].max(), arr[:, 1].max())
        return verts, counts, boxes

    @cached_property
    def graph(self) -> nx.Graph:
        """Road graph; nodes are segment endpoints, edges carry ``length`` and ``idx``."""
        g = nx.Graph()
        for k, s in enumerate(self.segments):
            g.add_edge(s.a, s.b, length=s.length, idx=k)
        return g

    def nodes(self) -> list[Vec2]:
        seen: dict[Vec2, None] = {}
        for s in self.segments:
            seen.setdefault(s.a)
            seen.setdefault(s.b)
        return list(seen)


def line_of_sight(road_map: RoadMap, a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff segment a-b touches no building (boundary counts as blocked)."""
    lo_x, hi_x = min(a[0], b[0]), max(a[0], b[0])
    lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])
    for poly in road_map.buildings:
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        if max(xs) < lo_x or min(xs) > hi_x or max(ys) < lo_y or min(ys) > hi_y:
            continue
        if segment_hits_polygon(a, b, poly):
            return False
    return True


def nearest_intersection_distance(road_map: RoadMap, p: Sequence[float]) -> float:
    pts = road_map.intersection_array
    if len(pts) == 0:
        return NO_INTERSECTION
    return float(np.sqrt(((pts - np.asarray(p[:2], dtype=float)) ** 2).sum(axis=1)).min())


@dataclass(frozen=True)
class GridMapParams:
    blocks_x: int = 6
    blocks_y: int = 6
    block_size: float = 1000.0 / 6
    lanes: int = 1
    building_inset: float = 12.0
    irregularity: float = 0.0


@dataclass(frozen=True)
class HighwayMapParams:
    length: float = 2000.0
    lanes_per_direction: int = 2
    lane_width: float = 3.5


def _merge_close(points: list[Vec2], radius: float = MERGE_RADIUS) -> list[Vec2]:
    merged: list[Vec2] = []
    for p in points:
        if all(distance(p, q) >= radius for q in merged):
            merged.append(p)
    return merged


def build_grid_map(params: GridMapParams, rng: RngStream | None = None) -> RoadMap:
    """Manhattan-style grid with one inset rectangular building per block.

    With ``irregularity > 0`` every junction is jittered by up to
    ``irregularity * block_size / 4`` per axis; border junctions only slide
    along the border so the map keeps its rectangular bounds.
    """
    bx, by, bs = params.blocks_x, params.blocks_y, params.block_size
    if bx < 1 or by < 1:
        raise ValueError("grid needs at least one block per axis")
    if bs <= 0 or not 0.0 <= params.irregularity <= 1.0:
        raise ValueError("degenerate grid parameters")
    if 2 * params.building_inset >= bs / 2:
        raise ValueError("building_inset leaves no room for buildings")
    jitter = params.irregularity * bs / 4
    if jitter > 0 and rng is None:
        raise ValueError("irregular grid needs an rng")
    w, h = bx * bs, by * bs

    grid: dict[tuple[int, int], Vec2] = {}
    for j in range(by + 1):
        for i in range(bx + 1):
            x, y = i * bs, j * bs
            if jitter > 0:
                dx, dy = rng.uniform(-jitter, jitter, size=2)
                if 0 < i < bx:
                    x += dx
                if 0 < j < by:
                    y += dy
            grid[i, j] = Vec2(float(x), float(y))

    segments = []
    for j in range(by + 1):
        for i in range(bx):
            segments.append(Segment(grid[i, j], grid[i + 1, j], params.lanes))
    for i in range(bx + 1):
        for j in range(by):
            segments.append(Segment(grid[i, j], grid[i, j + 1], params.lanes))

    buildings = []
    inset = params.building_inset
    for j in range(by):
        for i in range(bx):
            c00, c10, c01, c11 = grid[i, j], grid[i + 1, j], grid[i, j + 1], grid[i + 1, j + 1]
            x0 = max(c00.x, c01.x) + inset
            x1 = min(c10.x, c11.x) - inset
            y0 = max(c00.y, c10.y) + inset
            y1 = min(c01.y, c11.y) - inset
            if x1 <= x0 or y1 <= y0:
                raise ValueError("jitter collapsed a building")
            buildings.append((Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)))

    intersections = _merge_close([grid[i, j] for j in range(by + 1) for i in range(bx + 1)])
    return RoadMap(tuple(segments), tuple(intersections), tuple(buildings),
                   (0.0, 0.0, float(w), float(h)), kind="grid")


def build_highway_map(params: HighwayMapParams = HighwayMapParams()) -> RoadMap:
    if params.length <= 0:
        raise ValueError("highway length must be positive")
    half = params.lanes_per_direction * params.lane_width
    seg = Segment(Vec2(0.0, 0.0), Vec2(float(params.length), 0.0), params.lanes_per_direction)
    return RoadMap((seg,), (), (), (0.0, -half, float(params.length), half), kind="highway")


# --- text export/import -------------------------------------------------------
#
# One record per line, whitespace separated:
#   kind <grid|highway|custom>
#   bounds <xmin> <ymin> <xmax> <ymax>
#   segment <x1> <y1> <x2> <y2> <lanes>
#   intersection <x> <y>
#   building <x1> <y1> <x2> <y2> ... (vertex ring, not closed)
# Blank lines and lines starting with '#' are ignored.

def dump_map(road_map: RoadMap) -> str:
    lines = ["# tradsim road map", f"kind {road_map.kind}",
             "bounds " + " ".join(repr(float(v)) for v in road_map.bounds)]
    for s in road_map.segments:
        lines.append(f"segment {s.a.x!r} {s.a.y!r} {s.b.x!r} {s.b.y!r} {s.lanes}")
    for p in road_map.intersections:
        lines.append(f"intersection {p.x!r} {p.y!r}")
    for poly in road_map.buildings:
        lines.append("building " + " ".join(f"{p.x!r} {p.y!r}" for p in poly))
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> RoadMap:
    kind = "custom"
    bounds = None
    segments, intersections, buildings = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        try:
            if tag == "kind":
                kind = rest[0]
            elif tag == "bounds":
                bounds = tuple(float(v) for v in rest)
                if len(bounds) != 4:
                    raise ValueError("bounds needs 4 numbers")
            elif tag == "segment":
                x1, y1, x2, y2 = (float(v) for v in rest[:4])
                segments.append(Segment(Vec2(x1, y1), Vec2(x2, y2), int(rest[4])))
            elif tag == "intersection":
                intersections.append(Vec2(float(rest[0]), float(rest[1])))
            elif tag == "building":
                vals = [float(v) for v in rest]
                if len(vals) < 6 or len(vals) % 2:
                    raise ValueError("building needs >= 3 vertices")
                buildings.append(tuple(Vec2(vals[k], vals[k + 1]) for k in range(0, len(vals), 2)))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"map line {lineno}: {exc}") from None
    if bounds is None:
        raise ValueError("map file has no bounds record")
    return RoadMap(tuple(segments), tuple(intersections), tuple(buildings), bounds, kind=kind)


def save_map(road_map: RoadMap, path: str | Path) -> None:
    Path(path).write_text(dump_map(road_map))


def load_map(path: str | Path) -> RoadMap:
    return parse_map(Path(path).read_text())
