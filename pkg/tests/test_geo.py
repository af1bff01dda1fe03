import math

import pytest
from hypothesis import given, settings, strategies as st

from oracles import exact_blocked, exact_segments_touch
from tradsim.geo import (GridMapParams, HighwayMapParams, NO_INTERSECTION, RoadMap, Vec2,
                         angle_between, build_grid_map, build_highway_map, distance, dump_map,
                         line_of_sight, nearest_intersection_distance, parse_map,
                         segment_hits_polygon, segments_intersect)
from tradsim.simcore import derive_rng

SQUARE = (Vec2(40, -10), Vec2(60, -10), Vec2(60, 10), Vec2(40, 10))
coord = st.integers(-50, 150).map(float)
point = st.tuples(coord, coord)


def _map(buildings=()):
    return RoadMap((), (), tuple(buildings), (-100, -100, 200, 200))


def test_angle_examples():
    assert angle_between((1, 0), (0, 1)) == pytest.approx(math.pi / 2)
    assert angle_between((1, 0), (3, 0)) == pytest.approx(0.0)
    nine = math.radians(9)
    assert angle_between((1, 0), (math.cos(nine), math.sin(nine))) == pytest.approx(0.157, abs=1e-3)
    with pytest.raises(ValueError):
        angle_between((0, 0), (1, 0))


def test_distance_examples():
    assert distance((0, 0), (0, 0)) == 0
    assert distance((0, 0), (3, 4)) == 5
    assert distance((10, 10), (376, 10)) == 366


def test_line_of_sight_examples():
    assert line_of_sight(_map(), (0, 0), (100, 0))
    assert not line_of_sight(_map([SQUARE]), (0, 0), (100, 0))
    # grazing the corner (40, 10) exactly is blocked
    assert not line_of_sight(_map([SQUARE]), (30, 20), (50, 0))
    assert exact_blocked((30, 20), (50, 0), SQUARE)
    assert line_of_sight(_map([SQUARE]), (0, 20.5), (100, 20.5))


@settings(max_examples=300, deadline=None)
@given(point, point, point, point)
def test_segment_intersection_matches_exact_oracle(p1, p2, q1, q2):
    assert segments_intersect(p1, p2, q1, q2) == exact_segments_touch(p1, p2, q1, q2)


@settings(max_examples=300, deadline=None)
@given(point, point)
def test_blocking_matches_exact_oracle_and_is_symmetric(a, b):
    assert segment_hits_polygon(a, b, SQUARE) == exact_blocked(a, b, SQUARE)
    m = _map([SQUARE])
    assert line_of_sight(m, a, b) == line_of_sight(m, b, a)


@settings(max_examples=200, deadline=None)
@given(point, point, st.floats(0.01, 100))
def test_angle_symmetry_and_scale(v1, v2, k):
    if v1 == (0.0, 0.0) or v2 == (0.0, 0.0):
        return
    a = angle_between(v1, v2)
    assert a == pytest.approx(angle_between(v2, v1), abs=1e-9)
    assert a == pytest.approx(angle_between((k * v1[0], k * v1[1]), v2), abs=1e-6)


def test_grid_combinatorics():
    m = build_grid_map(GridMapParams(blocks_x=5, blocks_y=5, block_size=200.0))
    assert len(m.intersections) == 36
    assert len(m.segments) == 60
    one = build_grid_map(GridMapParams(blocks_x=1, blocks_y=1, block_size=200.0))
    assert (len(one.intersections), len(one.segments), len(one.buildings)) == (4, 4, 1)
    assert build_grid_map(GridMapParams()) == build_grid_map(GridMapParams())


@pytest.mark.parametrize("bx,by", [(1, 3), (4, 2), (6, 6)])
def test_grid_intersection_count(bx, by):
    m = build_grid_map(GridMapParams(blocks_x=bx, blocks_y=by, block_size=150.0))
    assert len(m.intersections) == (bx + 1) * (by + 1)


@pytest.mark.parametrize("irr", [0.0, 0.5, 1.0])
def test_geometry_inside_bounds(irr):
    m = build_grid_map(GridMapParams(irregularity=irr), derive_rng(3, "map"))
    x0, y0, x1, y1 = m.bounds
    pts = [p for s in m.segments for p in (s.a, s.b)] + list(m.intersections) + \
        [p for b in m.buildings for p in b]
    assert all(x0 <= p.x <= x1 and y0 <= p.y <= y1 for p in pts)
    assert m.area_km2 == pytest.approx(1.0)


def test_irregular_grid_needs_rng():
    with pytest.raises(ValueError):
        build_grid_map(GridMapParams(irregularity=0.5))


def test_highway_map():
    m = build_highway_map()
    assert m.width == 2000 and m.segments[0].lanes == 2 and m.intersections == ()
    assert build_highway_map(HighwayMapParams(length=100)).width == 100
    with pytest.raises(ValueError):
        build_highway_map(HighwayMapParams(length=0))


def test_nearest_intersection():
    m = RoadMap((), (Vec2(0, 0), Vec2(100, 0)), (), (0, 0, 100, 100))
    assert nearest_intersection_distance(m, (0, 0)) == 0
    assert nearest_intersection_distance(m, (60, 0)) == 40
    assert nearest_intersection_distance(build_highway_map(), (5, 0)) == NO_INTERSECTION
    assert NO_INTERSECTION > 1e6


def test_map_text_round_trip():
    m = build_grid_map(GridMapParams(irregularity=0.4), derive_rng(5, "map"))
    assert parse_map(dump_map(m)) == m
    with pytest.raises(ValueError, match="line 2"):
        parse_map("bounds 0 0 1 1\nsegment 0 0 1\n")
