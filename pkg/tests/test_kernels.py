"""The numba and numpy backends must agree, and both must agree with the scalar geometry."""
import numpy as np
import pytest

from tradsim import kernels
from tradsim.geo import GridMapParams, build_grid_map, line_of_sight
from tradsim.mobility import Fleet, assign_route
from tradsim.simcore import derive_rng

needs_numba = pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not installed")


def _fleet(n=80, seed=11):
    road = build_grid_map(GridMapParams(irregularity=0.3), derive_rng(seed, "map"))
    rng = derive_rng(seed, "routes")
    fleet = Fleet()
    for _ in range(n):
        r = assign_route(road, "uniform-crossing", rng)
        fleet.add(r, float(rng.uniform(8, 14)), odometer=float(rng.uniform(0, r.length)))
    return road, fleet


@pytest.mark.parametrize("impl", [pytest.param(kernels.link_mask_numba, marks=needs_numba),
                                  kernels.link_mask_numpy])
def test_link_mask_matches_scalar_geometry(impl):
    road, fleet = _fleet()
    verts, counts, boxes = road.building_arrays
    pos = fleet.pos
    eligible = np.ones(len(pos), dtype=bool)
    eligible[::7] = False
    for s in range(0, len(pos), 5):
        got = impl(float(pos[s, 0]), float(pos[s, 1]), pos, eligible, 366.4, verts, counts, boxes)
        for i in range(len(pos)):
            d = float(np.hypot(*(pos[i] - pos[s])))
            want = bool(eligible[i] and 0 < d <= 366.4 and line_of_sight(road, pos[s], pos[i]))
            assert got[i] == want, (s, i)


@needs_numba
def test_motion_backends_agree():
    _, fleet = _fleet(60)
    fleet._rebuild()
    n = len(fleet.routes)
    moving = np.ones(n, dtype=bool)
    outs = []
    for impl in (kernels.advance_fleet_numba, kernels.advance_fleet_numpy):
        odo = fleet.odo.copy()
        pos, heading, done = np.zeros((n, 2)), np.zeros((n, 2)), np.zeros(n, dtype=bool)
        for _ in range(300):
            impl(fleet._pts, fleet._cum, fleet._offsets, odo, fleet.speed, moving & ~done, 0.5,
                 pos, heading, done)
        outs.append((odo, pos, heading, done))
    for a, b in zip(*outs):
        assert np.allclose(a, b)
    assert outs[0][3].any()
