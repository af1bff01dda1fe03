"""Time the numba and numpy kernel backends on a synthetic grid fleet.

    python3 benchmarks/bench_kernels.py [--vehicles 400] [--repeat 5]

Both backends are called directly, so the env flag does not matter here.
The first numba call (compilation) is excluded from the timings.
"""
import argparse
import time

import numpy as np

from tradsim import kernels
from tradsim.geo import GridMapParams, build_grid_map
from tradsim.mobility import Fleet, assign_route
from tradsim.simcore import derive_rng


def make_fleet(n, seed=7):
    road = build_grid_map(GridMapParams(irregularity=0.3), derive_rng(seed, "map"))
    rng = derive_rng(seed, "routes")
    fleet = Fleet()
    for _ in range(n):
        route = assign_route(road, "uniform-crossing", rng)
        fleet.add(route, float(rng.uniform(8, 14)), odometer=float(rng.uniform(0, route.length)))
    return road, fleet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_links(road, fleet, impl, repeat):
    verts, counts, boxes = road.building_arrays
    pos = fleet.pos
    eligible = np.ones(len(pos), dtype=bool)

    def sweep():
        for i in range(len(pos)):
            impl(float(pos[i, 0]), float(pos[i, 1]), pos, eligible, 366.4, verts, counts, boxes)

    return best_of(sweep, repeat)


def bench_motion(fleet, impl, repeat, steps=100):
    fleet._rebuild()
    n = len(fleet.routes)
    moving = np.ones(n, dtype=bool)
    odo0 = fleet.odo.copy()

    def run():
        odo = odo0.copy()
        pos = np.zeros((n, 2))
        heading = np.zeros((n, 2))
        done = np.zeros(n, dtype=bool)
        for _ in range(steps):
            impl(fleet._pts, fleet._cum, fleet._offsets, odo, fleet.speed, moving, 0.1,
                 pos, heading, done)

    return best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--vehicles", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    road, fleet = make_fleet(args.vehicles)
    # warm the jit
    bench_links(road, fleet, kernels.link_mask_numba, 1)
    bench_motion(fleet, kernels.advance_fleet_numba, 1, steps=1)

    rows = [
        ("link audience (all senders)",
         bench_links(road, fleet, kernels.link_mask_numba, args.repeat),
         bench_links(road, fleet, kernels.link_mask_numpy, args.repeat)),
        ("fleet motion (100 steps)",
         bench_motion(fleet, kernels.advance_fleet_numba, args.repeat),
         bench_motion(fleet, kernels.advance_fleet_numpy, args.repeat)),
    ]
    print(f"{args.vehicles} vehicles, {len(road.buildings)} buildings, numba available: "
          f"{kernels.NUMBA_AVAILABLE}")
    print(f"{'kernel':32s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, tn, tp in rows:
        print(f"{name:32s} {tn * 1e3:10.2f} {tp * 1e3:10.2f} {tp / tn:7.1f}x")


if __name__ == "__main__":
    main()
