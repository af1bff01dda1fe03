import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tradsim.config import ScenarioConfig  # noqa: E402
from tradsim.geo import RoadMap, Segment, Vec2  # noqa: E402
from tradsim.scenario import World  # noqa: E402
from tradsim.simcore import Simulator, to_us  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def open_map(points, intersections=(), buildings=()) -> RoadMap:
    xs = [p[0] for p in points] + [p[0] for p in intersections]
    ys = [p[1] for p in points] + [p[1] for p in intersections]
    lo, hi = Vec2(min(xs) - 50, 0.0), Vec2(max(xs) + 50, 0.0)
    return RoadMap((Segment(lo, hi),), tuple(Vec2(*p) for p in intersections), tuple(buildings),
                   (min(xs) - 50, min(ys) - 50, max(xs) + 50, max(ys) + 50), kind="custom")


def static_world(positions, protocol="trad", intersections=(), buildings=(), **cfg_kw):
    """A world of fixed nodes only; beacons start at t=2 s when protocol is trad."""
    cfg = ScenarioConfig(density=0.0, protocol=protocol, warmup=5.0, sim_duration=30.0,
                         drain=1.0, **cfg_kw)
    w = World(cfg, road_map=open_map(positions, intersections, buildings))
    ids = [w.add_fixed(Vec2(*p), "static") for p in positions]
    return w, ids


def finish(world, until_s: float):
    world.sim.run(to_us(until_s))
    world.log.finish(world.sim.now)
    return world.log


class FakeHost:
    """Minimal host for driving one protocol instance by hand."""

    def __init__(self, road_map=None, positions=None, directions=None, cbr=0.0):
        self.sim = Simulator()
        self.road_map = road_map or RoadMap((), (), (), (0.0, 0.0, 1000.0, 1000.0))
        self.pos = dict(positions or {})
        self.dirs = dict(directions or {})
        self._cbr = cbr
        self.sent, self.decisions, self.rx, self.scheduled = [], [], [], []
        self.bad = 0

    def now(self):
        return self.sim.now / 1e6

    def active(self, node):
        return True

    def position(self, node):
        return self.pos[node]

    def direction(self, node):
        return self.dirs.get(node, Vec2(1.0, 0.0))

    def cbr(self, node):
        return self._cbr

    def access_delay(self):
        return 0.0

    def backoff(self, node):
        return None

    def uniform(self, lo, hi):
        return lo

    def schedule(self, delay, callback, *args):
        self.scheduled.append((delay, callback.__name__, args))
        return self.sim.call_later(to_us(delay), callback, *args)

    def cancel(self, handle):
        return self.sim.cancel(handle)

    def send(self, node, frame, cause=""):
        self.sent.append((self.sim.now, node, frame, cause))

    def received(self, node, data_id):
        self.rx.append((node, data_id))

    def decision(self, node, data_id, action, cause):
        self.decisions.append((node, data_id, action, cause))

    def malformed(self, node):
        self.bad += 1

    def run(self, seconds):
        self.sim.run(self.sim.now + to_us(seconds))


@pytest.fixture
def fake_host():
    return FakeHost


SIX_ROADS_DEG = (0.0, 50.0, 110.0, 180.0, 230.0, 300.0)


def six_road_layout(center=(500.0, 500.0)):
    """Twelve neighbors on six roads leaving the sender: N(2k-1) at 80 m, N(2k) at 160 m, 3 degrees apart."""
    import math

    from tradsim.trad import NeighborEntry

    out = []
    for k, deg in enumerate(SIX_ROADS_DEG):
        for j, (r, off) in enumerate(((80.0, 0.0), (160.0, 3.0))):
            a = math.radians(deg + off)
            p = Vec2(center[0] + r * math.cos(a), center[1] + r * math.sin(a))
            out.append(NeighborEntry(2 * k + j + 1, p, Vec2(1.0, 0.0), 5, 0.1, (), 0.0))
    return Vec2(*center), out
