import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from oracles import friis_rx_mw, link_budget_range, union_length_bruteforce
from tradsim.geo import RoadMap, Vec2
from tradsim.mobility import Fleet
from tradsim.radio import (BEACON_SIZE, DATA_SIZE, Channel, ChannelActivityLog, Frame, RadioParams,
                           airtime, busy_time, csma_access_delay, in_range, measure_cbr,
                           received_power)
from tradsim.simcore import Simulator, derive_rng

P = RadioParams()
OPEN = RoadMap((), (), (), (-1000, -1000, 1000, 1000))


def test_received_power_examples():
    assert received_power(P, 366) == pytest.approx(-100, abs=0.2)
    assert received_power(P, 1) == pytest.approx(-23.1, abs=0.1)
    assert received_power(P, 100) - received_power(P, 200) == pytest.approx(30 * math.log10(2))


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 5000))
def test_received_power_matches_linear_domain(d):
    oracle = 10 * math.log10(friis_rx_mw(300.0, 5.89e9, 3.0, d))
    assert received_power(P, d) == pytest.approx(oracle, abs=1e-9)
    assert received_power(P, d * 1.01) < received_power(P, d)


def test_max_range_matches_bisection():
    assert P.max_range == pytest.approx(link_budget_range(), abs=1e-6)


def test_in_range_examples():
    assert in_range(P, OPEN, (0, 0), (100, 0))
    assert not in_range(P, OPEN, (0, 0), (400, 0))
    box = RoadMap((), (), ((Vec2(20, -5), Vec2(30, -5), Vec2(30, 5), Vec2(20, 5)),), OPEN.bounds)
    assert not in_range(P, box, (0, 0), (50, 0))
    assert in_range(P, box, (50, 0), (0, 40)) == in_range(P, box, (0, 40), (50, 0))


def test_airtime_and_frames():
    assert airtime(P, Frame("data", 0)) == pytest.approx(3.0827e-3, abs=1e-6)
    assert airtime(P, Frame("beacon", 0)) == pytest.approx(0.504e-3, abs=1e-6)
    assert Frame("data", 0).size == DATA_SIZE and Frame("beacon", 0).size == BEACON_SIZE
    with pytest.raises(ValueError):
        Frame("data", 0, size=-1)


def test_access_delay_bounds_and_mean():
    rng = derive_rng(1, "jitter")
    draws = [csma_access_delay(P, rng) for _ in range(20000)]
    assert min(draws) == pytest.approx(32e-6) and max(draws) == pytest.approx(227e-6)
    assert sum(draws) / len(draws) == pytest.approx(129.5e-6, rel=0.02)


def test_cbr_examples():
    assert measure_cbr(ChannelActivityLog(), 1_000_000) == 0
    lg = ChannelActivityLog()
    lg.add(100_000, 350_000)
    assert measure_cbr(lg, 1_000_000) == pytest.approx(0.25)
    lg = ChannelActivityLog()
    lg.add(0, 100_000)
    lg.add(0, 100_000)
    assert measure_cbr(lg, 500_000) == pytest.approx(0.1)


interval = st.tuples(st.integers(0, 300), st.integers(0, 80)).map(lambda p: (p[0], p[0] + p[1]))


@settings(max_examples=200, deadline=None)
@given(st.lists(interval, max_size=12), st.integers(0, 200), st.integers(0, 200))
def test_busy_time_matches_bruteforce(ivs, lo, span):
    hi = lo + span
    assert busy_time(ivs, lo, hi) == union_length_bruteforce(ivs, lo, hi)


@settings(max_examples=100, deadline=None)
@given(st.lists(interval, max_size=8), interval)
def test_cbr_bounded_and_monotone(ivs, extra):
    lg = ChannelActivityLog()
    for s, e in sorted(ivs):
        lg.add(s, e)
    before = busy_time(lg.intervals, 0, 400) / 400
    more = list(lg.intervals) + [extra]
    after = busy_time(more, 0, 400) / 400
    assert 0 <= before <= after <= 1


def _channel(points):
    sim = Simulator()
    fleet = Fleet()
    for p in points:
        fleet.add_fixed(Vec2(*p))
    got = []
    ch = Channel(sim, P, OPEN, fleet, lambda n, f: got.append((sim.now, n, f.sender)))
    return sim, ch, got


def test_single_transmitter_delivers_after_airtime():
    sim, ch, got = _channel([(0, 0), (50, 0), (100, 0), (0, 200), (900, 0)])
    aud = ch.transmit(Frame("data", 0))
    end = round(airtime(P, Frame("data", 0)) * 1e6)
    assert aud == [(1, end), (2, end), (3, end)]
    sim.run(10_000)
    assert sorted(n for _, n, _ in got) == [1, 2, 3]


def test_overlapping_frames_collide_symmetrically():
    sim, ch, got = _channel([(0, 0), (300, 0), (150, 0)])
    ch.transmit(Frame("data", 0))
    sim.run(1000)
    ch.transmit(Frame("data", 1))
    sim.run(20_000)
    # node 2 hears both and loses both; the senders hear each other only partially overlapped
    assert all(n != 2 for _, n, _ in got)


def test_disjoint_audiences_do_not_collide():
    pts = [(-900, -900), (-850, -900), (900, 900), (850, 900)]
    sim, ch, got = _channel(pts)
    assert not in_range(P, OPEN, pts[0], pts[3])
    ch.transmit(Frame("data", 0))
    ch.transmit(Frame("data", 2))
    sim.run(20_000)
    assert sorted((n, s) for _, n, s in got) == [(1, 0), (3, 2)]


def test_busy_until_and_cbr_accounting():
    sim, ch, _ = _channel([(0, 0), (50, 0), (900, 900)])
    ch.transmit(Frame("data", 0))
    assert ch.busy_until(1) == 3083 and ch.busy_until(2) is None
    sim.run(1_000_000)
    assert ch.cbr(1) == pytest.approx(3083 / 1e6)


def test_radio_param_validation():
    with pytest.raises(ValueError):
        replace(P, sensitivity=50.0)
