import pytest
from hypothesis import given, settings, strategies as st

from conftest import finish, static_world
from tradsim.baselines import FloodingParams, Slotted1PParams, slotted_1p_delay
from tradsim.simcore import to_us

S = Slotted1PParams()


def test_slotted_delay_examples():
    assert slotted_1p_delay(S.max_range, S) == 0
    assert slotted_1p_delay(0, S) == pytest.approx((S.num_slots - 1) * S.slot_len)
    assert slotted_1p_delay(0.5 * S.max_range, S) == pytest.approx(0.010)
    with pytest.raises(ValueError):
        slotted_1p_delay(-1, S)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 800), st.floats(0, 800))
def test_slotted_delay_non_increasing(a, b):
    lo, hi = sorted((a, b))
    assert slotted_1p_delay(hi, S) <= slotted_1p_delay(lo, S)


def test_param_validation():
    with pytest.raises(ValueError):
        FloodingParams(jitter_max=-1)
    with pytest.raises(ValueError):
        Slotted1PParams(num_slots=0)


def _one_message(points, protocol):
    w, ids = static_world(points, protocol=protocol)
    w.source = ids[0]
    w.sim.call_at(to_us(5.0), w.originate)
    return finish(w, 8.0), ids


@pytest.mark.parametrize("n", [3, 7])
def test_flooding_on_clique_transmits_once_per_node(n):
    log, ids = _one_message([(10.0 * i, 0.0) for i in range(n)], "flooding")
    assert sum(1 for r in log.tx if r.kind == "data") == n
    assert all((0, i) in log.receptions for i in ids)


def test_flooding_isolated_node_never_forwards():
    log, ids = _one_message([(0.0, 0.0), (2000.0, 0.0)], "flooding")
    assert [r.sender for r in log.tx] == [ids[0]]
    assert (0, ids[1]) not in log.receptions


def test_slotted_farthest_forwards_and_others_cancel():
    log, ids = _one_message([(0.0, 0.0), (100.0, 0.0), (300.0, 0.0)], "slotted1p")
    senders = [r.sender for r in log.tx if r.kind == "data"]
    assert senders[:2] == [ids[0], ids[2]]
    assert ids[1] not in senders
