import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmip_lab.addressing import NodeAddress
from hmip_lab.mobile_node import (
    MapAdvert,
    MnState,
    MobileNode,
    on_data_activity,
    on_timer_expiry,
    update_map_table,
)


def fresh():
    return MobileNode("mn", NodeAddress(1))


def test_activity_then_expiry():
    mn = on_data_activity(fresh(), 0.0, 5.0)
    assert mn.state is MnState.READY and mn.ready_timer_deadline == 5.0
    on_timer_expiry(mn, 4.0)
    assert mn.state is MnState.READY
    on_timer_expiry(mn, 5.0)
    assert mn.state is MnState.IDLE and mn.ready_timer_deadline is None


def test_stale_expiry_is_ignored():
    mn = on_data_activity(fresh(), 0.0, 5.0)
    on_data_activity(mn, 3.0, 5.0)
    on_timer_expiry(mn, 5.0)  # armed for the first deadline
    assert mn.is_ready(5.0)
    on_timer_expiry(mn, 8.0)
    assert mn.state is MnState.IDLE


def test_activity_never_shortens_the_deadline():
    mn = on_data_activity(fresh(), 0.0, 10.0)
    on_data_activity(mn, 1.0, 2.0)
    assert mn.ready_timer_deadline == 10.0


def test_bad_inputs():
    with pytest.raises(ValueError):
        on_data_activity(fresh(), 0.0, 0.0)
    with pytest.raises(ValueError):
        MobileNode("mn", NodeAddress(1), speed=-1)
    with pytest.raises(ValueError):
        MapAdvert("M", -1, 4)


def test_map_table_keeps_order_and_latest_values():
    mn = update_map_table(fresh(), [MapAdvert("A", 1, 4), MapAdvert("B", 2, 4), MapAdvert("A", 3, 4)])
    assert [(a.map_id, a.tot_cn) for a in mn.map_table] == [("A", 3), ("B", 2)]


events = st.lists(
    st.tuples(st.sampled_from(["data", "expire"]), st.floats(0, 0.5, allow_nan=False)), max_size=40
)


@settings(max_examples=200, derandomize=True)
@given(events)
def test_replay_is_deterministic_and_consistent(seq):
    def replay():
        mn, now = fresh(), 0.0
        for kind, dt in seq:
            now += dt
            if kind == "data":
                on_data_activity(mn, now, 1.0)
            else:
                on_timer_expiry(mn, now)
            # idle exactly when no deadline is pending
            assert (mn.state is MnState.IDLE) == (mn.ready_timer_deadline is None)
        return mn.state, mn.ready_timer_deadline

    assert replay() == replay()
