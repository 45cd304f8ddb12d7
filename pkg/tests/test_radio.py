"""Link model: delay formula, monotonicity, range gating, greedy next hop."""

import math

import pytest
from hypothesis import given, strategies as st

from dsdivn.config import LinkModelParams
from dsdivn.radio import in_range, link_delay, next_hop_greedy

PARAMS = LinkModelParams()  # 6 Mbps, 1 ms per-hop processing, 3e8 m/s
R = 300.0


def oracle_delay(dist_m, size_B, p=PARAMS, tx=R):
    """Independent recomputation of the hop-count delay model."""
    hops = max(1, math.ceil(dist_m / tx))
    serialization = size_B * 8 / p.bitrate_bps
    propagation = dist_m / p.prop_speed_mps  # paid once over the full path
    return hops * serialization + propagation + hops * p.per_hop_proc_s


def test_single_hop_worked_example():
    # 100 B over 100 m: 133.3 us serialization + 0.33 us prop + 1 ms proc.
    d = link_delay(100.0, 100, PARAMS, R)
    assert math.isclose(d, 1.1337e-3, rel_tol=1e-3)
    assert math.isclose(d, oracle_delay(100.0, 100), rel_tol=1e-12)


@given(dist=st.floats(min_value=0.0, max_value=5000.0),
       size=st.integers(min_value=1, max_value=65536))
def test_delay_matches_oracle(dist, size):
    assert math.isclose(link_delay(dist, size, PARAMS, R),
                        oracle_delay(dist, size), rel_tol=1e-12)


@given(d1=st.floats(min_value=0.0, max_value=5000.0),
       d2=st.floats(min_value=0.0, max_value=5000.0),
       size=st.integers(min_value=1, max_value=65536))
def test_delay_non_decreasing_in_distance(d1, d2, size):
    lo, hi = sorted((d1, d2))
    assert link_delay(lo, size, PARAMS, R) <= link_delay(hi, size, PARAMS, R) + 1e-15


@given(dist=st.floats(min_value=0.0, max_value=5000.0),
       s1=st.integers(min_value=1, max_value=65536),
       s2=st.integers(min_value=1, max_value=65536))
def test_delay_non_decreasing_in_size(dist, s1, s2):
    lo, hi = sorted((s1, s2))
    assert link_delay(dist, lo, PARAMS, R) <= link_delay(dist, hi, PARAMS, R) + 1e-15


def test_delay_rejects_bad_arguments():
    with pytest.raises(ValueError):
        link_delay(-1.0, 100, PARAMS, R)
    with pytest.raises(ValueError):
        link_delay(10.0, 0, PARAMS, R)


def test_in_range_is_inclusive():
    assert in_range(0.0, 300.0, R)
    assert not in_range(0.0, 300.0001, R)
    assert in_range(500.0, 250.0, R)


def test_next_hop_greedy_picks_strictly_closer_neighbor():
    pos = {0: 0.0, 1: 250.0, 2: 280.0, 3: 600.0}
    # 2 is in range of 0 and closest to 3.
    assert next_hop_greedy(0, 3, pos, R) == 2
    # nobody in range makes progress: 3 unreachable from isolated 0.
    assert next_hop_greedy(0, 3, {0: 0.0, 3: 600.0, 4: 1000.0}, R) is None


def test_next_hop_greedy_tie_breaks_lowest_id():
    pos = {0: 0.0, 5: 100.0, 2: 100.0, 9: 400.0}
    assert next_hop_greedy(0, 9, pos, R) == 2


def test_next_hop_greedy_direct_neighbor():
    pos = {0: 0.0, 1: 200.0}
    assert next_hop_greedy(0, 1, pos, R) == 1
