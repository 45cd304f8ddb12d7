"""Kinematics: segmentation, residual time, advancement, respawn."""

import math

from hypothesis import given, strategies as st

from dsdivn.config import ScenarioConfig
from dsdivn.engine import seeded_stream
from dsdivn.mobility import Fleet, VehicleState, residual_time, segment_of

L = 150.0


def test_segment_of_boundaries():
    assert segment_of(0.0, L) == 0
    assert segment_of(149.999, L) == 0
    assert segment_of(150.0, L) == 1
    assert segment_of(999.0, L) == 6


def test_residual_time_hand_values():
    # eastbound at 100 m, 10 m/s: 50 m to the 150 m boundary.
    v = VehicleState(0, 100.0, 10.0, 1)
    assert residual_time(v, L) == 5.0
    # westbound at 100 m, 20 m/s: 100 m back to the 0 m boundary.
    w = VehicleState(1, 100.0, 20.0, -1)
    assert residual_time(w, L) == 5.0
    assert residual_time(VehicleState(2, 10.0, 0.0, 1), L) == math.inf


@given(x=st.floats(min_value=0.0, max_value=1049.999),
       v=st.floats(min_value=0.1, max_value=40.0),
       d=st.sampled_from([1, -1]))
def test_residual_time_equals_boundary_distance_over_speed(x, v, d):
    veh = VehicleState(0, x, v, d)
    k = segment_of(x, L)
    dist = (k + 1) * L - x if d > 0 else x - k * L
    assert math.isclose(residual_time(veh, L), dist / v, rel_tol=1e-12)


@given(x=st.floats(min_value=0.0, max_value=1049.9),
       v=st.floats(min_value=0.1, max_value=40.0),
       d=st.sampled_from([1, -1]))
def test_vehicle_exits_segment_exactly_at_residual_time(x, v, d):
    veh = VehicleState(0, x, v, d)
    t = residual_time(veh, L)
    x_after = x + d * v * (t + 1e-9)
    if 0 <= x_after < 1050.0:
        assert segment_of(x_after, L) != segment_of(x, L)


def _fleet(seed=1, n=40):
    cfg = ScenarioConfig(n_vehicles=n)
    return Fleet.spawn(cfg, seeded_stream(seed, "mobility"))


def test_spawn_is_deterministic_and_alternates_direction():
    a, b = _fleet(), _fleet()
    assert [(v.x_m, v.v_mps, v.direction) for v in a.vehicles] == \
           [(v.x_m, v.v_mps, v.direction) for v in b.vehicles]
    assert all(v.direction == (1 if v.id % 2 == 0 else -1) for v in a.vehicles)
    assert all(0 <= v.x_m < 1000.0 for v in a.vehicles)
    assert all(10.0 <= v.v_mps <= 30.0 for v in a.vehicles)


def test_advance_moves_and_reports_transitions():
    fleet = _fleet()
    before = {v.id: segment_of(v.x_m, fleet.seg_len_m) for v in fleet.vehicles}
    transitions = fleet.advance(1.0)
    for veh, old_seg, new_seg in transitions:
        assert old_seg == before[veh.id]
        assert new_seg == segment_of(veh.x_m, fleet.seg_len_m)
        assert old_seg != new_seg
    # everyone not reported stayed put
    moved = {veh.id for veh, _, _ in transitions}
    for v in fleet.vehicles:
        if v.id not in moved:
            assert segment_of(v.x_m, fleet.seg_len_m) == before[v.id]


def test_respawn_wraps_to_opposite_end_with_fresh_speed():
    fleet = _fleet()
    east = next(v for v in fleet.vehicles if v.direction == 1)
    east.x_m, east.v_mps = 999.0, 30.0
    west = next(v for v in fleet.vehicles if v.direction == -1)
    west.x_m, west.v_mps = 0.5, 30.0
    fleet.advance(1.0)
    assert east.x_m == 0.0
    assert west.x_m == fleet.road_len_m - 1e-6
    assert all(0 <= v.x_m < fleet.road_len_m for v in fleet.vehicles)


def test_population_is_constant():
    fleet = _fleet()
    for _ in range(200):
        fleet.advance(0.5)
    assert len(fleet.vehicles) == 40
    assert all(0 <= v.x_m < fleet.road_len_m for v in fleet.vehicles)
