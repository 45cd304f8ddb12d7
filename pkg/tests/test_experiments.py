"""Experiment harness: failure comparison and distance sweep."""

import dataclasses

import pytest
from hypothesis import given, strategies as st

from dsdivn.config import (FailureSpec, LinkModelParams, ProtocolTimers,
                           ScenarioConfig)
from dsdivn.engine import seeded_stream
from dsdivn.experiments import (_chain_hops, run_distance_sweep,
                                run_failure_experiment, sweep_install_time,
                                SWEEP_RELAY_SPACING_M)
from dsdivn.radio import link_delay

LOSSLESS = LinkModelParams(loss_prob=0.0)
R = 300.0


@given(st.floats(min_value=1.0, max_value=5000.0))
def test_chain_hops_cover_the_distance(dist):
    hops = _chain_hops(dist, R)
    assert all(0 < h <= R for h in hops)
    assert abs(sum(hops) - dist) < 1e-9


def test_chain_is_single_hop_within_range():
    assert _chain_hops(250.0, R) == [250.0]
    assert _chain_hops(300.0, R) == [300.0]


def test_lossless_install_time_is_deterministic_and_analytic():
    t = sweep_install_time(250.0, 100, LOSSLESS, R)
    expect = link_delay(250.0, 100, LOSSLESS, R) + link_delay(250.0, 128, LOSSLESS, R)
    assert abs(t - expect) < 1e-12
    assert sweep_install_time(250.0, 100, LOSSLESS, R) == t


def test_loss_adds_retry_periods():
    class AlwaysThenNever:
        def __init__(self):
            self.n = 0

        def random(self):
            self.n += 1
            return 0.0 if self.n == 1 else 1.0

    lossy = LinkModelParams(loss_prob=0.5)
    t = sweep_install_time(200.0, 100, lossy, R, rng=AlwaysThenNever(),
                           retry_s=0.1)
    base = sweep_install_time(200.0, 100, LOSSLESS, R)
    assert abs(t - (base + 0.1)) < 1e-12


def test_sweep_means_monotone_in_both_axes():
    dists = [150.0, 450.0, 900.0]
    sizes = [100, 1500]
    _, means = run_distance_sweep(dists, sizes, reps=3, link=LOSSLESS,
                                  tx_range_m=R, seed=2)
    for size in sizes:
        col = [means[(d, size)] for d in dists]
        assert col == sorted(col)
    for d in dists:
        assert means[(d, 100)] <= means[(d, 1500)]


def test_sweep_sample_count_and_determinism():
    s1, m1 = run_distance_sweep([150.0], [100], reps=7, seed=3)
    s2, m2 = run_distance_sweep([150.0], [100], reps=7, seed=3)
    assert len(s1) == 7
    assert s1 == s2 and m1 == m2


def _mini_failure_cfg():
    return ScenarioConfig(
        area_m=(600.0, 600.0), n_vehicles=80, sim_duration_s=12.0,
        timers=ProtocolTimers(idle_timeout_s=2.0, view_period_s=0.5),
        failure=FailureSpec(target_segment=1, start_s=7.0, duration_s=3.0),
    ).validate()


def test_failure_experiment_runs_every_mode_per_seed():
    results = run_failure_experiment(_mini_failure_cfg(), seeds=[1, 2])
    assert set(results) == {"dsdivn", "self-organized", "no-fallback"}
    for reports in results.values():
        assert [r.seed for r in reports] == [1, 2]
    for seed_ix in range(2):
        hashes = {results[m][seed_ix].mobility_hash for m in results}
        assert len(hashes) == 1  # same seed, same world in every mode


def test_failure_experiment_requires_failure_spec():
    cfg = dataclasses.replace(_mini_failure_cfg(), failure=None)
    with pytest.raises(ValueError):
        run_failure_experiment(cfg, seeds=[1])
