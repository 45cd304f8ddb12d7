"""The two built-in experiments: failure comparison and controller-distance sweep."""

from __future__ import annotations

import dataclasses
import math
import random
from typing import Optional

from .config import LinkModelParams, ScenarioConfig, MODES
from .engine import seeded_stream
from .metrics import InstallSample, RunReport
from .radio import link_delay
from .simulation import Simulation

SWEEP_RELAY_SPACING_M = 140.0  # static relay chain keeps any distance connected
SWEEP_INSTALL_SIZE_B = 128


def run_failure_experiment(cfg: ScenarioConfig, seeds: list[int],
                           check_invariants: bool = False,
                           modes: tuple[str, ...] = MODES,
                           ) -> dict[str, list[RunReport]]:
    """Run every mode over every seed with identical mobility/traffic streams.

    The mode touches only the control plane, so each (mode, seed) pair shares
    the same vehicle motion and workload; the reports' mobility hashes prove it.
    """
    if cfg.failure is None:
        raise ValueError("failure experiment needs a failure spec in the scenario")
    results: dict[str, list[RunReport]] = {m: [] for m in modes}
    for mode in modes:
        for seed in seeds:
            run_cfg = dataclasses.replace(cfg, mode=mode, seed=seed)
            sim = Simulation(run_cfg, check_invariants=check_invariants)
            results[mode].append(sim.run())
    return results


def sweep_install_time(dist_m: float, request_B: int, link: LinkModelParams,
                       tx_range_m: float, rng: Optional[random.Random] = None,
                       retry_s: float = 0.1) -> float:
    """Install time over a static requester-to-controller chain at a fixed distance.

    Relay vehicles sit every SWEEP_RELAY_SPACING_M meters, so every distance is
    connected; forwarding is greedy (farthest viable relay first).  With a lossy
    link each lost attempt of a leg costs one retry period.
    """
    def leg(size_B: int) -> float:
        hops = _chain_hops(dist_m, tx_range_m)
        total = 0.0
        for hop_d in hops:
            while True:
                if rng is not None and link.loss_prob > 0 \
                        and rng.random() < link.loss_prob:
                    total += retry_s
                    continue
                total += link_delay(hop_d, size_B, link, tx_range_m)
                break
        return total

    return leg(request_B) + leg(SWEEP_INSTALL_SIZE_B)


def _chain_hops(dist_m: float, tx_range_m: float) -> list[float]:
    """Greedy hop distances along the relay chain from position 0 to dist_m."""
    if dist_m <= tx_range_m:
        return [dist_m]
    relays = []
    x = SWEEP_RELAY_SPACING_M
    while x < dist_m:
        relays.append(x)
        x += SWEEP_RELAY_SPACING_M
    relays.append(dist_m)
    hops = []
    cur = 0.0
    for _ in range(1000):
        reach = [r for r in relays if cur < r <= cur + tx_range_m]
        if not reach:
            raise RuntimeError("relay chain disconnected")  # cannot happen by spacing
        nxt = max(reach)
        hops.append(nxt - cur)
        cur = nxt
        if cur >= dist_m:
            return hops
    raise RuntimeError("relay chain did not terminate")


def run_distance_sweep(distances: list[float], sizes: list[int], reps: int = 20,
                       link: Optional[LinkModelParams] = None,
                       tx_range_m: float = 300.0, seed: int = 1,
                       ) -> tuple[list[InstallSample], dict[tuple[float, int], float]]:
    """Mean flow-rule installation time per (distance, request size) cell."""
    if link is None:
        link = LinkModelParams(loss_prob=0.0)
    rng = seeded_stream(seed, "sweep")
    samples: list[InstallSample] = []
    means: dict[tuple[float, int], float] = {}
    for d in distances:
        for size in sizes:
            vals = [sweep_install_time(d, size, link, tx_range_m, rng=rng)
                    for _ in range(reps)]
            for v in vals:
                samples.append(InstallSample(dist_m=d, size_B=size, elapsed_s=v))
            means[(d, size)] = sum(vals) / len(vals)
    return samples, means
