"""Abstract V2V channel: range-gated delivery, distance/size delay, greedy relaying."""

from __future__ import annotations

import math
from typing import Optional

from .config import LinkModelParams

CHANNEL_CONTROL = "control"
CHANNEL_DATA = "data"


def in_range(a_x: float, b_x: float, tx_range_m: float) -> bool:
    """True iff the two road positions are within tx_range (inclusive)."""
    return abs(a_x - b_x) <= tx_range_m


def link_delay(dist_m: float, size_B: int, params: LinkModelParams,
               tx_range_m: float) -> float:
    """End-to-end frame delay in seconds over a possibly multi-hop distance.

    hops = ceil(dist / range); each hop pays serialization and processing,
    propagation is paid once over the full distance.  Non-decreasing in both
    distance and size.
    """
    if dist_m < 0:
        raise ValueError("distance must be non-negative")
    if size_B <= 0:
        raise ValueError("frame size must be positive")
    hops = max(1, math.ceil(dist_m / tx_range_m))
    per_hop = size_B * 8 / params.bitrate_bps + dist_m / (hops * params.prop_speed_mps) \
        + params.per_hop_proc_s
    return hops * per_hop


def next_hop_greedy(src: int, dst: int, positions: dict[int, float],
                    tx_range_m: float) -> Optional[int]:
    """Neighbor of src within range that is strictly closest to dst; ties by lowest id."""
    if src == dst:
        raise ValueError("src and dst must differ")
    src_x = positions[src]
    dst_x = positions[dst]
    best = None
    best_rem = abs(src_x - dst_x)
    for vid, x in positions.items():
        if vid == src:
            continue
        if abs(x - src_x) > tx_range_m:
            continue
        rem = abs(x - dst_x)
        if rem < best_rem or (rem == best_rem and best is not None and vid < best):
            best = vid
            best_rem = rem
    return best
