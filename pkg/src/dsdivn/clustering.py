"""Domain membership (segment x direction) and head election by longest residual time."""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

from .mobility import Fleet, VehicleState, residual_time, segment_of


class DomainKey(NamedTuple):
    segment: int
    direction: int  # +1 or -1


def domain_of(v: VehicleState, seg_len_m: float) -> DomainKey:
    return DomainKey(segment_of(v.x_m, seg_len_m), v.direction)


def members_of(key: DomainKey, fleet: Fleet) -> list[VehicleState]:
    """Vehicles currently in the given segment travelling in the given direction."""
    L = fleet.seg_len_m
    return [v for v in fleet.vehicles
            if v.direction == key.direction and segment_of(v.x_m, L) == key.segment]


def elect_head(members: Sequence[VehicleState], seg_len_m: float) -> Optional[int]:
    """Member with the longest residual time in the segment; ties by lowest id."""
    if not members:
        return None
    best = min(members, key=lambda m: (-residual_time(m, seg_len_m), m.id))
    return best.id


def rank_candidates(members: Sequence[VehicleState], head_id: int,
                    seg_len_m: float) -> list[int]:
    """Backup candidates ordered by residual time descending, ties by lowest id.

    Rank 0 is the designated recovery controller.  The current head is excluded.
    """
    others = [m for m in members if m.id != head_id]
    others.sort(key=lambda m: (-residual_time(m, seg_len_m), m.id))
    return [m.id for m in others]
