"""Vehicle kinematics on a segmented bidirectional road with respawn at the ends."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .config import ScenarioConfig

ROLE_MEMBER = "member"
ROLE_HEAD = "head"
ROLE_STANDBY = "standby-candidate"


@dataclass
class VehicleState:
    id: int
    x_m: float
    v_mps: float
    direction: int  # +1 or -1 along the road axis
    role: str = ROLE_MEMBER


def segment_of(x_m: float, seg_len_m: float) -> int:
    """Segment index for a road position; half-open intervals, boundary belongs above."""
    if x_m < 0:
        raise ValueError(f"negative road position: {x_m}")
    if seg_len_m <= 0:
        raise ValueError("segment length must be positive")
    return int(x_m // seg_len_m)


def residual_time(v: VehicleState, seg_len_m: float) -> float:
    """Seconds until the vehicle exits its current segment at its current speed."""
    if v.v_mps == 0:
        return math.inf
    k = segment_of(v.x_m, seg_len_m)
    if v.direction > 0:
        return ((k + 1) * seg_len_m - v.x_m) / v.v_mps
    return (v.x_m - k * seg_len_m) / v.v_mps


class Fleet:
    """The vehicle population; constant density via respawn-wrap at the road ends."""

    def __init__(self, vehicles: list[VehicleState], road_len_m: float,
                 seg_len_m: float, v_min: float, v_max: float, rng: random.Random):
        self.vehicles = vehicles
        self.road_len_m = road_len_m
        self.seg_len_m = seg_len_m
        self.v_min = v_min
        self.v_max = v_max
        self.rng = rng

    @classmethod
    def spawn(cls, cfg: ScenarioConfig, rng: random.Random) -> "Fleet":
        """Uniform positions, uniform speeds, alternating directions."""
        vehicles = []
        road = cfg.road_len_m
        for i in range(cfg.n_vehicles):
            x = rng.uniform(0.0, road)
            if x >= road:  # uniform() may return the upper bound
                x = 0.0
            v = rng.uniform(cfg.v_min_mps, cfg.v_max_mps)
            direction = 1 if i % 2 == 0 else -1
            vehicles.append(VehicleState(id=i, x_m=x, v_mps=v, direction=direction))
        return cls(vehicles, road, cfg.segment_len_m, cfg.v_min_mps, cfg.v_max_mps, rng)

    def segment(self, vid: int) -> int:
        return segment_of(self.vehicles[vid].x_m, self.seg_len_m)

    def advance(self, dt: float) -> list[tuple[VehicleState, int, int]]:
        """Move every vehicle by dt seconds; return (vehicle, old_seg, new_seg) crossings.

        Vehicles leaving the road respawn at the opposite end with a fresh speed
        drawn from the mobility stream; a respawn is reported as one transition.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        transitions = []
        road = self.road_len_m
        L = self.seg_len_m
        for v in self.vehicles:
            old_seg = segment_of(v.x_m, L)
            x = v.x_m + v.direction * v.v_mps * dt
            if v.direction > 0 and x >= road:
                x = 0.0
                v.v_mps = self.rng.uniform(self.v_min, self.v_max)
            elif v.direction < 0 and x < 0:
                x = road - 1e-6
                v.v_mps = self.rng.uniform(self.v_min, self.v_max)
            v.x_m = x
            new_seg = segment_of(x, L)
            if new_seg != old_seg:
                transitions.append((v, old_seg, new_seg))
        return transitions
