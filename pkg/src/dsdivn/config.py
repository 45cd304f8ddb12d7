"""Scenario configuration: tunables of a run plus strict JSON loading."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, asdict
from typing import Optional

MODES = ("dsdivn", "self-organized", "no-fallback")


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass
class ProtocolTimers:
    """Control-plane timers, all in seconds unless noted."""

    hb_period_s: float = 0.2
    detect_s: float = 0.6  # 3 * hb_period
    advert_period_s: float = 1.0
    sync_period_s: float = 1.0
    view_period_s: float = 2.0
    maintenance_s: float = 1.0
    monitor_period_s: float = 0.5
    retry_s: float = 0.1
    max_retries: int = 3
    idle_timeout_s: float = 5.0
    hard_timeout_s: float = 30.0
    buffer_wait_s: float = 1.0
    election_s: float = 1.0
    mobility_dt_s: float = 0.1


@dataclass
class LinkModelParams:
    """Abstract V2V channel: deterministic delay, Bernoulli per-hop loss."""

    bitrate_bps: float = 6e6
    per_hop_proc_s: float = 1e-3
    prop_speed_mps: float = 3e8
    loss_prob: float = 0.01


@dataclass
class FailureSpec:
    target_segment: int
    start_s: float
    duration_s: float


@dataclass
class ScenarioConfig:
    area_m: tuple[float, float] = (1000.0, 1000.0)
    segment_len_m: float = 150.0
    n_vehicles: int = 200
    v_min_mps: float = 10.0
    v_max_mps: float = 30.0
    tx_range_m: float = 300.0
    pkt_rate_hz: float = 5.0
    sim_duration_s: float = 120.0
    mode: str = "dsdivn"
    timers: ProtocolTimers = field(default_factory=ProtocolTimers)
    failure: Optional[FailureSpec] = None
    link: LinkModelParams = field(default_factory=LinkModelParams)
    seed: int = 1

    @property
    def road_len_m(self) -> float:
        return float(self.area_m[0])

    @property
    def n_segments(self) -> int:
        return math.ceil(self.road_len_m / self.segment_len_m)

    def validate(self) -> "ScenarioConfig":
        if len(self.area_m) != 2 or self.area_m[0] <= 0 or self.area_m[1] <= 0:
            raise ConfigError("area_m must be a positive [width, height] pair")
        if self.segment_len_m <= 0:
            raise ConfigError("segment_len_m must be positive")
        if self.segment_len_m > self.tx_range_m / 2:
            raise ConfigError(
                "segment_len_m must be at most half the transmission range "
                "(adjacent heads must stay mutually reachable)"
            )
        if self.n_vehicles <= 0:
            raise ConfigError("n_vehicles must be positive")
        if self.v_min_mps > self.v_max_mps:
            raise ConfigError("v_min_mps must not exceed v_max_mps")
        if self.v_min_mps < 0:
            raise ConfigError("velocities must be non-negative")
        if self.pkt_rate_hz <= 0 or self.sim_duration_s <= 0:
            raise ConfigError("pkt_rate_hz and sim_duration_s must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0 <= self.link.loss_prob < 1):
            raise ConfigError("link.loss_prob must be in [0, 1)")
        if self.link.bitrate_bps <= 0 or self.link.prop_speed_mps <= 0:
            raise ConfigError("link bitrate and propagation speed must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.failure is not None:
            f = self.failure
            if f.start_s < 0 or f.duration_s < 0:
                raise ConfigError("failure start and duration must be non-negative")
            if f.start_s + f.duration_s > self.sim_duration_s:
                raise ConfigError("failure window must end within sim_duration_s")
            if not (0 <= f.target_segment < self.n_segments):
                raise ConfigError(
                    f"failure.target_segment must be in [0, {self.n_segments})"
                )
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["area_m"] = list(self.area_m)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object")
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "area_m" in kwargs:
            area = kwargs["area_m"]
            if not isinstance(area, (list, tuple)) or len(area) != 2:
                raise ConfigError("area_m must be a [width, height] pair")
            kwargs["area_m"] = (float(area[0]), float(area[1]))
        if "timers" in kwargs and kwargs["timers"] is not None:
            kwargs["timers"] = _nested(ProtocolTimers, kwargs["timers"], "timers")
        if "link" in kwargs and kwargs["link"] is not None:
            kwargs["link"] = _nested(LinkModelParams, kwargs["link"], "link")
        if kwargs.get("failure") is not None:
            kwargs["failure"] = _nested(FailureSpec, kwargs["failure"], "failure")
        cfg = cls(**kwargs)
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)


def _nested(cls, data: dict, name: str):
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be a JSON object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    return cls(**data)
