"""Run metrics: windowed packet delivery ratio, install samples, counters, CSV export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class PdrWindow:
    t_start: float
    t_end: float
    sent: int
    received: int

    @property
    def pdr(self) -> Optional[float]:
        if self.sent == 0:
            return None
        return self.received / self.sent


@dataclass
class InstallSample:
    dist_m: float
    size_B: int
    elapsed_s: float


@dataclass
class RunReport:
    config: dict
    mode: str
    seed: int
    windows: list[PdrWindow]
    samples: list[InstallSample]
    counters: dict[str, int]
    mobility_hash: str
    violations: list[str] = field(default_factory=list)

    def mean_pdr(self, t_from: float, t_to: float) -> Optional[float]:
        vals = [w.pdr for w in self.windows
                if w.t_start >= t_from and w.t_end <= t_to and w.pdr is not None]
        if not vals:
            return None
        return sum(vals) / len(vals)


class MetricsCollector:
    """Attributes every data packet's terminal outcome to its send-time window."""

    def __init__(self, duration_s: float, window_s: float = 1.0):
        if window_s <= 0:
            raise ValueError("window length must be positive")
        self.window_s = window_s
        self.n_windows = max(1, math.ceil(duration_s / window_s))
        self.sent = [0] * self.n_windows
        self.received = [0] * self.n_windows
        self.counters: dict[str, int] = {}
        self.samples: list[InstallSample] = []
        self.violations: list[str] = []
        self._pkt_window: dict[int, int] = {}

    def _window(self, t_s: float) -> int:
        return min(int(t_s / self.window_s), self.n_windows - 1)

    def bump(self, name: str, n: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + n

    def packet_sent(self, pkt_id: int, t_s: float) -> None:
        w = self._window(t_s)
        self.sent[w] += 1
        self._pkt_window[pkt_id] = w
        self.bump("pkts_sent")

    def packet_received(self, pkt_id: int) -> None:
        w = self._pkt_window.pop(pkt_id, None)
        if w is None:
            return  # already resolved (duplicate delivery is a bug upstream)
        self.received[w] += 1
        self.bump("pkts_received")

    def packet_dropped(self, pkt_id: int, cause: str) -> None:
        if self._pkt_window.pop(pkt_id, None) is None:
            return
        self.bump("pkts_dropped")
        self.bump(f"drop:{cause}")

    def frame_dropped(self, cause: str) -> None:
        """A lost/undeliverable frame (control or relayed data leg)."""
        self.bump(f"frame_drop:{cause}")

    def message(self, mtype: str, channel: str) -> None:
        self.bump(f"msg:{mtype}")
        self.bump(f"chan:{channel}")

    def install_sample(self, dist_m: float, size_B: int, elapsed_s: float) -> None:
        self.samples.append(InstallSample(dist_m, size_B, elapsed_s))

    def violation(self, text: str) -> None:
        self.violations.append(text)

    @property
    def in_flight(self) -> int:
        return len(self._pkt_window)

    def finalize(self, config: dict, mode: str, seed: int,
                 mobility_hash: str) -> RunReport:
        self.bump("pkts_in_flight_at_horizon", self.in_flight)
        windows = [
            PdrWindow(i * self.window_s, min((i + 1) * self.window_s,
                                             self.n_windows * self.window_s),
                      self.sent[i], self.received[i])
            for i in range(self.n_windows)
        ]
        return RunReport(config=config, mode=mode, seed=seed, windows=windows,
                         samples=self.samples, counters=dict(self.counters),
                         mobility_hash=mobility_hash, violations=list(self.violations))


def mean_pdr_series(reports: list[RunReport]) -> list[Optional[float]]:
    """Per-window PDR averaged across seeds; None where no seed had traffic."""
    if not reports:
        return []
    n = len(reports[0].windows)
    series: list[Optional[float]] = []
    for i in range(n):
        vals = [r.windows[i].pdr for r in reports if r.windows[i].pdr is not None]
        series.append(sum(vals) / len(vals) if vals else None)
    return series


def export_csv(reports: list[RunReport], out_dir) -> None:
    """Write pdr.csv, install.csv and counters.csv with deterministic row order."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    mode_order = {"dsdivn": 0, "self-organized": 1, "no-fallback": 2}
    ordered = sorted(reports, key=lambda r: (mode_order.get(r.mode, 9), r.seed))

    with open(os.path.join(out_dir, "pdr.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "seed", "t_start", "t_end", "sent", "received", "pdr"])
        for r in ordered:
            for win in r.windows:
                pdr = "" if win.pdr is None else f"{win.pdr:.6f}"
                w.writerow([r.mode, r.seed, f"{win.t_start:.3f}", f"{win.t_end:.3f}",
                            win.sent, win.received, pdr])

    with open(os.path.join(out_dir, "install.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distance_m", "size_B", "elapsed_s"])
        for r in ordered:
            for s in r.samples:
                w.writerow([f"{s.dist_m:.3f}", s.size_B, f"{s.elapsed_s:.9f}"])

    with open(os.path.join(out_dir, "counters.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value"])
        single = len(ordered) == 1
        for r in ordered:
            prefix = "" if single else f"{r.mode}:{r.seed}:"
            for name in sorted(r.counters):
                w.writerow([prefix + name, r.counters[name]])
