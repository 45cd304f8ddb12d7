"""Flow tables and the southbound message vocabulary."""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
from typing import Optional

DELIVER_LOCAL = "deliver-local"

# Southbound message types.
FLOW_REQUEST = "FlowRequest"
FLOW_INSTALL = "FlowInstall"
FLOW_REJECT = "FlowReject"
HEARTBEAT = "Heartbeat"
CANDIDATE_ADVERT = "CandidateAdvert"
KB_SYNC = "KbSync"
VIEW_EXCHANGE = "ViewExchange"
MONITOR_REPORT = "MonitorReport"
DATA = "Data"

CONTROL_TYPES = frozenset({
    FLOW_REQUEST, FLOW_INSTALL, FLOW_REJECT, HEARTBEAT,
    CANDIDATE_ADVERT, KB_SYNC, VIEW_EXCHANGE, MONITOR_REPORT,
})

# Frame sizes in bytes (modelled, not wire-accurate).
DATA_SIZE_B = 512
FLOW_REQUEST_B = 128
FLOW_INSTALL_B = 128
FLOW_REJECT_B = 64
HEARTBEAT_B = 64
CANDIDATE_ADVERT_B = 64
MONITOR_REPORT_B = 96
VIEW_HEADER_B = 64
VIEW_PER_MEMBER_B = 16
KB_HEADER_B = 64
KB_PER_MEMBER_B = 32

MAX_PENDING_PACKETS = 32  # buffered packets per missing flow key
DEFAULT_HOP_BUDGET = 8


def kb_size_B(n_members: int) -> int:
    """Compressed knowledge-base size; only the transfer cost is modelled."""
    return KB_HEADER_B + KB_PER_MEMBER_B * n_members


def view_size_B(n_members: int) -> int:
    return VIEW_HEADER_B + VIEW_PER_MEMBER_B * n_members


@dataclass
class FlowEntry:
    match: int                      # destination vehicle id
    action: object                  # next-hop vehicle id or DELIVER_LOCAL
    recovery_id: Optional[int]      # designated recovery controller, dsdivn only
    installed_at_us: int
    idle_timeout_s: float
    hard_timeout_s: float
    last_used_us: int = 0

    def expired(self, now_us: int) -> bool:
        if now_us - self.installed_at_us > self.hard_timeout_s * 1e6:
            return True
        ref = max(self.last_used_us, self.installed_at_us)
        return now_us - ref > self.idle_timeout_s * 1e6


class FlowTable:
    """At most one live entry per destination key; expired entries are never consulted."""

    def __init__(self) -> None:
        self.entries: dict[int, FlowEntry] = {}

    def lookup(self, dst: int, now_us: int) -> Optional[FlowEntry]:
        entry = self.entries.get(dst)
        if entry is None:
            return None
        if entry.expired(now_us):
            del self.entries[dst]
            return None
        return entry

    def install(self, entry: FlowEntry) -> None:
        self.entries[entry.match] = entry

    def set_recovery_id(self, recovery_id: Optional[int], now_us: int) -> None:
        dead = [dst for dst, e in self.entries.items() if e.expired(now_us)]
        for dst in dead:
            del self.entries[dst]
        for entry in self.entries.values():
            entry.recovery_id = recovery_id

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class PendingFlow:
    """An unanswered flow request plus the packets buffered behind it."""

    dst: int
    started_us: int
    dist_m: Optional[float] = None
    attempts: int = 0
    dormant: bool = False
    buffered: deque = field(default_factory=deque)  # (packet, deadline_us)
