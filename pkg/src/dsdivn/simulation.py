"""Full protocol simulation: clustering, mobile controllers, southbound exchange, failover.

Single-threaded and fully deterministic: mobility and traffic draw from their own
labeled streams, so the control-plane mode never perturbs vehicle motion or the
generated workload.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional

from .clustering import DomainKey, elect_head, rank_candidates
from .config import ConfigError, ScenarioConfig
from .control import (
    CANDIDATE_ADVERT, CANDIDATE_ADVERT_B, DATA, DATA_SIZE_B, DEFAULT_HOP_BUDGET,
    DELIVER_LOCAL, FLOW_INSTALL, FLOW_INSTALL_B, FLOW_REJECT, FLOW_REJECT_B,
    FLOW_REQUEST, FLOW_REQUEST_B, HEARTBEAT, HEARTBEAT_B, KB_SYNC,
    MAX_PENDING_PACKETS, MONITOR_REPORT, MONITOR_REPORT_B, VIEW_EXCHANGE,
    FlowEntry, FlowTable, PendingFlow, kb_size_B, view_size_B,
)
from .engine import EventLoop, seeded_stream, to_us
from .metrics import MetricsCollector, RunReport
from .mobility import Fleet, ROLE_HEAD, ROLE_MEMBER, ROLE_STANDBY
from .radio import CHANNEL_CONTROL, CHANNEL_DATA, link_delay

HANDOVER = "Handover"

ACTIVE = "active"
FAILED = "failed"

VIEW_STALE_FACTOR = 3  # neighbor views older than this many periods are ignored


class Packet:
    __slots__ = ("pid", "src", "dst", "size_B", "budget")

    def __init__(self, pid: int, src: int, dst: int, size_B: int, budget: int):
        self.pid = pid
        self.src = src
        self.dst = dst
        self.size_B = size_B
        self.budget = budget


@dataclass
class KbReplica:
    version: int
    term: int
    domain: DomainKey
    view: dict
    candidates: list
    neighbor_views: dict = field(default_factory=dict)


class ControllerRuntime:
    """Live controller on a head vehicle: local view, replication, neighbor views."""

    __slots__ = ("vid", "domain", "term", "status", "view", "kb_version",
                 "neighbor_views", "via_recovery")

    def __init__(self, vid: int, domain: DomainKey, term: int,
                 view: Optional[dict] = None, kb_version: int = 0,
                 via_recovery: bool = False):
        self.vid = vid
        self.domain = domain
        self.term = term
        self.status = ACTIVE
        self.view = view if view is not None else {}
        self.kb_version = kb_version
        self.neighbor_views: dict = {}
        self.via_recovery = via_recovery


class MemberRuntime:
    """Member-side protocol state: flow table, pending requests, controller binding."""

    __slots__ = ("vid", "domain", "ctrl_id", "ctrl_term", "last_hb_us",
                 "recovery_id", "table", "pending", "kb", "detect_armed")

    def __init__(self, vid: int, domain: DomainKey):
        self.vid = vid
        self.domain = domain
        self.ctrl_id: Optional[int] = None
        self.ctrl_term = 0
        self.last_hb_us = -10**12
        self.recovery_id: Optional[int] = None
        self.table = FlowTable()
        self.pending: dict[int, PendingFlow] = {}
        self.kb: Optional[KbReplica] = None
        self.detect_armed = False


@dataclass
class DomainRuntime:
    key: DomainKey
    head: Optional[int] = None
    term: int = 0
    candidates: list = field(default_factory=list)
    election_pending: bool = False
    pinned: bool = False
    last_auth_change_us: int = -10**12


class Simulation:
    """One seeded run of the configured scenario."""

    def __init__(self, cfg: ScenarioConfig, trace=None, check_invariants: bool = False,
                 advert_enabled: bool = True, piggyback_enabled: bool = True):
        cfg.validate()
        self.cfg = cfg
        self.t = cfg.timers
        self.link = cfg.link
        self.R = cfg.tx_range_m
        self.L = cfg.segment_len_m
        self.trace = trace
        self.check_invariants = check_invariants
        self.advert_enabled = advert_enabled
        self.piggyback_enabled = piggyback_enabled

        self.loop = EventLoop()
        self.rng_mobility = seeded_stream(cfg.seed, "mobility")
        self.rng_traffic = seeded_stream(cfg.seed, "traffic")
        self.rng_link = seeded_stream(cfg.seed, "link")

        self.fleet = Fleet.spawn(cfg, self.rng_mobility)
        self.metrics = MetricsCollector(cfg.sim_duration_s)
        self._hash = hashlib.sha256()

        self.detect_us = to_us(self.t.detect_s)
        self.buffer_wait_us = to_us(self.t.buffer_wait_s)
        self.send_interval_s = 1.0 / cfg.pkt_rate_hz

        self.members: dict[int, MemberRuntime] = {}
        self.controllers: dict[int, ControllerRuntime] = {}
        self.domains: dict[DomainKey, DomainRuntime] = {}
        self.domain_members: dict[DomainKey, list[int]] = {}
        self.failed: set[int] = set()
        self.failed_head: Optional[int] = None
        self._next_pid = 0

        for v in self.fleet.vehicles:
            key = DomainKey(self.fleet.segment(v.id), v.direction)
            self.members[v.id] = MemberRuntime(v.id, key)
            self.domain_members.setdefault(key, []).append(v.id)

        f = cfg.failure
        # With a failure spec the run measures the affected domain: only its
        # current members originate traffic, so PDR reflects that cluster.
        self.focus_domain: Optional[DomainKey] = None
        if f is not None:
            self.focus_domain = DomainKey(f.target_segment, 1)

        for key in sorted(self.domain_members):
            if self.domain_members[key]:
                self._set_head(key)

        self.loop.schedule_in(self.t.mobility_dt_s, self._mobility_tick)
        self.loop.schedule_in(self.t.maintenance_s, self._maintenance_tick)
        self.loop.schedule_in(self.t.monitor_period_s, self._monitor_sweep)
        for vid in range(cfg.n_vehicles):
            phase = self.rng_traffic.uniform(0.0, self.send_interval_s)
            self.loop.schedule_in(phase, self._traffic_fire, vid)
        if f is not None and f.duration_s > 0:
            self.loop.schedule_in(f.start_s, self._failure_start)
            self.loop.schedule_in(f.start_s + f.duration_s, self._failure_end)

    # ------------------------------------------------------------------ helpers

    def _domain(self, key: DomainKey) -> DomainRuntime:
        dom = self.domains.get(key)
        if dom is None:
            dom = DomainRuntime(key)
            self.domains[key] = dom
        return dom

    def _pos(self, vid: int) -> float:
        return self.fleet.vehicles[vid].x_m

    def _log(self, mtype: str, src: int, dst: Optional[int], size_B: int,
             channel: str) -> None:
        self.metrics.message(mtype, channel)
        if self.trace is not None:
            d = "*" if dst is None else str(dst)
            self.trace.write(f"{self.loop.now_s:.6f}\t{mtype}\t{src}\t{d}\t"
                             f"{size_B}\t{channel}\n")

    def _lost(self) -> bool:
        p = self.link.loss_prob
        return p > 0 and self.rng_link.random() < p

    # ------------------------------------------------------------- control radio

    def _unicast(self, src: int, dst: int, size_B: int, mtype: str, cb, args) -> None:
        """Control-channel unicast with greedy relaying and per-hop loss."""
        self._log(mtype, src, dst, size_B, CHANNEL_CONTROL)
        self._hop(src, dst, size_B, DEFAULT_HOP_BUDGET, cb, args)

    def _hop(self, holder: int, dst: int, size_B: int, budget: int, cb, args) -> None:
        hx = self._pos(holder)
        dx = self._pos(dst)
        if holder == dst or abs(hx - dx) <= self.R:
            nh = dst
        else:
            nh = self._greedy_next(holder, dst)
            if nh is None:
                self.metrics.frame_dropped("no_forwarder")
                return
        if budget <= 0:
            self.metrics.frame_dropped("hop_budget")
            return
        if self._lost():
            self.metrics.frame_dropped("loss")
            return
        delay = link_delay(abs(hx - self._pos(nh)), size_B, self.link, self.R)
        if nh == dst:
            self.loop.schedule_in(delay, self._deliver_control, dst, cb, args)
        else:
            self.loop.schedule_in(delay, self._relay_control, nh, dst, size_B,
                                  budget - 1, cb, args)

    def _relay_control(self, holder, dst, size_B, budget, cb, args) -> None:
        if holder in self.failed:
            self.metrics.frame_dropped("relay_failed")
            return
        self._hop(holder, dst, size_B, budget, cb, args)

    def _deliver_control(self, dst, cb, args) -> None:
        if dst in self.failed:
            self.metrics.frame_dropped("dst_failed")
            return
        cb(*args)

    def _greedy_next(self, src: int, dst: int) -> Optional[int]:
        src_x = self._pos(src)
        dst_x = self._pos(dst)
        best = None
        best_rem = abs(src_x - dst_x)
        for v in self.fleet.vehicles:
            vid = v.id
            if vid == src or vid in self.failed:
                continue
            if abs(v.x_m - src_x) > self.R:
                continue
            rem = abs(v.x_m - dst_x)
            if rem < best_rem or (rem == best_rem and best is not None and vid < best):
                best = vid
                best_rem = rem
        return best

    # ----------------------------------------------------------------- mobility

    def _mobility_tick(self) -> None:
        transitions = self.fleet.advance(self.t.mobility_dt_s)
        xs = [v.x_m for v in self.fleet.vehicles]
        self._hash.update(struct.pack(f"<{len(xs)}d", *xs))
        for v, old_seg, new_seg in transitions:
            self._apply_transition(v, old_seg, new_seg)
        self.loop.schedule_in(self.t.mobility_dt_s, self._mobility_tick)

    def _apply_transition(self, v, old_seg: int, new_seg: int) -> None:
        vid = v.id
        old_key = DomainKey(old_seg, v.direction)
        new_key = DomainKey(new_seg, v.direction)
        self.domain_members[old_key].remove(vid)
        self.domain_members.setdefault(new_key, []).append(vid)

        m = self.members[vid]
        m.domain = new_key
        m.ctrl_id = None
        m.ctrl_term = 0
        m.recovery_id = None
        m.kb = None
        for p in m.pending.values():
            p.dormant = True

        old_dom = self.domains.get(old_key)
        was_head = old_dom is not None and old_dom.head == vid
        if was_head:
            if vid in self.failed:
                pass  # a crashed head cannot hand over; members go through detection
            else:
                self._set_head(old_key, handover_from=vid)
        else:
            self._refresh_candidates(old_key)

        new_dom = self._domain(new_key)
        if new_dom.head is None and not new_dom.pinned:
            self._set_head(new_key)
        else:
            self._refresh_candidates(new_key)

    # -------------------------------------------------------- elections & heads

    def _set_head(self, key: DomainKey, handover_from: Optional[int] = None) -> None:
        dom = self._domain(key)
        mem_ids = self.domain_members.get(key) or []
        candidates = [self.fleet.vehicles[i] for i in mem_ids if i not in self.failed]
        winner = elect_head(candidates, self.L)
        if winner is None:
            if handover_from is not None:
                self._demote(handover_from)  # domain dissolved, state discarded
            dom.head = None
            dom.candidates = []
            return
        if winner == dom.head:
            self._refresh_candidates(key)
            return

        dom.term += 1
        view: dict = {}
        neighbor_views: dict = {}
        kb_version = 0
        if handover_from is not None:
            old = self.controllers.get(handover_from)
            if old is not None and old.status == ACTIVE and handover_from not in self.failed:
                view = dict(old.view)
                neighbor_views = dict(old.neighbor_views)
                kb_version = old.kb_version
                self._log(HANDOVER, handover_from, winner, kb_size_B(len(view)),
                          CHANNEL_CONTROL)
                self.metrics.bump("handovers")
            self._demote(handover_from)
        if dom.head is not None and dom.head != handover_from:
            prev = self.fleet.vehicles[dom.head]
            prev.role = ROLE_MEMBER

        ctl = ControllerRuntime(winner, key, dom.term, view=view, kb_version=kb_version)
        ctl.neighbor_views = neighbor_views
        self.controllers[winner] = ctl
        dom.head = winner
        dom.last_auth_change_us = self.loop.now_us
        self.fleet.vehicles[winner].role = ROLE_HEAD
        self.metrics.bump("elections")
        self._refresh_candidates(key)
        self._start_controller(ctl)

    def _demote(self, vid: int) -> None:
        ctl = self.controllers.pop(vid, None)
        if ctl is not None:
            self.fleet.vehicles[vid].role = ROLE_MEMBER

    def _refresh_candidates(self, key: DomainKey) -> None:
        dom = self.domains.get(key)
        if dom is None:
            return
        if dom.head is None:
            dom.candidates = []
            return
        mem = [self.fleet.vehicles[i] for i in self.domain_members.get(key, ())
               if i not in self.failed]
        old0 = dom.candidates[0] if dom.candidates else None
        dom.candidates = rank_candidates(mem, dom.head, self.L)
        new0 = dom.candidates[0] if dom.candidates else None
        for i in self.domain_members.get(key, ()):
            if i == dom.head:
                continue
            self.fleet.vehicles[i].role = ROLE_STANDBY if i == new0 else ROLE_MEMBER
        if (self.cfg.mode == "dsdivn" and new0 is not None and new0 != old0):
            ctl = self.controllers.get(dom.head)
            if ctl is not None and ctl.status == ACTIVE and dom.head not in self.failed:
                self._do_sync(ctl)  # full snapshot straight to the new candidate

    def _start_controller(self, ctl: ControllerRuntime) -> None:
        self._do_heartbeat(ctl)
        if self.cfg.mode == "dsdivn":
            if self.advert_enabled:
                self._do_advert(ctl)
            self.loop.schedule_in(self.t.advert_period_s, self._ctl_periodic,
                                  ctl.vid, ctl.term, "advert")
            self.loop.schedule_in(self.t.sync_period_s, self._ctl_periodic,
                                  ctl.vid, ctl.term, "sync")
        self.loop.schedule_in(self.t.hb_period_s, self._ctl_periodic,
                              ctl.vid, ctl.term, "hb")
        self.loop.schedule_in(self.t.view_period_s, self._ctl_periodic,
                              ctl.vid, ctl.term, "view")

    def _ctl_periodic(self, vid: int, term: int, kind: str) -> None:
        ctl = self.controllers.get(vid)
        if ctl is None or ctl.term != term:
            return  # superseded; let this timer chain die
        alive = vid not in self.failed and ctl.status == ACTIVE
        if kind == "hb":
            if alive:
                self._do_heartbeat(ctl)
            period = self.t.hb_period_s
        elif kind == "advert":
            if alive and self.advert_enabled:
                self._do_advert(ctl)
            period = self.t.advert_period_s
        elif kind == "sync":
            if alive:
                self._do_sync(ctl)
            period = self.t.sync_period_s
        else:
            if alive:
                self._do_view(ctl)
            period = self.t.view_period_s
        self.loop.schedule_in(period, self._ctl_periodic, vid, term, kind)

    # ------------------------------------------------------- controller duties

    def _do_heartbeat(self, ctl: ControllerRuntime) -> None:
        self._log(HEARTBEAT, ctl.vid, None, HEARTBEAT_B, CHANNEL_CONTROL)
        cx = self._pos(ctl.vid)
        for mid in list(self.domain_members.get(ctl.domain, ())):
            if mid == ctl.vid or mid in self.failed:
                continue
            if abs(self._pos(mid) - cx) > self.R:
                continue
            if self._lost():
                continue
            self._member_on_heartbeat(mid, ctl)
        m = self.members[ctl.vid]
        if m.domain == ctl.domain:
            m.ctrl_id = ctl.vid
            m.ctrl_term = ctl.term
            m.last_hb_us = self.loop.now_us

    def _member_on_heartbeat(self, mid: int, ctl: ControllerRuntime) -> None:
        m = self.members[mid]
        if m.domain != ctl.domain:
            return
        mine = self.controllers.get(mid)
        if (mine is not None and mine is not ctl and mine.domain == ctl.domain
                and mine.term < ctl.term):
            self._demote(mid)  # superseded controller yields to the higher term
        if m.ctrl_id is not None and ctl.term < m.ctrl_term:
            return
        rebound = m.ctrl_id != ctl.vid or ctl.term > m.ctrl_term
        m.ctrl_id = ctl.vid
        m.ctrl_term = ctl.term
        m.last_hb_us = self.loop.now_us
        if rebound:
            self._send_monitor_report(m)
            for p in m.pending.values():
                p.attempts = 0
                self._transmit_request(m, p)
        else:
            for p in m.pending.values():
                if p.dormant:
                    p.attempts = 0
                    self._transmit_request(m, p)
        if self._needs_detect(m):
            self._arm_detect(m)

    def _do_advert(self, ctl: ControllerRuntime) -> None:
        dom = self._domain(ctl.domain)
        rank0 = dom.candidates[0] if dom.candidates else None
        self._log(CANDIDATE_ADVERT, ctl.vid, None, CANDIDATE_ADVERT_B, CHANNEL_CONTROL)
        cx = self._pos(ctl.vid)
        for mid in list(self.domain_members.get(ctl.domain, ())):
            if mid == ctl.vid or mid in self.failed:
                continue
            if abs(self._pos(mid) - cx) > self.R:
                continue
            if self._lost():
                continue
            m = self.members[mid]
            m.recovery_id = rank0
            m.table.set_recovery_id(rank0, self.loop.now_us)
            if self._needs_detect(m):
                self._arm_detect(m)

    def _do_sync(self, ctl: ControllerRuntime) -> None:
        dom = self._domain(ctl.domain)
        if not dom.candidates:
            self.metrics.bump("kb_sync_suspended")
            return
        target = dom.candidates[0]
        ctl.kb_version += 1
        kb = KbReplica(version=ctl.kb_version, term=ctl.term, domain=ctl.domain,
                       view=dict(ctl.view), candidates=list(dom.candidates),
                       neighbor_views=dict(ctl.neighbor_views))
        self._unicast(ctl.vid, target, kb_size_B(len(ctl.view)), KB_SYNC,
                      self._on_kb_sync, (target, kb))

    def _on_kb_sync(self, target: int, kb: KbReplica) -> None:
        m = self.members[target]
        if m.domain != kb.domain:
            return
        if m.kb is None or m.kb.version < kb.version:
            m.kb = kb
        self._arm_detect(m)

    def _do_view(self, ctl: ControllerRuntime) -> None:
        seg, d = ctl.domain
        summary = {vid: rec[0] for vid, rec in ctl.view.items()}
        for s in (seg - 1, seg, seg + 1):
            for dd in (1, -1):
                key = DomainKey(s, dd)
                if key == ctl.domain:
                    continue
                dom2 = self.domains.get(key)
                if dom2 is None or dom2.head is None or dom2.head in self.failed:
                    continue
                self._unicast(ctl.vid, dom2.head, view_size_B(len(summary)),
                              VIEW_EXCHANGE, self._on_view,
                              (dom2.head, ctl.domain, summary, self.loop.now_us))

    def _on_view(self, target: int, from_key: DomainKey, summary: dict,
                 sent_us: int) -> None:
        ctl = self.controllers.get(target)
        if ctl is not None and ctl.status == ACTIVE:
            ctl.neighbor_views[from_key] = (self.loop.now_us, summary)

    def _monitor_sweep(self) -> None:
        for m in self.members.values():
            if m.ctrl_id is not None and m.vid not in self.failed:
                self._send_monitor_report(m)
        self.loop.schedule_in(self.t.monitor_period_s, self._monitor_sweep)

    def _send_monitor_report(self, m: MemberRuntime) -> None:
        target = m.ctrl_id
        if target is None:
            return
        v = self.fleet.vehicles[m.vid]
        if m.vid == target:
            ctl = self.controllers.get(target)
            if ctl is not None:
                ctl.view[m.vid] = (v.x_m, v.v_mps, v.direction, self.loop.now_us)
            return
        self._log(MONITOR_REPORT, m.vid, target, MONITOR_REPORT_B, CHANNEL_CONTROL)
        if abs(v.x_m - self._pos(target)) > self.R or self._lost():
            return
        if target in self.failed:
            return
        ctl = self.controllers.get(target)
        if ctl is not None and ctl.status == ACTIVE and m.domain == ctl.domain:
            ctl.view[m.vid] = (v.x_m, v.v_mps, v.direction, self.loop.now_us)

    # ------------------------------------------------------------- data plane

    def _traffic_fire(self, vid: int) -> None:
        self.loop.schedule_in(self.send_interval_s, self._traffic_fire, vid)
        v = self.fleet.vehicles[vid]
        seg = self.fleet.segment(vid)
        if self.focus_domain is not None and (seg != self.focus_domain.segment
                                              or v.direction != self.focus_domain.direction):
            return
        cands: list[int] = []
        self_idx = -1
        for s in (seg - 1, seg, seg + 1):
            if 0 <= s < self.cfg.n_segments:
                for d in (1, -1):
                    lst = self.domain_members.get(DomainKey(s, d))
                    if lst:
                        if s == seg and d == v.direction:
                            self_idx = len(cands) + lst.index(vid)
                        cands.extend(lst)
        if len(cands) <= 1:
            return
        idx = self.rng_traffic.randrange(len(cands) - 1)
        if idx >= self_idx:
            idx += 1
        dst = cands[idx]
        if vid in self.failed:
            return  # a crashed node originates nothing (draw consumed above)
        pid = self._next_pid
        self._next_pid += 1
        pkt = Packet(pid, vid, dst, DATA_SIZE_B, DEFAULT_HOP_BUDGET)
        self.metrics.packet_sent(pid, self.loop.now_s)
        self._handle_data(vid, pkt)

    def _handle_data(self, vid: int, pkt: Packet) -> None:
        m = self.members[vid]
        entry = m.table.lookup(pkt.dst, self.loop.now_us)
        if entry is not None:
            self._forward_with_entry(m, pkt, entry)
        else:
            self._enqueue_pending(m, pkt)

    def _forward_with_entry(self, m: MemberRuntime, pkt: Packet,
                            entry: FlowEntry) -> None:
        nh = entry.action
        if nh == DELIVER_LOCAL:
            self.metrics.packet_received(pkt.pid)
            return
        if pkt.budget <= 0:
            self.metrics.packet_dropped(pkt.pid, "hop_budget")
            return
        hx = self._pos(m.vid)
        nx = self._pos(nh)
        if abs(hx - nx) > self.R:
            self.metrics.packet_dropped(pkt.pid, "link_break")
            return
        entry.last_used_us = self.loop.now_us
        self._log(DATA, m.vid, nh, pkt.size_B, CHANNEL_DATA)
        if self._lost():
            self.metrics.packet_dropped(pkt.pid, "loss")
            return
        pkt.budget -= 1
        delay = link_delay(abs(hx - nx), pkt.size_B, self.link, self.R)
        self.loop.schedule_in(delay, self._data_arrive, nh, pkt)

    def _data_arrive(self, vid: int, pkt: Packet) -> None:
        if vid in self.failed:
            self.metrics.packet_dropped(pkt.pid, "node_failed")
            return
        if vid == pkt.dst:
            self.metrics.packet_received(pkt.pid)
            return
        self._handle_data(vid, pkt)

    def _enqueue_pending(self, m: MemberRuntime, pkt: Packet) -> None:
        p = m.pending.get(pkt.dst)
        fresh = p is None
        if fresh:
            p = PendingFlow(dst=pkt.dst, started_us=self.loop.now_us)
            m.pending[pkt.dst] = p
        p.buffered.append((pkt, self.loop.now_us + self.buffer_wait_us))
        if len(p.buffered) > MAX_PENDING_PACKETS:
            old_pkt, _ = p.buffered.popleft()
            self.metrics.packet_dropped(old_pkt.pid, "buffer_overflow")
        if fresh:
            self._transmit_request(m, p)
        self._arm_detect(m)

    # ----------------------------------------------------- flow request / reply

    def _transmit_request(self, m: MemberRuntime, p: PendingFlow) -> None:
        target = m.ctrl_id
        if target is None:
            p.dormant = True
            return
        p.attempts += 1
        p.dormant = False
        if p.dist_m is None:
            p.dist_m = abs(self._pos(m.vid) - self._pos(target))
        self._unicast(m.vid, target, FLOW_REQUEST_B, FLOW_REQUEST,
                      self._ctl_on_flow_request, (target, m.vid, p.dst))
        self.loop.schedule_in(self.t.retry_s, self._retry_fire,
                              m.vid, p.dst, p.attempts)

    def _retry_fire(self, vid: int, dst: int, attempt: int) -> None:
        m = self.members[vid]
        p = m.pending.get(dst)
        if p is None or p.dormant or p.attempts != attempt:
            return
        if p.attempts > self.t.max_retries:
            p.dormant = True  # controller unreachable for this request
            return
        self._transmit_request(m, p)

    def _ctl_on_flow_request(self, ctl_vid: int, req_vid: int, dst: int) -> None:
        if ctl_vid in self.failed:
            return
        ctl = self.controllers.get(ctl_vid)
        if ctl is None or ctl.status != ACTIVE:
            ctl = self._maybe_activate_recovery(ctl_vid)
            if ctl is None:
                return
        dom = self._domain(ctl.domain)
        action = self._compute_route(ctl, req_vid, dst)
        if action is None:
            self.metrics.bump("route_unknown_dst")
            self._unicast(ctl_vid, req_vid, FLOW_REJECT_B, FLOW_REJECT,
                          self._member_on_reject, (req_vid, dst))
            return
        recovery_id = None
        if self.cfg.mode == "dsdivn" and dom.candidates:
            recovery_id = dom.candidates[0]
        entry = FlowEntry(match=dst, action=action, recovery_id=recovery_id,
                          installed_at_us=0,
                          idle_timeout_s=self.t.idle_timeout_s,
                          hard_timeout_s=self.t.hard_timeout_s)
        self._unicast(ctl_vid, req_vid, FLOW_INSTALL_B, FLOW_INSTALL,
                      self._member_on_install, (req_vid, entry, ctl.via_recovery))

    def _compute_route(self, ctl: ControllerRuntime, req_vid: int, dst: int):
        if dst == req_vid:
            return DELIVER_LOCAL
        req_x = self._pos(req_vid)  # requester position rides on the request
        dst_x = self._view_position(ctl, dst)
        if dst_x is None:
            return None
        if abs(req_x - dst_x) <= self.R:
            return dst
        best = None
        best_rem = abs(req_x - dst_x)
        for vid, x in self._known_positions(ctl):
            if vid == req_vid or vid == dst:
                continue
            if abs(x - req_x) > self.R:
                continue
            rem = abs(x - dst_x)
            if rem < best_rem or (rem == best_rem and best is not None and vid < best):
                best = vid
                best_rem = rem
        return best

    def _view_position(self, ctl: ControllerRuntime, vid: int) -> Optional[float]:
        rec = ctl.view.get(vid)
        if rec is not None:
            return rec[0]
        cutoff = self.loop.now_us - VIEW_STALE_FACTOR * to_us(self.t.view_period_s)
        for t_us, summary in ctl.neighbor_views.values():
            if t_us < cutoff:
                continue
            x = summary.get(vid)
            if x is not None:
                return x
        return None

    def _known_positions(self, ctl: ControllerRuntime):
        for vid, rec in ctl.view.items():
            yield vid, rec[0]
        cutoff = self.loop.now_us - VIEW_STALE_FACTOR * to_us(self.t.view_period_s)
        for t_us, summary in ctl.neighbor_views.values():
            if t_us < cutoff:
                continue
            yield from summary.items()

    def _member_on_install(self, vid: int, entry: FlowEntry,
                           from_recovery: bool) -> None:
        if vid in self.failed:
            return
        m = self.members[vid]
        now = self.loop.now_us
        entry.installed_at_us = now
        entry.last_used_us = now
        m.table.install(entry)
        if (self.cfg.mode == "dsdivn" and self.piggyback_enabled
                and entry.recovery_id is not None):
            m.recovery_id = entry.recovery_id
        p = m.pending.pop(entry.match, None)
        if p is None:
            return  # unsolicited/duplicate install; entry replaced, nothing buffered
        self.metrics.install_sample(p.dist_m if p.dist_m is not None else 0.0,
                                    FLOW_REQUEST_B, (now - p.started_us) / 1e6)
        if from_recovery and "first_recovery_install_us" not in self.metrics.counters:
            self.metrics.counters["first_recovery_install_us"] = now
        while p.buffered:
            pkt, deadline = p.buffered.popleft()
            if now <= deadline:
                self._forward_with_entry(m, pkt, entry)
            else:
                self.metrics.packet_dropped(pkt.pid, "buffer_expired")

    def _member_on_reject(self, vid: int, dst: int) -> None:
        if vid in self.failed:
            return
        m = self.members[vid]
        p = m.pending.pop(dst, None)
        if p is None:
            return
        while p.buffered:
            pkt, _ = p.buffered.popleft()
            self.metrics.packet_dropped(pkt.pid, "no_route")

    # --------------------------------------------------- failure detection path

    def _needs_detect(self, m: MemberRuntime) -> bool:
        return bool(m.pending) or m.kb is not None or m.recovery_id == m.vid

    def _arm_detect(self, m: MemberRuntime) -> None:
        if m.detect_armed or m.ctrl_id is None:
            return
        m.detect_armed = True
        fire = max(self.loop.now_us, m.last_hb_us + self.detect_us)
        self.loop.schedule_at_us(fire, self._detect_fire, m.vid)

    def _detect_fire(self, vid: int) -> None:
        m = self.members[vid]
        m.detect_armed = False
        if m.ctrl_id is None or vid in self.failed:
            return
        if self.loop.now_us - m.last_hb_us < self.detect_us:
            if self._needs_detect(m):
                self._arm_detect(m)
            return
        self._on_ctrl_timeout(m)

    def _on_ctrl_timeout(self, m: MemberRuntime) -> None:
        mode = self.cfg.mode
        dom = self.domains.get(m.domain)
        if mode == "dsdivn":
            rid = m.recovery_id
            if rid is None or rid == m.ctrl_id or rid in self.failed:
                return
            if rid == m.vid:
                self._activate_recovery(m.vid)
                return
            m.ctrl_id = rid  # redirect to the pre-installed recovery identifier
            for p in m.pending.values():
                p.attempts = 0
                self._transmit_request(m, p)
        elif mode == "self-organized":
            if dom is not None and not dom.election_pending:
                dom.election_pending = True
                self.metrics.bump("elections_triggered")
                self.loop.schedule_in(self.t.election_s, self._election_resolve,
                                      dom.key, dom.term)
        # no-fallback: members keep waiting on the dead controller

    def _election_resolve(self, key: DomainKey, term_at_call: int) -> None:
        dom = self._domain(key)
        dom.election_pending = False
        if dom.term != term_at_call:
            return  # authority already changed some other way
        self._set_head(key)

    def _maybe_activate_recovery(self, vid: int) -> Optional[ControllerRuntime]:
        """A standby candidate hit by a redirected request takes over, kb permitting."""
        if self.cfg.mode != "dsdivn":
            return None
        m = self.members[vid]
        dom = self.domains.get(m.domain)
        if dom is None or dom.head == vid:
            return None
        if dom.head is not None and dom.head not in self.failed:
            return None  # current head is alive; do not hijack
        if m.kb is None or m.kb.domain != m.domain:
            return None
        return self._activate_recovery(vid)

    def _activate_recovery(self, vid: int) -> Optional[ControllerRuntime]:
        m = self.members[vid]
        key = m.domain
        dom = self._domain(key)
        if dom.head == vid:
            return self.controllers.get(vid)
        kb = m.kb
        dom.term += 1
        if kb is not None and kb.domain == key:
            view = dict(kb.view)
            neighbor_views = dict(kb.neighbor_views)
            kb_version = kb.version
        else:
            view = {}
            neighbor_views = {}
            kb_version = 0
            self.metrics.bump("recovery_without_kb")
        ctl = ControllerRuntime(vid, key, dom.term, view=view,
                                kb_version=kb_version, via_recovery=True)
        ctl.neighbor_views = neighbor_views
        self.controllers[vid] = ctl
        dom.head = vid
        dom.last_auth_change_us = self.loop.now_us
        self.fleet.vehicles[vid].role = ROLE_HEAD
        self.metrics.bump("recoveries")
        self._refresh_candidates(key)
        self._start_controller(ctl)
        return ctl

    # ----------------------------------------------------------- failure window

    def _failure_start(self) -> None:
        f = self.cfg.failure
        key = DomainKey(f.target_segment, 1)
        mem = self.domain_members.get(key)
        if not mem:
            raise ConfigError(
                f"failure target segment {f.target_segment} is empty at "
                f"{f.start_s} s")
        dom = self._domain(key)
        if dom.head is None:
            raise ConfigError(
                f"failure target segment {f.target_segment} has no controller at "
                f"{f.start_s} s")
        self.failed_head = dom.head
        self.failed.add(dom.head)
        ctl = self.controllers.get(dom.head)
        if ctl is not None:
            ctl.status = FAILED
        dom.pinned = True
        self.metrics.bump("failures_injected")

    def _failure_end(self) -> None:
        vid = self.failed_head
        if vid is None:
            return
        self.failed.discard(vid)
        self.failed_head = None
        ctl = self.controllers.get(vid)
        if ctl is not None and ctl.status == FAILED:
            ctl.status = ACTIVE  # resumes; term comparison settles any dual-active
            dom = self.domains.get(ctl.domain)
            if dom is not None:
                dom.last_auth_change_us = self.loop.now_us
        f = self.cfg.failure
        dom = self.domains.get(DomainKey(f.target_segment, 1))
        if dom is not None:
            dom.pinned = False

    # -------------------------------------------------------------- maintenance

    def _maintenance_tick(self) -> None:
        now = self.loop.now_us
        # demote controllers that are no longer their domain's head
        for vid in list(self.controllers):
            if vid in self.failed:
                continue
            ctl = self.controllers[vid]
            dom = self.domains.get(ctl.domain)
            if dom is None or dom.head != vid:
                self._demote(vid)
        stale_view_us = now - to_us(3.0)
        for key in sorted(self.domain_members):
            if not self.domain_members[key]:
                continue
            dom = self._domain(key)
            if dom.pinned:
                continue
            self._set_head(key, handover_from=dom.head)
            if dom.head is not None:
                ctl = self.controllers.get(dom.head)
                if ctl is not None:
                    for vid in [v for v, rec in ctl.view.items()
                                if rec[3] < stale_view_us]:
                        del ctl.view[vid]
        if self.check_invariants:
            self._assert_invariants()
        self.loop.schedule_in(self.t.maintenance_s, self._maintenance_tick)

    def _assert_invariants(self) -> None:
        from .clustering import members_of

        now = self.loop.now_us
        # membership bookkeeping matches a brute-force scan of the fleet
        seen = 0
        for key, mem in self.domain_members.items():
            brute = {v.id for v in members_of(key, self.fleet)}
            if brute != set(mem):
                self.metrics.violation(
                    f"t={self.loop.now_s}: membership mismatch in {key}")
            seen += len(mem)
        if seen != self.cfg.n_vehicles:
            self.metrics.violation(f"t={self.loop.now_s}: fleet partition broken")

        active_by_domain: dict[DomainKey, list[int]] = {}
        for vid, ctl in self.controllers.items():
            if ctl.status == ACTIVE and vid not in self.failed:
                active_by_domain.setdefault(ctl.domain, []).append(vid)
        for key, mem in self.domain_members.items():
            if not mem:
                continue
            dom = self.domains.get(key)
            actives = active_by_domain.get(key, [])
            in_grace = dom is not None and now - dom.last_auth_change_us <= self.detect_us
            if len(actives) > 1 and not in_grace:
                self.metrics.violation(
                    f"t={self.loop.now_s}: {len(actives)} active controllers in {key}")
            # elected head holds the longest residual time (brute-force check)
            if dom is not None and not dom.pinned and dom.head is not None:
                alive = [self.fleet.vehicles[i] for i in mem if i not in self.failed]
                want = elect_head(alive, self.L)
                if want != dom.head:
                    self.metrics.violation(
                        f"t={self.loop.now_s}: head {dom.head} of {key} is not "
                        f"argmax ({want})")
        # adjacent same-direction heads stay mutually reachable
        for key, dom in self.domains.items():
            if dom.head is None or dom.head in self.failed:
                continue
            nxt = self.domains.get(DomainKey(key.segment + 1, key.direction))
            if nxt is None or nxt.head is None or nxt.head in self.failed:
                continue
            if abs(self._pos(dom.head) - self._pos(nxt.head)) > self.R:
                self.metrics.violation(
                    f"t={self.loop.now_s}: heads of {key} and segment "
                    f"{key.segment + 1} out of range")

    # --------------------------------------------------------------------- run

    def run(self) -> RunReport:
        self.loop.run_until(self.cfg.sim_duration_s)
        return self.metrics.finalize(self.cfg.to_dict(), self.cfg.mode,
                                     self.cfg.seed, self._hash.hexdigest())


def run_simulation(cfg: ScenarioConfig, trace_path=None,
                   check_invariants: bool = False) -> RunReport:
    if trace_path is None:
        return Simulation(cfg, check_invariants=check_invariants).run()
    with open(trace_path, "w", encoding="utf-8") as fh:
        return Simulation(cfg, trace=fh, check_invariants=check_invariants).run()
