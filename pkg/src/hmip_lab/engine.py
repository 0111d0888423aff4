"""Deterministic discrete-event simulation of HMIPv6 domains.

Links are modelled abstractly: each direction is a FIFO with a bandwidth,
a fixed latency and an unbounded queue. Data packets travel hop by hop so
shared links queue correctly; signalling messages (BU, BA, HA updates)
only pay the path latency.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx

from . import admission as adm
from .addressing import AckStatus, AddressPool, CareOfAddresses, MnClass, NodeAddress, make_binding_update
from .metrics import HandoffRecord, MetricsReport, RegistrationChain, record_handoff_latency
from .mobile_node import MapAdvert, MnState, MobileNode, on_data_activity, on_timer_expiry, update_map_table
from .scenario import FlowSpec, Scenario, build_graph, derive_legs


class EventKind(enum.Enum):
    POWER_ON = "power_on"
    MOVE = "move"
    ROUTER_ADVERT = "router_advert"
    SEND_BU = "send_bu"  # BU reaching its MAP
    DELIVER_BA = "deliver_ba"
    HA_UPDATE = "ha_update"
    CN_BINDING = "cn_binding"
    PACKET_ARRIVE = "packet_arrive"
    CBR_TICK = "cbr_tick"
    TIMER_EXPIRY = "timer_expiry"
    SESSION_OPEN = "session_open"
    SESSION_CLOSE = "session_close"


@dataclass
class Event:
    time: float
    seq: int
    kind: EventKind
    payload: dict = field(default_factory=dict)


class EventQueue:
    """Min-heap ordered by (time, insertion sequence)."""

    def __init__(self):
        self._heap: List[Tuple[float, int, Event]] = []
        self._seq = itertools.count()

    def schedule(self, time: float, kind: EventKind, **payload) -> Event:
        seq = next(self._seq)
        event = Event(time, seq, kind, payload)
        heapq.heappush(self._heap, (time, seq, event))
        return event

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)


class Link:
    """One direction of a link: FIFO, fixed latency, unbounded queue."""

    __slots__ = ("bandwidth", "latency", "free_at")

    def __init__(self, bandwidth: float, latency: float):
        self.bandwidth = bandwidth
        self.latency = latency
        self.free_at = 0.0

    def transmit(self, now: float, bits: int) -> float:
        """Arrival time at the far end of a packet offered at ``now``."""
        done = max(now, self.free_at) + bits / self.bandwidth
        self.free_at = done
        return done + self.latency


class Policy(enum.Enum):
    AC_HMIPV6 = "ac"
    BASELINE_HMIPV6 = "baseline"


@dataclass
class Packet:
    flow: str
    mn: str
    rcoa: NodeAddress
    bits: int
    sent_at: float
    hops: List[str] = field(default_factory=list)
    lcoa: Optional[NodeAddress] = None


@dataclass
class Attempt:
    """One BU in flight from an MN to a MAP."""

    id: int
    map_id: str
    mode: str  # "initial" | "handoff" | "intra" | "reselect"
    rcoa: NodeAddress
    chain: Optional[RegistrationChain] = None
    excluded: Set[str] = field(default_factory=set)
    handoff: Optional[HandoffRecord] = None


@dataclass
class FlowRuntime:
    spec: FlowSpec
    start: float
    stop: float
    active: bool = False
    generation: int = 0


@dataclass
class MnRuntime:
    node: MobileNode
    home_agent: str
    powered: bool = False
    ar: Optional[str] = None
    serving_map: Optional[str] = None
    cached_at: Set[str] = field(default_factory=set)
    cn_rcoa: Dict[str, NodeAddress] = field(default_factory=dict)
    attempt: Optional[Attempt] = None
    pending_handoff: Optional[HandoffRecord] = None
    last_rx: Optional[Tuple[float, str]] = None
    timer_armed: bool = False
    flows: List[FlowRuntime] = field(default_factory=list)


class Simulator:
    """One run of a scenario under a policy.

    ``policy`` may be a :class:`Policy` or an :class:`admission.AdmissionPolicy`
    (which also covers AC without replacement and the naive single-threshold
    rule). ``check_invariants`` re-verifies cache and packet accounting after
    every event and raises ``AssertionError`` on the first violation.
    """

    def __init__(self, scenario: Scenario, policy=Policy.AC_HMIPV6, seed: Optional[int] = None,
                 check_invariants: bool = False, trace_packets: bool = False):
        self.sc = scenario
        self.policy = _as_admission_policy(policy)
        self.seed = scenario.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.check_invariants = check_invariants
        self.trace_packets = trace_packets
        self.params = adm.SelectionParams(scenario.alpha, scenario.t_map, scenario.s_max)

        self.queue = EventQueue()
        self.now = 0.0
        self.log: List[Tuple] = []
        self.pool = AddressPool()
        self.attempt_ids = itertools.count(1)
        self.report = MetricsReport(sim_time=scenario.sim_time_s)
        self.live_packets = 0  # counted independently of the per-flow counters

        self.graph = build_graph(scenario)
        self.links: Dict[Tuple[str, str], Link] = {}
        for spec in scenario.links:
            self.links[(spec.a, spec.b)] = Link(spec.bandwidth_bps, spec.latency_s)
            self.links[(spec.b, spec.a)] = Link(spec.bandwidth_bps, spec.latency_s)
        self._paths: Dict[Tuple[str, str], List[str]] = {}

        self.maps: Dict[str, adm.MapState] = {
            m.id: adm.MapState(m.id, adm.AdmissionThresholds(m.n_thr, m.h_thr)) for m in scenario.maps
        }
        # bindings that left a MAP's cache but may still carry in-flight packets
        self.leftover: Dict[str, Dict[NodeAddress, Tuple[NodeAddress, NodeAddress]]] = {
            m: {} for m in self.maps
        }
        self.ar_specs = {a.id: a for a in scenario.ars}
        self.rcoa_map: Dict[NodeAddress, str] = {}
        self.lcoa_ar: Dict[NodeAddress, str] = {}
        self.ha_bindings: Dict[str, NodeAddress] = {}

        self.mns: Dict[str, MnRuntime] = {}
        self.by_home: Dict[NodeAddress, MnRuntime] = {}
        for spec in scenario.mns:
            node = MobileNode(spec.id, self.pool.allocate(), speed=spec.speed_mps)
            rt = MnRuntime(node, spec.home_agent)
            self.mns[spec.id] = rt
            self.by_home[node.home_address] = rt
        self.flows: Dict[str, FlowRuntime] = {}
        for spec in scenario.flows:
            stop = scenario.sim_time_s if spec.stop_s is None else min(spec.stop_s, scenario.sim_time_s)
            jitter = self.rng.uniform(0.0, scenario.jitter_s) if scenario.jitter_s else 0.0
            flow = FlowRuntime(spec, spec.start_s + jitter, stop)
            self.flows[spec.id] = flow
            self.mns[spec.mn].flows.append(flow)
            self.report.add_flow(spec.id, spec.packet_size)
        self.wireless: Dict[Tuple[str, str], Link] = {}

        self._schedule_scenario()

    # -- setup ------------------------------------------------------------
    def _schedule_scenario(self) -> None:
        sc = self.sc
        for spec in sc.mns:
            jitter = self.rng.uniform(0.0, sc.jitter_s) if sc.jitter_s else 0.0
            self.queue.schedule(spec.power_on_s + jitter, EventKind.POWER_ON, mn=spec.id, ar=spec.ar)
        for mn_id, legs in derive_legs(sc).items():
            for leg in legs:
                self.queue.schedule(leg.at_s, EventKind.MOVE, mn=mn_id, ar=leg.to_ar, speed=leg.speed_mps)
        t, k = 0.0, 0
        while t < sc.sim_time_s:
            for ar in sc.ars:
                self.queue.schedule(t, EventKind.ROUTER_ADVERT, ar=ar.id)
            k += 1
            t = k * sc.advert_period_s
        for flow in self.flows.values():
            if flow.start < flow.stop:
                self.queue.schedule(flow.start, EventKind.SESSION_OPEN, flow=flow.spec.id)
                self.queue.schedule(flow.stop, EventKind.SESSION_CLOSE, flow=flow.spec.id)

    # -- helpers ----------------------------------------------------------
    def path(self, a: str, b: str) -> List[str]:
        key = (a, b)
        if key not in self._paths:
            self._paths[key] = nx.shortest_path(self.graph, a, b, weight="latency")
        return self._paths[key]

    def wired_latency(self, a: str, b: str) -> float:
        p = self.path(a, b)
        return sum(self.links[(u, v)].latency for u, v in zip(p, p[1:]))

    def mn_latency(self, ar: str, target: str) -> float:
        """Signalling latency between an MN attached at ``ar`` and a wired node."""
        return self.sc.wireless_latency_s + self.wired_latency(ar, target)

    def _log(self, kind: str, *detail) -> None:
        self.log.append((round(self.now, 9), kind) + detail)

    def _adverts(self, ar_id: str) -> List[MapAdvert]:
        out = []
        for map_id in self.ar_specs[ar_id].reachable_maps:
            state = self.maps[map_id]
            hops = max(1, len(self.path(ar_id, map_id)) - 1)
            out.append(MapAdvert(map_id, state.tot_cn, state.thresholds.h_thr, hops))
        return out

    def _parent_map(self, ar_id: str) -> str:
        return self.ar_specs[ar_id].map

    def _sync_con_cn(self, rt: MnRuntime) -> None:
        count = len(rt.node.connected_cns)
        for map_id in rt.cached_at:
            self.maps[map_id].set_con_cn(rt.node.home_address, count)

    def _activity(self, rt: MnRuntime) -> None:
        on_data_activity(rt.node, self.now, self.sc.ready_timer_s)
        if not rt.timer_armed:
            rt.timer_armed = True
            self.queue.schedule(rt.node.ready_timer_deadline, EventKind.TIMER_EXPIRY, mn=rt.node.name)

    # -- main loop --------------------------------------------------------
    def run(self) -> MetricsReport:
        handlers = {
            EventKind.POWER_ON: self._on_power_on,
            EventKind.MOVE: self._on_move,
            EventKind.ROUTER_ADVERT: self._on_router_advert,
            EventKind.SEND_BU: self._on_bu,
            EventKind.DELIVER_BA: self._on_ba,
            EventKind.HA_UPDATE: self._on_ha_update,
            EventKind.CN_BINDING: self._on_cn_binding,
            EventKind.PACKET_ARRIVE: self._on_packet,
            EventKind.CBR_TICK: self._on_cbr_tick,
            EventKind.TIMER_EXPIRY: self._on_timer,
            EventKind.SESSION_OPEN: self._on_session_open,
            EventKind.SESSION_CLOSE: self._on_session_close,
        }
        end = self.sc.sim_time_s
        while self.queue and self.queue.peek_time() <= end:
            event = self.queue.pop()
            self.now = event.time
            handlers[event.kind](**event.payload)
            if self.check_invariants:
                self.verify_invariants()
        self.now = end
        for chain in self.report.chains:
            if chain.outcome is None:
                chain.steps.append("unresolved at end")
        return self.report

    # -- mobility and registration ---------------------------------------
    def _attach(self, rt: MnRuntime, ar_id: str) -> None:
        lcoa = self.pool.allocate()
        self.lcoa_ar[lcoa] = ar_id
        rt.ar = ar_id
        rt.node.coas = replace(rt.node.coas, lcoa=lcoa)
        update_map_table(rt.node, self._adverts(ar_id))  # solicited advert on attach

    def _on_power_on(self, mn: str, ar: str) -> None:
        rt = self.mns[mn]
        rt.powered = True
        self._attach(rt, ar)
        self._log("power_on", mn, ar)
        self._register(rt, self._parent_map(ar), "initial", reason="power_on")

    def _on_move(self, mn: str, ar: str, speed: Optional[float]) -> None:
        rt = self.mns[mn]
        if speed is not None:
            rt.node.speed = speed
        if not rt.powered:
            rt.ar = ar
            return
        if ar == rt.ar:
            self._log("move_noop", mn, ar)
            return
        old_ar = rt.ar
        self._attach(rt, ar)
        if rt.serving_map is None:
            self._log("move_unregistered", mn, old_ar, ar)
            self._register(rt, self._parent_map(ar), "initial", reason="reentry")
            return
        intra = rt.serving_map in self.ar_specs[ar].reachable_maps
        kind = "intra" if intra else "inter"
        target = rt.serving_map if intra else self._parent_map(ar)
        signaling = self.mn_latency(ar, target) * 2
        if not intra:
            signaling += self.mn_latency(ar, rt.home_agent)
        last_old = rt.last_rx[0] if rt.last_rx is not None and rt.last_rx[1] == old_ar else None
        record = HandoffRecord(mn, kind, self.now, signaling_delay=signaling, last_old_rx=last_old)
        self.report.handoffs.append(record)
        rt.pending_handoff = record
        self._log("handoff", mn, kind, old_ar, ar)
        if intra:
            self._register(rt, target, "intra", handoff=record)
        else:
            self._register(rt, target, "handoff", reason="handoff", handoff=record)

    def _register(self, rt: MnRuntime, map_id: str, mode: str, reason: Optional[str] = None,
                  chain: Optional[RegistrationChain] = None, excluded: Optional[Set[str]] = None,
                  handoff: Optional[HandoffRecord] = None) -> None:
        if mode == "intra":
            rcoa = rt.node.coas.rcoa
        else:
            rcoa = self.pool.allocate()
            self.rcoa_map[rcoa] = map_id
        bu = make_binding_update(replace(rt.node, coas=CareOfAddresses(rcoa, rt.node.coas.lcoa)), self.now)
        if chain is None and reason is not None:
            chain = self.report.open_chain(rt.node.name, MnClass.HANDOFF if bu.flag_a else MnClass.NEW,
                                           self.now, reason)
        if chain is not None:
            chain.steps.append(f"bu->{map_id}")
        if rt.attempt is not None and rt.attempt.chain is not None and rt.attempt.chain is not chain:
            rt.attempt.chain.steps.append("superseded")
        attempt = Attempt(next(self.attempt_ids), map_id, mode, rcoa, chain, set(excluded or ()), handoff)
        rt.attempt = attempt
        self.queue.schedule(self.now + self.mn_latency(rt.ar, map_id), EventKind.SEND_BU,
                            mn=rt.node.name, attempt=attempt.id, bu=bu, lcoa_ar=rt.ar)
        self._log("send_bu", rt.node.name, map_id, mode, bu.flag_a, bu.con_cn)

    def _on_bu(self, mn: str, attempt: int, bu, lcoa_ar: str) -> None:
        rt = self.mns[mn]
        if rt.attempt is None or rt.attempt.id != attempt:
            self._log("bu_superseded", mn)
            return
        att = rt.attempt
        policy = self.policy
        if att.mode == "reselect":
            policy = replace(policy, replacement=False)
        state = self.maps[att.map_id]
        result = adm.handle_registration(state, bu, policy)
        self.maps[att.map_id] = result.map_state
        self._log("registration", mn, att.map_id, result.mn_class.value, result.decision.outcome.value,
                  result.ack.status.value)
        if result.ack.accepted:
            rt.cached_at.add(att.map_id)
            self._sync_con_cn(rt)
        else:
            self.report.insufficient_acks += 1
        if result.eviction is not None:
            self._evict(att.map_id, result.eviction)
        back = self.now + self.mn_latency(lcoa_ar, att.map_id)
        self.queue.schedule(back, EventKind.DELIVER_BA, mn=mn, attempt=attempt, map_id=att.map_id,
                            status=result.ack.status, eviction=False)

    def _evict(self, map_id: str, notice: adm.EvictionNotice) -> None:
        self.report.insufficient_acks += 1
        victim = self.by_home[notice.entry.mn_home_address]
        victim.cached_at.discard(map_id)
        self.leftover[map_id][notice.entry.mn_home_address] = (notice.entry.rcoa, notice.entry.lcoa)
        self._log("evict", victim.node.name, map_id)
        ar = self.lcoa_ar.get(notice.entry.lcoa, victim.ar)
        self.queue.schedule(self.now + self.mn_latency(ar, map_id), EventKind.DELIVER_BA,
                            mn=victim.node.name, attempt=None, map_id=map_id,
                            status=AckStatus.INSUFFICIENT_RESOURCES, eviction=True)

    def _on_ba(self, mn: str, attempt: Optional[int], map_id: str, status: AckStatus, eviction: bool) -> None:
        rt = self.mns[mn]
        if eviction:
            self._on_evicted(rt, map_id)
            return
        if rt.attempt is None or rt.attempt.id != attempt:
            current = rt.attempt.map_id if rt.attempt is not None else None
            if status is AckStatus.ACCEPTED and map_id not in (rt.serving_map, current):
                self._deregister(rt, map_id)
            return
        att = rt.attempt
        rt.attempt = None
        if status is AckStatus.ACCEPTED:
            if att.chain is not None:
                att.chain.outcome = "accepted"
            self._log("ba_accepted", mn, map_id, att.mode)
            if att.mode == "intra":
                if att.handoff is not None:
                    att.handoff.end = self.now
                return
            old_map = rt.serving_map
            rt.serving_map = map_id
            rt.node.coas = replace(rt.node.coas, rcoa=att.rcoa)
            self.queue.schedule(self.now + self.mn_latency(rt.ar, rt.home_agent), EventKind.HA_UPDATE,
                                mn=mn, rcoa=att.rcoa, old_map=old_map, handoff=att.handoff)
            return
        self._log("ba_rejected", mn, map_id, att.mode)
        if att.mode == "reselect":
            att.excluded.add(map_id)
            self._reselect(rt, att.chain, att.excluded)
            return
        if att.mode == "intra":
            # the MAP had dropped us meanwhile and would not take us back
            self._on_evicted(rt, map_id)
            return
        if att.chain is not None:
            att.chain.outcome = "failed"
        if att.mode == "handoff":
            self._drop(rt)

    def _on_evicted(self, rt: MnRuntime, map_id: str) -> None:
        self._log("evicted", rt.node.name, map_id)
        if rt.serving_map != map_id or rt.attempt is not None:
            # already moving elsewhere; that registration decides its fate
            return
        mn_class = MnClass.HANDOFF if rt.node.is_ready(self.now) else MnClass.NEW
        chain = self.report.open_chain(rt.node.name, mn_class, self.now, "replacement")
        self._reselect(rt, chain, {map_id})

    def _reselect(self, rt: MnRuntime, chain: Optional[RegistrationChain], excluded: Set[str]) -> None:
        choice = adm.select_map(rt.node, self.params, excluded)
        if choice is None:
            self._log("reselect_failed", rt.node.name)
            if chain is not None:
                chain.steps.append("no MAP qualifies")
                chain.outcome = "failed"
            self._drop(rt)
            return
        self._register(rt, choice, "reselect", chain=chain, excluded=excluded)

    def _on_ha_update(self, mn: str, rcoa: NodeAddress, old_map: Optional[str],
                      handoff: Optional[HandoffRecord]) -> None:
        rt = self.mns[mn]
        if rt.node.coas.rcoa != rcoa:
            return
        self.ha_bindings[mn] = rcoa
        if old_map is not None and old_map != rt.serving_map:
            self._deregister(rt, old_map)
        cns = sorted({f.spec.cn for f in rt.flows})
        last = self.now
        for cn in cns:
            at = self.now + self.wired_latency(rt.home_agent, cn)
            last = max(last, at)
            self.queue.schedule(at, EventKind.CN_BINDING, mn=mn, cn=cn, rcoa=rcoa)
        if handoff is not None:
            handoff.end = last
        self._log("ha_update", mn, rt.serving_map)

    def _on_cn_binding(self, mn: str, cn: str, rcoa: NodeAddress) -> None:
        rt = self.mns[mn]
        if rt.node.coas.rcoa != rcoa or rt.serving_map is None:
            return
        rt.cn_rcoa[cn] = rcoa
        for flow in rt.flows:
            if flow.spec.cn == cn and not flow.active and flow.start <= self.now < flow.stop:
                self._open_flow(flow)

    def _deregister(self, rt: MnRuntime, map_id: str) -> None:
        state = self.maps[map_id]
        entry = state.lookup(rt.node.home_address)
        if entry is not None:
            state.remove(rt.node.home_address)
            self.leftover[map_id][rt.node.home_address] = (entry.rcoa, entry.lcoa)
        rt.cached_at.discard(map_id)

    def _drop(self, rt: MnRuntime) -> None:
        """Lose service entirely: sessions close, bindings go."""
        self._log("drop", rt.node.name)
        for flow in rt.flows:
            if flow.active:
                self._close_flow(flow)
        for map_id in list(rt.cached_at):
            self._deregister(rt, map_id)
        rt.serving_map = None
        rt.cn_rcoa.clear()
        # with its sessions gone the node comes back as a new arrival
        rt.node.state = MnState.IDLE
        rt.node.ready_timer_deadline = None
        rt.node.coas = replace(rt.node.coas, rcoa=None)
        if rt.pending_handoff is not None and rt.pending_handoff.end is None:
            rt.pending_handoff = None

    def _on_router_advert(self, ar: str) -> None:
        adverts = self._adverts(ar)
        self._log("advert", ar, tuple((a.map_id, a.tot_cn) for a in adverts))
        for rt in self.mns.values():
            if rt.powered and rt.ar == ar:
                update_map_table(rt.node, adverts)

    def _on_timer(self, mn: str) -> None:
        rt = self.mns[mn]
        rt.timer_armed = False
        on_timer_expiry(rt.node, self.now)
        if rt.node.ready_timer_deadline is not None:
            rt.timer_armed = True
            self.queue.schedule(rt.node.ready_timer_deadline, EventKind.TIMER_EXPIRY, mn=mn)
        else:
            self._log("idle", mn)

    # -- sessions and traffic --------------------------------------------
    def _on_session_open(self, flow: str) -> None:
        fr = self.flows[flow]
        rt = self.mns[fr.spec.mn]
        if rt.serving_map is not None and fr.spec.cn in rt.cn_rcoa and not fr.active:
            self._open_flow(fr)

    def _on_session_close(self, flow: str) -> None:
        fr = self.flows[flow]
        if fr.active:
            self._close_flow(fr)

    def _open_flow(self, fr: FlowRuntime) -> None:
        rt = self.mns[fr.spec.mn]
        fr.active = True
        fr.generation += 1
        rt.node.connected_cns.add(fr.spec.cn)
        self._activity(rt)
        self._sync_con_cn(rt)
        self._log("session_open", fr.spec.id)
        self.queue.schedule(self.now, EventKind.CBR_TICK, flow=fr.spec.id, gen=fr.generation)

    def _close_flow(self, fr: FlowRuntime) -> None:
        rt = self.mns[fr.spec.mn]
        fr.active = False
        if not any(f.active and f.spec.cn == fr.spec.cn for f in rt.flows):
            rt.node.connected_cns.discard(fr.spec.cn)
        self._sync_con_cn(rt)
        self._log("session_close", fr.spec.id)

    def _on_cbr_tick(self, flow: str, gen: int) -> None:
        fr = self.flows[flow]
        if not fr.active or fr.generation != gen or self.now >= fr.stop:
            return
        spec = fr.spec
        rt = self.mns[spec.mn]
        rcoa = rt.cn_rcoa.get(spec.cn)
        self.report.packet_sent(flow)
        self.live_packets += 1
        packet = Packet(flow, spec.mn, rcoa, spec.packet_size * 8, self.now)
        map_id = self.rcoa_map.get(rcoa)
        if map_id is None:
            self._lose(packet, "no route")
        else:
            packet.hops = self.path(spec.cn, map_id)[1:]
            self._forward(packet, spec.cn)
        self.queue.schedule(self.now + spec.interval, EventKind.CBR_TICK, flow=flow, gen=gen)

    def _forward(self, packet: Packet, at: str) -> None:
        nxt = packet.hops.pop(0)
        arrival = self.links[(at, nxt)].transmit(self.now, packet.bits)
        self.queue.schedule(arrival, EventKind.PACKET_ARRIVE, packet=packet, node=nxt)

    def _lose(self, packet: Packet, why: str) -> None:
        self.report.packet_lost(packet.flow)
        self.live_packets -= 1
        if self.trace_packets:
            self._log("packet_lost", packet.flow, why)

    def _on_packet(self, packet: Packet, node: str) -> None:
        if packet.hops:
            self._forward(packet, node)
            return
        if node in self.maps:
            self._tunnel(packet, node)
        elif node in self.ar_specs:
            self._last_hop(packet, node)
        else:  # reached the MN
            self._deliver(packet, node)

    def _tunnel(self, packet: Packet, map_id: str) -> None:
        """MAP forwarding: RCoA -> current LCoA per the binding cache."""
        rt = self.mns[packet.mn]
        home = rt.node.home_address
        entry = self.maps[map_id].lookup(home)
        if entry is not None and entry.rcoa == packet.rcoa:
            lcoa = entry.lcoa
        else:
            left = self.leftover[map_id].get(home)
            if left is None or left[0] != packet.rcoa:
                self._lose(packet, "no binding")
                return
            lcoa = left[1]
        ar = self.lcoa_ar[lcoa]
        packet.lcoa = lcoa
        packet.hops = self.path(map_id, ar)[1:]
        if not packet.hops:
            self._last_hop(packet, ar)
        else:
            self._forward(packet, map_id)

    def _last_hop(self, packet: Packet, ar: str) -> None:
        rt = self.mns[packet.mn]
        if rt.ar != ar or rt.node.coas.lcoa != packet.lcoa:
            self._lose(packet, "stale binding")
            return
        key = (ar, packet.mn)
        link = self.wireless.get(key)
        if link is None:
            link = self.wireless[key] = Link(self.sc.wireless_bandwidth_bps, self.sc.wireless_latency_s)
        arrival = link.transmit(self.now, packet.bits)
        self.queue.schedule(arrival, EventKind.PACKET_ARRIVE, packet=packet, node=packet.mn)

    def _deliver(self, packet: Packet, mn: str) -> None:
        rt = self.mns[mn]
        via = self.lcoa_ar[packet.lcoa]
        if rt.ar != via or rt.node.coas.lcoa != packet.lcoa:
            self._lose(packet, "left the link")
            return
        self.report.packet_delivered(packet.flow, self.now)
        self.live_packets -= 1
        self._activity(rt)
        pending = rt.pending_handoff
        if pending is not None:
            if pending.last_old_rx is not None:
                pending.latency = record_handoff_latency(pending.last_old_rx, self.now)
            rt.pending_handoff = None
        rt.last_rx = (self.now, via)

    # -- checks -----------------------------------------------------------
    def verify_invariants(self) -> None:
        for map_id, state in self.maps.items():
            assert state.tot_cn == state.recompute_tot_cn(), f"tot_cn drift at {map_id}"
            for home, entry in state.cache.items():
                assert home == entry.mn_home_address
                rt = self.by_home[home]
                assert entry.con_cn == len(rt.node.connected_cns), f"stale con_cn for {rt.node.name}"
                assert map_id in rt.cached_at
        for rt in self.mns.values():
            for map_id in rt.cached_at:
                assert self.maps[map_id].lookup(rt.node.home_address) is not None
        for counters in self.report.per_flow.values():
            assert counters.in_flight >= 0, f"negative in-flight on {counters.flow_id}"
        report = self.report
        assert report.sent == report.delivered + report.lost + self.live_packets, "packet conservation"
        if self.policy.kind is adm.PolicyKind.BASELINE:
            assert self.report.insufficient_acks == 0


def _as_admission_policy(policy) -> adm.AdmissionPolicy:
    if isinstance(policy, adm.AdmissionPolicy):
        return policy
    if isinstance(policy, Policy):
        policy = policy.value
    return adm.parse_policy(policy)


def run(scenario: Scenario, policy=Policy.AC_HMIPV6, seed: Optional[int] = None, **kwargs) -> MetricsReport:
    """Simulate ``scenario`` once; identical arguments give identical reports."""
    return Simulator(scenario, policy, seed, **kwargs).run()
