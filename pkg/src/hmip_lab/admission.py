"""CN-count admission control, resident replacement and MAP selection.

Everything in this module is a pure policy function: MAP state goes in,
a fresh MAP state (plus the acknowledgements to send) comes out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Collection, Dict, Optional

from .addressing import (
    AckStatus,
    BindingAck,
    BindingCacheEntry,
    BindingUpdate,
    MnClass,
    NodeAddress,
    classify_bu,
)


@dataclass(frozen=True)
class AdmissionThresholds:
    n_thr: int
    h_thr: int

    def __post_init__(self):
        if self.n_thr < 0:
            raise ValueError("n_thr must be non-negative")
        if self.n_thr > self.h_thr:
            raise ValueError("n_thr exceeds h_thr")


@dataclass
class MapState:
    """A MAP's binding cache keyed by home address, with the served-CN total."""

    map_id: str
    thresholds: AdmissionThresholds
    cache: Dict[NodeAddress, BindingCacheEntry] = field(default_factory=dict)
    tot_cn: int = 0

    def __post_init__(self):
        self.tot_cn = self.recompute_tot_cn()

    def recompute_tot_cn(self) -> int:
        return sum(entry.con_cn for entry in self.cache.values())

    def copy(self) -> "MapState":
        return MapState(self.map_id, self.thresholds, dict(self.cache))

    def store(self, entry: BindingCacheEntry) -> None:
        old = self.cache.get(entry.mn_home_address)
        if old is not None:
            self.tot_cn -= old.con_cn
        self.cache[entry.mn_home_address] = entry
        self.tot_cn += entry.con_cn

    def remove(self, home_address: NodeAddress) -> Optional[BindingCacheEntry]:
        entry = self.cache.pop(home_address, None)
        if entry is not None:
            self.tot_cn -= entry.con_cn
        return entry

    def set_con_cn(self, home_address: NodeAddress, con_cn: int) -> None:
        entry = self.cache.get(home_address)
        if entry is None:
            return
        if con_cn < 0:
            raise ValueError("con_cn must be non-negative")
        self.store(replace(entry, con_cn=con_cn))

    def lookup(self, home_address: NodeAddress) -> Optional[BindingCacheEntry]:
        return self.cache.get(home_address)


class Outcome(enum.Enum):
    ADMIT = "admit"
    REJECT = "reject"
    REPLACE_THEN_ADMIT = "replace_then_admit"


@dataclass(frozen=True)
class AdmissionDecision:
    outcome: Outcome
    victim: Optional[NodeAddress] = None

    def __post_init__(self):
        if (self.outcome is Outcome.REPLACE_THEN_ADMIT) != (self.victim is not None):
            raise ValueError("a victim is given exactly when replacing")

    @property
    def admitted(self) -> bool:
        return self.outcome is not Outcome.REJECT


ADMIT = AdmissionDecision(Outcome.ADMIT)
REJECT = AdmissionDecision(Outcome.REJECT)


class PolicyKind(enum.Enum):
    AC = "ac"
    BASELINE = "baseline"
    NAIVE = "naive"


@dataclass(frozen=True)
class AdmissionPolicy:
    """Which registration rule a MAP applies.

    ``AC`` is the two-threshold CN-count scheme, optionally with replacement.
    ``BASELINE`` is plain HMIPv6 (every BU accepted). ``NAIVE`` rejects every
    class once ``tot_cn`` passes ``n_thr`` and never replaces.
    """

    kind: PolicyKind = PolicyKind.AC
    replacement: bool = True

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.AC and not self.replacement:
            return "ac-norepl"
        return self.kind.value


AC_POLICY = AdmissionPolicy()
BASELINE_POLICY = AdmissionPolicy(PolicyKind.BASELINE, replacement=False)

POLICY_LABELS = {
    "ac": AC_POLICY,
    "ac-norepl": AdmissionPolicy(PolicyKind.AC, replacement=False),
    "baseline": BASELINE_POLICY,
    "naive": AdmissionPolicy(PolicyKind.NAIVE, replacement=False),
}


def parse_policy(label: str) -> AdmissionPolicy:
    try:
        return POLICY_LABELS[label]
    except KeyError:
        raise ValueError(f"unknown policy {label!r}; choose from {', '.join(POLICY_LABELS)}") from None


def admit(map_state: MapState, mn_class: MnClass, incoming_con_cn: int = 0) -> AdmissionDecision:
    """Two-threshold decision on the MAP's current load.

    ``incoming_con_cn`` is deliberately not added to ``tot_cn``.
    """
    tot_cn = map_state.tot_cn
    thr = map_state.thresholds
    if tot_cn <= thr.n_thr:
        return ADMIT
    if mn_class is MnClass.HANDOFF and tot_cn <= thr.h_thr:
        return ADMIT
    return REJECT


def pick_replacement_victim(map_state: MapState, incoming_con_cn: int) -> Optional[NodeAddress]:
    """Resident to evict for an incoming MN, or None.

    Candidates serve at least as many CNs as the incoming MN; the largest
    wins and ties go to the most recent registration.
    """
    best = None
    for entry in map_state.cache.values():
        if entry.con_cn < incoming_con_cn:
            continue
        if best is None or (entry.con_cn, entry.registered_at) > (best.con_cn, best.registered_at):
            best = entry
    return None if best is None else best.mn_home_address


@dataclass(frozen=True)
class EvictionNotice:
    entry: BindingCacheEntry
    ack: BindingAck


@dataclass(frozen=True)
class RegistrationResult:
    map_state: MapState
    ack: BindingAck
    decision: AdmissionDecision
    mn_class: MnClass
    eviction: Optional[EvictionNotice] = None
    refreshed: bool = False


def _decide(map_state: MapState, mn_class: MnClass, con_cn: int, policy: AdmissionPolicy) -> AdmissionDecision:
    if policy.kind is PolicyKind.BASELINE:
        return ADMIT
    if policy.kind is PolicyKind.NAIVE:
        return ADMIT if map_state.tot_cn <= map_state.thresholds.n_thr else REJECT
    decision = admit(map_state, mn_class, con_cn)
    if decision.admitted or not policy.replacement:
        return decision
    victim = pick_replacement_victim(map_state, con_cn)
    if victim is None:
        return REJECT
    return AdmissionDecision(Outcome.REPLACE_THEN_ADMIT, victim)


def handle_registration(
    map_state: MapState, bu: BindingUpdate, policy: AdmissionPolicy = AC_POLICY
) -> RegistrationResult:
    """Process one BU at a MAP; the input state is left untouched.

    A BU from an MN already in the cache only refreshes its binding.
    """
    mn_class = classify_bu(bu)
    new_state = map_state.copy()
    entry = BindingCacheEntry(
        mn_home_address=bu.mn_home_address,
        rcoa=bu.rcoa,
        lcoa=bu.lcoa,
        con_cn=bu.con_cn,
        registered_at=bu.timestamp,
    )
    existing = new_state.lookup(bu.mn_home_address)
    if existing is not None:
        new_state.store(replace(entry, registered_at=existing.registered_at))
        return RegistrationResult(
            new_state, BindingAck(bu.mn_home_address, AckStatus.ACCEPTED), ADMIT, mn_class, refreshed=True
        )

    decision = _decide(new_state, mn_class, bu.con_cn, policy)
    if decision.outcome is Outcome.REJECT:
        ack = BindingAck(bu.mn_home_address, AckStatus.INSUFFICIENT_RESOURCES)
        return RegistrationResult(new_state, ack, decision, mn_class)

    eviction = None
    if decision.outcome is Outcome.REPLACE_THEN_ADMIT:
        victim = new_state.remove(decision.victim)
        eviction = EvictionNotice(victim, BindingAck(victim.mn_home_address, AckStatus.INSUFFICIENT_RESOURCES))
    new_state.store(entry)
    return RegistrationResult(
        new_state, BindingAck(bu.mn_home_address, AckStatus.ACCEPTED), decision, mn_class, eviction
    )


@dataclass(frozen=True)
class SelectionParams:
    alpha: float = 1.0
    t_map: float = 1.5
    s_max: float = 20.0

    def __post_init__(self):
        for name in ("alpha", "t_map", "s_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def load_ratio(con_cn: int, tot_cn: int) -> float:
    """Y = con_cn / tot_cn, with the empty-MAP and no-session cases pinned."""
    if con_cn == 0:
        return 0.0
    if tot_cn == 0:
        return 1.0
    return min(1.0, con_cn / tot_cn)


def combined_measure(con_cn: int, tot_cn: int, speed: float, params: SelectionParams) -> float:
    """W = alpha * (Y + speed / s_max)."""
    return params.alpha * (load_ratio(con_cn, tot_cn) + speed / params.s_max)


def select_map(mn, params: SelectionParams, excluded: Collection[str] = ()) -> Optional[str]:
    """First MAP in the node's table whose W falls below ``t_map``."""
    con_cn = len(mn.connected_cns)
    for advert in mn.map_table:
        if advert.map_id in excluded:
            continue
        if combined_measure(con_cn, advert.tot_cn, mn.speed, params) < params.t_map:
            return advert.map_id
    return None
