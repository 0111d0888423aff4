"""HMIPv6 addressing vocabulary: care-of addresses, binding caches, BU/BA."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import NewType, Optional

NodeAddress = NewType("NodeAddress", int)


class AddressPool:
    """Hands out run-unique opaque addresses."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def allocate(self) -> NodeAddress:
        return NodeAddress(next(self._counter))


@dataclass(frozen=True)
class CareOfAddresses:
    rcoa: Optional[NodeAddress] = None
    lcoa: Optional[NodeAddress] = None


class MnClass(enum.Enum):
    NEW = "new"
    HANDOFF = "handoff"


class AckStatus(enum.Enum):
    ACCEPTED = "accepted"
    INSUFFICIENT_RESOURCES = "insufficient_resources"


@dataclass(frozen=True)
class BindingUpdate:
    mn_home_address: NodeAddress
    lcoa: NodeAddress
    flag_a: bool
    con_cn: int
    timestamp: float
    rcoa: Optional[NodeAddress] = None

    def __post_init__(self):
        if self.con_cn < 0:
            raise ValueError("con_cn must be non-negative")
        if not self.flag_a and self.con_cn != 0:
            raise ValueError("a BU without flag A cannot carry CN sessions")


@dataclass(frozen=True)
class BindingAck:
    mn_home_address: NodeAddress
    status: AckStatus

    @property
    def accepted(self) -> bool:
        return self.status is AckStatus.ACCEPTED


@dataclass(frozen=True)
class BindingCacheEntry:
    mn_home_address: NodeAddress
    rcoa: Optional[NodeAddress]
    lcoa: NodeAddress
    con_cn: int
    registered_at: float


def make_binding_update(mn, now: float) -> BindingUpdate:
    """Build the BU a mobile node sends at time ``now``.

    Flag A mirrors the node's ready state; an idle node reports zero CNs.
    """
    if mn.coas.lcoa is None:
        raise ValueError(f"mobile node {mn.name} has no LCoA")
    ready = mn.is_ready(now)
    return BindingUpdate(
        mn_home_address=mn.home_address,
        lcoa=mn.coas.lcoa,
        flag_a=ready,
        con_cn=len(mn.connected_cns) if ready else 0,
        timestamp=now,
        rcoa=mn.coas.rcoa,
    )


def classify_bu(bu: BindingUpdate) -> MnClass:
    return MnClass.HANDOFF if bu.flag_a else MnClass.NEW
