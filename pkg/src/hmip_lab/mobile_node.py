"""Mobile node ready/idle state machine and its table of advertised MAPs.

The functions here mutate the node in place and hand it back, so the event
loop can chain them. Replaying the same sequence of activity/expiry calls
on a fresh node always reproduces the same state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .addressing import CareOfAddresses, NodeAddress

DEFAULT_READY_DURATION = 5.0


class MnState(enum.Enum):
    IDLE = "idle"
    READY = "ready"


@dataclass(frozen=True)
class MapAdvert:
    map_id: str
    tot_cn: int
    capacity_h_thr: int
    distance_hops: int = 1

    def __post_init__(self):
        if self.tot_cn < 0:
            raise ValueError("advertised tot_cn must be non-negative")
        if self.distance_hops < 1:
            raise ValueError("distance_hops must be at least 1")


@dataclass
class MobileNode:
    name: str
    home_address: NodeAddress
    coas: CareOfAddresses = field(default_factory=CareOfAddresses)
    state: MnState = MnState.IDLE
    ready_timer_deadline: Optional[float] = None
    connected_cns: set = field(default_factory=set)
    speed: float = 0.0
    map_table: list = field(default_factory=list)

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")

    def is_ready(self, now: float) -> bool:
        return (
            self.state is MnState.READY
            and self.ready_timer_deadline is not None
            and self.ready_timer_deadline > now
        )


def on_data_activity(mn: MobileNode, now: float, ready_duration: float = DEFAULT_READY_DURATION) -> MobileNode:
    """Any sent or received data (re)starts the ready timer."""
    if ready_duration <= 0:
        raise ValueError("ready_duration must be positive")
    deadline = now + ready_duration
    if mn.ready_timer_deadline is None or deadline > mn.ready_timer_deadline:
        mn.ready_timer_deadline = deadline
    mn.state = MnState.READY
    return mn


def on_timer_expiry(mn: MobileNode, now: float) -> MobileNode:
    """Return to idle once the latest deadline has passed.

    Expiry events scheduled for a deadline that has since been pushed back
    are stale and leave the node untouched.
    """
    if mn.ready_timer_deadline is None or mn.ready_timer_deadline > now:
        return mn
    mn.state = MnState.IDLE
    mn.ready_timer_deadline = None
    return mn


def update_map_table(mn: MobileNode, adverts: Iterable[MapAdvert]) -> MobileNode:
    # dict keeps first-seen position; later adverts for the same MAP overwrite
    table = {}
    for advert in adverts:
        table[advert.map_id] = advert
    mn.map_table = list(table.values())
    return mn
