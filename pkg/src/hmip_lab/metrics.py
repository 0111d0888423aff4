"""Run counters and the evaluation quantities derived from them."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .addressing import MnClass

CSV_COLUMNS = (
    "policy",
    "seed",
    "rate_bps",
    "speed_mps",
    "throughput_pkts",
    "handoff_delay_mean_s",
    "packet_loss",
    "blocking_prob",
    "dropping_prob",
)

HANDOFF_COLUMNS = ("policy", "seed", "mn", "kind", "start_s", "end_s", "latency_s", "signaling_delay_s")

NA = "n/a"


@dataclass
class FlowCounters:
    flow_id: str
    packet_size: int
    sent: int = 0
    delivered: int = 0
    lost: int = 0

    @property
    def in_flight(self) -> int:
        return self.sent - self.delivered - self.lost


@dataclass
class HandoffRecord:
    mn: str
    kind: str  # "intra" | "inter"
    start: float
    end: Optional[float] = None
    latency: Optional[float] = None
    signaling_delay: float = 0.0
    last_old_rx: Optional[float] = None


@dataclass
class RegistrationChain:
    """One registration attempt followed to its terminal outcome."""

    mn: str
    mn_class: str
    started_at: float
    reason: str  # "power_on" | "handoff" | "reentry" | "replacement"
    outcome: Optional[str] = None  # "accepted" | "failed"
    steps: List[str] = field(default_factory=list)


def record_handoff_latency(last_pkt_from_old: float, first_pkt_from_new: float) -> float:
    if first_pkt_from_new < last_pkt_from_old:
        raise ValueError("first packet via the new router precedes the last via the old one")
    return first_pkt_from_new - last_pkt_from_old


@dataclass
class MetricsReport:
    sim_time: float
    per_flow: Dict[str, FlowCounters] = field(default_factory=dict)
    handoffs: List[HandoffRecord] = field(default_factory=list)
    chains: List[RegistrationChain] = field(default_factory=list)
    delivery_times: List[float] = field(default_factory=list)
    delivery_bits: List[int] = field(default_factory=list)
    insufficient_acks: int = 0

    # -- counters ---------------------------------------------------------
    def add_flow(self, flow_id: str, packet_size: int) -> None:
        self.per_flow[flow_id] = FlowCounters(flow_id, packet_size)

    def packet_sent(self, flow_id: str) -> None:
        self.per_flow[flow_id].sent += 1

    def packet_lost(self, flow_id: str) -> None:
        self.per_flow[flow_id].lost += 1

    def packet_delivered(self, flow_id: str, now: float) -> None:
        counters = self.per_flow[flow_id]
        counters.delivered += 1
        self.delivery_times.append(now)
        self.delivery_bits.append(counters.packet_size * 8)

    def open_chain(self, mn: str, mn_class: MnClass, now: float, reason: str) -> RegistrationChain:
        chain = RegistrationChain(mn, mn_class.value, now, reason)
        self.chains.append(chain)
        return chain

    # -- aggregates -------------------------------------------------------
    @property
    def sent(self) -> int:
        return sum(f.sent for f in self.per_flow.values())

    @property
    def delivered(self) -> int:
        return sum(f.delivered for f in self.per_flow.values())

    @property
    def lost(self) -> int:
        return sum(f.lost for f in self.per_flow.values())

    @property
    def in_flight(self) -> int:
        return sum(f.in_flight for f in self.per_flow.values())

    @property
    def blocking(self) -> Tuple[int, int]:
        return self._chain_counts(MnClass.NEW)

    @property
    def dropping(self) -> Tuple[int, int]:
        return self._chain_counts(MnClass.HANDOFF)

    def _chain_counts(self, mn_class: MnClass) -> Tuple[int, int]:
        closed = [c for c in self.chains if c.mn_class == mn_class.value and c.outcome is not None]
        return sum(c.outcome == "failed" for c in closed), len(closed)

    def latency_samples(self) -> List[float]:
        return [h.latency for h in self.handoffs if h.latency is not None]

    def handoff_delay_mean(self) -> Optional[float]:
        samples = self.latency_samples()
        return float(np.mean(samples)) if samples else None

    def packet_loss(self) -> Optional[float]:
        sent = self.sent
        return self.lost / sent if sent else None

    def throughput_series(self, bucket: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        edges = np.arange(0.0, self.sim_time + bucket, bucket)
        counts, _ = np.histogram(np.asarray(self.delivery_times, dtype=float), bins=edges)
        return edges[:-1], counts

    def summary(self) -> dict:
        blocking, dropping = probabilities(self)
        return {
            "throughput_pkts": self.delivered,
            "handoff_delay_mean_s": self.handoff_delay_mean(),
            "packet_loss": self.packet_loss(),
            "blocking_prob": blocking,
            "dropping_prob": dropping,
        }

    def to_json(self) -> str:
        payload = {
            "sim_time": self.sim_time,
            "per_flow": {k: asdict(v) for k, v in sorted(self.per_flow.items())},
            "handoffs": [asdict(h) for h in self.handoffs],
            "chains": [asdict(c) for c in self.chains],
            "insufficient_acks": self.insufficient_acks,
            "summary": self.summary(),
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def throughput(report: MetricsReport, window: Optional[Tuple[float, float]] = None) -> Tuple[float, float]:
    """Delivered packets/s and bits/s inside ``window`` (default: whole run)."""
    lo, hi = window if window is not None else (0.0, report.sim_time)
    if not 0.0 <= lo <= hi <= report.sim_time:
        raise ValueError("window must lie within [0, sim_time]")
    if hi == lo:
        return 0.0, 0.0
    times = np.asarray(report.delivery_times, dtype=float)
    bits = np.asarray(report.delivery_bits, dtype=float)
    mask = (times >= lo) & (times <= hi)
    duration = hi - lo
    return float(mask.sum()) / duration, float(bits[mask].sum()) / duration


def probabilities(report: MetricsReport) -> Tuple[Optional[float], Optional[float]]:
    """(blocking, dropping); None where there were no attempts of that class."""
    out = []
    for failed, attempts in (report.blocking, report.dropping):
        out.append(failed / attempts if attempts else None)
    return out[0], out[1]


def format_value(value) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        return repr(round(value, 9))
    return str(value)


def csv_row(report: MetricsReport, policy: str, seed: int, rate_bps: float, speed_mps: float) -> List[str]:
    s = report.summary()
    return [
        policy,
        str(seed),
        format_value(float(rate_bps)),
        format_value(float(speed_mps)),
        str(s["throughput_pkts"]),
        format_value(s["handoff_delay_mean_s"]),
        format_value(s["packet_loss"]),
        format_value(s["blocking_prob"]),
        format_value(s["dropping_prob"]),
    ]


def handoff_rows(report: MetricsReport, policy: str, seed: int) -> List[List[str]]:
    return [
        [policy, str(seed), h.mn, h.kind, format_value(h.start), format_value(h.end),
         format_value(h.latency), format_value(h.signaling_delay)]
        for h in report.handoffs
    ]


def write_csv(rows: Sequence[Sequence[str]], header: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
