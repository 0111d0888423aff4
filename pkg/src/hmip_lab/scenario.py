"""Line-oriented scenario files: parsing, validation and serialization.

A file is a block of ``key = value`` globals followed by section blocks::

    sim_time_s = 50

    [map]
    id = MAP1
    n_thr = 5
    h_thr = 10

Sections: ``[node]`` (cn/ha/router), ``[map]``, ``[ar]``, ``[link]``,
``[mn]``, ``[flow]``, ``[leg]`` and ``[route]``. ``#`` starts a comment.
"""

from __future__ import annotations

import math
import os
from dataclasses import MISSING, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import networkx as nx


class ScenarioError(ValueError):
    """Raised with every (line, message) diagnostic found in a scenario."""

    def __init__(self, diagnostics: List[Tuple[int, str]]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(f"line {line}: {msg}" for line, msg in self.diagnostics))


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: str = "router"  # cn | ha | router


@dataclass(frozen=True)
class MapSpec:
    id: str
    n_thr: int
    h_thr: int


@dataclass(frozen=True)
class ArSpec:
    id: str
    map: str
    x: float = 0.0
    y: float = 0.0
    range: float = 75.0
    also_maps: Tuple[str, ...] = ()

    @property
    def reachable_maps(self) -> Tuple[str, ...]:
        return (self.map,) + tuple(m for m in self.also_maps if m != self.map)


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    bandwidth_bps: float = 2e6
    latency_s: float = 0.01


@dataclass(frozen=True)
class MnSpec:
    id: str
    ar: str
    home_agent: str
    power_on_s: float = 0.0
    speed_mps: float = 0.0


@dataclass(frozen=True)
class FlowSpec:
    id: str
    cn: str
    mn: str
    rate_bps: float
    packet_size: int = 512
    start_s: float = 0.0
    stop_s: Optional[float] = None

    @property
    def interval(self) -> float:
        return self.packet_size * 8 / self.rate_bps


@dataclass(frozen=True)
class LegSpec:
    mn: str
    from_ar: str
    to_ar: str
    at_s: float
    speed_mps: Optional[float] = None


@dataclass(frozen=True)
class RouteSpec:
    mn: str
    path: Tuple[str, ...]
    start_s: float = 0.0
    cycle: bool = False


@dataclass(frozen=True)
class Scenario:
    sim_time_s: float = 50.0
    ready_timer_s: float = 5.0
    advert_period_s: float = 1.0
    alpha: float = 1.0
    t_map: float = 1.5
    s_max: float = 20.0
    seed: int = 1
    jitter_s: float = 0.0
    wireless_bandwidth_bps: float = 2e6
    wireless_latency_s: float = 0.01
    nodes: Tuple[NodeSpec, ...] = ()
    maps: Tuple[MapSpec, ...] = ()
    ars: Tuple[ArSpec, ...] = ()
    links: Tuple[LinkSpec, ...] = ()
    mns: Tuple[MnSpec, ...] = ()
    flows: Tuple[FlowSpec, ...] = ()
    legs: Tuple[LegSpec, ...] = ()
    routes: Tuple[RouteSpec, ...] = ()

    def ar(self, ar_id: str) -> ArSpec:
        return next(a for a in self.ars if a.id == ar_id)

    def mn(self, mn_id: str) -> MnSpec:
        return next(m for m in self.mns if m.id == mn_id)

    @property
    def cns(self) -> Tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind == "cn")

    @property
    def has(self) -> Tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind == "ha")


GLOBAL_KEYS = {
    "sim_time_s": float,
    "ready_timer_s": float,
    "advert_period_s": float,
    "alpha": float,
    "t_map": float,
    "s_max": float,
    "seed": int,
    "jitter_s": float,
    "wireless_bandwidth_bps": float,
    "wireless_latency_s": float,
}


def _names(value: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


# section -> (class, tuple attribute on Scenario, {key: (attribute, converter)})
SECTIONS = {
    "node": (NodeSpec, "nodes", {"id": ("id", str), "kind": ("kind", str)}),
    "map": (MapSpec, "maps", {"id": ("id", str), "n_thr": ("n_thr", int), "h_thr": ("h_thr", int)}),
    "ar": (ArSpec, "ars", {
        "id": ("id", str), "map": ("map", str), "x": ("x", float), "y": ("y", float),
        "range": ("range", float), "also_maps": ("also_maps", _names),
    }),
    "link": (LinkSpec, "links", {
        "a": ("a", str), "b": ("b", str), "bandwidth_bps": ("bandwidth_bps", float),
        "latency_s": ("latency_s", float),
    }),
    "mn": (MnSpec, "mns", {
        "id": ("id", str), "ar": ("ar", str), "home_agent": ("home_agent", str),
        "power_on_s": ("power_on_s", float), "speed_mps": ("speed_mps", float),
    }),
    "flow": (FlowSpec, "flows", {
        "id": ("id", str), "cn": ("cn", str), "mn": ("mn", str), "rate_bps": ("rate_bps", float),
        "packet_size": ("packet_size", int), "start_s": ("start_s", float), "stop_s": ("stop_s", float),
    }),
    "leg": (LegSpec, "legs", {
        "mn": ("mn", str), "from": ("from_ar", str), "to": ("to_ar", str), "at_s": ("at_s", float),
        "speed_mps": ("speed_mps", float),
    }),
    "route": (RouteSpec, "routes", {
        "mn": ("mn", str), "path": ("path", _names), "start_s": ("start_s", float), "cycle": ("cycle", _bool),
    }),
}

REQUIRED_SECTIONS = ("map", "ar", "mn")


@dataclass
class _Block:
    section: str
    line: int
    values: Dict[str, object] = field(default_factory=dict)
    lines: Dict[str, int] = field(default_factory=dict)

    def line_of(self, key: str) -> int:
        return self.lines.get(key, self.line)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; raises ScenarioError on any problem."""
    diags: List[Tuple[int, str]] = []
    globals_: Dict[str, object] = {}
    blocks: List[_Block] = []
    current: Optional[_Block] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                diags.append((lineno, f"unknown section [{name}]"))
                current = _Block(name, lineno)  # swallow its keys
            else:
                current = _Block(name, lineno)
                blocks.append(current)
            continue
        if "=" not in line:
            diags.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if current is None:
            if key not in GLOBAL_KEYS:
                diags.append((lineno, f"unknown global key {key!r}"))
                continue
            try:
                globals_[key] = GLOBAL_KEYS[key](value)
            except ValueError:
                diags.append((lineno, f"bad value for {key}: {value!r}"))
            continue
        if current.section not in SECTIONS:
            continue
        schema = SECTIONS[current.section][2]
        if key not in schema:
            diags.append((lineno, f"unknown key {key!r} in [{current.section}]"))
            continue
        attr, conv = schema[key]
        if attr in current.values:
            diags.append((lineno, f"duplicate key {key!r} in [{current.section}]"))
            continue
        try:
            current.values[attr] = conv(value)
        except ValueError:
            diags.append((lineno, f"bad value for {key}: {value!r}"))
            continue
        current.lines[attr] = lineno

    collections: Dict[str, list] = {attr: [] for _, attr, _ in SECTIONS.values()}
    block_of: Dict[int, _Block] = {}
    for block in blocks:
        cls, attr, _ = SECTIONS[block.section]
        required = [f.name for f in fields(cls) if f.default is MISSING and f.default_factory is MISSING]
        missing = [name for name in required if name not in block.values]
        if missing:
            diags.append((block.line, f"[{block.section}] missing {', '.join(missing)}"))
            continue
        try:
            obj = cls(**block.values)
        except (TypeError, ValueError) as exc:
            diags.append((block.line, str(exc)))
            continue
        block_of[id(obj)] = block
        collections[attr].append(obj)

    present = {b.section for b in blocks}
    for name in REQUIRED_SECTIONS:
        if name not in present:
            diags.append((0, f"missing section [{name}]"))

    scenario = None
    if not diags:
        scenario = Scenario(**globals_, **{k: tuple(v) for k, v in collections.items()})
        diags.extend(_validate(scenario, block_of))
    if diags:
        raise ScenarioError(sorted(diags))
    return scenario



def _validate(sc: Scenario, block_of: Dict[int, _Block]) -> List[Tuple[int, str]]:
    diags = []

    def where(obj, key=None) -> int:
        block = block_of.get(id(obj))
        if block is None:
            return 0
        return block.line_of(key) if key else block.line

    for name, value in (("sim_time_s", sc.sim_time_s), ("ready_timer_s", sc.ready_timer_s),
                        ("advert_period_s", sc.advert_period_s), ("alpha", sc.alpha),
                        ("t_map", sc.t_map), ("s_max", sc.s_max),
                        ("wireless_bandwidth_bps", sc.wireless_bandwidth_bps)):
        if not value > 0:
            diags.append((0, f"{name} must be positive"))
    if sc.jitter_s < 0 or sc.wireless_latency_s < 0:
        diags.append((0, "jitter_s and wireless_latency_s must be non-negative"))

    ids: Dict[str, object] = {}
    for group in (sc.nodes, sc.maps, sc.ars, sc.mns):
        for obj in group:
            if obj.id in ids:
                diags.append((where(obj, "id"), f"duplicate id {obj.id!r}"))
            ids[obj.id] = obj
    flow_ids = set()
    for flow in sc.flows:
        if flow.id in flow_ids or flow.id in ids:
            diags.append((where(flow, "id"), f"duplicate id {flow.id!r}"))
        flow_ids.add(flow.id)

    node_kind = {n.id: n.kind for n in sc.nodes}
    for node in sc.nodes:
        if node.kind not in ("cn", "ha", "router"):
            diags.append((where(node, "kind"), f"unknown node kind {node.kind!r}"))

    map_ids = {m.id for m in sc.maps}
    ar_ids = {a.id for a in sc.ars}
    mn_ids = {m.id for m in sc.mns}
    wired = set(node_kind) | map_ids | ar_ids

    for m in sc.maps:
        if m.n_thr < 0:
            diags.append((where(m, "n_thr"), "n_thr must be non-negative"))
        if m.n_thr > m.h_thr:
            diags.append((where(m, "h_thr"), "n_thr exceeds h_thr"))
    for ar in sc.ars:
        for mid in ar.reachable_maps:
            if mid not in map_ids:
                diags.append((where(ar, "also_maps" if mid != ar.map else "map"), f"unknown MAP {mid!r}"))
        if ar.range <= 0:
            diags.append((where(ar, "range"), "range must be positive"))
    for link in sc.links:
        for end, key in ((link.a, "a"), (link.b, "b")):
            if end not in wired:
                diags.append((where(link, key), f"link endpoint {end!r} is not a node, MAP or AR"))
        if link.bandwidth_bps <= 0 or link.latency_s < 0:
            diags.append((where(link), "link needs positive bandwidth and non-negative latency"))
    for mn in sc.mns:
        if mn.ar not in ar_ids:
            diags.append((where(mn, "ar"), f"unknown AR {mn.ar!r}"))
        if node_kind.get(mn.home_agent) != "ha":
            diags.append((where(mn, "home_agent"), f"{mn.home_agent!r} is not a home agent"))
        if mn.speed_mps < 0 or mn.power_on_s < 0:
            diags.append((where(mn), "speed and power-on time must be non-negative"))
    for flow in sc.flows:
        if node_kind.get(flow.cn) != "cn":
            diags.append((where(flow, "cn"), f"{flow.cn!r} is not a correspondent node"))
        if flow.mn not in mn_ids:
            diags.append((where(flow, "mn"), f"unknown MN {flow.mn!r}"))
        if flow.rate_bps <= 0 or flow.packet_size <= 0:
            diags.append((where(flow), "flow rate and packet size must be positive"))
        if flow.stop_s is not None and flow.stop_s <= flow.start_s:
            diags.append((where(flow, "stop_s"), "flow stops before it starts"))

    last_leg: Dict[str, LegSpec] = {}
    for leg in sc.legs:
        if leg.mn not in mn_ids:
            diags.append((where(leg, "mn"), f"unknown MN {leg.mn!r}"))
            continue
        bad = False
        for ar_id, key in ((leg.from_ar, "from_ar"), (leg.to_ar, "to_ar")):
            if ar_id not in ar_ids:
                diags.append((where(leg, key), f"leg references unknown AR {ar_id!r}"))
                bad = True
        if bad:
            continue
        prev = last_leg.get(leg.mn)
        expected_from = prev.to_ar if prev else sc.mn(leg.mn).ar
        if leg.from_ar != expected_from:
            diags.append((where(leg, "from_ar"), f"leg for {leg.mn} starts at {leg.from_ar}, expected {expected_from}"))
        if prev is not None and leg.at_s <= prev.at_s:
            diags.append((where(leg, "at_s"), f"legs for {leg.mn} are not time-ordered"))
        if leg.speed_mps is not None and leg.speed_mps < 0:
            diags.append((where(leg, "speed_mps"), "speed must be non-negative"))
        last_leg[leg.mn] = leg
    routed = set()
    for route in sc.routes:
        if route.mn not in mn_ids:
            diags.append((where(route, "mn"), f"unknown MN {route.mn!r}"))
            continue
        if route.mn in routed or route.mn in last_leg:
            diags.append((where(route), f"{route.mn} already has movement defined"))
        routed.add(route.mn)
        unknown = [a for a in route.path if a not in ar_ids]
        if unknown:
            diags.append((where(route, "path"), f"route references unknown AR {unknown[0]!r}"))
        elif not route.path or route.path[0] != sc.mn(route.mn).ar:
            diags.append((where(route, "path"), f"route for {route.mn} must start at its initial AR"))

    if not diags:
        diags.extend(_check_connectivity(sc))
    return diags


def _check_connectivity(sc: Scenario) -> List[Tuple[int, str]]:
    graph = build_graph(sc)
    diags = []
    anchors = [n.id for n in sc.nodes if n.kind in ("cn", "ha")]
    for ar in sc.ars:
        for mid in ar.reachable_maps:
            if not nx.has_path(graph, ar.id, mid):
                diags.append((0, f"no path from {ar.id} to {mid}"))
    for m in sc.maps:
        for anchor in anchors:
            if not nx.has_path(graph, anchor, m.id):
                diags.append((0, f"no path from {anchor} to {m.id}"))
    return diags


def build_graph(sc: Scenario) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(n.id for n in sc.nodes)
    graph.add_nodes_from(m.id for m in sc.maps)
    graph.add_nodes_from(a.id for a in sc.ars)
    for link in sc.links:
        graph.add_edge(link.a, link.b, bandwidth=link.bandwidth_bps, latency=link.latency_s)
    return graph


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario(sc: Scenario) -> str:
    """Serialize to the text format; ``parse_scenario`` inverts it."""
    out = [f"{key} = {_fmt(getattr(sc, key))}" for key in GLOBAL_KEYS]
    for section, (cls, attr, schema) in SECTIONS.items():
        for obj in getattr(sc, attr):
            out.append("")
            out.append(f"[{section}]")
            for key, (field_name, _) in schema.items():
                value = getattr(obj, field_name)
                if value is None:
                    continue
                out.append(f"{key} = {_fmt(value)}")
    return "\n".join(out) + "\n"


def derive_legs(sc: Scenario) -> Dict[str, List[LegSpec]]:
    """Explicit legs plus legs generated from waypoint routes, per MN.

    A routed MN travels in straight lines between AR positions at its speed
    and attaches to the next AR at the midpoint of each segment.
    """
    legs: Dict[str, List[LegSpec]] = {}
    for leg in sc.legs:
        legs.setdefault(leg.mn, []).append(leg)
    for route in sc.routes:
        mn = sc.mn(route.mn)
        speed = mn.speed_mps
        if speed <= 0 or len(route.path) < 2:
            continue
        path = list(route.path)
        if route.cycle and path[-1] != path[0]:
            path.append(path[0])
        out = legs.setdefault(route.mn, [])
        t = route.start_s
        hops = list(zip(path, path[1:]))
        i = 0
        while i < len(hops) or (route.cycle and hops):
            a, b = hops[i % len(hops)]
            pa, pb = sc.ar(a), sc.ar(b)
            dist = math.hypot(pb.x - pa.x, pb.y - pa.y)
            at = t + dist / (2 * speed)
            if at >= sc.sim_time_s or dist == 0:
                break
            out.append(LegSpec(route.mn, a, b, at, speed))
            t += dist / speed
            i += 1
    return _sorted(legs)


def _sorted(legs: Dict[str, List[LegSpec]]) -> Dict[str, List[LegSpec]]:
    return {mn: sorted(items, key=lambda leg: leg.at_s) for mn, items in legs.items()}


def with_overrides(sc: Scenario, rate_bps: Optional[float] = None, speed_mps: Optional[float] = None,
                   **globals_) -> Scenario:
    """Copy of ``sc`` with every flow rate and/or every mobile MN's speed replaced.

    MNs that never move (speed 0, no legs, no route) keep speed 0.
    """
    unknown = set(globals_) - set(GLOBAL_KEYS)
    if unknown:
        raise ValueError(f"unknown global(s): {', '.join(sorted(unknown))}")
    changes = {k: v for k, v in globals_.items() if v is not None}
    if rate_bps is not None:
        changes["flows"] = tuple(replace(f, rate_bps=float(rate_bps)) for f in sc.flows)
    if speed_mps is not None:
        mobile = {leg.mn for leg in sc.legs} | {r.mn for r in sc.routes} | {m.id for m in sc.mns if m.speed_mps > 0}
        changes["mns"] = tuple(replace(m, speed_mps=float(speed_mps)) if m.id in mobile else m for m in sc.mns)
        changes["legs"] = tuple(replace(leg, speed_mps=float(speed_mps)) for leg in sc.legs)
    return replace(sc, **changes)


def scenario_dir() -> Path:
    env = os.environ.get("HMIP_LAB_SCENARIO_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files("hmip_lab") / "scenarios"))


def resolve_scenario_path(name: str) -> Path:
    """A path as given, or a bare name looked up in the scenario directory."""
    path = Path(name)
    if path.exists():
        return path
    candidate = scenario_dir() / name
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"scenario not found: {name}")


def load_scenario(name: str) -> Scenario:
    return parse_scenario(resolve_scenario_path(name).read_text())
