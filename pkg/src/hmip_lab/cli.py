"""Command-line front end: single runs, policy comparisons and parameter sweeps.

Exit codes: 0 success, 2 scenario or validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .admission import POLICY_LABELS, parse_policy
from .engine import Simulator
from .metrics import CSV_COLUMNS, HANDOFF_COLUMNS, csv_row, handoff_rows, write_csv
from .scenario import Scenario, ScenarioError, load_scenario, with_overrides

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

PARTIAL_MARKER = "#PARTIAL"
SWEEP_PARAMS = ("rate", "speed")
RATE_UNIT = 1e6  # sweep rates are given in Mb/s


class ConfigError(ValueError):
    pass


class SweepFailed(RuntimeError):
    def __init__(self, rows, handoff, cause):
        super().__init__(str(cause))
        self.rows = rows
        self.handoff = handoff
        self.cause = cause


@dataclass
class RunConfig:
    scenario: str
    policies: Tuple[str, ...] = ("ac",)
    seeds: Tuple[int, ...] = (1,)
    sweep: Optional[Tuple[str, Tuple[float, ...]]] = None
    out: Optional[str] = None
    handoff_csv: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("at least one seed required")
        for label in self.policies:
            if label not in POLICY_LABELS:
                raise ConfigError(f"unknown policy {label!r}")
        if self.sweep is not None:
            name, values = self.sweep
            if name not in SWEEP_PARAMS:
                raise ConfigError(f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}")
            if not values:
                raise ConfigError("sweep needs at least one value")
            if any(v <= 0 for v in values):
                raise ConfigError("sweep values must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def points(self) -> List[Optional[float]]:
        return [None] if self.sweep is None else sorted(self.sweep[1])


def expand_policy(label: str, no_replacement: bool = False) -> Tuple[str, ...]:
    labels = ("ac", "baseline") if label == "both" else (label,)
    if no_replacement:
        labels = tuple("ac-norepl" if x == "ac" else x for x in labels)
    return labels


def parse_seeds(text: str) -> Tuple[int, ...]:
    """``"1,2,5"`` or ``"1-10"`` (inclusive) or a mix of both."""
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed {part!r}") from None
    return tuple(seeds)


def parse_sweep(text: str) -> Tuple[str, Tuple[float, ...]]:
    name, sep, values = text.partition("=")
    if not sep:
        raise ConfigError("sweep must look like rate=0.1,0.2 or speed=5,10")
    try:
        parsed = tuple(float(v) for v in values.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad sweep values in {text!r}") from None
    return name.strip(), parsed


def _nominal(sc: Scenario) -> Tuple[float, float]:
    rate = sc.flows[0].rate_bps if sc.flows else 0.0
    speed = max((m.speed_mps for m in sc.mns), default=0.0)
    return rate, speed


def _run_one(task):
    sc, label, seed = task
    report = Simulator(sc, parse_policy(label), seed).run()
    rate, speed = _nominal(sc)
    return csv_row(report, label, seed, rate, speed), handoff_rows(report, label, seed)


def build_tasks(config: RunConfig, base: Scenario) -> List[Tuple[Scenario, str, int]]:
    base = with_overrides(base, **config.overrides)
    tasks = []
    for value in config.points():
        sc = base
        if value is not None:
            name = config.sweep[0]
            sc = with_overrides(base, rate_bps=value * RATE_UNIT) if name == "rate" else with_overrides(
                base, speed_mps=value)
        for label in sorted(config.policies):
            for seed in sorted(config.seeds):
                tasks.append((sc, label, seed))
    return tasks


def run_sweep(config: RunConfig, scenario: Optional[Scenario] = None):
    """CSV rows (and per-handoff rows) for every (sweep value, policy, seed).

    Rows come back in that sort order whatever the worker count. A failing
    run raises :class:`SweepFailed` carrying the rows finished before it.
    """
    base = scenario if scenario is not None else load_scenario(config.scenario)
    tasks = build_tasks(config, base)
    rows, handoff = [], []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_run_one, t) for t in tasks]
            for fut in futures:
                try:
                    row, hrows = fut.result()
                except Exception as exc:
                    raise SweepFailed(rows, handoff, exc) from exc
                rows.append(row)
                handoff.extend(hrows)
        return rows, handoff
    for task in tasks:
        try:
            row, hrows = _run_one(task)
        except Exception as exc:
            raise SweepFailed(rows, handoff, exc) from exc
        rows.append(row)
        handoff.extend(hrows)
    return rows, handoff


def format_summary(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(CSV_COLUMNS)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(CSV_COLUMNS, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def _emit(text: str, path: Optional[str]) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmip-lab", description="HMIPv6 admission-control simulator")
    p.add_argument("--scenario", required=True, help="scenario file, or a bundled name such as fig4.scn")
    p.add_argument("--policy", default="ac", choices=sorted(POLICY_LABELS) + ["both"])
    p.add_argument("--no-replacement", action="store_true", help="run AC with replacement disabled")
    p.add_argument("--seeds", default="1", help="comma list and/or ranges, e.g. 1-10")
    p.add_argument("--sweep", help="rate=<Mb/s,...> or speed=<m/s,...>")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--handoff-csv", help="also write one row per handoff here")
    p.add_argument("--ready-timer", type=float, dest="ready_timer_s")
    p.add_argument("--alpha", type=float)
    p.add_argument("--t-map", type=float, dest="t_map")
    p.add_argument("--s-max", type=float, dest="s_max")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in ("ready_timer_s", "alpha", "t_map", "s_max")
                 if getattr(args, k) is not None}
    for key, value in overrides.items():
        if value <= 0:
            raise ConfigError(f"{key} must be positive")
    return RunConfig(
        scenario=args.scenario,
        policies=expand_policy(args.policy, args.no_replacement),
        seeds=parse_seeds(args.seeds),
        sweep=parse_sweep(args.sweep) if args.sweep else None,
        out=args.out,
        handoff_csv=args.handoff_csv,
        overrides=overrides,
        jobs=args.jobs,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        scenario = load_scenario(config.scenario)
    except (ConfigError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    to_stdout = config.out in (None, "-")
    try:
        rows, handoff = run_sweep(config, scenario)
    except SweepFailed as failure:
        marker = [PARTIAL_MARKER, f"run failed: {failure.cause!r}"] + [""] * (len(CSV_COLUMNS) - 2)
        _emit(write_csv(list(failure.rows) + [marker]), config.out)
        print(f"error: run failed: {failure.cause}", file=sys.stderr)
        return EXIT_RUNTIME

    _emit(write_csv(rows), config.out)
    if config.handoff_csv:
        _emit(write_csv(handoff, HANDOFF_COLUMNS), config.handoff_csv)
    print(format_summary(rows), file=sys.stderr if to_stdout else sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
