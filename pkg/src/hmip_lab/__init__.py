"""Discrete-event HMIPv6 simulator with CN-count admission control.

The MAP-side policy (two thresholds, resident replacement and load/speed
based MAP selection) lives in :mod:`hmip_lab.admission`; the event loop that
drives it over a wired/wireless topology is :mod:`hmip_lab.engine`.
"""

from .admission import AC_POLICY, BASELINE_POLICY, AdmissionPolicy, parse_policy
from .engine import Policy, Simulator, run
from .metrics import MetricsReport
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, with_overrides

__all__ = [
    "AC_POLICY",
    "BASELINE_POLICY",
    "AdmissionPolicy",
    "MetricsReport",
    "Policy",
    "Scenario",
    "ScenarioError",
    "Simulator",
    "load_scenario",
    "parse_policy",
    "parse_scenario",
    "run",
    "with_overrides",
]

__version__ = "0.1.0"
