"""Scheduling quality metrics computed from a cluster state's counters.

All rates are percentages in [0, 100] and come straight from counters the
model maintains incrementally, so computing them is O(1) regardless of
workload size.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .model import GlobalState


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


@dataclass(frozen=True)
class RateMetrics:
    schedulabilityrate: float   # finished within deadline / ever scheduled
    fairnessrate: float         # started within the fairness wait / workload
    resourcedeadlockrate: float  # deadlock-flagged / workload
    localityrate: float         # data-local executions / executions
    failurerate: float          # failed / workload
    completedscheduled: int
    workload: int
    trackercount: int

    def as_dict(self) -> dict:
        return asdict(self)


def compute_rates(state: GlobalState) -> RateMetrics:
    c = state.counters
    n = state.statics.workload
    return RateMetrics(
        schedulabilityrate=_pct(c.n_fin_within, c.n_scheduled),
        fairnessrate=_pct(c.n_served_fair, n),
        resourcedeadlockrate=_pct(c.n_deadlock, n),
        localityrate=_pct(c.locality, c.locality + c.nonlocality),
        failurerate=_pct(c.n_failed, n),
        completedscheduled=c.completedscheduled,
        workload=n,
        trackercount=c.trackercount,
    )
