"""Explicit-state reachability checking over the cluster model.

Two strategies share one first-witness depth-first search: `dfs` deduplicates
on the full state, `dfs-sym` on a canonical form that treats nodes no task
prefers (and slots within a node) as interchangeable, which is sound because
such nodes are behaviourally identical.

Properties come from a small assertion language:

    #define goal0 completedscheduled == workload && workload > 0;
    #assert cluster reaches goal0;
    #assert cluster reaches goal0 && schedulabilityrate >= 50;
    #assert task t3 eventually Processed;
    #assert task t3 never Failed;

Goal atoms compare the metrics of `rates.compute_rates` (plus the raw
counters listed there). Equality on the fractional rate metrics is read as
"reaches at least", since a run sweeps through rate values and exact float
equality would make most goals vacuously unreachable; equality on the
integer metrics stays exact.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import NamedTuple

from .errors import PropertySyntaxError, UnknownTask
from .model import (PHASE_BY_NAME, GlobalState, StepRecord, WitnessTrace,
                    iter_transitions, make_witness)
from .rates import compute_rates

STRATEGIES = ("dfs", "dfs-sym")

_INT_METRICS = frozenset({"completedscheduled", "workload", "trackercount"})
_RATE_METRICS = frozenset({"schedulabilityrate", "fairnessrate",
                           "resourcedeadlockrate", "localityrate",
                           "failurerate"})
_METRICS = _INT_METRICS | _RATE_METRICS
_OPS = ("==", "!=", "<=", ">=", "<", ">")


class Atom(NamedTuple):
    metric: str
    op: str
    rhs: object  # float or metric name


@dataclass(frozen=True)
class GoalExpr:
    """A conjunction of metric atoms; reachable iff some state satisfies all."""
    name: str
    atoms: tuple

    def holds(self, state: GlobalState) -> bool:
        metrics = compute_rates(state).as_dict()
        for metric, op, rhs in self.atoms:
            lhs = metrics[metric]
            r = metrics[rhs] if isinstance(rhs, str) else rhs
            if op == "==" and metric in _RATE_METRICS and \
                    not isinstance(rhs, str):
                op = ">="
            if not _cmp(lhs, op, r):
                return False
        return True


class TaskAssertion(NamedTuple):
    task_id: str
    mode: str    # "eventually" | "never"
    phase: int


def _cmp(a, op, b) -> bool:
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


# --------------------------------------------------------------------------
# Property file parsing

_DEFINE_RE = re.compile(r"#define\s+(\w+)\s+(.+)$")
_REACH_RE = re.compile(r"#assert\s+cluster\s+reaches\s+(\w+)(\s*&&\s*(.+))?$")
_TASK_RE = re.compile(r"#assert\s+task\s+(\S+)\s+(eventually|never)\s+(\w+)$")


def _parse_atom(text: str) -> Atom:
    for op in _OPS:
        if op in text:
            lhs, rhs = text.split(op, 1)
            lhs, rhs = lhs.strip(), rhs.strip()
            if lhs not in _METRICS:
                raise PropertySyntaxError(f"unknown metric {lhs!r}")
            if rhs in _METRICS:
                return Atom(lhs, op, rhs)
            try:
                return Atom(lhs, op, float(rhs))
            except ValueError:
                raise PropertySyntaxError(
                    f"bad comparison value {rhs!r}") from None
    raise PropertySyntaxError(f"no comparison operator in {text!r}")


def _parse_conjunction(text: str) -> tuple:
    return tuple(_parse_atom(part) for part in text.split("&&"))


def parse_properties(text: str):
    """Parse a property file into ({name: GoalExpr}, [GoalExpr | TaskAssertion]).

    The second element lists the asserted obligations in file order; reach
    assertions referencing a define inherit its atoms plus any extra ones.
    """
    defines: dict = {}
    asserts: list = []
    for raw in text.splitlines():
        line = raw.split("//")[0].strip()
        if not line:
            continue
        if not line.endswith(";"):
            raise PropertySyntaxError(f"missing ';' in: {raw.strip()!r}")
        line = line[:-1].strip()
        m = _DEFINE_RE.match(line)
        if m:
            name, body = m.group(1), m.group(2)
            defines[name] = GoalExpr(name, _parse_conjunction(body))
            continue
        m = _REACH_RE.match(line)
        if m:
            name, extra = m.group(1), m.group(3)
            if name not in defines:
                raise PropertySyntaxError(f"undefined goal {name!r}")
            atoms = defines[name].atoms
            if extra:
                atoms = atoms + _parse_conjunction(extra)
            asserts.append(GoalExpr(name, atoms))
            continue
        m = _TASK_RE.match(line)
        if m:
            tid, mode, phase_name = m.groups()
            if phase_name not in PHASE_BY_NAME:
                raise PropertySyntaxError(f"unknown phase {phase_name!r}")
            asserts.append(TaskAssertion(tid, mode, PHASE_BY_NAME[phase_name]))
            continue
        raise PropertySyntaxError(f"cannot parse: {raw.strip()!r}")
    return defines, asserts


# --------------------------------------------------------------------------
# Exploration

@dataclass(frozen=True)
class VerificationResult:
    verdict: str          # reachable|unreachable|holds|violated|unknown
    states: int           # distinct states visited
    transitions: int      # transitions taken
    elapsed_s: float
    strategy: str
    witness: WitnessTrace | None = None
    reason: str = ""

    @property
    def conclusive(self) -> bool:
        return self.verdict in ("reachable", "unreachable", "holds", "violated")


def _explore(initial: GlobalState, strategy: str, state_budget: int,
             time_budget_s: float, found, want_terminal: bool = False):
    """First-witness DFS. `found(state, is_terminal)` returns truthy when the
    target is hit; with want_terminal the callback also sees dead ends.

    Returns (hit_state_or_None, path, states, transitions, exhausted_reason).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; use one of {STRATEGIES}")
    sym = strategy == "dfs-sym"
    t0 = time.monotonic()
    deadline = t0 + time_budget_s if time_budget_s else None
    visited = {initial.fingerprint(sym)}
    n_trans = 0

    if found(initial, initial.is_terminal()):
        return initial, [], 1, 0, ""

    stack = [(initial, iter_transitions(initial), None)]
    path: list = []
    check_every = 2048
    while stack:
        state, it, _rec = stack[-1]
        t = next(it, None)
        if t is None:
            stack.pop()
            if path:
                path.pop()
            continue
        n_trans += 1
        succ = t.state
        fp = succ.fingerprint(sym)
        if fp in visited:
            continue
        visited.add(fp)
        if len(visited) > state_budget:
            return None, [], len(visited), n_trans, "state budget exhausted"
        if deadline is not None and n_trans % check_every == 0 and \
                time.monotonic() > deadline:
            return None, [], len(visited), n_trans, "time budget exhausted"
        rec = StepRecord(t.event.name, t.event.payload, t.changed, succ.clock)
        succ_it = iter_transitions(succ)
        first = next(succ_it, None)
        terminal = first is None
        path.append(rec)
        if found(succ, terminal):
            return succ, list(path), len(visited), n_trans, ""
        if terminal:
            path.pop()
            continue

        def chain(first_t, rest):
            yield first_t
            yield from rest

        stack.append((succ, chain(first, succ_it), rec))
    return None, [], len(visited), n_trans, ""


def verify(initial: GlobalState, goal: GoalExpr, strategy: str = "dfs-sym",
           state_budget: int = 5_000_000,
           time_budget_s: float = 0.0) -> VerificationResult:
    """Is some state satisfying `goal` reachable? First hit yields a witness."""
    t0 = time.monotonic()
    hit, path, states, trans, why = _explore(
        initial, strategy, state_budget, time_budget_s,
        lambda s, _term: goal.holds(s))
    elapsed = time.monotonic() - t0
    if hit is not None:
        return VerificationResult("reachable", states, trans, elapsed,
                                  strategy, make_witness(path, hit))
    if why:
        return VerificationResult("unknown", states, trans, elapsed,
                                  strategy, None, why)
    return VerificationResult("unreachable", states, trans, elapsed, strategy)


def verify_assertion(initial: GlobalState, assertion: TaskAssertion,
                     strategy: str = "dfs-sym",
                     state_budget: int = 5_000_000,
                     time_budget_s: float = 0.0) -> VerificationResult:
    """Check a per-task obligation; a violation comes with its witness run.

    `never P` is violated by any reachable state where the task has been in
    phase P; `eventually P` is violated by a dead-end state where it never
    was. The model's transition relation is acyclic (logical time, queue
    position and activation all progress), so every maximal run ends in a
    dead end and the dead-end check is complete.
    """
    if assertion.task_id not in initial.statics.idx_of:
        raise UnknownTask(assertion.task_id)
    tid, mode, phase = assertion

    if mode == "never":
        def bad(s, _term):
            return s.task_ever_reached(tid, phase)
    else:
        def bad(s, term):
            return term and not s.task_ever_reached(tid, phase)

    t0 = time.monotonic()
    hit, path, states, trans, why = _explore(
        initial, strategy, state_budget, time_budget_s, bad)
    elapsed = time.monotonic() - t0
    if hit is not None:
        return VerificationResult("violated", states, trans, elapsed,
                                  strategy, make_witness(path, hit))
    if why:
        return VerificationResult("unknown", states, trans, elapsed,
                                  strategy, None, why)
    return VerificationResult("holds", states, trans, elapsed, strategy)
