"""Independent brute-force oracle for the checker.

Enumerates the full reachable state space breadth-first with exact
structural state keys (no fingerprints, no symmetry), recomputes every
metric from raw task fields (never trusting the model's incremental
counters), and evaluates goal atoms with its own evaluator. Only the
transition relation itself is shared with the package — the oracle exists
to check the *checker*: exploration, deduplication, counter maintenance and
witness logic.
"""

from collections import deque

from schedcheck.model import (FAILED, FINISHED_AFTER_DEADLINE,
                              FINISHED_WITHIN_DEADLINE, canonical_key,
                              iter_transitions)

_RATE_METRICS = {"schedulabilityrate", "fairnessrate", "resourcedeadlockrate",
                 "localityrate", "failurerate"}


def recount_metrics(state) -> dict:
    """Recompute the rate inputs by scanning every task's raw fields."""
    st = state.statics
    cfg = state.config
    n = st.workload
    n_sched = n_started = n_fin_within = n_failed = 0
    n_local = n_remote = n_fair = n_dl = 0
    for tid in st.tids:
        rt = state.task(tid)
        if rt.node >= 0:  # ever held a slot assignment
            n_sched += 1
        if rt.start >= 0:
            n_started += 1
            if rt.local == 1:
                n_local += 1
            elif rt.local == 0:
                n_remote += 1
            if rt.start - st.submit[tid] <= cfg.fairness_wait_ms:
                n_fair += 1
        if rt.phase == FINISHED_WITHIN_DEADLINE:
            n_fin_within += 1
        if rt.phase == FAILED:
            n_failed += 1
        if rt.dl:
            n_dl += 1

    def pct(a, b):
        return 100.0 * a / b if b else 0.0

    return {
        "schedulabilityrate": pct(n_fin_within, n_sched),
        "fairnessrate": pct(n_fair, n),
        "resourcedeadlockrate": pct(n_dl, n),
        "localityrate": pct(n_local, n_local + n_remote),
        "failurerate": pct(n_failed, n),
        "completedscheduled": n_started,
        "workload": n,
        "trackercount": sum(1 for nd in state.nodes if nd.on),
    }


def atom_holds(metrics, metric, op, rhs) -> bool:
    lhs = metrics[metric]
    r = metrics[rhs] if isinstance(rhs, str) else rhs
    if op == "==" and metric in _RATE_METRICS and not isinstance(rhs, str):
        op = ">="
    return {"==": lhs == r, "!=": lhs != r, "<": lhs < r,
            "<=": lhs <= r, ">": lhs > r, ">=": lhs >= r}[op]


def goal_holds(state, goal) -> bool:
    metrics = recount_metrics(state)
    return all(atom_holds(metrics, m, op, rhs) for m, op, rhs in goal.atoms)


def enumerate_states(initial, max_states=2_000_000):
    """Full BFS; returns (states, terminal_states) as lists of GlobalState.
    Deduplicates on exact structural keys."""
    seen = {canonical_key(initial, sym=False)}
    frontier = deque([initial])
    states, terminals = [], []
    while frontier:
        state = frontier.popleft()
        states.append(state)
        any_succ = False
        for t in iter_transitions(state):
            any_succ = True
            key = canonical_key(t.state, sym=False)
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > max_states:
                raise RuntimeError("oracle state budget exhausted")
            frontier.append(t.state)
        if not any_succ:
            terminals.append(state)
    return states, terminals


def goal_verdict(initial, goal, max_states=2_000_000) -> str:
    states, _ = enumerate_states(initial, max_states)
    return "reachable" if any(goal_holds(s, goal) for s in states) \
        else "unreachable"


def assertion_verdict(initial, assertion, max_states=2_000_000) -> str:
    states, terminals = enumerate_states(initial, max_states)
    tid, mode, phase = assertion
    if mode == "never":
        bad = any(s.task_ever_reached(tid, phase) for s in states)
        return "violated" if bad else "holds"
    bad = any(not s.task_ever_reached(tid, phase) for s in terminals)
    return "violated" if bad else "holds"


def failure_pct_range(initial, max_states=2_000_000):
    """(min, max) model-predicted failure percentage over all dead ends;
    the spec's 'exhaustive what-if mode' for small fixtures."""
    _, terminals = enumerate_states(initial, max_states)
    pcts = []
    for s in terminals:
        n_bad = sum(
            1 for tid in s.statics.tids
            if s.task(tid).phase not in (FINISHED_WITHIN_DEADLINE,
                                         FINISHED_AFTER_DEADLINE))
        pcts.append(100.0 * n_bad / s.statics.workload)
    return min(pcts), max(pcts)
