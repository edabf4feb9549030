import pytest

from fixtures import FIXTURES, mk_trace, rec

from schedcheck.config import ClusterConfig
from schedcheck.errors import EmptyWorkload
from schedcheck.kernel import successors as kernel_successors
from schedcheck.model import (CAUSE_CASCADE, CAUSE_NAMES, CAUSE_QUEUEWAIT,
                              CAUSE_SPECULATIVE, CAUSE_TIMEOUT, FAILED,
                              FINISHED_AFTER_DEADLINE,
                              FINISHED_WITHIN_DEADLINE, PROCESSED, SCHEDULED,
                              SUBMITTED, WAITING_RESOURCES,
                              activation_kernel_state, build_cluster,
                              canonical_key, iter_transitions, replay,
                              successors, terminal_summary, wait_for_graph)


def first_run(state, limit=100_000):
    """Follow the first enabled transition to a dead end; returns the final
    state and the event names along the way."""
    events = []
    for _ in range(limit):
        t = next(iter_transitions(state), None)
        if t is None:
            return state, events
        events.append(t.event.name)
        state = t.state
    raise AssertionError("run did not terminate")


def step_n(state, n):
    """Take exactly n first-enabled transitions."""
    for _ in range(n):
        t = next(iter_transitions(state))
        state = t.state
    return state


def build(name):
    fx = FIXTURES[name]
    return build_cluster(fx.config, fx.trace)


class TestConstruction:
    def test_empty_workload_rejected(self):
        with pytest.raises(EmptyWorkload):
            build_cluster(ClusterConfig(), None)

    def test_initial_state_is_cold(self):
        state = build("map_reduce_gate")
        assert not state.namenode_on and not state.jobtracker_on
        assert all(not n.on for n in state.nodes)
        assert state.clock == 0
        assert state.counters.free_slots == 0

    def test_deadline_defaults_to_factor_times_duration(self):
        trace = mk_trace([rec("m1", "j1", "map", 100, 200),
                          rec("m2", "j1", "map", 0, 100, deadline=123)])
        state = build_cluster(ClusterConfig(deadline_factor=3.0), trace)
        assert state.statics.deadline["m1"] == 100 + 3 * 200
        assert state.statics.deadline["m2"] == 123


class TestActivation:
    def test_tasktrackers_need_jobtracker(self):
        state = build("map_reduce_gate")
        names = {t.event.name for t in iter_transitions(state)}
        assert names == {"activate_nn", "activate_jt"}
        jt = next(t.state for t in iter_transitions(state)
                  if t.event.name == "activate_jt")
        names = {t.event.name for t in iter_transitions(jt)}
        assert "activate_tt.0" in names and "activate_tt.1" in names

    def test_activation_updates_counters(self):
        state, _ = first_run(build("map_reduce_gate"))
        assert state.counters.trackercount == 2

    def test_matches_process_algebra_rendering(self):
        """The activation fragment rendered as process terms must allow the
        same activation event multiset as the structured transitions."""
        cfg = FIXTURES["map_reduce_gate"].config
        ks = activation_kernel_state(cfg)
        # drive the kernel through every path; collect final stores
        stack, finals = [ks], []
        seen = set()
        while stack:
            st = stack.pop()
            succ = kernel_successors(st)
            if not succ:
                finals.append(st.store)
                continue
            for _, nxt in succ:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        assert finals, "kernel run never terminated"
        for store in finals:
            assert store["NameNode"] == 1
            assert store["JobTracker"] == 1
            assert store["trackercount"] == cfg.node_count
            assert store["TaskTracker"] == (1,) * cfg.node_count


class TestExecutionSemantics:
    def test_reduce_never_executes_before_maps_finish(self):
        # walk the full space of the gating fixture
        stack = [build("map_reduce_gate")]
        seen = set()
        while stack:
            state = stack.pop()
            rt = state.task("r1")
            if rt.phase in (PROCESSED, FINISHED_WITHIN_DEADLINE):
                j = state.job("j1")
                assert j.fin_maps == 2
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)

    def test_clock_advances_only_at_completions(self):
        state = build("map_reduce_gate")
        for _ in range(200):
            t = next(iter_transitions(state), None)
            if t is None:
                break
            if not t.event.name.startswith(("complete.", "fail.")):
                assert t.state.clock == state.clock
            else:
                assert t.state.clock >= state.clock
            state = t.state

    def test_start_is_max_of_clock_and_submit(self):
        trace = mk_trace([rec("m1", "j1", "map", 0, 100),
                          rec("m2", "j2", "map", 500, 100)])
        state, _ = first_run(build_cluster(
            ClusterConfig(node_count=2, slots_per_node=1), trace))
        assert state.task("m1").start == 0
        assert state.task("m2").start == 500  # waited for its submit time

    def test_locality_counted_against_preferred_node(self):
        state, _ = first_run(build("locality_preference"))
        c = state.counters
        assert c.locality + c.nonlocality == 3
        for tid in ("m1", "m2", "m3"):
            rt = state.task(tid)
            pref = state.statics.preferred[tid]
            assert rt.local == (1 if rt.node == pref else 0)

    def test_slot_conservation_everywhere(self):
        stack = [build("two_jobs_fifo")]
        seen = set()
        while stack:
            state = stack.pop()
            occupied = sum(1 for n in state.nodes for s in n.slots
                           if s is not None)
            on_slots = sum(len(n.slots) for n in state.nodes if n.on)
            assert occupied + state.counters.free_slots == on_slots
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)


class TestOutcomes:
    def test_finish_within_and_after_deadline(self):
        state, _ = first_run(build("finish_after_deadline"))
        assert state.task("m1").phase == FINISHED_AFTER_DEADLINE
        assert state.counters.n_fin_after == 1
        assert state.counters.n_failed == 0

    def test_timeout_and_cascade(self):
        state, _ = first_run(build("timeout_cascade"))
        assert state.task("bad").cause == CAUSE_TIMEOUT
        assert state.task("late").cause == CAUSE_CASCADE
        assert state.task("r1").cause == CAUSE_CASCADE
        assert state.task("bad").finish == 1_000  # clamped at timeout
        assert state.counters.n_failed == 3
        summary = terminal_summary(state)
        assert summary["cascade_chains"] == {"j1": 2}

    def test_queue_wait_failure(self):
        state, _ = first_run(build("queue_wait"))
        rt = state.task("m2")
        assert rt.phase == FAILED and rt.cause == CAUSE_QUEUEWAIT
        assert rt.start > state.statics.deadline["m2"]

    def test_speculative_copy_lifecycle(self):
        # somewhere in the space, the straggler acquires a copy; the copy
        # never outlives the original's resolution
        stack = [build("speculative_copy")]
        seen = set()
        saw_copy = False
        while stack:
            state = stack.pop()
            rt = state.task("slow")
            if rt.copies:
                saw_copy = True
                assert rt.phase == PROCESSED  # only running tasks hold copies
            if rt.phase == FINISHED_WITHIN_DEADLINE:
                assert rt.copies == ()
                # copy slots were released
                occupied = [s for n in state.nodes for s in n.slots
                            if isinstance(s, tuple)]
                assert occupied == []
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)
        assert saw_copy

    def test_speculative_limit_cause(self):
        # drive a run in which the straggler is speculated before timing out
        stack = [build("speculative_limit")]
        seen = set()
        causes = set()
        while stack:
            state = stack.pop()
            rt = state.task("slow")
            if rt.phase == FAILED:
                causes.add(rt.cause)
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)
        # both outcomes exist in the space: failed un-speculated (Timeout)
        # and failed after a copy was granted (SpeculativeLimit)
        assert CAUSE_SPECULATIVE in causes
        assert CAUSE_TIMEOUT in causes


class TestDeadlock:
    def test_deadlock_reachable_and_sticky(self):
        stack = [build("deadlock_cycle")]
        seen = set()
        deadlocked = []
        while stack:
            state = stack.pop()
            if state.counters.n_deadlock:
                deadlocked.append(state)
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)
        assert deadlocked
        # with both trackers up, the two stuck reduces form a j1<->j2 cycle
        # and both queued maps get flagged
        full = [s for s in deadlocked
                if s.counters.trackercount == 2 and s.counters.n_deadlock == 2
                and s.namenode_on]
        assert full
        state = full[0]
        assert state.task("am").dl == 1 and state.task("bm").dl == 1
        assert state.task_phase("am") == WAITING_RESOURCES
        edges, blocked = wait_for_graph(state)
        assert edges == {"j1": {"j1", "j2"}, "j2": {"j1", "j2"}}
        # the deadlocked state is a dead end
        assert not successors(state)

    def test_no_deadlock_with_strict_slowstart(self):
        fx = FIXTURES["deadlock_cycle"]
        cfg = fx.config.override(reduce_slowstart=1.0)
        stack = [build_cluster(cfg, fx.trace)]
        seen = set()
        while stack:
            state = stack.pop()
            assert state.counters.n_deadlock == 0
            for _, nxt in successors(state):
                key = canonical_key(nxt, sym=False)
                if key not in seen:
                    seen.add(key)
                    stack.append(nxt)


class TestPhasesAndSymmetry:
    def test_phase_monotone_along_runs(self):
        state = build("timeout_cascade")
        last = {tid: 0 for tid in state.statics.tids}
        for _ in range(500):
            t = next(iter_transitions(state), None)
            if t is None:
                break
            state = t.state
            for tid in state.statics.tids:
                phase = state.task_phase(tid)
                assert phase >= last[tid] or (
                    last[tid] == WAITING_RESOURCES and phase >= SCHEDULED)
                last[tid] = phase

    def test_swapping_anonymous_nodes_is_canonical(self):
        # reach two states that differ only by which anonymous node took m1
        state = build("map_only_parallel")
        state = step_n(state, 4)  # both trackers on
        assigns = [t for t in iter_transitions(state)
                   if t.event.name.startswith("assign.m1.")]
        assert len(assigns) == 2
        a, b = (t.state for t in assigns)
        assert canonical_key(a, sym=True) == canonical_key(b, sym=True)
        assert canonical_key(a, sym=False) != canonical_key(b, sym=False)
        assert a.fingerprint(sym=True) == b.fingerprint(sym=True)
        assert a.fingerprint(sym=False) != b.fingerprint(sym=False)

    def test_named_nodes_are_not_merged(self):
        state = build("locality_preference")
        state = step_n(state, 4)
        assigns = [t for t in iter_transitions(state)
                   if t.event.name.startswith("assign.m1.")]
        assert len(assigns) == 2
        a, b = (t.state for t in assigns)
        # both nodes are preferred by some task: no anonymity, no merging
        assert canonical_key(a, sym=True) != canonical_key(b, sym=True)

    def test_fingerprint_tracks_canonical_key(self):
        # incremental fingerprints agree with structural keys across a walk
        seen_keys = {}
        stack = [build("map_reduce_gate")]
        while stack:
            state = stack.pop()
            key = canonical_key(state, sym=False)
            fp = state.fingerprint(sym=False)
            if key in seen_keys:
                assert seen_keys[key] == fp
                continue
            seen_keys[key] = fp
            for _, nxt in successors(state):
                stack.append(nxt)
        fps = list(seen_keys.values())
        assert len(set(fps)) == len(fps)  # no collisions on this space


class TestWitnessReplay:
    def test_replay_reproduces_final_state(self):
        from schedcheck.checker import Atom, GoalExpr, verify
        init = build("map_reduce_gate")
        goal = GoalExpr("g", (Atom("completedscheduled", "==", "workload"),))
        result = verify(init, goal, strategy="dfs")
        assert result.verdict == "reachable"
        final = replay(init, result.witness.steps)
        assert canonical_key(final, sym=False) == canonical_key(
            replay(init, result.witness.steps), sym=False)
        assert final.counters.completedscheduled == 3

    def test_replay_rejects_disabled_events(self):
        from schedcheck.model import StepRecord
        init = build("map_reduce_gate")
        with pytest.raises(ValueError):
            replay(init, [StepRecord("execute.r1", None, (), 0)])
