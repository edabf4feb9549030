"""Verify reachability goals and per-task assertions on a small workload.

Builds a two-node cluster from demos/data/, checks the properties in
goals.props with both search strategies, and walks through the witness
trace of the first goal.

Run:  python demos/01_verify.py
"""

from pathlib import Path

from schedcheck import (GoalExpr, build_cluster, load_config,
                        parse_properties, verify, verify_assertion)
from schedcheck import trace as trace_mod

DATA = Path(__file__).parent / "data"

config = load_config(DATA / "cluster.conf")
workload = trace_mod.parse(DATA / "wordcount.csv")
print(f"cluster: {config.node_count} nodes x {config.slots_per_node} slots, "
      f"{config.scheduler} scheduler")
print(f"workload: {len(workload)} tasks across "
      f"{len(workload.job_index)} jobs\n")

defines, obligations = parse_properties((DATA / "goals.props").read_text())

initial = build_cluster(config, workload)
for ob in obligations:
    for strategy in ("dfs", "dfs-sym"):
        if isinstance(ob, GoalExpr):
            res = verify(initial, ob, strategy=strategy)
            label = f"reaches {ob.name}"
        else:
            res = verify_assertion(initial, ob, strategy=strategy)
            label = f"task {ob.task_id} {ob.mode}"
        print(f"{label:38s} {strategy:8s} -> {res.verdict:12s} "
              f"({res.states} states, {res.elapsed_s:.3f}s)")
print()

# The witness for the first goal is a full scheduling run; replaying it
# shows the order in which the model fired events.
goal = obligations[0]
res = verify(initial, goal)
print(f"witness for {goal.name!r}: {len(res.witness.steps)} steps")
for step in res.witness.steps:
    print(f"  t={step.clock_ms:>7d}ms  {step.event}")
print("\nterminal rates:")
for name, value in sorted(res.witness.terminal["rates"].items()):
    print(f"  {name:22s} {value}")
