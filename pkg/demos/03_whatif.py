"""What-if analysis: would a configuration change have prevented failures?

Takes a saturated synthetic workload whose failures are dominated by
queue waiting, then compares the model-predicted failure rate under the
baseline cluster against (a) a single scenario with twice the timeout and
(b) a sweep over the node count.

Run:  python demos/03_whatif.py
"""

from schedcheck import ClusterConfig, GeneratorSpec, Scenario
from schedcheck import whatif
from schedcheck.checker import parse_properties
from schedcheck.trace import synthesize

workload = synthesize(GeneratorSpec(n_tasks=120, failure_fraction=0.0,
                                    interarrival_ms=15000, node_count=4),
                      seed=5)
baseline = ClusterConfig(node_count=4, slots_per_node=1,
                         deadline_factor=10.0)
_, (goal, *_) = parse_properties(
    "#define any workload > 0;\n#assert cluster reaches any;\n")


def show(report):
    print(f"  {report.label:14s} baseline {report.baseline_failure_pct:6.2f}% "
          f"-> scenario {report.scenario_failure_pct:6.2f}%  "
          f"(reduction {report.absolute_reduction_pts:+.2f} pts, "
          f"rate {report.reduction_rate_pct:.2f}%)")


print(f"workload: {len(workload)} tasks on a "
      f"{baseline.node_count}-node / {baseline.total_slots}-slot cluster\n")

print("single scenario, doubled task timeout:")
show(whatif.run(Scenario(baseline,
                         {"task_timeout_ms": 2 * baseline.task_timeout_ms},
                         label="2x timeout"),
                workload, goal))

print("\nnode-count sweep:")
for report in whatif.sweep(baseline, "nodes", [4, 6, 8, 12], workload, goal):
    leg = report.scenario
    qw = leg.cause_counts.get("QueueWait", 0)
    print(f"  {report.label:10s} failure {leg.failure_pct:6.2f}%  "
          f"queue-wait failures {qw}")

print("\nscheduler sweep:")
for report in whatif.sweep(baseline, "scheduler",
                           ["fifo", "fair", "capacity"], workload, goal):
    print(f"  {report.label:20s} failure "
          f"{report.scenario_failure_pct:6.2f}%")
