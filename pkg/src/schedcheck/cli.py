"""Command-line front end: load config and traces, verify properties,
analyze failures against ground truth, run what-if comparisons, generate
synthetic traces.

Exit codes: 0 all properties valid / analysis complete; 1 some property
invalid; 2 inconclusive (state or time budget exhausted); 3 usage, parse or
input error. The code is a pure function of the report contents.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import analysis, checker, trace as trace_mod, whatif
from .config import ClusterConfig, load_config
from .errors import SchedCheckError
from .model import build_cluster, replay
from .rates import compute_rates

VERSION = "0.1.0"
MAX_WITNESS_STEPS_IN_REPORT = 1000


def _load_inputs(args):
    config = load_config(args.config) if args.config else ClusterConfig()
    if args.scheduler:
        config = config.override(scheduler=args.scheduler)
    workload = trace_mod.parse(args.trace)
    return config, workload


def _witness_json(witness):
    if witness is None:
        return None
    steps = [{"event": s.event, "payload": s.payload, "clock_ms": s.clock_ms,
              "changed": [list(c) for c in s.changed]}
             for s in witness.steps[:MAX_WITNESS_STEPS_IN_REPORT]]
    return {"steps": steps,
            "steps_total": len(witness.steps),
            "steps_truncated": len(witness.steps) > MAX_WITNESS_STEPS_IN_REPORT,
            "terminal": witness.terminal}


def _result_json(label, result):
    return {"property": label,
            "verdict": result.verdict,
            "states": result.states,
            "transitions": result.transitions,
            "time_s": round(result.elapsed_s, 3),
            "strategy": result.strategy,
            "reason": result.reason,
            "witness": _witness_json(result.witness)}


def _write_report(report, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _exit_code(report) -> int:
    verdicts = [p["verdict"] for p in report.get("properties", [])]
    if any(v == "unknown" for v in verdicts):
        return 2
    if any(v in ("unreachable", "violated") for v in verdicts):
        return 1
    return 0


def _config_echo(config) -> dict:
    d = dataclasses.asdict(config)
    d["capacity_queues"] = [list(q) for q in d["capacity_queues"]]
    return d


def _verify_properties(args, config, workload):
    initial = build_cluster(config, workload)
    with open(args.properties, encoding="utf-8") as fh:
        _defs, obligations = checker.parse_properties(fh.read())
    if not obligations:
        raise SchedCheckError("property file contains no assertions")
    rows = []
    for prop in obligations:
        if isinstance(prop, checker.GoalExpr):
            label = f"cluster reaches {prop.name}"
            result = checker.verify(initial, prop, strategy=args.strategy,
                                    state_budget=args.state_budget,
                                    time_budget_s=args.time_budget)
        else:
            from .model import PHASE_NAMES
            label = f"task {prop.task_id} {prop.mode} {PHASE_NAMES[prop.phase]}"
            result = checker.verify_assertion(
                initial, prop, strategy=args.strategy,
                state_budget=args.state_budget,
                time_budget_s=args.time_budget)
        rows.append((label, result))
    return initial, rows


def _print_table(rows):
    print(f"{'Property':<48} {'Valid?':<8} {'#States':>10} {'Time(s)':>9}")
    for label, result in rows:
        valid = {"reachable": "Yes", "holds": "Yes",
                 "unreachable": "No", "violated": "No"}.get(result.verdict, "?")
        print(f"{label:<48} {valid:<8} {result.states:>10} "
              f"{result.elapsed_s:>9.2f}")


def cmd_verify(args) -> int:
    config, workload = _load_inputs(args)
    initial, rows = _verify_properties(args, config, workload)
    report = {
        "version": VERSION,
        "command": "verify",
        "config": _config_echo(config),
        "trace_stats": dataclasses.asdict(trace_mod.stats(workload)),
        "properties": [_result_json(label, r) for label, r in rows],
    }
    _print_table(rows)
    _write_report(report, args.out)
    return _exit_code(report)


def cmd_analyze(args) -> int:
    config, workload = _load_inputs(args)
    initial, rows = _verify_properties(args, config, workload)
    goal_rows = [(label, r) for label, r in rows
                 if not label.startswith("task ")]
    if not goal_rows:
        raise SchedCheckError("analysis needs a 'cluster reaches' assertion")
    label, result = goal_rows[0]
    report = {
        "version": VERSION,
        "command": "analyze",
        "config": _config_echo(config),
        "trace_stats": dataclasses.asdict(trace_mod.stats(workload)),
        "properties": [_result_json(label, result)],
    }
    if result.conclusive:
        if result.verdict == "reachable":
            final = analysis.run_to_quiescence(
                replay(initial, result.witness.steps))
        else:
            final = analysis.run_to_quiescence(initial)
        witness = checker.make_witness((), final)
        predicted = analysis.predicted_outcomes(final)
        cm = analysis.classify(predicted, workload)
        report["rates"] = compute_rates(final).as_dict()
        report["confusion_matrix"] = cm.as_dict()
        report["breakdown"] = analysis.breakdown(witness).as_dict()
        if workload.failed_count > 0:
            df = analysis.detected_failures(cm, workload)
            report["detected_failures"] = {"df_pct": df.df_pct,
                                           "defined_over": df.defined_over}
        print(f"{'':<14} {'TP':>8} {'TN':>8} {'FP':>8} {'FN':>8} {'DF':>8}")
        df_txt = (f"{report['detected_failures']['df_pct']:.2f}"
                  if "detected_failures" in report else "n/a")
        print(f"{'% of tasks':<14} {cm.tp_pct:>8.2f} {cm.tn_pct:>8.2f} "
              f"{cm.fp_pct:>8.2f} {cm.fn_pct:>8.2f} {df_txt:>8}")
    _write_report(report, args.out)
    return _exit_code(report)


def _parse_scenario_file(path, base: ClusterConfig) -> whatif.Scenario:
    from .config import parse_config_text
    label = ""
    delta = {}
    with open(path, encoding="utf-8") as fh:
        lines = []
        for raw in fh:
            line = raw.split("#")[0].strip()
            if not line:
                continue
            key = line.split("=", 1)[0].strip()
            if key == "label":
                label = line.split("=", 1)[1].strip()
            else:
                lines.append(line)
    if lines:
        overridden = parse_config_text("\n".join(lines))
        defaults = ClusterConfig()
        for f in dataclasses.fields(ClusterConfig):
            v = getattr(overridden, f.name)
            if v != getattr(defaults, f.name):
                delta[f.name] = v
    return whatif.Scenario(base, delta, label or path)


def cmd_whatif(args) -> int:
    config, workload = _load_inputs(args)
    with open(args.properties, encoding="utf-8") as fh:
        _defs, obligations = checker.parse_properties(fh.read())
    goals = [p for p in obligations if isinstance(p, checker.GoalExpr)]
    if not goals:
        raise SchedCheckError("what-if needs a 'cluster reaches' assertion")
    goal = goals[0]
    reports = []
    if args.sweep:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if args.sweep != "scheduler":
            values = [int(v) for v in values]
        reports = whatif.sweep(config, args.sweep, values, workload, goal,
                               strategy=args.strategy,
                               state_budget=args.state_budget,
                               time_budget_s=args.time_budget)
    else:
        if not args.scenario:
            raise SchedCheckError("--scenario FILE or --sweep required")
        scenario = _parse_scenario_file(args.scenario, config)
        reports = [whatif.run(scenario, workload, goal,
                              strategy=args.strategy,
                              state_budget=args.state_budget,
                              time_budget_s=args.time_budget)]
    report = {
        "version": VERSION,
        "command": "whatif",
        "config": _config_echo(config),
        "goal": goal.name,
        "comparisons": [r.as_dict() for r in reports],
        "properties": [{"property": r.label,
                        "verdict": "reachable" if r.conclusive else "unknown",
                        "states": r.baseline.states + r.scenario.states}
                       for r in reports],
    }
    print(f"{'Scenario':<24} {'Base%':>8} {'Scen%':>8} {'Δpts':>8} {'Rate%':>8}")
    for r in reports:
        print(f"{r.label:<24} {r.baseline_failure_pct:>8.2f} "
              f"{r.scenario_failure_pct:>8.2f} "
              f"{r.absolute_reduction_pts:>8.2f} "
              f"{r.reduction_rate_pct:>8.2f}")
    _write_report(report, args.out)
    if any(not r.conclusive for r in reports):
        return 2
    return 0


def cmd_gen(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = trace_mod.parse_generator_spec(fh.read())
    generated = trace_mod.synthesize(spec, seed=args.seed)
    trace_mod.write(generated, args.out)
    st = trace_mod.stats(generated)
    print(f"wrote {st.task_count} tasks / {st.job_count} jobs to {args.out} "
          f"(failure fraction {st.failure_fraction_pct:.2f}%)")
    return 0


def _build_parser():
    p = argparse.ArgumentParser(
        prog="schedcheck",
        description="Formal analysis of cluster scheduler behaviour: "
                    "verify reachability properties, grade predictions "
                    "against trace ground truth, compare configurations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, traced=True):
        sp.add_argument("--config", help="cluster config file (key=value)")
        if traced:
            sp.add_argument("--trace", nargs="+", required=True,
                            help="workload trace CSV file(s)")
        sp.add_argument("--scheduler", choices=["fifo", "fair", "capacity"],
                        help="override the configured scheduling policy")
        sp.add_argument("--strategy", choices=list(checker.STRATEGIES),
                        default="dfs-sym")
        sp.add_argument("--state-budget", type=int, default=5_000_000)
        sp.add_argument("--time-budget", type=float, default=0.0,
                        help="wall-clock budget in seconds (0 = none)")
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("verify", help="check properties against a workload")
    common(sp)
    sp.add_argument("--properties", required=True)
    sp.add_argument("--truth", action="store_true",
                    help="accepted for interface symmetry; verification "
                         "does not use outcome labels")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("analyze",
                        help="grade model predictions against trace outcomes")
    common(sp)
    sp.add_argument("--properties", required=True)
    sp.add_argument("--truth", action="store_true", default=True,
                    help="use the trace outcome column as ground truth")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("whatif", help="compare configurations")
    common(sp)
    sp.add_argument("--properties", required=True)
    sp.add_argument("--scenario", help="config-override file")
    sp.add_argument("--sweep", choices=["nodes", "slots", "timeout",
                                        "scheduler"])
    sp.add_argument("--values", default="",
                    help="comma-separated sweep values")
    sp.set_defaults(func=cmd_whatif)

    sp = sub.add_parser("gen", help="synthesize a workload trace CSV")
    common(sp, traced=False)
    sp.add_argument("--spec", required=True,
                    help="generator parameters (key=value)")
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen" and getattr(args, "out", None) is None:
            print("error: gen requires --out", file=sys.stderr)
            return 3
        return args.func(args)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; --help exits 0
        return 0 if exc.code in (0, None) else 3
    except SchedCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
