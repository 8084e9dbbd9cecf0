"""Command line front end.

``depsim run`` executes a scenario file and optionally writes the JSONL
trace and a JSON metrics report; ``depsim verify`` replays the
invariant checks over a previously written trace. Exit codes: 0 on
success, 2 for an unusable scenario or trace file, 3 when verification
finds violations.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .metrics import compute_metrics
from .run import SimulationRun
from .scenario import ScenarioError, load_scenario
from .tracing import MalformedTrace, dump_jsonl, load_jsonl
from .verify import verify_trace


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depsim", description="dependable-system simulation runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario")
    run_p.add_argument("--scenario", required=True, help="scenario file (YAML or JSON)")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario's master seed")
    run_p.add_argument("--until", type=int, default=None, help="override the scenario's end tick")
    run_p.add_argument("--trace-out", default=None, help="write the event trace as JSONL")
    run_p.add_argument("--metrics-out", default=None, help="write the metrics report as JSON")
    run_p.add_argument("--verify", action="store_true", help="run trace invariant checks after the run")
    run_p.add_argument("--quiet", action="store_true", help="suppress the summary line")

    ver_p = sub.add_parser("verify", help="check an existing trace file")
    ver_p.add_argument("--trace", required=True, help="JSONL trace file to check")
    ver_p.add_argument("--scenario", default=None, help="scenario file for topology-aware checks")
    ver_p.add_argument("--quiet", action="store_true", help="suppress the ok line")
    return parser


def _print_violations(violations) -> None:
    for v in violations:
        where = f"t={v.at}" + (f", node={v.node}" if v.node is not None else "")
        print(f"violation {v.check}: {v.message} ({where})", file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.until is not None:
        scenario = replace(scenario, until=args.until)

    run = SimulationRun(scenario).run()
    entries = run.trace
    if args.trace_out:
        dump_jsonl(entries, args.trace_out)
    if args.metrics_out:
        report = compute_metrics(entries, scenario)
        with open(args.metrics_out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=False)
            fh.write("\n")
    if not args.quiet:
        print(f"scenario={scenario.name} seed={scenario.seed} until={scenario.until} events={len(entries)}")
    if args.verify:
        violations = verify_trace(entries, scenario.base_latency, scenario.topology)
        if violations:
            _print_violations(violations)
            return 3
        if not args.quiet:
            print("verify: ok")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    base_latency = 1
    topology = None
    if args.scenario is not None:
        try:
            scenario = load_scenario(args.scenario)
        except ScenarioError as exc:
            print(f"scenario error: {exc}", file=sys.stderr)
            return 2
        base_latency = scenario.base_latency
        topology = scenario.topology
    try:
        entries = load_jsonl(args.trace)
    except (OSError, MalformedTrace) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 2
    violations = verify_trace(entries, base_latency, topology)
    if violations:
        _print_violations(violations)
        return 3
    if not args.quiet:
        print(f"verify: ok ({len(entries)} entries)")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
