"""Command-line entry points.

Exit codes follow the harness contract: 0 all passed, 1 any scenario or
validator failure, 2 configuration/parsing error.
"""

import argparse
import asyncio
import dataclasses
import json
import sys
from pathlib import Path

from .formats import (
    FormatError,
    PlannedSpec,
    link_scenario,
    load_scenario,
    parse_mission,
    parse_route_network,
    parse_scenario,
)
from .harness import build_reasoner, compare_runs, run_scenario, run_suite, write_suite_reports
from .reasoner import BaselineReasoner, PlannerConfig
from .server import SimServer, SimSession

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _apply_overrides(bundle, args):
    scenario = bundle.scenario
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        scenario = dataclasses.replace(scenario, **changes)
        bundle = dataclasses.replace(bundle, scenario=scenario)
    return bundle


def _reasoner_for(bundle, args):
    if not any(isinstance(o.behavior, PlannedSpec) for o in bundle.scenario.objects):
        return None
    params = {}
    if getattr(args, "mode", None):
        params["mode"] = args.mode
    return BaselineReasoner(PlannerConfig(**params))


def _print_report(report):
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"[{verdict}] {report.scenario_id}: {report.steps} steps, "
        f"{report.simulated_duration:.2f} simulated s in {report.wall_duration:.2f} wall s, "
        f"trace {report.trace_hash}, terminated by {report.termination}"
    )
    if report.error:
        print(f"  error: {report.error}")
    for violation in report.violations[:10]:
        print(f"  violation [{violation.validator}] t={violation.clock:.2f}: {violation.message}")
    rest = len(report.violations) - 10
    if rest > 0:
        print(f"  ... and {rest} more violations")


def cmd_run(args) -> int:
    if args.suite:
        suite = run_suite(args.suite, report_dir=args.report_dir, workers=args.workers)
        for report in suite.reports:
            _print_report(report)
        print(f"suite: {suite.passed_count}/{len(suite.reports)} passed")
        return EXIT_OK if suite.all_passed else EXIT_FAILED
    if not args.scenario:
        print("run: need a scenario file or --suite manifest", file=sys.stderr)
        return EXIT_CONFIG
    bundle = _apply_overrides(load_scenario(args.scenario), args)
    report = run_scenario(bundle, reasoner=_reasoner_for(bundle, args), dt=args.dt)
    _print_report(report)
    if args.report_dir:
        from .harness import SuiteReport
        import datetime

        suite = SuiteReport(
            reports=(report,),
            timestamp=datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%SZ"),
            revision="cli",
        )
        write_suite_reports(suite, args.report_dir)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_serve(args) -> int:
    bundle = _apply_overrides(load_scenario(args.scenario), args)
    session = SimSession(bundle, dt=args.dt or 0.02, reasoner=_reasoner_for(bundle, args))
    if args.time_scale is not None:
        session.time_scale = args.time_scale
    server = SimServer(session, host=args.host, port=args.port)

    async def main():
        task = asyncio.ensure_future(server.serve())
        while server.bound_port is None and not task.done():
            await asyncio.sleep(0.01)
        if server.bound_port is not None:
            print(f"serving {bundle.scenario.id!r} on {args.host}:{server.bound_port}", flush=True)
        await task

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def _parse_reasoner_item(item: str):
    name, _, param_text = item.partition(":")
    params = {}
    if param_text:
        for pair in param_text.split(","):
            key, _, value = pair.partition("=")
            if not key or not value:
                raise FormatError(f"bad reasoner parameter {pair!r} in {item!r}")
            try:
                params[key] = float(value)
            except ValueError:
                params[key] = value
    spec = {"type": name, **params} if params else name
    return item, build_reasoner(spec)


def cmd_compare(args) -> int:
    bundle = _apply_overrides(load_scenario(args.scenario), args)
    items = [part.strip() for part in args.reasoners.split(",") if part.strip()]
    if len(items) < 2:
        print("compare: need at least two --reasoners entries", file=sys.stderr)
        return EXIT_CONFIG
    labeled = [_parse_reasoner_item(item) for item in items]
    comparison = compare_runs(bundle, labeled, dt=args.dt)
    for entry in comparison.entries:
        status = "ok" if entry.passed else "failed"
        completion = "-" if entry.completion_clock is None else f"{entry.completion_clock:.2f}s"
        print(
            f"{entry.label}: {status}, completion {completion}, "
            f"{entry.violation_count} violations, trace {entry.trace_hash}"
        )
        if entry.error:
            print(f"  error: {entry.error}")
    for pair, step in comparison.divergences:
        where = "never" if step is None else f"step {step}"
        print(f"divergence {pair[0]} vs {pair[1]}: {where}")
    return EXIT_OK


def cmd_check(args) -> int:
    path = Path(args.file)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".rnd":
        network = parse_route_network(text)
        lanes = len(network.lanes)
        print(f"OK: route network with {len(network.segments)} segments, {lanes} lanes")
        return EXIT_OK
    doc = json.loads(text)
    if "checkpoints" in doc:
        mission = parse_mission(text)
        print(f"OK: mission with {len(mission.checkpoints)} checkpoints")
        return EXIT_OK
    if path.suffix == ".json" and "scenarios" in doc:
        print("OK: looks like a suite manifest (run it with: pearlsim run --suite)")
        return EXIT_OK
    scenario = parse_scenario(text)
    if scenario.route_network_ref or scenario.mission_ref:
        bundle = load_scenario(path)
        scenario = bundle.scenario
    print(f"OK: scenario {scenario.id!r} with {len(scenario.objects)} objects")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pearlsim",
        description="Deterministic 2-D driving simulation and validation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario, or a suite manifest with --suite")
    run_p.add_argument("scenario", nargs="?", help="scenario JSON file")
    run_p.add_argument("--suite", help="suite manifest JSON file")
    run_p.add_argument("--report-dir", help="where to write report.json/report.html/history")
    run_p.add_argument("--workers", type=int, default=None, help="parallel scenario jobs")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--dt", type=float, help="override the step size in seconds")
    run_p.add_argument("--mode", choices=["linear", "bspline"], help="trajectory interpolation")
    run_p.set_defaults(func=cmd_run)

    serve_p = sub.add_parser("serve", help="interactive mode: step in scaled real time and serve the protocol")
    serve_p.add_argument("scenario")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=0, help="0 picks a free port")
    serve_p.add_argument("--time-scale", type=float, default=None)
    serve_p.add_argument("--seed", type=int)
    serve_p.add_argument("--dt", type=float)
    serve_p.add_argument("--mode", choices=["linear", "bspline"])
    serve_p.set_defaults(func=cmd_serve)

    compare_p = sub.add_parser("compare", help="race several reasoners on one scenario")
    compare_p.add_argument("scenario")
    compare_p.add_argument(
        "--reasoners",
        required=True,
        help="comma list, e.g. baseline,baseline:cruise_speed=7",
    )
    compare_p.add_argument("--seed", type=int)
    compare_p.add_argument("--dt", type=float)
    compare_p.set_defaults(func=cmd_compare)

    check_p = sub.add_parser("check", help="parse and validate a scenario/route/mission file")
    check_p.add_argument("file")
    check_p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
