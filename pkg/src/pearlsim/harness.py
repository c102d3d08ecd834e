"""Scenario execution, suite running, and multi-instance comparison.

A run builds the world, steps it at fixed dt, invokes every validator after
every step, replans the ego through the reasoner at a fixed step interval,
and aggregates the verdict into a report with a deterministic trace hash.
Suites run scenario files in bulk, write machine- and human-readable
reports, and append to an on-disk run history for regression tracking.
"""

import datetime
import html
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .behaviors import TrajectoryBehavior
from .factory import create_world
from .formats import (
    FormatError,
    PlannedSpec,
    ScenarioBundle,
    TrajectoryFollowSpec,
    canonical_json,
    load_scenario,
)
from .geometry import Trajectory, corridor_contains
from .reasoner import BaselineReasoner, PlannerConfig, Reasoner
from .trace import TraceHasher
from .validators import (
    CheckpointCompletionValidator,
    CollisionValidator,
    CorridorKeepingValidator,
    MinDistanceValidator,
    MissionTracker,
    SpeedLimitValidator,
    TimeoutValidator,
    Violation,
)
from .views import SensorConfig, degrade, extract

DEFAULT_DT = 0.01
DEFAULT_RUN_SECONDS = 60.0
DEFAULT_REPLAN_STEPS = 10  # 10 Hz replanning at the default dt

_DEFAULT_SENSOR = SensorConfig(range_m=200.0)


@dataclass(frozen=True)
class TestReport:
    """Per-scenario verdict: violations, pass/fail, trace hash, timing."""

    scenario_id: str
    passed: bool
    violations: tuple[Violation, ...]
    steps: int
    simulated_duration: float
    wall_duration: float
    trace_hash: str
    termination: str
    error: str | None = None

    def to_doc(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "passed": self.passed,
            "violations": [v.to_doc() for v in self.violations],
            "steps": self.steps,
            "simulated_duration": self.simulated_duration,
            "wall_duration": self.wall_duration,
            "trace_hash": self.trace_hash,
            "termination": self.termination,
            "error": self.error,
        }


@dataclass(frozen=True)
class SuiteReport:
    reports: tuple[TestReport, ...]
    timestamp: str
    revision: str

    @property
    def passed_count(self) -> int:
        return sum(1 for r in self.reports if r.passed)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_doc(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "revision": self.revision,
            "totals": {
                "passed": self.passed_count,
                "failed": len(self.reports) - self.passed_count,
                "total": len(self.reports),
            },
            "reports": [r.to_doc() for r in self.reports],
        }


@dataclass(frozen=True)
class CompareEntry:
    label: str
    passed: bool
    completion_clock: float | None
    violation_count: int
    trace_hash: str
    error: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple[CompareEntry, ...]
    divergences: tuple[tuple[tuple[str, str], int | None], ...]

    def divergence(self, label_a: str, label_b: str) -> int | None:
        for pair, step in self.divergences:
            if set(pair) == {label_a, label_b}:
                return step
        raise KeyError((label_a, label_b))

    def to_doc(self) -> dict:
        return {
            "entries": [
                {
                    "label": e.label,
                    "passed": e.passed,
                    "completion_clock": e.completion_clock,
                    "violation_count": e.violation_count,
                    "trace_hash": e.trace_hash,
                    "error": e.error,
                }
                for e in self.entries
            ],
            "divergences": [
                {"pair": list(pair), "step": step} for pair, step in self.divergences
            ],
        }


@dataclass
class RunResult:
    report: TestReport
    ego_poses: list
    completion_clock: float | None


def make_validators(specs, bundle, plan_provider=None):
    """Build validator instances from scenario/manifest validator specs."""
    scenario = bundle.scenario
    built = []
    for spec in specs:
        params = dict(spec.params)
        try:
            if spec.kind == "min_distance":
                built.append(
                    MinDistanceValidator(params.pop("threshold"), object_id=params.pop("object_id", None))
                )
            elif spec.kind == "speed_limit":
                built.append(
                    SpeedLimitValidator(params.pop("limit"), object_id=params.pop("object_id", None))
                )
            elif spec.kind == "collision":
                built.append(CollisionValidator())
            elif spec.kind == "corridor_keeping":
                built.append(
                    CorridorKeepingValidator(plan_provider, object_id=params.pop("object_id", None))
                )
            elif spec.kind == "checkpoint_completion":
                if bundle.mission is None or bundle.network is None:
                    raise FormatError("checkpoint_completion needs a linked mission and network")
                built.append(
                    CheckpointCompletionValidator(
                        bundle.mission,
                        bundle.network,
                        object_id=params.pop("object_id", None),
                        radius=params.pop("radius", scenario.lane_width),
                    )
                )
            elif spec.kind == "timeout":
                built.append(TimeoutValidator(params.pop("max_seconds")))
            else:
                raise FormatError(f"unknown validator kind {spec.kind!r}")
        except KeyError as exc:
            raise FormatError(f"validator {spec.kind!r} missing parameter {exc.args[0]!r}") from None
        if params:
            raise FormatError(f"validator {spec.kind!r} has unknown parameters {sorted(params)}")
    return built


def _contract_violation(clock, ego_id, message):
    return Violation(
        validator="reasoner-contract",
        clock=clock,
        object_ids=(ego_id,),
        quantity="plan-valid",
        value=0.0,
        threshold=1.0,
        relation="<",
        message=message,
    )


class _Replanner:
    """Binds reasoner plans to the ego object at step boundaries."""

    def __init__(self, world, bundle, reasoner, current_plan, planner_config):
        self.world = world
        self.bundle = bundle
        self.reasoner = reasoner
        self.current_plan = current_plan
        self.config = planner_config
        self.contract_violations: list[Violation] = []
        scenario = bundle.scenario
        self.sensor = scenario.sensor or _DEFAULT_SENSOR
        self.degradation = scenario.degradation
        ego = world.ego()
        self.ego_id = ego.id if ego else None

    def replan(self) -> None:
        if self.ego_id is None:
            return
        snapshot = self.world.snapshot()
        ego_state = snapshot.object(self.ego_id)
        view = extract(snapshot, self.ego_id, self.sensor)
        if self.degradation is not None:
            view = degrade(view, self.degradation, self.world.rng_seed)
        try:
            plan = self.reasoner.plan(
                view, self.bundle.mission, self.bundle.network, ego_state.pose, snapshot.clock
            )
            if not isinstance(plan, Trajectory) or len(plan.gates) < 2:
                raise ValueError("plan must be a trajectory with at least 2 gates")
            if not corridor_contains(plan, ego_state.pose.position):
                raise ValueError("plan corridor does not contain the vehicle position")
        except Exception as exc:  # a broken reasoner fails the scenario, not the suite
            self.contract_violations.append(
                _contract_violation(snapshot.clock, self.ego_id, f"{type(exc).__name__}: {exc}")
            )
            return
        behavior = TrajectoryBehavior(
            plan,
            mode=self.config.mode,
            cruise_speed=self.config.cruise_speed,
            resolution=self.config.table_resolution,
            start_at_projection=True,
        )
        self.world.set_behavior(self.ego_id, behavior)
        self.current_plan[0] = plan


def _execute(bundle, reasoner=None, validators=None, validator_specs=None, plan_cell=None,
             dt=None, run_seconds=None, replan_interval=DEFAULT_REPLAN_STEPS,
             planner_config=None) -> RunResult:
    scenario = bundle.scenario
    dt = dt if dt is not None else (scenario.dt if scenario.dt is not None else DEFAULT_DT)

    world = create_world(bundle)
    ego = world.ego()

    current_plan = plan_cell if plan_cell is not None else [None]
    if ego is not None and current_plan[0] is None:
        for spec in scenario.objects:
            if spec.id == ego.id and isinstance(spec.behavior, TrajectoryFollowSpec):
                current_plan[0] = Trajectory(spec.behavior.gates)

    if validators is None:
        specs = scenario.validators + tuple(validator_specs or ())
        validators = make_validators(specs, bundle, lambda: current_plan[0])

    replanner = None
    if reasoner is not None:
        if bundle.mission is None or bundle.network is None:
            raise FormatError("running a reasoner requires a linked mission and route network")
        replanner = _Replanner(
            world, bundle, reasoner, current_plan, planner_config or _planner_config_of(reasoner)
        )

    tracker = None
    if bundle.mission is not None and bundle.network is not None and ego is not None:
        tracker = MissionTracker(bundle.mission, bundle.network, radius=scenario.lane_width)

    if run_seconds is not None:
        total, stop_on_mission = run_seconds, False
    elif scenario.duration is not None:
        total, stop_on_mission = scenario.duration, False
    elif scenario.timeout is not None:
        total, stop_on_mission = scenario.timeout + dt, True
    else:
        total, stop_on_mission = DEFAULT_RUN_SECONDS, tracker is not None

    max_steps = max(0, int(round(total / dt)))
    hasher = TraceHasher()
    ego_poses = []
    termination = "end-of-run"
    steps_done = 0
    wall_start = time.perf_counter()

    for step_idx in range(max_steps):
        if replanner is not None and step_idx % replan_interval == 0:
            replanner.replan()
        report = world.step(dt)
        snapshot = world.snapshot()
        if ego is not None:
            state = snapshot.object(ego.id)
            hasher.update(snapshot.clock, state.pose.x, state.pose.y, state.pose.heading)
            ego_poses.append(state.pose)
        if tracker is not None:
            tracker.update(snapshot, ego.id if ego else None)
        for validator in validators:
            validator.on_step(snapshot, report)
        steps_done = step_idx + 1
        if stop_on_mission and tracker is not None and tracker.complete:
            termination = "mission-complete"
            break

    final_snapshot = world.snapshot()
    for validator in validators:
        validator.finish(final_snapshot)

    wall = time.perf_counter() - wall_start
    violations = []
    for validator in validators:
        violations.extend(validator.violations)
    contract = replanner.contract_violations if replanner is not None else []
    violations.extend(contract)
    violations.sort(key=lambda v: (v.clock, v.validator))

    if tracker is not None and tracker.complete and termination == "end-of-run":
        termination = "mission-complete"
    # Mission completion gates the verdict only for runs that terminate on it
    # (timeout-style scenarios); fixed-duration runs judge by validators, so a
    # completion requirement is expressed with the checkpoint validator.
    termination_ok = termination == "mission-complete" if stop_on_mission else True
    passed = not violations and termination_ok

    report = TestReport(
        scenario_id=scenario.id,
        passed=passed,
        violations=tuple(violations),
        steps=steps_done,
        simulated_duration=world.clock,
        wall_duration=wall,
        trace_hash=hasher.hexdigest,
        termination=termination,
    )
    return RunResult(
        report=report,
        ego_poses=ego_poses,
        completion_clock=tracker.completion_clock if tracker is not None else None,
    )


def _planner_config_of(reasoner) -> PlannerConfig:
    return getattr(reasoner, "config", None) or PlannerConfig()


def run_scenario(bundle: ScenarioBundle, reasoner: Reasoner | None = None, validators=None,
                 plan_cell=None, dt: float | None = None, run_seconds: float | None = None,
                 replan_interval: int = DEFAULT_REPLAN_STEPS) -> TestReport:
    """Run one scenario to its termination condition and report the verdict.

    ``validators`` overrides the scenario's own validator specs with ready
    instances; pass ``plan_cell`` (a one-slot list) alongside when any of
    them needs to observe the ego's current plan.
    """
    return _execute(
        bundle,
        reasoner=reasoner,
        validators=validators,
        plan_cell=plan_cell,
        dt=dt,
        run_seconds=run_seconds,
        replan_interval=replan_interval,
    ).report


def build_reasoner(spec) -> Reasoner:
    """Reasoner registry for manifests and the CLI.

    Accepts "baseline" or {"type": "baseline", <PlannerConfig field>: value}.
    """
    if isinstance(spec, str):
        name, params = spec, {}
    elif isinstance(spec, dict):
        params = dict(spec)
        name = params.pop("type", None)
    else:
        raise FormatError(f"cannot build a reasoner from {spec!r}")
    if name != "baseline":
        raise FormatError(f"unknown reasoner {name!r}")
    try:
        return BaselineReasoner(PlannerConfig(**params))
    except TypeError as exc:
        raise FormatError(f"bad baseline reasoner parameters: {exc}") from None


def _run_suite_entry(entry, manifest_dir, default_dt):
    from .formats import _parse_validator  # same validator grammar as scenario files

    path = manifest_dir / entry["path"]
    try:
        bundle = load_scenario(path)
        extra_specs = tuple(
            _parse_validator(v, f"manifest validators[{i}]")
            for i, v in enumerate(entry.get("validators", []))
        )
        if "timeout" in entry:
            extra_specs += (
                _parse_validator(
                    {"type": "timeout", "max_seconds": entry["timeout"]}, "manifest timeout"
                ),
            )
        reasoner = None
        if entry.get("reasoner") is not None:
            reasoner = build_reasoner(entry["reasoner"])
        result = _execute(
            bundle,
            reasoner=reasoner,
            validator_specs=extra_specs,
            dt=entry.get("dt", default_dt),
        )
        return result.report
    except Exception as exc:
        return TestReport(
            scenario_id=str(entry.get("path", "?")),
            passed=False,
            violations=(),
            steps=0,
            simulated_duration=0.0,
            wall_duration=0.0,
            trace_hash="",
            termination="error",
            error=f"{type(exc).__name__}: {exc}",
        )


def run_suite(manifest_path, report_dir=None, revision=None, workers=None) -> SuiteReport:
    """Run every scenario in a suite manifest and emit report files.

    The manifest is JSON: {"scenarios": [{"path": ..., "reasoner": ...,
    "validators": [...], "dt": ...}], "dt": ..., "report_dir": ...,
    "revision": ..., "workers": ...}. A scenario that fails to parse fails
    its entry; the suite continues.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read suite manifest: {exc}") from None
    if not isinstance(manifest, dict) or not isinstance(manifest.get("scenarios"), list):
        raise FormatError("suite manifest must be an object with a 'scenarios' array")

    entries = manifest["scenarios"]
    for entry in entries:
        if not isinstance(entry, dict) or "path" not in entry:
            raise FormatError("each suite entry needs at least a 'path'")
    default_dt = manifest.get("dt")
    workers = workers or manifest.get("workers") or 1

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(
                pool.map(lambda e: _run_suite_entry(e, manifest_path.parent, default_dt), entries)
            )
    else:
        reports = [_run_suite_entry(e, manifest_path.parent, default_dt) for e in entries]

    suite = SuiteReport(
        reports=tuple(reports),
        timestamp=datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%SZ"),
        revision=revision or manifest.get("revision", "unversioned"),
    )

    out_dir = report_dir or manifest.get("report_dir")
    if out_dir is not None:
        write_suite_reports(suite, manifest_path.parent / out_dir)
    return suite


def write_suite_reports(suite: SuiteReport, report_dir) -> None:
    """Write report.json, report.html, and append to the run history."""
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    doc = canonical_json(suite.to_doc())
    (report_dir / "report.json").write_text(doc, encoding="utf-8")
    (report_dir / "report.html").write_text(render_suite_html(suite), encoding="utf-8")
    history = report_dir / "history"
    history.mkdir(exist_ok=True)
    (history / f"{suite.timestamp}_{suite.revision}.json").write_text(doc, encoding="utf-8")


def render_suite_html(suite: SuiteReport) -> str:
    rows = []
    for r in suite.reports:
        status = "PASS" if r.passed else "FAIL"
        detail = ""
        if r.error:
            detail = html.escape(r.error)
        elif r.violations:
            first = r.violations[0]
            detail = html.escape(f"{first.validator} at t={first.clock:.2f}: {first.message}")
            if len(r.violations) > 1:
                detail += f" (+{len(r.violations) - 1} more)"
        rows.append(
            f"<tr class={'pass' if r.passed else 'fail'}>"
            f"<td>{html.escape(r.scenario_id)}</td><td>{status}</td>"
            f"<td>{len(r.violations)}</td><td>{r.simulated_duration:.2f}</td>"
            f"<td>{r.wall_duration:.2f}</td><td>{detail}</td></tr>"
        )
    return f"""<!doctype html>
<html><head><meta charset="utf-8"><title>Suite report {suite.timestamp}</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
table {{ border-collapse: collapse; }}
td, th {{ border: 1px solid #999; padding: 4px 10px; }}
tr.pass td:nth-child(2) {{ background: #cfc; }}
tr.fail td:nth-child(2) {{ background: #fcc; }}
</style></head>
<body>
<h1>Suite report</h1>
<p>Run {html.escape(suite.timestamp)} at revision {html.escape(suite.revision)}:
{suite.passed_count}/{len(suite.reports)} passed.</p>
<table>
<tr><th>scenario</th><th>verdict</th><th>violations</th>
<th>simulated s</th><th>wall s</th><th>detail</th></tr>
{chr(10).join(rows)}
</table>
</body></html>
"""


DIVERGENCE_TOLERANCE = 1e-6


def _first_divergence(poses_a, poses_b) -> int | None:
    for k, (a, b) in enumerate(zip(poses_a, poses_b)):
        if a.distance_to(b) > DIVERGENCE_TOLERANCE:
            return k
    if len(poses_a) != len(poses_b):
        return min(len(poses_a), len(poses_b))
    return None


def compare_runs(bundle: ScenarioBundle, labeled_reasoners, dt: float | None = None,
                 replan_interval: int = DEFAULT_REPLAN_STEPS) -> ComparisonReport:
    """Run several reasoners on the identical scenario and seed, and compare.

    ``labeled_reasoners`` is a sequence of (label, reasoner) pairs; pass a
    fresh reasoner instance per entry, since reasoners keep mission memory.
    """
    labeled = list(labeled_reasoners)
    if len(labeled) < 2:
        raise ValueError("compare_runs needs at least 2 reasoners")
    entries = []
    traces = []
    for label, reasoner in labeled:
        try:
            result = _execute(bundle, reasoner=reasoner, dt=dt, replan_interval=replan_interval)
            entries.append(
                CompareEntry(
                    label=label,
                    passed=result.report.passed,
                    completion_clock=result.completion_clock,
                    violation_count=len(result.report.violations),
                    trace_hash=result.report.trace_hash,
                )
            )
            traces.append(result.ego_poses)
        except Exception as exc:
            entries.append(
                CompareEntry(
                    label=label, passed=False, completion_clock=None,
                    violation_count=0, trace_hash="", error=f"{type(exc).__name__}: {exc}",
                )
            )
            traces.append([])
    divergences = []
    for i in range(len(labeled)):
        for j in range(i + 1, len(labeled)):
            divergences.append(
                ((labeled[i][0], labeled[j][0]), _first_divergence(traces[i], traces[j]))
            )
    return ComparisonReport(entries=tuple(entries), divergences=tuple(divergences))
