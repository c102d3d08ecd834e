"""Acceptance suite: the exit criteria for the simulator and harness.

One test per criterion, run at its stated tolerance; each prints a PASS line
on success (run with ``pytest -s tests/test_acceptance.py`` to see them, or
``-v`` for pytest's own verdict lines). The two browser-console criteria
live in frontend/tests, which drive a live server over the wire.
"""

import math
import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pearlsim.formats import (
    FormatError,
    load_scenario,
    parse_mission,
    parse_route_network,
    parse_scenario,
    serialize_mission,
    serialize_route_network,
    serialize_scenario,
)
from pearlsim.geometry import (
    Gate,
    Trajectory,
    bspline_basis,
    bspline_point,
    build_path_table,
    corridor_contains,
    normalize_angle,
)
from pearlsim.harness import compare_runs, run_scenario, _execute
from pearlsim.reasoner import BaselineReasoner, PlannerConfig
from pearlsim.validators import (
    CorridorKeepingValidator,
    MinDistanceValidator,
    SpeedLimitValidator,
    TimeoutValidator,
)

from conftest import FIXTURES
from test_formats import missions, route_networks, scenarios
from test_geometry import random_trajectory, winding_number_contains


def _report(name):
    print(f"\nACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# Spline evaluation


def test_spline_matches_symbolic_oracle():
    sympy = pytest.importorskip("sympy")
    t = sympy.symbols("t")
    symbolic = [
        sympy.expand((1 - t) ** 3 / 6),
        sympy.expand((3 * t**3 - 6 * t**2 + 4) / 6),
        sympy.expand((-3 * t**3 + 3 * t**2 + 3 * t + 1) / 6),
        sympy.expand(t**3 / 6),
    ]
    weight_fns = [sympy.lambdify(t, expr, "math") for expr in symbolic]

    rng = random.Random(2024)
    worst = 0.0
    for _ in range(1000):
        m = [(rng.uniform(-100, 100), rng.uniform(-100, 100)) for _ in range(4)]
        tv = rng.random()
        weights = [fn(tv) for fn in weight_fns]
        want_x = sum(w * p[0] for w, p in zip(weights, m))
        want_y = sum(w * p[1] for w, p in zip(weights, m))
        got_x, got_y = bspline_point(*m, tv)
        worst = max(worst, abs(got_x - want_x), abs(got_y - want_y))
    assert worst <= 1e-9

    for _ in range(50):
        m = [(rng.uniform(-100, 100), rng.uniform(-100, 100)) for _ in range(4)]
        start = bspline_point(*m, 0.0)
        end = bspline_point(*m, 1.0)
        want_start = tuple((m[0][k] + 4 * m[1][k] + m[2][k]) / 6 for k in (0, 1))
        want_end = tuple((m[1][k] + 4 * m[2][k] + m[3][k]) / 6 for k in (0, 1))
        assert abs(start[0] - want_start[0]) <= 1e-12
        assert abs(start[1] - want_start[1]) <= 1e-12
        assert abs(end[0] - want_end[0]) <= 1e-12
        assert abs(end[1] - want_end[1]) <= 1e-12
    _report("spline evaluation matches the symbolic oracle (1e-9 / endpoints 1e-12)")


def test_partition_of_unity_and_constant_curve():
    for k in range(1000):
        tv = k / 999
        assert abs(sum(bspline_basis(tv)) - 1.0) <= 1e-12
    p = (12.75, -3.125)
    for k in range(100):
        tv = k / 99
        x, y = bspline_point(p, p, p, p, tv)
        assert abs(x - p[0]) <= 1e-12
        assert abs(y - p[1]) <= 1e-12
    _report("partition of unity within 1e-12; coincident controls give a constant curve")


def test_spline_smoother_than_linear_on_zigzag():
    start = time.perf_counter()
    mids = [(5.0 * i, 1.0 if i % 2 else -1.0) for i in range(10)]
    linear = build_path_table(mids, "linear", resolution=100)
    spline = build_path_table(mids, "bspline", resolution=100)

    def max_delta(table):
        return max(
            abs(normalize_angle(b - a)) for a, b in zip(table.headings, table.headings[1:])
        )

    assert max_delta(spline) <= max_delta(linear)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _report(f"zig-zag spline is smoother than linear (built in {elapsed * 1000:.0f} ms)")


# ---------------------------------------------------------------------------
# Corridor containment


def test_corridor_agrees_with_winding_oracle_10k():
    rng = random.Random(77)
    disagreements = 0
    checked = 0
    for _ in range(10):
        trajectory = random_trajectory(rng, n_gates=8)
        strips = [
            (g0.left, g0.right, g1.right, g1.left)
            for g0, g1 in zip(trajectory.gates, trajectory.gates[1:])
        ]
        for _ in range(1000):
            point = (rng.uniform(-8, 45), rng.uniform(-9, 9))
            want = any(winding_number_contains(strip, point) for strip in strips)
            got = corridor_contains(trajectory, point)
            disagreements += got != want
            checked += 1
    assert checked == 10_000
    assert disagreements == 0
    _report("corridor containment agrees with the winding-number oracle on 10,000 points")


# ---------------------------------------------------------------------------
# Determinism and speed


def test_canonical_runs_are_bit_identical():
    bundle = load_scenario(FIXTURES / "canonical.json")
    first = run_scenario(bundle, reasoner=BaselineReasoner())
    second = run_scenario(bundle, reasoner=BaselineReasoner())
    assert first.passed and second.passed
    assert first.trace_hash == second.trace_hash
    assert first.steps == second.steps == 6000
    _report(f"canonical scenario replays to the identical trace hash {first.trace_hash}")


def test_copy_mode_insertion_order_independence():
    def scenario_text(order):
        objects = {
            "runner": """{"id": "runner", "role": "traffic",
                "shape": {"kind": "oriented-rectangle", "length": 4.0, "width": 2.0},
                "pose": {"x": 0.0, "y": 0.0, "heading": 0.0},
                "behavior": {"type": "trajectory", "cruise_speed": 5.0, "mode": "bspline",
                    "gates": [
                        {"left": [0.0, 2.0], "right": [0.0, -2.0]},
                        {"left": [40.0, 4.0], "right": [40.0, 0.0]},
                        {"left": [80.0, 2.0], "right": [80.0, -2.0]}
                    ]}}""",
            "wanderer": """{"id": "wanderer", "role": "traffic",
                "shape": {"kind": "oriented-rectangle", "length": 4.0, "width": 2.0},
                "pose": {"x": 0.0, "y": 10.0, "heading": 0.0},
                "behavior": {"type": "keyboard"}}""",
            "rock": """{"id": "rock", "role": "static-obstacle",
                "shape": {"kind": "circle", "radius": 1.0},
                "pose": {"x": 20.0, "y": -5.0, "heading": 0.0}}""",
            "parked": """{"id": "parked", "role": "traffic",
                "shape": {"kind": "oriented-rectangle", "length": 4.0, "width": 2.0},
                "pose": {"x": 5.0, "y": 5.0, "heading": 1.0},
                "behavior": {"type": "hold"}}""",
        }
        body = ",".join(objects[name] for name in order)
        return f'{{"id": "perm", "seed": 5, "update_mode": "copy", "objects": [{body}]}}'

    def run(order):
        from pearlsim.factory import create_world
        from pearlsim.formats import link_scenario

        bundle = link_scenario(parse_scenario(scenario_text(order)), None, None)
        world = create_world(bundle)
        for _ in range(100):
            world.step(0.05)
        snapshot = world.snapshot()
        return {
            line.split()[0]: line
            for line in snapshot.canonical().splitlines()[1:]
        }

    base = run(["runner", "wanderer", "rock", "parked"])
    permuted = run(["parked", "rock", "wanderer", "runner"])
    assert base == permuted
    _report("copy-mode post-step poses are exactly identical under insertion-order permutation")


def test_faster_than_real_time():
    bundle = load_scenario(FIXTURES / "canonical.json")
    start = time.perf_counter()
    report = run_scenario(bundle, reasoner=BaselineReasoner())
    wall = time.perf_counter() - start
    assert report.simulated_duration >= 59.99
    assert wall <= 3.0
    _report(f"60 simulated seconds in {wall:.2f} s wall time ({60 / wall:.0f}x real time)")


# ---------------------------------------------------------------------------
# Stop rule


def test_stop_rule_margin_and_halt():
    bundle = load_scenario(FIXTURES / "stop.json")
    result = _execute(bundle, reasoner=BaselineReasoner())
    assert result.report.passed  # min_distance(8) validator verdict
    gaps = [math.hypot(p.x - 30.0, p.y) for p in result.ego_poses]
    min_gap = min(gaps)
    assert min_gap >= 8.0
    final_displacement = result.ego_poses[-1].distance_to(result.ego_poses[-2])
    assert final_displacement == 0.0  # halted: zero speed at the end
    _report(f"stop rule holds: minimum obstacle gap {min_gap:.2f} m >= 8 m, final speed 0")


# ---------------------------------------------------------------------------
# Validator soundness


def test_validator_soundness_handbuilt_scenarios():
    from pearlsim.behaviors import RouteBehavior
    from pearlsim.world import ObjectShape, SimObject, WorldModel
    from pearlsim.geometry import Pose

    # Speeding: a 12 m/s car against a 10 m/s limit, one violation per step.
    world = WorldModel()
    world.add_object(
        SimObject("racer", "traffic", ObjectShape.rectangle(4, 2), Pose(0, 0, 0),
                  behavior=RouteBehavior([(0, 0), (1000, 0)], cruise_speed=12.0))
    )
    speed_check = SpeedLimitValidator(10.0)
    for _ in range(50):
        report = world.step(0.1)
        speed_check.on_step(world.snapshot(), report)
    assert not speed_check.has_passed()
    assert len(speed_check.violations) == 50
    assert all(v.value == pytest.approx(12.0) and v.threshold == 10.0 for v in speed_check.violations)

    # Corridor exit: the corridor bends away from the car's straight path.
    corridor = Trajectory(
        (
            Gate(left=(0, 4), right=(0, 0)),
            Gate(left=(10, 4), right=(10, 0)),
            Gate(left=(20, 14), right=(20, 10)),
        )
    )
    world = WorldModel()
    world.add_object(
        SimObject("ego", "ego", ObjectShape.rectangle(4, 2), Pose(0, 2, 0),
                  behavior=RouteBehavior([(0, 2), (30, 2)], cruise_speed=5.0))
    )
    keeping = CorridorKeepingValidator(corridor, object_id="ego")
    outside_steps = []
    violation_steps = []
    for step in range(100):
        report = world.step(0.05)
        snapshot = world.snapshot()
        if keeping.on_step(snapshot, report):
            violation_steps.append(step)
        if not corridor_contains(corridor, snapshot.object("ego").pose.position):
            outside_steps.append(step)
    assert not keeping.has_passed()
    assert violation_steps == outside_steps

    # Near miss: two cars closing head-on violate min_distance exactly when
    # their center distance drops below the threshold.
    world = WorldModel()
    world.add_object(
        SimObject("east", "traffic", ObjectShape.rectangle(4, 2), Pose(0, 0, 0),
                  behavior=RouteBehavior([(0, 0), (100, 0)], cruise_speed=5.0))
    )
    world.add_object(
        SimObject("west", "traffic", ObjectShape.rectangle(4, 2), Pose(30, 0, 0),
                  behavior=RouteBehavior([(30, 0), (-70, 0)], cruise_speed=5.0))
    )
    distance_check = MinDistanceValidator(6.0)
    expected_first = None
    got_first = None
    for step in range(60):
        report = world.step(0.1)
        snapshot = world.snapshot()
        found = distance_check.on_step(snapshot, report)
        gap = snapshot.object("east").pose.distance_to(snapshot.object("west").pose)
        if expected_first is None and gap < 6.0:
            expected_first = step
        if got_first is None and found:
            got_first = step
    assert not distance_check.has_passed()
    assert got_first == expected_first

    # Timeout: a 1-second budget on a 100 m mission.
    bundle = load_scenario(FIXTURES / "straight.json")
    timeout_check = TimeoutValidator(1.0)
    report = run_scenario(
        bundle, reasoner=BaselineReasoner(), validators=[timeout_check], run_seconds=2.0
    )
    assert not timeout_check.has_passed()
    assert len(timeout_check.violations) == 1
    assert timeout_check.violations[0].value > 1.0

    # And the obstacle-free mission passes every built-in validator.
    clean = run_scenario(load_scenario(FIXTURES / "straight.json"), reasoner=BaselineReasoner())
    assert clean.passed
    assert clean.violations == ()
    _report("hand-built violation scenarios produce exactly the expected records; clean mission passes")


# ---------------------------------------------------------------------------
# Multi-instance comparison


def test_multi_instance_comparison():
    start = time.perf_counter()
    bundle = load_scenario(FIXTURES / "straight.json")

    same = compare_runs(bundle, [("a", BaselineReasoner()), ("b", BaselineReasoner())])
    assert same.entries[0].trace_hash == same.entries[1].trace_hash
    assert same.divergence("a", "b") is None

    raced = compare_runs(
        bundle,
        [
            ("cruise-10", BaselineReasoner(PlannerConfig(cruise_speed=10.0))),
            ("cruise-7", BaselineReasoner(PlannerConfig(cruise_speed=7.0))),
        ],
    )
    fast, slow = raced.entries
    assert fast.passed and slow.passed
    assert fast.completion_clock < slow.completion_clock
    assert raced.divergence("cruise-10", "cruise-7") is not None
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0
    _report(f"multi-instance comparison: identical twins, ordered completions ({elapsed:.1f} s)")


# ---------------------------------------------------------------------------
# Format round-trips

ROUND_TRIP_COUNTS = {"networks": 0, "missions": 0, "scenarios": 0}


@given(route_networks())
@settings(max_examples=400, deadline=None)
def test_roundtrip_networks(network):
    assert parse_route_network(serialize_route_network(network)) == network
    ROUND_TRIP_COUNTS["networks"] += 1


@given(missions())
@settings(max_examples=300, deadline=None)
def test_roundtrip_missions(mission):
    assert parse_mission(serialize_mission(mission)) == mission
    ROUND_TRIP_COUNTS["missions"] += 1


@given(scenarios())
@settings(max_examples=300, deadline=None)
def test_roundtrip_scenarios(scenario):
    assert parse_scenario(serialize_scenario(scenario)) == scenario
    ROUND_TRIP_COUNTS["scenarios"] += 1


def test_roundtrip_volume_and_error_fixtures():
    total = sum(ROUND_TRIP_COUNTS.values())
    assert total >= 1000, f"only {total} round-trip examples ran"

    checked = 0
    for path in sorted((FIXTURES / "broken").iterdir()):
        text = path.read_text(encoding="utf-8")
        with pytest.raises(FormatError) as err:
            if path.suffix == ".rnd":
                parse_route_network(text)
            elif "mission" in path.name:
                parse_mission(text)
            else:
                parse_scenario(text)
        assert err.value.line is not None or err.value.path is not None, path.name
        checked += 1
    assert checked == 13
    _report(
        f"{total} generated round-trips with zero mismatches; "
        f"{checked} error fixtures produced located diagnostics"
    )


# ---------------------------------------------------------------------------
# Validator non-interference


def test_validators_never_change_the_trace():
    bundle = load_scenario(FIXTURES / "canonical.json")
    with_validators = run_scenario(bundle, reasoner=BaselineReasoner())
    without = run_scenario(bundle, reasoner=BaselineReasoner(), validators=[])
    assert with_validators.trace_hash == without.trace_hash
    _report("trace hash identical with all 6 validators and with none attached")
