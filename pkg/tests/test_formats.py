"""Format parsing, serialization round-trips, and diagnostic quality."""

import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pearlsim.formats import (
    Checkpoint,
    FormatError,
    HoldSpec,
    KeyboardSpec,
    Lane,
    Mission,
    PlannedSpec,
    RouteFollowSpec,
    RouteNetwork,
    Scenario,
    ScenarioObject,
    Segment,
    TrailerSpec,
    TrajectoryFollowSpec,
    ValidatorSpec,
    Waypoint,
    link_scenario,
    load_scenario,
    parse_mission,
    parse_route_network,
    parse_scenario,
    serialize_mission,
    serialize_route_network,
    serialize_scenario,
)
from pearlsim.geometry import Gate, Pose
from pearlsim.world import ObjectShape

FIXTURES = Path(__file__).parent.parent / "fixtures"

# Floats on the canonical 6-fractional-digit grid survive round-trips exactly.
grid_floats = st.integers(min_value=-2_000_000_000, max_value=2_000_000_000).map(
    lambda n: n / 1e6
)
positive_grid = st.integers(min_value=1, max_value=50_000_000).map(lambda n: n / 1e6)
headings = st.integers(min_value=-3_141_592, max_value=3_141_592).map(lambda n: n / 1e6)


@st.composite
def route_networks(draw):
    counter = iter(range(10_000))
    segments = []
    for i in range(draw(st.integers(1, 3))):
        lanes = []
        for j in range(draw(st.integers(1, 2))):
            waypoints = tuple(
                Waypoint(id=f"w{next(counter)}", x=draw(grid_floats), y=draw(grid_floats))
                for _ in range(draw(st.integers(2, 5)))
            )
            checkpoints = tuple(
                Checkpoint(id=f"c{next(counter)}", waypoint_id=draw(st.sampled_from(waypoints)).id)
                for _ in range(draw(st.integers(0, 2)))
            )
            lanes.append(
                Lane(
                    id=f"s{i}.l{j}",
                    width=draw(positive_grid),
                    speed_limit=draw(positive_grid),
                    waypoints=waypoints,
                    checkpoints=checkpoints,
                )
            )
        segments.append(Segment(id=f"s{i}", lanes=tuple(lanes)))
    return RouteNetwork(segments=tuple(segments))


@st.composite
def missions(draw):
    names = draw(st.lists(st.integers(0, 99), min_size=1, max_size=6, unique=True))
    cap = draw(st.none() | positive_grid)
    return Mission(checkpoints=tuple(f"cp{n}" for n in names), speed_cap=cap)


@st.composite
def gate_strings(draw):
    # Coordinates are assembled in integer micro-units so every value lands
    # exactly on the canonical 6-fractional-digit grid.
    n = draw(st.integers(2, 5))
    gates = []
    for i in range(n):
        cx = (i * 10_000_000 + draw(st.integers(-2_000_000, 2_000_000))) / 1e6
        cy = draw(st.integers(-5_000_000, 5_000_000))
        half = draw(st.integers(500_000, 3_000_000))
        speed = draw(st.none() | positive_grid)
        gates.append(
            Gate(
                left=(cx, (cy + half) / 1e6),
                right=(cx, (cy - half) / 1e6),
                target_speed=speed,
            )
        )
    return tuple(gates)


@st.composite
def behavior_specs(draw):
    kind = draw(st.sampled_from(["route", "trajectory", "keyboard", "hold", "planned"]))
    if kind == "route":
        return RouteFollowSpec(
            lane=f"lane{draw(st.integers(0, 9))}",
            cruise_speed=draw(positive_grid),
            loop=draw(st.booleans()),
        )
    if kind == "trajectory":
        return TrajectoryFollowSpec(
            gates=draw(gate_strings()),
            mode=draw(st.sampled_from(["linear", "bspline"])),
            cruise_speed=draw(positive_grid),
        )
    if kind == "keyboard":
        return KeyboardSpec(max_accel=draw(positive_grid), max_yaw_rate=draw(positive_grid))
    if kind == "hold":
        return HoldSpec()
    return PlannedSpec()


@st.composite
def scenario_objects(draw, index):
    role = draw(st.sampled_from(["ego", "traffic", "static-obstacle"]))
    if draw(st.booleans()):
        shape = ObjectShape.circle(draw(positive_grid))
    else:
        shape = ObjectShape.rectangle(draw(positive_grid), draw(positive_grid))
    behavior = None if role == "static-obstacle" else draw(behavior_specs())
    return ScenarioObject(
        id=f"obj{index}",
        role=role,
        shape=shape,
        pose=Pose(draw(grid_floats), draw(grid_floats), draw(headings)),
        speed=draw(positive_grid),
        behavior=behavior,
    )


_validator_spec_samples = st.sampled_from(["min_distance", "speed_limit", "collision", "timeout"])


@st.composite
def validator_specs(draw):
    kind = draw(_validator_spec_samples)
    if kind == "min_distance":
        return ValidatorSpec(kind=kind, params={"threshold": draw(positive_grid)})
    if kind == "speed_limit":
        return ValidatorSpec(kind=kind, params={"limit": draw(positive_grid)})
    if kind == "timeout":
        return ValidatorSpec(kind=kind, params={"max_seconds": draw(positive_grid)})
    return ValidatorSpec(kind=kind, params={})


@st.composite
def scenarios(draw):
    objects = tuple(
        draw(scenario_objects(index=i)) for i in range(draw(st.integers(0, 4)))
    )
    trailer_ok = [o for o in objects if o.behavior is not None]
    if len(trailer_ok) >= 2 and draw(st.booleans()):
        leader, follower = trailer_ok[0], trailer_ok[-1]
        objects = tuple(
            ScenarioObject(
                id=o.id, role=o.role, shape=o.shape, pose=o.pose, speed=o.speed,
                behavior=TrailerSpec(leader=leader.id, offset=draw(positive_grid)),
            )
            if o is follower else o
            for o in objects
        )
    return Scenario(
        id=f"scenario-{draw(st.integers(0, 999))}",
        objects=objects,
        seed=draw(st.integers(0, 2**63 - 1)),
        update_mode=draw(st.sampled_from(["sequential", "copy"])),
        lane_width=draw(st.integers(1_000_000, 9_000_000).map(lambda n: n / 1e6)),
        dt=draw(st.none() | st.integers(1_000, 1_000_000).map(lambda n: n / 1e6)),
        duration=draw(st.none() | positive_grid),
        timeout=draw(st.none() | positive_grid),
        route_network_ref=draw(st.none() | st.just("net.rnd")),
        mission_ref=draw(st.none() | st.just("mission.json")),
        validators=tuple(draw(st.lists(validator_specs(), max_size=3))),
    )


class TestRouteNetworkParsing:
    def test_minimal_network(self):
        net = parse_route_network(
            "segment s\n lane l width 3.0 speed 10\n  wp a 0 0\n  wp b 30 40\n end\nend\n"
        )
        assert len(net.segments) == 1
        lane = net.lane("l")
        assert lane.length == pytest.approx(50.0)
        assert net.waypoint("b").y == 40.0

    def test_comments_and_blank_lines(self):
        net = parse_route_network(
            "# header\n\nsegment s # trailing\n lane l width 1 speed 1\n  wp a 0 0\n  wp b 1 0\n end\nend\n"
        )
        assert net.lane("l").length == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "name, fragment, line",
        [
            ("missing_waypoint.rnd", "unknown waypoint", 5),
            ("unknown_keyword.rnd", "unknown keyword", 3),
            ("short_lane.rnd", "at least 2 waypoints", 2),
            ("bad_number.rnd", "must be a number", 2),
            ("duplicate_waypoint.rnd", "duplicate waypoint", 4),
        ],
    )
    def test_broken_fixture_diagnostics(self, name, fragment, line):
        text = (FIXTURES / "broken" / name).read_text()
        with pytest.raises(FormatError) as err:
            parse_route_network(text)
        assert fragment in str(err.value)
        assert err.value.line == line

    def test_unclosed_segment_diagnosed(self):
        text = (FIXTURES / "broken" / "unclosed_segment.rnd").read_text()
        with pytest.raises(FormatError) as err:
            parse_route_network(text)
        assert "never closed" in str(err.value)

    def test_checkpoint_error_names_id(self):
        text = (FIXTURES / "broken" / "missing_waypoint.rnd").read_text()
        with pytest.raises(FormatError) as err:
            parse_route_network(text)
        assert "'goal'" in str(err.value)
        assert "'r9'" in str(err.value)

    @given(route_networks())
    @settings(max_examples=120, deadline=None)
    def test_round_trip(self, network):
        assert parse_route_network(serialize_route_network(network)) == network

    @given(route_networks())
    @settings(max_examples=40, deadline=None)
    def test_serialization_idempotent(self, network):
        text = serialize_route_network(network)
        assert serialize_route_network(parse_route_network(text)) == text

    @given(st.text(max_size=300))
    @settings(max_examples=150, deadline=None)
    def test_error_totality(self, text):
        try:
            parse_route_network(text)
        except FormatError:
            pass


class TestMissionParsing:
    def test_empty_checkpoints_rejected(self):
        with pytest.raises(FormatError):
            parse_mission('{"checkpoints": []}')

    def test_speed_cap_optional(self):
        mission = parse_mission('{"checkpoints": ["a", "b"]}')
        assert mission.speed_cap is None
        assert mission.checkpoints == ("a", "b")

    @given(missions())
    @settings(max_examples=120, deadline=None)
    def test_round_trip(self, mission):
        assert parse_mission(serialize_mission(mission)) == mission


class TestScenarioParsing:
    def test_defaults_applied(self):
        scenario = parse_scenario('{"id": "x", "objects": []}')
        assert scenario.seed == 0
        assert scenario.update_mode == "sequential"
        assert scenario.lane_width == 3.5

    def test_fixture_canonical_matches_documentation(self):
        # fixtures/README.md documents 5 objects with these ids and kinds.
        bundle = load_scenario(FIXTURES / "canonical.json")
        scenario = bundle.scenario
        assert scenario.id == "canonical-urban"
        assert [o.id for o in scenario.objects] == ["ego", "truck", "trailer", "patrol", "boulder"]
        assert scenario.objects[0].role == "ego"
        assert isinstance(scenario.objects[0].behavior, PlannedSpec)
        assert isinstance(scenario.objects[2].behavior, TrailerSpec)
        assert scenario.objects[2].behavior.leader == "truck"
        assert scenario.objects[4].role == "static-obstacle"
        assert scenario.seed == 424242
        assert scenario.duration == 60.0
        assert len(scenario.validators) == 6
        assert bundle.network is not None and bundle.mission is not None
        assert bundle.mission.checkpoints == ("c1", "c2")

    @pytest.mark.parametrize(
        "name, fragment",
        [
            ("bad_role.json", "role"),
            ("static_with_behavior.json", "cannot have a behavior"),
            ("duplicate_ids.json", "duplicate object id"),
            ("trailer_before_leader.json", "earlier-declared leader"),
            ("negative_shape.json", "positive length"),
            ("not_json.json", "not valid JSON"),
        ],
    )
    def test_broken_fixture_diagnostics(self, name, fragment):
        text = (FIXTURES / "broken" / name).read_text()
        with pytest.raises(FormatError) as err:
            parse_scenario(text)
        assert fragment in str(err.value)

    def test_error_paths_point_at_fields(self):
        with pytest.raises(FormatError) as err:
            parse_scenario('{"id": "x", "objects": [{"id": "a"}]}')
        assert "objects[0]" in str(err.value)

    def test_link_rejects_unknown_lane(self):
        scenario = parse_scenario(
            '{"id": "x", "objects": [{"id": "a", "role": "traffic",'
            ' "shape": {"kind": "circle", "radius": 1.0},'
            ' "pose": {"x": 0, "y": 0, "heading": 0},'
            ' "behavior": {"type": "route", "lane": "ghost", "cruise_speed": 1.0}}]}'
        )
        network = parse_route_network(
            "segment s\n lane l width 3 speed 10\n  wp a 0 0\n  wp b 1 0\n end\nend\n"
        )
        with pytest.raises(FormatError) as err:
            link_scenario(scenario, network, None)
        assert "ghost" in str(err.value)

    def test_link_rejects_unknown_mission_checkpoint(self):
        scenario = parse_scenario('{"id": "x", "objects": []}')
        network = parse_route_network(
            "segment s\n lane l width 3 speed 10\n  wp a 0 0\n  wp b 1 0\n end\nend\n"
        )
        mission = parse_mission('{"checkpoints": ["nowhere"]}')
        with pytest.raises(FormatError) as err:
            link_scenario(scenario, network, mission)
        assert "nowhere" in str(err.value)

    @given(scenarios())
    @settings(max_examples=120, deadline=None)
    def test_round_trip(self, scenario):
        assert parse_scenario(serialize_scenario(scenario)) == scenario

    @given(st.text(max_size=300))
    @settings(max_examples=100, deadline=None)
    def test_error_totality(self, text):
        try:
            parse_scenario(text)
        except FormatError:
            pass
