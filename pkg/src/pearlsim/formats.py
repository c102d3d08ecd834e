"""Parsers and serializers for the three input artifacts.

Route networks use a line-oriented plain-text grammar (segments containing
lanes containing waypoints, plus named checkpoints); scenarios and missions
are JSON. Every parser rejects bad input with a located diagnostic, never an
exception-free crash, and every serializer emits a canonical form whose
re-parse is structurally equal (floats rendered with six fractional digits).

Route network grammar, one directive per line, ``#`` starts a comment::

    segment <id>
      lane <id> width <meters> speed <m/s>
        wp <id> <x> <y>
        checkpoint <id> <wp-id>
      end
    end

Coordinates are local planar meters. See docs/formats.md for the JSON
schemas.
"""

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import Gate, Pose
from .trace import canon
from .views import DegradationConfig, SensorConfig
from .world import ObjectShape, ROLES, UPDATE_MODES


class FormatError(Exception):
    """A diagnostic with a location: a JSON field path or a line number."""

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        where = f"line {line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(f"{where}{message}")


# ---------------------------------------------------------------------------
# Route networks

_ID_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_.\-]*$")
_KEYWORDS = frozenset({"segment", "lane", "wp", "checkpoint", "end", "width", "speed"})


def _check_id(kind, value, line=None, path=None):
    if not isinstance(value, str) or not _ID_RE.match(value) or value in _KEYWORDS:
        raise FormatError(f"invalid {kind} id {value!r}", line=line, path=path)
    return value


@dataclass(frozen=True)
class Waypoint:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Checkpoint:
    id: str
    waypoint_id: str


@dataclass(frozen=True)
class Lane:
    id: str
    width: float
    speed_limit: float
    waypoints: tuple[Waypoint, ...]
    checkpoints: tuple[Checkpoint, ...] = ()

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise FormatError(f"lane {self.id!r} needs at least 2 waypoints")
        if not (math.isfinite(self.width) and self.width > 0):
            raise FormatError(f"lane {self.id!r} width must be > 0")
        if not (math.isfinite(self.speed_limit) and self.speed_limit > 0):
            raise FormatError(f"lane {self.id!r} speed limit must be > 0")

    @property
    def points(self) -> tuple[tuple[float, float], ...]:
        return tuple((w.x, w.y) for w in self.waypoints)

    @property
    def length(self) -> float:
        pts = self.points
        return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))


@dataclass(frozen=True)
class Segment:
    id: str
    lanes: tuple[Lane, ...]


@dataclass(frozen=True)
class RouteNetwork:
    """Segments of lanes of waypoints, with named checkpoints."""

    segments: tuple[Segment, ...]
    _waypoints: dict = field(default_factory=dict, repr=False, compare=False)
    _lanes: dict = field(default_factory=dict, repr=False, compare=False)
    _checkpoints: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for seg in self.segments:
            for lane in seg.lanes:
                if lane.id in self._lanes:
                    raise FormatError(f"duplicate lane id {lane.id!r}")
                self._lanes[lane.id] = lane
                for wp in lane.waypoints:
                    if wp.id in self._waypoints:
                        raise FormatError(f"duplicate waypoint id {wp.id!r}")
                    self._waypoints[wp.id] = wp
        for seg in self.segments:
            for lane in seg.lanes:
                for cp in lane.checkpoints:
                    if cp.id in self._checkpoints:
                        raise FormatError(f"duplicate checkpoint id {cp.id!r}")
                    if cp.waypoint_id not in self._waypoints:
                        raise FormatError(
                            f"checkpoint {cp.id!r} references unknown waypoint {cp.waypoint_id!r}"
                        )
                    self._checkpoints[cp.id] = cp

    @property
    def checkpoints(self) -> tuple[Checkpoint, ...]:
        return tuple(self._checkpoints.values())

    @property
    def lanes(self) -> tuple[Lane, ...]:
        return tuple(self._lanes.values())

    def lane(self, lane_id: str) -> Lane:
        try:
            return self._lanes[lane_id]
        except KeyError:
            raise FormatError(f"unknown lane id {lane_id!r}") from None

    def waypoint(self, waypoint_id: str) -> Waypoint:
        try:
            return self._waypoints[waypoint_id]
        except KeyError:
            raise FormatError(f"unknown waypoint id {waypoint_id!r}") from None

    def has_checkpoint(self, checkpoint_id: str) -> bool:
        return checkpoint_id in self._checkpoints

    def checkpoint_waypoint(self, checkpoint_id: str) -> Waypoint:
        try:
            cp = self._checkpoints[checkpoint_id]
        except KeyError:
            raise FormatError(f"unknown checkpoint id {checkpoint_id!r}") from None
        return self._waypoints[cp.waypoint_id]


def _parse_number(token, what, line):
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"{what} must be a number, got {token!r}", line=line) from None
    if not math.isfinite(value):
        raise FormatError(f"{what} must be finite, got {token!r}", line=line)
    return value


def parse_route_network(text: str) -> RouteNetwork:
    """Parse the plain-text route network grammar, diagnosing by line."""
    segments: list[Segment] = []
    seg_id = None
    seg_line = None
    seg_lanes: list[Lane] = []
    lane_head = None  # (id, width, speed, line)
    lane_wps: list[Waypoint] = []
    lane_cps: list[Checkpoint] = []
    seen_segments, seen_lanes, seen_wps, seen_cps = set(), set(), set(), set()
    cp_lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0]

        if keyword == "segment":
            if seg_id is not None:
                raise FormatError("segment cannot open inside another segment", line=lineno)
            if len(tokens) != 2:
                raise FormatError("expected: segment <id>", line=lineno)
            _check_id("segment", tokens[1], line=lineno)
            if tokens[1] in seen_segments:
                raise FormatError(f"duplicate segment id {tokens[1]!r}", line=lineno)
            seen_segments.add(tokens[1])
            seg_id = tokens[1]
            seg_line = lineno
            seg_lanes = []

        elif keyword == "lane":
            if seg_id is None:
                raise FormatError("lane outside any segment", line=lineno)
            if lane_head is not None:
                raise FormatError("lane cannot open inside another lane", line=lineno)
            if len(tokens) != 6 or tokens[2] != "width" or tokens[4] != "speed":
                raise FormatError("expected: lane <id> width <m> speed <m/s>", line=lineno)
            _check_id("lane", tokens[1], line=lineno)
            if tokens[1] in seen_lanes:
                raise FormatError(f"duplicate lane id {tokens[1]!r}", line=lineno)
            seen_lanes.add(tokens[1])
            width = _parse_number(tokens[3], "lane width", lineno)
            speed = _parse_number(tokens[5], "lane speed", lineno)
            if width <= 0:
                raise FormatError(f"lane width must be > 0, got {tokens[3]}", line=lineno)
            if speed <= 0:
                raise FormatError(f"lane speed must be > 0, got {tokens[5]}", line=lineno)
            lane_head = (tokens[1], width, speed, lineno)
            lane_wps = []
            lane_cps = []

        elif keyword == "wp":
            if lane_head is None:
                raise FormatError("wp outside any lane", line=lineno)
            if len(tokens) != 4:
                raise FormatError("expected: wp <id> <x> <y>", line=lineno)
            _check_id("waypoint", tokens[1], line=lineno)
            if tokens[1] in seen_wps:
                raise FormatError(f"duplicate waypoint id {tokens[1]!r}", line=lineno)
            seen_wps.add(tokens[1])
            x = _parse_number(tokens[2], "waypoint x", lineno)
            y = _parse_number(tokens[3], "waypoint y", lineno)
            lane_wps.append(Waypoint(id=tokens[1], x=x, y=y))

        elif keyword == "checkpoint":
            if lane_head is None:
                raise FormatError("checkpoint outside any lane", line=lineno)
            if len(tokens) != 3:
                raise FormatError("expected: checkpoint <id> <wp-id>", line=lineno)
            _check_id("checkpoint", tokens[1], line=lineno)
            if tokens[1] in seen_cps:
                raise FormatError(f"duplicate checkpoint id {tokens[1]!r}", line=lineno)
            seen_cps.add(tokens[1])
            lane_cps.append(Checkpoint(id=tokens[1], waypoint_id=tokens[2]))
            cp_lines[tokens[1]] = lineno

        elif keyword == "end":
            if len(tokens) != 1:
                raise FormatError("expected: end", line=lineno)
            if lane_head is not None:
                lane_id, width, speed, lane_line = lane_head
                if len(lane_wps) < 2:
                    raise FormatError(
                        f"lane {lane_id!r} needs at least 2 waypoints", line=lane_line
                    )
                seg_lanes.append(
                    Lane(
                        id=lane_id,
                        width=width,
                        speed_limit=speed,
                        waypoints=tuple(lane_wps),
                        checkpoints=tuple(lane_cps),
                    )
                )
                lane_head = None
            elif seg_id is not None:
                segments.append(Segment(id=seg_id, lanes=tuple(seg_lanes)))
                seg_id = None
            else:
                raise FormatError("end without an open segment or lane", line=lineno)

        else:
            raise FormatError(f"unknown keyword {keyword!r}", line=lineno)

    if lane_head is not None:
        raise FormatError(f"lane {lane_head[0]!r} never closed", line=lane_head[3])
    if seg_id is not None:
        raise FormatError(f"segment {seg_id!r} never closed", line=seg_line)

    for seg in segments:
        for lane in seg.lanes:
            for cp in lane.checkpoints:
                if cp.waypoint_id not in seen_wps:
                    raise FormatError(
                        f"checkpoint {cp.id!r} references unknown waypoint {cp.waypoint_id!r}",
                        line=cp_lines[cp.id],
                    )
    return RouteNetwork(segments=tuple(segments))


def serialize_route_network(network: RouteNetwork) -> str:
    """Canonical text form; re-parsing yields a structurally equal network."""
    out = []
    for seg in network.segments:
        out.append(f"segment {seg.id}")
        for lane in seg.lanes:
            out.append(
                f"  lane {lane.id} width {canon(lane.width)} speed {canon(lane.speed_limit)}"
            )
            for wp in lane.waypoints:
                out.append(f"    wp {wp.id} {canon(wp.x)} {canon(wp.y)}")
            for cp in lane.checkpoints:
                out.append(f"    checkpoint {cp.id} {cp.waypoint_id}")
            out.append("  end")
        out.append("end")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Canonical JSON

def canonical_json(value) -> str:
    """JSON with sorted keys and all floats at six fractional digits."""
    out = []
    _write_json(value, out, 0)
    out.append("\n")
    return "".join(out)


def _write_json(value, out, depth):
    pad = "  " * depth
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(value)
        for i, key in enumerate(keys):
            out.append(f'{pad}  {json.dumps(key)}: ')
            _write_json(value[key], out, depth + 1)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(value):
            out.append(pad + "  ")
            _write_json(item, out, depth + 1)
            out.append(",\n" if i + 1 < len(value) else "\n")
        out.append(pad + "]")
    elif isinstance(value, bool) or value is None:
        out.append(json.dumps(value))
    elif isinstance(value, float):
        out.append(canon(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    else:
        raise TypeError(f"cannot serialize {type(value).__name__} canonically")


# ---------------------------------------------------------------------------
# Missions

@dataclass(frozen=True)
class Mission:
    """Ordered checkpoints to visit, with an optional global speed cap."""

    checkpoints: tuple[str, ...]
    speed_cap: float | None = None

    def __post_init__(self):
        if not self.checkpoints:
            raise FormatError("mission needs at least one checkpoint")
        if self.speed_cap is not None and not (
            math.isfinite(self.speed_cap) and self.speed_cap > 0
        ):
            raise FormatError("mission speed cap must be > 0")


def _load_json(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc.msg}", path=what, line=exc.lineno) from None


def _expect(cond, message, path):
    if not cond:
        raise FormatError(message, path=path)


def _field(obj, key, path, required=True, default=None):
    if key not in obj:
        _expect(not required, f"missing required field {key!r}", path)
        return default
    return obj[key]


def _number(value, path, minimum=None, allow_none=False):
    if value is None and allow_none:
        return None
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool), "must be a number", path)
    value = float(value)
    _expect(math.isfinite(value), "must be finite", path)
    if minimum is not None:
        _expect(value >= minimum, f"must be >= {minimum}", path)
    return value


def _string(value, path):
    _expect(isinstance(value, str), "must be a string", path)
    return value


def _dict(value, path):
    _expect(isinstance(value, dict), "must be an object", path)
    return value


def _list(value, path):
    _expect(isinstance(value, list), "must be an array", path)
    return value


def parse_mission(text: str) -> Mission:
    doc = _dict(_load_json(text, "mission"), "mission")
    raw_cps = _list(_field(doc, "checkpoints", "mission.checkpoints"), "mission.checkpoints")
    _expect(len(raw_cps) > 0, "checkpoint list must not be empty", "mission.checkpoints")
    cps = tuple(
        _check_id("checkpoint", cp, path=f"mission.checkpoints[{i}]")
        for i, cp in enumerate(raw_cps)
    )
    cap = _field(doc, "speed_cap", "mission.speed_cap", required=False)
    if cap is not None:
        cap = _number(cap, "mission.speed_cap")
        _expect(cap > 0, "must be > 0", "mission.speed_cap")
    return Mission(checkpoints=cps, speed_cap=cap)


def serialize_mission(mission: Mission) -> str:
    doc = {"checkpoints": list(mission.checkpoints)}
    if mission.speed_cap is not None:
        doc["speed_cap"] = mission.speed_cap
    return canonical_json(doc)


# ---------------------------------------------------------------------------
# Scenarios

@dataclass(frozen=True)
class RouteFollowSpec:
    lane: str
    cruise_speed: float
    loop: bool = False


@dataclass(frozen=True)
class TrajectoryFollowSpec:
    gates: tuple[Gate, ...]
    mode: str = "bspline"
    cruise_speed: float = 10.0


@dataclass(frozen=True)
class KeyboardSpec:
    max_accel: float = 3.0
    max_yaw_rate: float = math.pi / 2


@dataclass(frozen=True)
class HoldSpec:
    pass


@dataclass(frozen=True)
class PlannedSpec:
    pass


@dataclass(frozen=True)
class TrailerSpec:
    leader: str
    offset: float


BehaviorSpec = (
    RouteFollowSpec | TrajectoryFollowSpec | KeyboardSpec | HoldSpec | PlannedSpec | TrailerSpec
)


@dataclass(frozen=True)
class ValidatorSpec:
    """Validator kind plus its construction parameters, as configured."""

    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioObject:
    id: str
    role: str
    shape: ObjectShape
    pose: Pose
    speed: float = 0.0
    behavior: BehaviorSpec | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise FormatError(f"object {self.id!r} has unknown role {self.role!r}")
        if self.role == "static-obstacle" and self.behavior is not None:
            raise FormatError(f"static object {self.id!r} cannot have a behavior")
        if self.role != "static-obstacle" and self.behavior is None:
            raise FormatError(f"dynamic object {self.id!r} needs a behavior")


@dataclass(frozen=True)
class Scenario:
    """One test drive: world layout, seeded randomness, file references."""

    id: str
    objects: tuple[ScenarioObject, ...] = ()
    seed: int = 0
    update_mode: str = "sequential"
    lane_width: float = 3.5
    dt: float | None = None
    duration: float | None = None
    timeout: float | None = None
    route_network_ref: str | None = None
    mission_ref: str | None = None
    sensor: SensorConfig | None = None
    degradation: DegradationConfig | None = None
    validators: tuple[ValidatorSpec, ...] = ()

    def __post_init__(self):
        if self.update_mode not in UPDATE_MODES:
            raise FormatError(f"unknown update mode {self.update_mode!r}")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise FormatError(f"duplicate object id {obj.id!r}")
            seen.add(obj.id)
        declared = set()
        for obj in self.objects:
            if isinstance(obj.behavior, TrailerSpec):
                if obj.behavior.leader not in declared:
                    raise FormatError(
                        f"trailer {obj.id!r} must follow an earlier-declared leader, "
                        f"got {obj.behavior.leader!r}"
                    )
            declared.add(obj.id)


def _parse_pose(value, path) -> Pose:
    obj = _dict(value, path)
    return Pose(
        x=_number(_field(obj, "x", f"{path}.x"), f"{path}.x"),
        y=_number(_field(obj, "y", f"{path}.y"), f"{path}.y"),
        heading=_number(_field(obj, "heading", f"{path}.heading", required=False, default=0.0), f"{path}.heading"),
    )


def _parse_shape(value, path) -> ObjectShape:
    obj = _dict(value, path)
    kind = _string(_field(obj, "kind", f"{path}.kind"), f"{path}.kind")
    try:
        if kind == "circle":
            return ObjectShape.circle(_number(_field(obj, "radius", f"{path}.radius"), f"{path}.radius"))
        if kind == "oriented-rectangle":
            return ObjectShape.rectangle(
                _number(_field(obj, "length", f"{path}.length"), f"{path}.length"),
                _number(_field(obj, "width", f"{path}.width"), f"{path}.width"),
            )
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from None
    raise FormatError(f"unknown shape kind {kind!r}", path=f"{path}.kind")


def _parse_point(value, path):
    arr = _list(value, path)
    _expect(len(arr) == 2, "must be an [x, y] pair", path)
    return (_number(arr[0], f"{path}[0]"), _number(arr[1], f"{path}[1]"))


def _parse_gates(value, path) -> tuple[Gate, ...]:
    arr = _list(value, path)
    gates = []
    for i, item in enumerate(arr):
        gpath = f"{path}[{i}]"
        obj = _dict(item, gpath)
        speed = _field(obj, "target_speed", f"{gpath}.target_speed", required=False)
        if speed is not None:
            speed = _number(speed, f"{gpath}.target_speed", minimum=0.0)
        try:
            gates.append(
                Gate(
                    left=_parse_point(_field(obj, "left", f"{gpath}.left"), f"{gpath}.left"),
                    right=_parse_point(_field(obj, "right", f"{gpath}.right"), f"{gpath}.right"),
                    target_speed=speed,
                )
            )
        except ValueError as exc:
            raise FormatError(str(exc), path=gpath) from None
    return tuple(gates)


def _parse_behavior(value, path) -> BehaviorSpec:
    obj = _dict(value, path)
    kind = _string(_field(obj, "type", f"{path}.type"), f"{path}.type")
    if kind == "route":
        return RouteFollowSpec(
            lane=_string(_field(obj, "lane", f"{path}.lane"), f"{path}.lane"),
            cruise_speed=_number(_field(obj, "cruise_speed", f"{path}.cruise_speed"), f"{path}.cruise_speed", minimum=0.0),
            loop=bool(_field(obj, "loop", f"{path}.loop", required=False, default=False)),
        )
    if kind == "trajectory":
        mode = _string(_field(obj, "mode", f"{path}.mode", required=False, default="bspline"), f"{path}.mode")
        _expect(mode in ("linear", "bspline"), f"unknown interpolation mode {mode!r}", f"{path}.mode")
        gates = _parse_gates(_field(obj, "gates", f"{path}.gates"), f"{path}.gates")
        _expect(len(gates) >= 2, "need at least 2 gates", f"{path}.gates")
        return TrajectoryFollowSpec(
            gates=gates,
            mode=mode,
            cruise_speed=_number(_field(obj, "cruise_speed", f"{path}.cruise_speed", required=False, default=10.0), f"{path}.cruise_speed", minimum=0.0),
        )
    if kind == "keyboard":
        return KeyboardSpec(
            max_accel=_number(_field(obj, "max_accel", f"{path}.max_accel", required=False, default=3.0), f"{path}.max_accel", minimum=0.0),
            max_yaw_rate=_number(_field(obj, "max_yaw_rate", f"{path}.max_yaw_rate", required=False, default=math.pi / 2), f"{path}.max_yaw_rate", minimum=0.0),
        )
    if kind == "hold":
        return HoldSpec()
    if kind == "planned":
        return PlannedSpec()
    if kind == "trailer":
        return TrailerSpec(
            leader=_string(_field(obj, "leader", f"{path}.leader"), f"{path}.leader"),
            offset=_number(_field(obj, "offset", f"{path}.offset"), f"{path}.offset"),
        )
    raise FormatError(f"unknown behavior type {kind!r}", path=f"{path}.type")


def _parse_sensor(value, path) -> SensorConfig:
    obj = _dict(value, path)
    offset = _field(obj, "mount_offset", f"{path}.mount_offset", required=False)
    try:
        return SensorConfig(
            range_m=_number(_field(obj, "range", f"{path}.range"), f"{path}.range"),
            fov_half_angle=_number(
                _field(obj, "fov_half_angle", f"{path}.fov_half_angle", required=False, default=math.pi),
                f"{path}.fov_half_angle",
            ),
            mount_offset=_parse_pose(offset, f"{path}.mount_offset") if offset is not None else Pose(0.0, 0.0, 0.0),
        )
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from None


def _parse_degradation(value, path) -> DegradationConfig:
    obj = _dict(value, path)
    try:
        return DegradationConfig(
            dropout_probability=_number(
                _field(obj, "dropout_probability", f"{path}.dropout_probability", required=False, default=0.0),
                f"{path}.dropout_probability",
            ),
            position_noise_sigma=_number(
                _field(obj, "position_noise_sigma", f"{path}.position_noise_sigma", required=False, default=0.0),
                f"{path}.position_noise_sigma",
            ),
            consumer_id=_string(
                _field(obj, "consumer_id", f"{path}.consumer_id", required=False, default="sensor"),
                f"{path}.consumer_id",
            ),
        )
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from None


_VALIDATOR_KINDS = frozenset(
    {"min_distance", "corridor_keeping", "speed_limit", "collision", "checkpoint_completion", "timeout"}
)


def _parse_validator(value, path) -> ValidatorSpec:
    obj = _dict(value, path)
    kind = _string(_field(obj, "type", f"{path}.type"), f"{path}.type")
    _expect(kind in _VALIDATOR_KINDS, f"unknown validator type {kind!r}", f"{path}.type")
    params = {}
    for key, raw in obj.items():
        if key == "type":
            continue
        _expect(isinstance(raw, (int, float, str, bool)), "must be a scalar", f"{path}.{key}")
        params[key] = float(raw) if isinstance(raw, (int, float)) and not isinstance(raw, bool) else raw
    return ValidatorSpec(kind=kind, params=params)


def _located(exc: Exception, path: str) -> FormatError:
    # Invariant failures raised by value types carry no location; attach one.
    if isinstance(exc, FormatError) and (exc.path is not None or exc.line is not None):
        return exc
    message = exc.message if isinstance(exc, FormatError) else str(exc)
    return FormatError(message, path=path)


def parse_scenario_object(raw, path="object") -> ScenarioObject:
    obj = _dict(raw, path)
    behavior_raw = _field(obj, "behavior", f"{path}.behavior", required=False)
    role = _string(_field(obj, "role", f"{path}.role"), f"{path}.role")
    try:
        return ScenarioObject(
            id=_string(_field(obj, "id", f"{path}.id"), f"{path}.id"),
            role=role,
            shape=_parse_shape(_field(obj, "shape", f"{path}.shape"), f"{path}.shape"),
            pose=_parse_pose(_field(obj, "pose", f"{path}.pose"), f"{path}.pose"),
            speed=_number(_field(obj, "speed", f"{path}.speed", required=False, default=0.0), f"{path}.speed", minimum=0.0),
            behavior=_parse_behavior(behavior_raw, f"{path}.behavior") if behavior_raw is not None else None,
        )
    except (ValueError, FormatError) as exc:
        raise _located(exc, path) from None


def parse_scenario(text: str) -> Scenario:
    doc = _dict(_load_json(text, "scenario"), "scenario")
    objects = []
    for i, raw in enumerate(_list(_field(doc, "objects", "scenario.objects", required=False, default=[]), "scenario.objects")):
        objects.append(parse_scenario_object(raw, f"scenario.objects[{i}]"))

    seed = _field(doc, "seed", "scenario.seed", required=False, default=0)
    _expect(isinstance(seed, int) and not isinstance(seed, bool), "must be an integer", "scenario.seed")

    def opt_number(key, minimum=None):
        raw = _field(doc, key, f"scenario.{key}", required=False)
        return None if raw is None else _number(raw, f"scenario.{key}", minimum=minimum)

    def opt_string(key):
        raw = _field(doc, key, f"scenario.{key}", required=False)
        return None if raw is None else _string(raw, f"scenario.{key}")

    sensor_raw = _field(doc, "sensor", "scenario.sensor", required=False)
    degradation_raw = _field(doc, "degradation", "scenario.degradation", required=False)
    validators = tuple(
        _parse_validator(v, f"scenario.validators[{i}]")
        for i, v in enumerate(_list(_field(doc, "validators", "scenario.validators", required=False, default=[]), "scenario.validators"))
    )
    try:
        return Scenario(
            id=_string(_field(doc, "id", "scenario.id"), "scenario.id"),
            objects=tuple(objects),
            seed=seed,
            update_mode=_string(_field(doc, "update_mode", "scenario.update_mode", required=False, default="sequential"), "scenario.update_mode"),
            lane_width=_number(_field(doc, "lane_width", "scenario.lane_width", required=False, default=3.5), "scenario.lane_width", minimum=0.1),
            dt=opt_number("dt", minimum=1e-6),
            duration=opt_number("duration", minimum=0.0),
            timeout=opt_number("timeout", minimum=0.0),
            route_network_ref=opt_string("route_network"),
            mission_ref=opt_string("mission"),
            sensor=_parse_sensor(sensor_raw, "scenario.sensor") if sensor_raw is not None else None,
            degradation=_parse_degradation(degradation_raw, "scenario.degradation") if degradation_raw is not None else None,
            validators=validators,
        )
    except FormatError as exc:
        # Whole-scenario invariants (duplicate ids, trailer ordering).
        raise _located(exc, "scenario") from None


def _shape_doc(shape: ObjectShape) -> dict:
    if shape.kind == "circle":
        return {"kind": "circle", "radius": shape.radius}
    return {"kind": "oriented-rectangle", "length": shape.length, "width": shape.width}


def _pose_doc(pose: Pose) -> dict:
    return {"x": pose.x, "y": pose.y, "heading": pose.heading}


def _behavior_doc(spec: BehaviorSpec) -> dict:
    if isinstance(spec, RouteFollowSpec):
        return {"type": "route", "lane": spec.lane, "cruise_speed": spec.cruise_speed, "loop": spec.loop}
    if isinstance(spec, TrajectoryFollowSpec):
        return {
            "type": "trajectory",
            "mode": spec.mode,
            "cruise_speed": spec.cruise_speed,
            "gates": [
                {
                    "left": [g.left[0], g.left[1]],
                    "right": [g.right[0], g.right[1]],
                    **({"target_speed": g.target_speed} if g.target_speed is not None else {}),
                }
                for g in spec.gates
            ],
        }
    if isinstance(spec, KeyboardSpec):
        return {"type": "keyboard", "max_accel": spec.max_accel, "max_yaw_rate": spec.max_yaw_rate}
    if isinstance(spec, HoldSpec):
        return {"type": "hold"}
    if isinstance(spec, PlannedSpec):
        return {"type": "planned"}
    if isinstance(spec, TrailerSpec):
        return {"type": "trailer", "leader": spec.leader, "offset": spec.offset}
    raise TypeError(f"unknown behavior spec {spec!r}")


def serialize_scenario(scenario: Scenario) -> str:
    doc = {
        "id": scenario.id,
        "seed": scenario.seed,
        "update_mode": scenario.update_mode,
        "lane_width": scenario.lane_width,
        "objects": [],
    }
    for key in ("dt", "duration", "timeout"):
        value = getattr(scenario, key)
        if value is not None:
            doc[key] = value
    if scenario.route_network_ref is not None:
        doc["route_network"] = scenario.route_network_ref
    if scenario.mission_ref is not None:
        doc["mission"] = scenario.mission_ref
    if scenario.sensor is not None:
        sensor = {"range": scenario.sensor.range_m, "fov_half_angle": scenario.sensor.fov_half_angle}
        if scenario.sensor.mount_offset != Pose(0.0, 0.0, 0.0):
            sensor["mount_offset"] = _pose_doc(scenario.sensor.mount_offset)
        doc["sensor"] = sensor
    if scenario.degradation is not None:
        doc["degradation"] = {
            "dropout_probability": scenario.degradation.dropout_probability,
            "position_noise_sigma": scenario.degradation.position_noise_sigma,
            "consumer_id": scenario.degradation.consumer_id,
        }
    if scenario.validators:
        doc["validators"] = [{"type": v.kind, **v.params} for v in scenario.validators]
    for obj in scenario.objects:
        entry = {
            "id": obj.id,
            "role": obj.role,
            "shape": _shape_doc(obj.shape),
            "pose": _pose_doc(obj.pose),
            "speed": obj.speed,
        }
        if obj.behavior is not None:
            entry["behavior"] = _behavior_doc(obj.behavior)
        doc["objects"].append(entry)
    return canonical_json(doc)


# ---------------------------------------------------------------------------
# Loading and linking

@dataclass(frozen=True)
class ScenarioBundle:
    """A scenario with its referenced route network and mission resolved."""

    scenario: Scenario
    network: RouteNetwork | None = None
    mission: Mission | None = None


def link_scenario(scenario: Scenario, network: RouteNetwork | None, mission: Mission | None) -> ScenarioBundle:
    """Cross-check references between scenario, network, and mission."""
    for obj in scenario.objects:
        if isinstance(obj.behavior, RouteFollowSpec):
            if network is None:
                raise FormatError(
                    f"object {obj.id!r} follows lane {obj.behavior.lane!r} but the scenario has no route network"
                )
            network.lane(obj.behavior.lane)
    if mission is not None:
        if network is None:
            raise FormatError("a mission requires a route network")
        for cp in mission.checkpoints:
            if not network.has_checkpoint(cp):
                raise FormatError(f"mission checkpoint {cp!r} not in route network")
    return ScenarioBundle(scenario=scenario, network=network, mission=mission)


def load_route_network(path) -> RouteNetwork:
    return parse_route_network(Path(path).read_text(encoding="utf-8"))


def load_mission(path) -> Mission:
    return parse_mission(Path(path).read_text(encoding="utf-8"))


def load_scenario(path) -> ScenarioBundle:
    """Parse a scenario file and resolve its relative file references."""
    path = Path(path)
    scenario = parse_scenario(path.read_text(encoding="utf-8"))
    network = mission = None
    if scenario.route_network_ref is not None:
        network = load_route_network(path.parent / scenario.route_network_ref)
    if scenario.mission_ref is not None:
        mission = load_mission(path.parent / scenario.mission_ref)
    return link_scenario(scenario, network, mission)
