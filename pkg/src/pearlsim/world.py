"""The world model: simulator objects, their shapes and behaviors, and the
virtual clock, advanced by discrete time steps.

Time is owned entirely by the model. Nothing here reads the wall clock;
behaviors and validators receive the simulated clock through snapshots, so a
minute of simulated driving costs only as much wall time as the arithmetic.

Two update modes exist. ``sequential`` (the default) advances objects in
insertion order, each behavior seeing predecessors already moved. ``copy``
evaluates every behavior against the pre-step snapshot and commits all writes
together, like a transaction.
"""

import math
from dataclasses import dataclass, field

from .geometry import Pose
from .trace import canon


class SimulationError(Exception):
    """Raised for invalid world operations (bad dt, unknown ids, ...)."""


ROLES = ("ego", "traffic", "static-obstacle")
UPDATE_MODES = ("sequential", "copy")


@dataclass(frozen=True)
class ObjectShape:
    """Footprint of a simulator object: an oriented rectangle or a circle."""

    kind: str
    length: float | None = None
    width: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind == "oriented-rectangle":
            if not (self.length and self.length > 0 and self.width and self.width > 0):
                raise ValueError("rectangle needs positive length and width")
        elif self.kind == "circle":
            if not (self.radius and self.radius > 0):
                raise ValueError("circle needs a positive radius")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    @classmethod
    def rectangle(cls, length: float, width: float) -> "ObjectShape":
        return cls(kind="oriented-rectangle", length=length, width=width)

    @classmethod
    def circle(cls, radius: float) -> "ObjectShape":
        return cls(kind="circle", radius=radius)

    @property
    def bounding_radius(self) -> float:
        if self.kind == "circle":
            return self.radius
        return math.hypot(self.length, self.width) / 2.0


class SimObject:
    """One object in the world: id, role, shape, pose, speed, behavior.

    Static obstacles carry no behavior; every other object must have one.
    """

    def __init__(self, object_id, role, shape, pose, speed=0.0, behavior=None):
        if role not in ROLES:
            raise SimulationError(f"unknown role {role!r} for object {object_id!r}")
        if role == "static-obstacle" and behavior is not None:
            raise SimulationError(f"static object {object_id!r} cannot have a behavior")
        if role != "static-obstacle" and behavior is None:
            raise SimulationError(f"dynamic object {object_id!r} needs a behavior")
        if speed < 0 or not math.isfinite(speed):
            raise SimulationError(f"object {object_id!r} speed must be finite and >= 0")
        self.id = object_id
        self.role = role
        self.shape = shape
        self.pose = pose
        self.speed = speed
        self.behavior = behavior

    @property
    def is_static(self) -> bool:
        return self.role == "static-obstacle"


@dataclass(frozen=True)
class ObjectState:
    """Immutable view of one object, as exposed through snapshots."""

    id: str
    role: str
    shape: ObjectShape
    pose: Pose
    speed: float


@dataclass(frozen=True)
class WorldSnapshot:
    """Immutable value copy of the world at one instant."""

    clock: float
    objects: tuple[ObjectState, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index.update({o.id: o for o in self.objects})

    def object(self, object_id: str) -> ObjectState:
        try:
            return self._index[object_id]
        except KeyError:
            raise SimulationError(f"no object {object_id!r} in snapshot") from None

    def canonical(self) -> str:
        """Canonical text form; byte-identical for replayed runs."""
        lines = [f"clock {canon(self.clock)}"]
        for o in self.objects:
            lines.append(
                f"{o.id} {o.role} {canon(o.pose.x)} {canon(o.pose.y)} "
                f"{canon(o.pose.heading)} {canon(o.speed)}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CollisionEvent:
    """Symmetric overlap between two objects; no blame is assigned."""

    ids: tuple[str, str]
    depth: float


@dataclass(frozen=True)
class StepReport:
    """What one step did: elapsed dt, clock after, movers, collisions."""

    dt: float
    clock_after: float
    moved_object_ids: tuple[str, ...]
    collision_events: tuple[CollisionEvent, ...]


def _rect_corners(shape: ObjectShape, pose: Pose):
    hl, hw = shape.length / 2.0, shape.width / 2.0
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    return [
        (pose.x + c * dx - s * dy, pose.y + s * dx + c * dy)
        for dx, dy in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw))
    ]


def _project_extent(corners, ax, ay):
    dots = [cx * ax + cy * ay for cx, cy in corners]
    return min(dots), max(dots)


def _rect_rect_depth(a_corners, b_corners):
    # Separating axis over both rectangles' edge normals; depth is the
    # smallest overlap, or None when any axis separates.
    depth = math.inf
    for corners in (a_corners, b_corners):
        for i in range(2):
            x0, y0 = corners[i]
            x1, y1 = corners[i + 1]
            ax, ay = -(y1 - y0), x1 - x0
            norm = math.hypot(ax, ay)
            ax, ay = ax / norm, ay / norm
            amin, amax = _project_extent(a_corners, ax, ay)
            bmin, bmax = _project_extent(b_corners, ax, ay)
            overlap = min(amax, bmax) - max(amin, bmin)
            if overlap <= 0.0:
                return None
            depth = min(depth, overlap)
    return depth


def _rect_circle_depth(shape, pose, center, radius):
    # Distance from circle center to the solid rectangle, in rect frame.
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    dx, dy = center[0] - pose.x, center[1] - pose.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    qx = min(shape.length / 2.0, max(-shape.length / 2.0, lx))
    qy = min(shape.width / 2.0, max(-shape.width / 2.0, ly))
    dist = math.hypot(lx - qx, ly - qy)
    if dist >= radius:
        return None
    return radius - dist


def shape_overlap_depth(shape_a, pose_a, shape_b, pose_b):
    """Overlap depth in meters between two placed shapes, or None."""
    if shape_a.kind == "circle" and shape_b.kind == "circle":
        dist = math.hypot(pose_a.x - pose_b.x, pose_a.y - pose_b.y)
        depth = shape_a.radius + shape_b.radius - dist
        return depth if depth > 0.0 else None
    if shape_a.kind == "circle":
        return _rect_circle_depth(shape_b, pose_b, (pose_a.x, pose_a.y), shape_a.radius)
    if shape_b.kind == "circle":
        return _rect_circle_depth(shape_a, pose_a, (pose_b.x, pose_b.y), shape_b.radius)
    return _rect_rect_depth(_rect_corners(shape_a, pose_a), _rect_corners(shape_b, pose_b))


class WorldModel:
    """Authoritative simulation state plus the stepping operation.

    A world is single-owner: one agent of execution mutates it; snapshots
    are immutable values that may be shared freely.
    """

    def __init__(self, update_mode="sequential", rng_seed=0):
        if update_mode not in UPDATE_MODES:
            raise SimulationError(f"unknown update mode {update_mode!r}")
        self.objects: list[SimObject] = []
        self.clock = 0.0
        self.update_mode = update_mode
        self.rng_seed = rng_seed
        self._by_id: dict[str, SimObject] = {}

    def add_object(self, obj: SimObject) -> None:
        if obj.id in self._by_id:
            raise SimulationError(f"duplicate object id {obj.id!r}")
        self.objects.append(obj)
        self._by_id[obj.id] = obj

    def object(self, object_id: str) -> SimObject:
        try:
            return self._by_id[object_id]
        except KeyError:
            raise SimulationError(f"no object {object_id!r} in world") from None

    def ego(self) -> SimObject | None:
        for obj in self.objects:
            if obj.role == "ego":
                return obj
        return None

    def snapshot(self) -> WorldSnapshot:
        return WorldSnapshot(
            clock=self.clock,
            objects=tuple(
                ObjectState(id=o.id, role=o.role, shape=o.shape, pose=o.pose, speed=o.speed)
                for o in self.objects
            ),
        )

    def set_behavior(self, object_id, behavior):
        """Swap an object's motion behavior; returns the displaced one."""
        obj = self.object(object_id)
        if obj.is_static:
            raise SimulationError(f"cannot set a behavior on static object {object_id!r}")
        previous = obj.behavior
        obj.behavior = behavior
        return previous

    def step(self, dt: float) -> StepReport:
        """Advance the world by dt seconds and report what happened."""
        if not math.isfinite(dt) or dt < 0.0:
            raise SimulationError(f"step dt must be finite and >= 0, got {dt!r}")

        moved = []
        if self.update_mode == "copy":
            snap = self.snapshot()
            updates = []
            for obj in self.objects:
                if obj.behavior is None:
                    continue
                pose, speed = obj.behavior.advance(snap.object(obj.id), snap, dt)
                updates.append((obj, pose, speed))
            for obj, pose, speed in updates:
                if pose != obj.pose or speed != obj.speed:
                    moved.append(obj.id)
                obj.pose = pose
                obj.speed = speed
        else:
            for obj in self.objects:
                if obj.behavior is None:
                    continue
                snap = self.snapshot()
                pose, speed = obj.behavior.advance(snap.object(obj.id), snap, dt)
                if pose != obj.pose or speed != obj.speed:
                    moved.append(obj.id)
                obj.pose = pose
                obj.speed = speed

        self.clock = self.clock + dt
        return StepReport(
            dt=dt,
            clock_after=self.clock,
            moved_object_ids=tuple(moved),
            collision_events=self._detect_collisions(),
        )

    def _detect_collisions(self) -> tuple[CollisionEvent, ...]:
        events = []
        n = len(self.objects)
        for i in range(n):
            a = self.objects[i]
            for j in range(i + 1, n):
                b = self.objects[j]
                gap = math.hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y)
                if gap > a.shape.bounding_radius + b.shape.bounding_radius:
                    continue
                depth = shape_overlap_depth(a.shape, a.pose, b.shape, b.pose)
                if depth is not None:
                    pair = tuple(sorted((a.id, b.id)))
                    events.append(CollisionEvent(ids=pair, depth=depth))
        return tuple(events)
