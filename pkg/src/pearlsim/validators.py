"""Step-hook validators.

A validator is called after every simulation step with the post-step
snapshot and the step report, records violations, and summarizes the run
through ``has_passed()``: true iff zero violations were recorded. Validators
only observe; attaching them never changes a run's trace.
"""

import math
from dataclasses import dataclass

from .geometry import Trajectory, corridor_contains


@dataclass(frozen=True)
class Violation:
    """One recorded rule breach: who, when, and by how much.

    ``relation`` states how ``value`` violates ``threshold``: ``">"`` means
    the value exceeded it, ``"<"`` means it fell below.
    """

    validator: str
    clock: float
    object_ids: tuple[str, ...]
    quantity: str
    value: float
    threshold: float
    relation: str
    message: str

    def to_doc(self) -> dict:
        return {
            "validator": self.validator,
            "clock": self.clock,
            "object_ids": list(self.object_ids),
            "quantity": self.quantity,
            "value": self.value,
            "threshold": self.threshold,
            "relation": self.relation,
            "message": self.message,
        }


class Validator:
    """Base contract: on_step collects violations; has_passed sums them up."""

    def __init__(self, name: str):
        self.name = name
        self.violations: list[Violation] = []

    def on_step(self, snapshot, report) -> list[Violation]:
        found = self._check(snapshot, report)
        self.violations.extend(found)
        return found

    def finish(self, snapshot) -> list[Violation]:
        """Called once after the last step, for end-of-run conditions."""
        found = self._finish(snapshot)
        self.violations.extend(found)
        return found

    def has_passed(self) -> bool:
        return not self.violations

    def _check(self, snapshot, report) -> list[Violation]:
        return []

    def _finish(self, snapshot) -> list[Violation]:
        return []


def _ego_state(snapshot, object_id):
    if object_id is not None:
        return snapshot.object(object_id)
    for state in snapshot.objects:
        if state.role == "ego":
            return state
    return None


class MinDistanceValidator(Validator):
    """Objects must keep at least ``threshold`` meters between centers.

    With ``object_id`` set, only pairs involving that object are checked.
    """

    def __init__(self, threshold: float, object_id: str | None = None):
        if not (math.isfinite(threshold) and threshold > 0):
            raise ValueError(f"distance threshold must be > 0, got {threshold!r}")
        super().__init__("min_distance")
        self.threshold = threshold
        self.object_id = object_id

    def _check(self, snapshot, report):
        found = []
        objs = snapshot.objects
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                a, b = objs[i], objs[j]
                if self.object_id is not None and self.object_id not in (a.id, b.id):
                    continue
                dist = a.pose.distance_to(b.pose)
                if dist < self.threshold:
                    found.append(
                        Violation(
                            validator=self.name,
                            clock=snapshot.clock,
                            object_ids=tuple(sorted((a.id, b.id))),
                            quantity="distance",
                            value=dist,
                            threshold=self.threshold,
                            relation="<",
                            message=f"{a.id} and {b.id} are {dist:.3f} m apart, below {self.threshold} m",
                        )
                    )
        return found


class SpeedLimitValidator(Validator):
    """No checked object may exceed the speed limit."""

    def __init__(self, limit: float, object_id: str | None = None):
        if not (math.isfinite(limit) and limit > 0):
            raise ValueError(f"speed limit must be > 0, got {limit!r}")
        super().__init__("speed_limit")
        self.limit = limit
        self.object_id = object_id

    def _check(self, snapshot, report):
        found = []
        for state in snapshot.objects:
            if self.object_id is not None and state.id != self.object_id:
                continue
            if state.speed > self.limit:
                found.append(
                    Violation(
                        validator=self.name,
                        clock=snapshot.clock,
                        object_ids=(state.id,),
                        quantity="speed",
                        value=state.speed,
                        threshold=self.limit,
                        relation=">",
                        message=f"{state.id} at {state.speed:.3f} m/s exceeds {self.limit} m/s",
                    )
                )
        return found


class CollisionValidator(Validator):
    """Any overlap reported by the step is a violation."""

    def __init__(self):
        super().__init__("collision")

    def _check(self, snapshot, report):
        return [
            Violation(
                validator=self.name,
                clock=snapshot.clock,
                object_ids=event.ids,
                quantity="overlap-depth",
                value=event.depth,
                threshold=0.0,
                relation=">",
                message=f"{event.ids[0]} overlaps {event.ids[1]} by {event.depth:.3f} m",
            )
            for event in report.collision_events
        ]


class CorridorKeepingValidator(Validator):
    """The watched object must stay inside its trajectory's gate corridor.

    ``source`` is either a fixed Trajectory or a zero-argument callable
    returning the currently active one (or None while no plan exists).
    """

    def __init__(self, source, object_id: str | None = None):
        if source is None:
            raise ValueError("corridor_keeping needs a trajectory source")
        super().__init__("corridor_keeping")
        self.source = source
        self.object_id = object_id

    def _current(self) -> Trajectory | None:
        return self.source() if callable(self.source) else self.source

    def _check(self, snapshot, report):
        trajectory = self._current()
        state = _ego_state(snapshot, self.object_id)
        if trajectory is None or state is None:
            return []
        if corridor_contains(trajectory, state.pose.position):
            return []
        return [
            Violation(
                validator=self.name,
                clock=snapshot.clock,
                object_ids=(state.id,),
                quantity="inside-corridor",
                value=0.0,
                threshold=1.0,
                relation="<",
                message=f"{state.id} left its trajectory corridor",
            )
        ]


class MissionTracker:
    """Ordered checkpoint progress for one object, by proximity."""

    def __init__(self, mission, network, radius: float = 3.5):
        self.points = [
            (network.checkpoint_waypoint(cp).x, network.checkpoint_waypoint(cp).y)
            for cp in mission.checkpoints
        ]
        self.radius = radius
        self.next_index = 0
        self.completion_clock: float | None = None

    def update(self, snapshot, object_id: str | None = None) -> None:
        state = _ego_state(snapshot, object_id)
        if state is None:
            return
        while self.next_index < len(self.points):
            cx, cy = self.points[self.next_index]
            if math.hypot(state.pose.x - cx, state.pose.y - cy) > self.radius:
                break
            self.next_index += 1
        if self.complete and self.completion_clock is None:
            self.completion_clock = snapshot.clock

    @property
    def complete(self) -> bool:
        return self.next_index >= len(self.points)

    @property
    def visited(self) -> int:
        return self.next_index


class CheckpointCompletionValidator(Validator):
    """All mission checkpoints must be visited, in order, by run end."""

    def __init__(self, mission, network, object_id: str | None = None, radius: float = 3.5):
        super().__init__("checkpoint_completion")
        self.tracker = MissionTracker(mission, network, radius=radius)
        self.object_id = object_id

    def _check(self, snapshot, report):
        self.tracker.update(snapshot, self.object_id)
        return []

    def _finish(self, snapshot):
        if self.tracker.complete:
            return []
        total = len(self.tracker.points)
        return [
            Violation(
                validator=self.name,
                clock=snapshot.clock,
                object_ids=(),
                quantity="checkpoints-visited",
                value=float(self.tracker.visited),
                threshold=float(total),
                relation="<",
                message=f"only {self.tracker.visited} of {total} checkpoints visited",
            )
        ]


class TimeoutValidator(Validator):
    """The run must conclude within a simulated-time budget."""

    def __init__(self, max_seconds: float):
        if not (math.isfinite(max_seconds) and max_seconds > 0):
            raise ValueError(f"timeout must be > 0, got {max_seconds!r}")
        super().__init__("timeout")
        self.max_seconds = max_seconds
        self._fired = False

    def _check(self, snapshot, report):
        if self._fired or snapshot.clock <= self.max_seconds:
            return []
        self._fired = True
        return [
            Violation(
                validator=self.name,
                clock=snapshot.clock,
                object_ids=(),
                quantity="simulated-time",
                value=snapshot.clock,
                threshold=self.max_seconds,
                relation=">",
                message=f"run exceeded {self.max_seconds} simulated seconds",
            )
        ]
