"""Motion behaviors: per-object strategies that advance one simulator object
each step.

A behavior receives its object's current state, an immutable world snapshot,
and the elapsed dt, and returns the new (pose, speed). Behaviors never write
to the snapshot and never consult wall-clock time. They are swappable at
runtime and composable (a leader behavior plus a hitch-trace trailer).
"""

import bisect
import math
from dataclasses import dataclass

from .geometry import (
    Pose,
    Trajectory,
    build_path_table,
    interpolate_heading,
    midpoints,
    normalize_angle,
)


class MotionBehavior:
    """Contract: ``advance(own_state, snapshot, dt) -> (Pose, speed)``.

    ``advance`` with dt=0 must return the current pose and speed unchanged
    and must not consume queued input.
    """

    def advance(self, own_state, snapshot, dt):
        raise NotImplementedError


class HoldBehavior(MotionBehavior):
    """Keeps the object exactly where it is. Placeholder for planned egos
    and parked-but-dynamic objects."""

    def advance(self, own_state, snapshot, dt):
        return own_state.pose, own_state.speed


class _SpeedProfile:
    """Per-gate target speeds interpolated linearly over arc-length anchors;
    a flat cruise speed when no gate carries one."""

    def __init__(self, anchors, gate_speeds, cruise_speed):
        self.cruise = cruise_speed
        if any(v is not None for v in gate_speeds):
            self.anchors = anchors
            self.values = [v if v is not None else cruise_speed for v in gate_speeds]
        else:
            self.anchors = None
            self.values = None

    def speed_at(self, s: float) -> float:
        if self.anchors is None:
            return self.cruise
        i = bisect.bisect_right(self.anchors, s)
        if i <= 0:
            return self.values[0]
        if i >= len(self.anchors):
            return self.values[-1]
        span = self.anchors[i] - self.anchors[i - 1]
        alpha = (s - self.anchors[i - 1]) / span if span > 0 else 1.0
        return max(0.0, self.values[i - 1] + (self.values[i] - self.values[i - 1]) * alpha)


class TrajectoryBehavior(MotionBehavior):
    """Follows a gate trajectory's interpolated path by arc length.

    Each step moves speed*dt meters along the lookup table, clamping at the
    path end (speed 0 thereafter). With ``start_at_projection`` the first
    step aligns progress to the point of the path nearest the object's
    current pose, which keeps behavior swaps free of pose jumps.
    """

    def __init__(self, trajectory: Trajectory, mode="bspline", cruise_speed=10.0,
                 resolution=100, start_at_projection=False):
        self.trajectory = trajectory
        self.table = build_path_table(midpoints(trajectory), mode, resolution)
        self._profile = _SpeedProfile(
            self.table.anchors, [g.target_speed for g in trajectory.gates], cruise_speed
        )
        self._s = None if start_at_projection else 0.0

    def advance(self, own_state, snapshot, dt):
        if dt == 0.0:
            return own_state.pose, own_state.speed
        if self._s is None:
            self._s = self.table.project(own_state.pose.position)
        total = self.table.total_length
        speed = self._profile.speed_at(self._s)
        s_next = self._s + speed * dt
        if s_next >= total:
            s_next = total
            speed = 0.0
        self._s = s_next
        (x, y), heading = self.table.point_at(s_next)
        return Pose(x, y, heading), speed


class RouteBehavior(MotionBehavior):
    """Follows a waypoint polyline at a cruise speed, optionally looping.

    Looping wraps travelled distance modulo the polyline length; cyclic
    routes should close geometrically (last point at the first) to avoid a
    positional jump at the wrap.
    """

    def __init__(self, points, cruise_speed, loop=False):
        points = [tuple(p) for p in points]
        distinct = [points[0]] if points else []
        for p in points[1:]:
            if p != distinct[-1]:
                distinct.append(p)
        if len(distinct) < 2:
            raise ValueError("route needs at least two distinct waypoints")
        self.table = build_path_table(distinct, "linear", resolution=2)
        self.cruise_speed = cruise_speed
        self.loop = loop
        self._s = 0.0

    @classmethod
    def from_lane(cls, network, lane_id, cruise_speed, loop=False):
        return cls(network.lane(lane_id).points, cruise_speed, loop=loop)

    def advance(self, own_state, snapshot, dt):
        if dt == 0.0:
            return own_state.pose, own_state.speed
        total = self.table.total_length
        speed = self.cruise_speed
        s_next = self._s + speed * dt
        if self.loop:
            s_next = s_next % total
        elif s_next >= total:
            s_next = total
            speed = 0.0
        self._s = s_next
        (x, y), heading = self.table.point_at(s_next)
        return Pose(x, y, heading), speed


@dataclass(frozen=True)
class CommandState:
    """Commanded acceleration (m/s^2) and yaw rate (rad/s)."""

    accel: float = 0.0
    yaw_rate: float = 0.0


class CommandBehavior(MotionBehavior):
    """Externally commanded motion (the keyboard behavior).

    Commands are consumed at step boundaries, latest wins within one step,
    and the last command persists across steps until replaced. Out-of-bound
    values are clamped, never rejected: operator input must not crash a run.

    Integration per step is a rectangle rule with state updated first:
    speed += a*dt (clamped at 0), heading += w*dt, then the position moves
    speed*dt along the new heading.
    """

    def __init__(self, max_accel=3.0, max_yaw_rate=math.pi / 2):
        self.max_accel = max_accel
        self.max_yaw_rate = max_yaw_rate
        self._current = CommandState()
        self._pending = None

    def enqueue_command(self, command: CommandState) -> None:
        accel = command.accel if math.isfinite(command.accel) else 0.0
        yaw = command.yaw_rate if math.isfinite(command.yaw_rate) else 0.0
        self._pending = CommandState(
            accel=min(self.max_accel, max(-self.max_accel, accel)),
            yaw_rate=min(self.max_yaw_rate, max(-self.max_yaw_rate, yaw)),
        )

    def advance(self, own_state, snapshot, dt):
        if dt == 0.0:
            return own_state.pose, own_state.speed
        if self._pending is not None:
            self._current = self._pending
            self._pending = None
        speed = max(0.0, own_state.speed + self._current.accel * dt)
        heading = normalize_angle(own_state.pose.heading + self._current.yaw_rate * dt)
        x = own_state.pose.x + speed * dt * math.cos(heading)
        y = own_state.pose.y + speed * dt * math.sin(heading)
        return Pose(x, y, heading), speed


class _HitchTrace:
    """The leader's travelled path: cumulative arc length, poses, speeds."""

    def __init__(self):
        self.cum: list[float] = []
        self.poses: list[Pose] = []
        self.speeds: list[float] = []

    def append(self, pose: Pose, speed: float) -> None:
        if not self.poses:
            self.cum.append(0.0)
            self.poses.append(pose)
            self.speeds.append(speed)
            return
        dist = self.poses[-1].distance_to(pose)
        if dist == 0.0:
            self.speeds[-1] = speed
            return
        self.cum.append(self.cum[-1] + dist)
        self.poses.append(pose)
        self.speeds.append(speed)

    @property
    def traveled(self) -> float:
        return self.cum[-1] if self.cum else 0.0

    def sample_at(self, s: float) -> tuple[Pose, float]:
        i = bisect.bisect_right(self.cum, s) - 1
        if i >= len(self.cum) - 1:
            return self.poses[-1], self.speeds[-1]
        i = max(i, 0)
        span = self.cum[i + 1] - self.cum[i]
        alpha = (s - self.cum[i]) / span
        a, b = self.poses[i], self.poses[i + 1]
        pose = Pose(
            a.x + (b.x - a.x) * alpha,
            a.y + (b.y - a.y) * alpha,
            interpolate_heading(a.heading, b.heading, alpha),
        )
        speed = self.speeds[i] + (self.speeds[i + 1] - self.speeds[i]) * alpha
        return pose, speed

    def trim_before(self, s: float) -> None:
        # Entries strictly behind s are consumed; keep one for interpolation.
        i = bisect.bisect_right(self.cum, s) - 1
        if i > 0:
            del self.cum[:i]
            del self.poses[:i]
            del self.speeds[:i]


class _LeaderWithTrace(MotionBehavior):
    """Wraps the leader's behavior and records its travelled trace."""

    def __init__(self, inner: MotionBehavior, trace: _HitchTrace):
        self.inner = inner
        self._trace = trace

    def advance(self, own_state, snapshot, dt):
        if not self._trace.poses:
            self._trace.append(own_state.pose, own_state.speed)
        pose, speed = self.inner.advance(own_state, snapshot, dt)
        if dt > 0.0:
            self._trace.append(pose, speed)
        return pose, speed


class TrailerBehavior(MotionBehavior):
    """Replays the leader's trace at a fixed arc-length offset behind it.

    Until the leader has travelled ``offset`` meters the trailer holds its
    initial pose (the startup rule); afterwards it tracks the historical
    leader pose exactly offset meters back along the travelled path, moving
    at the leader's speed at that point of the trace.
    """

    def __init__(self, trace: _HitchTrace, offset: float):
        self._trace = trace
        self.offset = offset

    def advance(self, own_state, snapshot, dt):
        if dt == 0.0:
            return own_state.pose, own_state.speed
        target = self._trace.traveled - self.offset
        if target < 0.0 or not self._trace.poses:
            return own_state.pose, own_state.speed
        pose, speed = self._trace.sample_at(target)
        self._trace.trim_before(target)
        return pose, speed


def compose(leader: MotionBehavior, follower_offset: float):
    """Couple a leader behavior with a trailing follower.

    Returns (leader_behavior, trailer_behavior). The returned leader must
    replace the original on the leading object, and the leading object must
    be updated before the trailer within a step (declare it earlier) for the
    trailer to track without a one-step lag.
    """
    if not (math.isfinite(follower_offset) and follower_offset > 0.0):
        raise ValueError(f"follower offset must be > 0, got {follower_offset!r}")
    trace = _HitchTrace()
    return _LeaderWithTrace(leader, trace), TrailerBehavior(trace, follower_offset)
