"""Object factories: instantiate a world model from a validated scenario.

Every declared object is built with its declared pose, shape, and behavior;
the clock starts at zero. Planned objects receive a hold behavior until the
harness binds the first plan.
"""

from . import behaviors
from .formats import (
    FormatError,
    HoldSpec,
    KeyboardSpec,
    PlannedSpec,
    RouteFollowSpec,
    ScenarioBundle,
    TrailerSpec,
    TrajectoryFollowSpec,
)
from .geometry import Trajectory
from .world import SimObject, WorldModel


def create_world(bundle: ScenarioBundle) -> WorldModel:
    scenario = bundle.scenario
    world = WorldModel(update_mode=scenario.update_mode, rng_seed=scenario.seed)
    for spec in scenario.objects:
        behavior = None
        if spec.behavior is not None:
            behavior = _build_behavior(spec.id, spec.behavior, bundle, world)
        world.add_object(
            SimObject(
                object_id=spec.id,
                role=spec.role,
                shape=spec.shape,
                pose=spec.pose,
                speed=spec.speed,
                behavior=behavior,
            )
        )
    return world


def _build_behavior(object_id, spec, bundle, world):
    if isinstance(spec, RouteFollowSpec):
        if bundle.network is None:
            raise FormatError(
                f"object {object_id!r} follows lane {spec.lane!r} but no route network is linked"
            )
        return behaviors.RouteBehavior.from_lane(
            bundle.network, spec.lane, spec.cruise_speed, loop=spec.loop
        )
    if isinstance(spec, TrajectoryFollowSpec):
        return behaviors.TrajectoryBehavior(
            Trajectory(spec.gates), mode=spec.mode, cruise_speed=spec.cruise_speed
        )
    if isinstance(spec, KeyboardSpec):
        return behaviors.CommandBehavior(max_accel=spec.max_accel, max_yaw_rate=spec.max_yaw_rate)
    if isinstance(spec, (HoldSpec, PlannedSpec)):
        return behaviors.HoldBehavior()
    if isinstance(spec, TrailerSpec):
        leader = world.object(spec.leader)
        if leader.behavior is None:
            raise FormatError(f"trailer {object_id!r} cannot follow static object {spec.leader!r}")
        wrapped, trailer = behaviors.compose(leader.behavior, spec.offset)
        leader.behavior = wrapped
        return trailer
    raise FormatError(f"object {object_id!r} has unsupported behavior spec {spec!r}")
