"""Sensor views: read-only masked extracts of a world snapshot.

A view reflects what one sensor configuration can see (range plus field of
view around the sensor heading), never the whole model. Degradation (dropout
and position noise) is applied view-side and keyed deterministically by
(run seed, consumer, clock, object), so degraded runs replay bit-identically
and extraction order does not matter.
"""

import hashlib
import math
import random
from dataclasses import dataclass, replace

from .geometry import Pose, normalize_angle
from .trace import canon
from .world import ObjectState, SimulationError, WorldSnapshot


@dataclass(frozen=True)
class SensorConfig:
    """Range/field-of-view envelope, mounted at an offset from the observer."""

    range_m: float
    fov_half_angle: float = math.pi
    mount_offset: Pose = Pose(0.0, 0.0, 0.0)

    def __post_init__(self):
        if not math.isfinite(self.range_m) or self.range_m <= 0:
            raise ValueError(f"sensor range must be finite and > 0, got {self.range_m!r}")
        if not 0.0 < self.fov_half_angle <= math.pi:
            raise ValueError(
                f"fov half-angle must be in (0, pi], got {self.fov_half_angle!r}"
            )


@dataclass(frozen=True)
class DegradationConfig:
    """View debasing: per-record dropout plus Gaussian position noise."""

    dropout_probability: float = 0.0
    position_noise_sigma: float = 0.0
    consumer_id: str = "sensor"

    def __post_init__(self):
        if not 0.0 <= self.dropout_probability <= 1.0:
            raise ValueError("dropout probability must be within [0, 1]")
        if not math.isfinite(self.position_noise_sigma) or self.position_noise_sigma < 0:
            raise ValueError("noise sigma must be finite and >= 0")


@dataclass(frozen=True)
class ViewExtract:
    """What one observer perceives at one instant. Never contains itself."""

    observer_id: str
    clock: float
    perceived: tuple[ObjectState, ...]


def extract(snapshot: WorldSnapshot, observer_id: str, config: SensorConfig) -> ViewExtract:
    """Mask the snapshot down to what the observer's sensor can see.

    An object is visible when its shape center lies within range of the
    sensor origin and within the half-angle of the sensor heading. There is
    no occlusion model.
    """
    observer = snapshot.object(observer_id)
    oh = observer.pose.heading
    cos_h, sin_h = math.cos(oh), math.sin(oh)
    off = config.mount_offset
    ox = observer.pose.x + cos_h * off.x - sin_h * off.y
    oy = observer.pose.y + sin_h * off.x + cos_h * off.y
    sensor_heading = normalize_angle(oh + off.heading)

    perceived = []
    for state in snapshot.objects:
        if state.id == observer_id:
            continue
        dx, dy = state.pose.x - ox, state.pose.y - oy
        dist = math.hypot(dx, dy)
        if dist > config.range_m:
            continue
        if dist > 0.0:
            bearing = normalize_angle(math.atan2(dy, dx) - sensor_heading)
            if abs(bearing) > config.fov_half_angle:
                continue
        perceived.append(state)
    return ViewExtract(observer_id=observer_id, clock=snapshot.clock, perceived=tuple(perceived))


def _record_rng(run_seed: int, consumer_id: str, clock: float, object_id: str) -> random.Random:
    key = f"{run_seed}|{consumer_id}|{canon(clock)}|{object_id}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def degrade(view: ViewExtract, config: DegradationConfig, run_seed: int) -> ViewExtract:
    """Debase a view: drop records and blur surviving positions.

    Each record draws from its own deterministic stream, so results are
    independent of record order and replay exactly for a fixed seed.
    """
    if view.observer_id is None:
        raise SimulationError("cannot degrade a view without an observer")
    kept = []
    for state in view.perceived:
        rng = _record_rng(run_seed, config.consumer_id, view.clock, state.id)
        if rng.random() < config.dropout_probability:
            continue
        dx = rng.gauss(0.0, config.position_noise_sigma)
        dy = rng.gauss(0.0, config.position_noise_sigma)
        pose = Pose(state.pose.x + dx, state.pose.y + dy, state.pose.heading)
        kept.append(replace(state, pose=pose))
    return ViewExtract(observer_id=view.observer_id, clock=view.clock, perceived=tuple(kept))
