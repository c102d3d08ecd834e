"""Planar geometry for gate trajectories.

A trajectory is a string of gates: ordered left/right point pairs bounding
the drivable corridor. Gate midpoints are the control points for path
interpolation, either straight chords or a uniform cubic B-spline. Sampled
paths are stored in arc-length lookup tables so motion code can query
(point, heading) at a travelled distance in O(log n).
"""

import bisect
import math
from dataclasses import dataclass

Point = tuple[float, float]

_TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle in radians to [-pi, pi)."""
    return (angle + math.pi) % _TWO_PI - math.pi


def heading_between(prev: Point, nxt: Point) -> float:
    """Heading of the vector prev -> nxt, wrapped to [-pi, pi)."""
    dx = nxt[0] - prev[0]
    dy = nxt[1] - prev[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("heading undefined between coincident points")
    return normalize_angle(math.atan2(dy, dx))


def interpolate_heading(h0: float, h1: float, alpha: float) -> float:
    """Interpolate between two headings along the shorter angular arc."""
    return normalize_angle(h0 + normalize_angle(h1 - h0) * alpha)


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Pose:
    """Planar position in meters plus heading in radians.

    Heading is counterclockwise from the +x axis and is normalized to
    [-pi, pi) on construction.
    """

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        _require_finite("pose", self.x, self.y, self.heading)
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Gate:
    """One pearl pair: the left and right boundary points of a corridor slice.

    An optional target speed lets planners attach a speed profile to the
    corridor; it is advisory data, not geometry.
    """

    left: Point
    right: Point
    target_speed: float | None = None

    def __post_init__(self):
        _require_finite("gate", *self.left, *self.right)
        if self.left == self.right:
            raise ValueError("gate pearls must be distinct points")
        if self.target_speed is not None and (
            not math.isfinite(self.target_speed) or self.target_speed < 0
        ):
            raise ValueError(f"gate target speed must be >= 0, got {self.target_speed!r}")

    @property
    def width(self) -> float:
        return math.hypot(self.left[0] - self.right[0], self.left[1] - self.right[1])

    @property
    def midpoint(self) -> Point:
        return ((self.left[0] + self.right[0]) / 2.0, (self.left[1] + self.right[1]) / 2.0)


@dataclass(frozen=True)
class Trajectory:
    """Ordered string of gates; consecutive gate midpoints must not coincide."""

    gates: tuple[Gate, ...]

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        if len(gates) < 2:
            raise ValueError("a trajectory needs at least 2 gates")
        mids = [g.midpoint for g in gates]
        for a, b in zip(mids, mids[1:]):
            if a == b:
                raise ValueError("consecutive gate midpoints must not coincide")

    def __len__(self) -> int:
        return len(self.gates)


def midpoints(trajectory: Trajectory) -> tuple[Point, ...]:
    """Midpoint of each gate, in gate order."""
    return tuple(g.midpoint for g in trajectory.gates)


def bspline_basis(t: float) -> tuple[float, float, float, float]:
    """The four uniform cubic B-spline basis weights at parameter t."""
    return (
        (1.0 - t) ** 3 / 6.0,
        (3.0 * t ** 3 - 6.0 * t ** 2 + 4.0) / 6.0,
        (-3.0 * t ** 3 + 3.0 * t ** 2 + 3.0 * t + 1.0) / 6.0,
        t ** 3 / 6.0,
    )


def bspline_point(m0: Point, m1: Point, m2: Point, m3: Point, t: float) -> Point:
    """Evaluate one uniform cubic B-spline window at t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"spline parameter must be in [0, 1], got {t!r}")
    b0, b1, b2, b3 = bspline_basis(t)
    return (
        b0 * m0[0] + b1 * m1[0] + b2 * m2[0] + b3 * m3[0],
        b0 * m0[1] + b1 * m1[1] + b2 * m2[1] + b3 * m3[1],
    )


@dataclass(frozen=True)
class PathTable:
    """Sampled path with cumulative arc length, headings, and gate anchors.

    ``anchors`` holds the arc length associated with each input midpoint, so
    per-gate data (target speeds) can be mapped onto travelled distance.
    Immutable after construction.
    """

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    headings: tuple[float, ...]
    lengths: tuple[float, ...]
    anchors: tuple[float, ...]
    mode: str
    resolution: int

    @property
    def total_length(self) -> float:
        return self.lengths[-1]

    def point_at(self, s: float) -> tuple[Point, float]:
        """(point, heading) at arc length s; s must be within [0, total]."""
        if not math.isfinite(s) or s < 0.0 or s > self.lengths[-1]:
            raise ValueError(f"arc length {s!r} outside [0, {self.lengths[-1]}]")
        i = bisect.bisect_right(self.lengths, s)
        if i >= len(self.lengths):
            return (self.xs[-1], self.ys[-1]), self.headings[-1]
        i = max(i, 1)
        span = self.lengths[i] - self.lengths[i - 1]
        alpha = (s - self.lengths[i - 1]) / span
        x = self.xs[i - 1] + (self.xs[i] - self.xs[i - 1]) * alpha
        y = self.ys[i - 1] + (self.ys[i] - self.ys[i - 1]) * alpha
        heading = interpolate_heading(self.headings[i - 1], self.headings[i], alpha)
        return (x, y), heading

    def project(self, point: Point) -> float:
        """Arc length of the table point closest to ``point``.

        Nearest-sample search refined by projecting onto the two segments
        adjacent to the winning sample.
        """
        px, py = point
        best_i = 0
        best_d2 = math.inf
        for i, (x, y) in enumerate(zip(self.xs, self.ys)):
            d2 = (x - px) ** 2 + (y - py) ** 2
            if d2 < best_d2:
                best_d2 = d2
                best_i = i
        best_s = self.lengths[best_i]
        for j in (best_i - 1, best_i):
            if j < 0 or j + 1 >= len(self.xs):
                continue
            ax, ay = self.xs[j], self.ys[j]
            bx, by = self.xs[j + 1], self.ys[j + 1]
            vx, vy = bx - ax, by - ay
            denom = vx * vx + vy * vy
            if denom == 0.0:
                continue
            u = ((px - ax) * vx + (py - ay) * vy) / denom
            u = min(1.0, max(0.0, u))
            qx, qy = ax + u * vx, ay + u * vy
            d2 = (qx - px) ** 2 + (qy - py) ** 2
            if d2 < best_d2:
                best_d2 = d2
                best_s = self.lengths[j] + u * (self.lengths[j + 1] - self.lengths[j])
        return best_s


def _pad_for_spline(points: list[Point]) -> list[Point]:
    # Two extra copies of each endpoint make the open spline interpolate them.
    return [points[0], points[0], *points, points[-1], points[-1]]


def build_path_table(mids, mode: str, resolution: int = 100) -> PathTable:
    """Sample a midpoint string into an arc-length lookup table.

    ``linear`` chains straight segments through the midpoints. ``bspline``
    pads the string with repeated endpoints and samples each consecutive
    four-point window at ``resolution`` uniform parameter values, so the
    curve still starts at the first and ends at the last midpoint. Heading
    at a sample is the direction from its predecessor; the first sample
    copies the second.
    """
    mids = [tuple(p) for p in mids]
    if len(mids) < 2:
        raise ValueError("need at least 2 midpoints to build a path")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if mode not in ("linear", "bspline"):
        raise ValueError(f"unknown interpolation mode {mode!r}")

    pts: list[Point] = []
    anchor_idx: list[int] = []

    def _push(p: Point):
        if not pts or p != pts[-1]:
            pts.append(p)

    if mode == "linear":
        for i in range(len(mids) - 1):
            anchor_idx.append(max(len(pts) - 1, 0))
            ax, ay = mids[i]
            bx, by = mids[i + 1]
            start = 1 if i > 0 else 0
            for k in range(start, resolution):
                t = k / (resolution - 1)
                _push((ax + (bx - ax) * t, ay + (by - ay) * t))
        anchor_idx.append(len(pts) - 1)
    else:
        padded = _pad_for_spline(mids)
        windows = len(padded) - 3
        for j in range(windows):
            w = padded[j : j + 4]
            if 1 <= j <= len(mids) - 2:
                # Window j >= 1 opens at the knot associated with midpoint j.
                anchor_idx.append(len(pts) - 1)
            start = 1 if j > 0 else 0
            for k in range(start, resolution):
                t = k / (resolution - 1)
                _push(bspline_point(w[0], w[1], w[2], w[3], t))
        anchor_idx.insert(0, 0)
        anchor_idx.append(len(pts) - 1)

    if len(pts) < 2:
        raise ValueError("path collapses to a single point")

    lengths = [0.0]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        lengths.append(lengths[-1] + math.hypot(x1 - x0, y1 - y0))

    headings = [0.0] * len(pts)
    for k in range(1, len(pts)):
        headings[k] = heading_between(pts[k - 1], pts[k])
    headings[0] = headings[1]

    return PathTable(
        xs=tuple(p[0] for p in pts),
        ys=tuple(p[1] for p in pts),
        headings=tuple(headings),
        lengths=tuple(lengths),
        anchors=tuple(lengths[i] for i in anchor_idx),
        mode=mode,
        resolution=resolution,
    )


def _point_on_segment(p: Point, a: Point, b: Point, eps: float) -> bool:
    ax, ay = a
    bx, by = b
    px, py = p
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    seg_len = math.hypot(bx - ax, by - ay)
    if seg_len == 0.0:
        return math.hypot(px - ax, py - ay) <= eps
    if abs(cross) / seg_len > eps:
        return False
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    return -eps * seg_len <= dot <= seg_len * seg_len + eps * seg_len

def _point_in_polygon(p: Point, poly, eps: float = 1e-9) -> bool:
    # Boundary-inclusive even-odd test, behind a bounding-box reject.
    px, py = p
    lo_x = lo_y = math.inf
    hi_x = hi_y = -math.inf
    for x, y in poly:
        lo_x = x if x < lo_x else lo_x
        hi_x = x if x > hi_x else hi_x
        lo_y = y if y < lo_y else lo_y
        hi_y = y if y > hi_y else hi_y
    if px < lo_x - eps or px > hi_x + eps or py < lo_y - eps or py > hi_y + eps:
        return False
    n = len(poly)
    for i in range(n):
        if _point_on_segment(p, poly[i], poly[(i + 1) % n], eps):
            return True
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > py) != (yj > py):
            x_cross = xi + (py - yi) * (xj - xi) / (yj - yi)
            if px < x_cross:
                inside = not inside
        j = i
    return inside


def corridor_contains(trajectory: Trajectory, point: Point) -> bool:
    """True iff the point lies in any gate strip, boundaries included.

    A strip is the quadrilateral spanned by one gate and the next:
    (left_i, right_i, right_{i+1}, left_{i+1}).
    """
    gates = trajectory.gates
    for g0, g1 in zip(gates, gates[1:]):
        if _point_in_polygon(point, (g0.left, g0.right, g1.right, g1.left)):
            return True
    return False
