"""The pluggable driving reasoner contract plus a baseline implementation.

The baseline follows the mission route along lane centers, emitting gate
trajectories toward the next unvisited checkpoint, and halts early when a
perceived object sits (or will sit, under constant velocity) inside its
look-ahead corridor: target speeds ramp to zero so the vehicle stops with a
configured margin before the obstacle. It exists to exercise the harness end
to end, not to drive cleverly: no lane changes, no intersection precedence.
"""

import heapq
import math
from dataclasses import dataclass

from .formats import FormatError, Mission, RouteNetwork
from .geometry import Gate, Pose, Trajectory, build_path_table, corridor_contains


class MissionInfeasibleError(Exception):
    """No route through the network reaches a mission checkpoint."""


@dataclass(frozen=True)
class PlannerConfig:
    lookahead: float = 40.0          # corridor length planned ahead, m
    gate_spacing: float = 2.5        # distance between emitted gates, m
    stop_margin: float = 8.0         # required halt gap before an obstacle, m
    stop_pad: float = 0.5            # extra commanded cushion beyond the margin, m
    prediction_horizon: float = 4.0  # constant-velocity obstacle prediction, s
    prediction_step: float = 0.5
    cruise_speed: float = 10.0
    creep_speed: float = 0.25        # floor that lets ramp-downs finish in finite time
    ramp_length: float = 15.0        # distance over which speed ramps down to a stop, m
    back_gate_offset: float = 1.0    # first gate sits this far behind the vehicle
    junction_tolerance: float = 0.5  # waypoints closer than this join lanes
    mode: str = "bspline"
    table_resolution: int = 12


class Reasoner:
    """Contract for the driving intelligence under test.

    ``plan`` must return a trajectory of at least two gates whose corridor
    contains the vehicle's current position, and must be side-effect-free
    apart from the reasoner's own memory. The harness invokes it
    synchronously at replan boundaries.
    """

    def plan(self, view, mission: Mission, route: RouteNetwork, self_pose: Pose, clock: float) -> Trajectory:
        raise NotImplementedError


class _Centerline:
    """Mission route flattened to a polyline with per-edge limits/widths."""

    def __init__(self, points, edge_limits, edge_widths, checkpoint_s):
        self.table = build_path_table(points, "linear", resolution=2)
        self.edge_limits = edge_limits
        self.edge_widths = edge_widths
        self.checkpoint_s = checkpoint_s

    def _edge_index(self, s: float) -> int:
        anchors = self.table.anchors
        for i in range(len(anchors) - 1):
            if s <= anchors[i + 1]:
                return i
        return len(anchors) - 2

    def limit_at(self, s: float) -> float:
        return self.edge_limits[self._edge_index(s)]

    def width_at(self, s: float) -> float:
        return self.edge_widths[self._edge_index(s)]

    def gate_at(self, s: float, target_speed=None) -> Gate:
        if s < 0.0:
            (x0, y0), heading = self.table.point_at(0.0)
            x = x0 + s * math.cos(heading)
            y = y0 + s * math.sin(heading)
            width = self.edge_widths[0]
        else:
            (x, y), heading = self.table.point_at(s)
            width = self.width_at(s)
        nx, ny = -math.sin(heading), math.cos(heading)
        half = width / 2.0
        return Gate(
            left=(x + nx * half, y + ny * half),
            right=(x - nx * half, y - ny * half),
            target_speed=target_speed,
        )


def _build_graph(network: RouteNetwork, join_tolerance: float):
    # Directed edges along each lane, plus short bidirectional joins where
    # lanes nearly touch. Edge payload: (to, weight, speed_limit, width).
    adjacency: dict[str, list] = {}
    owner: dict[str, object] = {}
    for lane in network.lanes:
        for wp in lane.waypoints:
            owner[wp.id] = lane
            adjacency.setdefault(wp.id, [])
        for a, b in zip(lane.waypoints, lane.waypoints[1:]):
            weight = math.hypot(b.x - a.x, b.y - a.y)
            adjacency[a.id].append((b.id, weight, lane.speed_limit, lane.width))
    waypoints = [wp for lane in network.lanes for wp in lane.waypoints]
    for i, a in enumerate(waypoints):
        for b in waypoints[i + 1 :]:
            if owner[a.id] is owner[b.id]:
                continue
            dist = math.hypot(b.x - a.x, b.y - a.y)
            if dist <= join_tolerance:
                adjacency[a.id].append((b.id, dist, owner[b.id].speed_limit, owner[b.id].width))
                adjacency[b.id].append((a.id, dist, owner[a.id].speed_limit, owner[a.id].width))
    return adjacency


def _shortest_path(adjacency, start: str, goal: str):
    # Dijkstra with id tie-breaking for deterministic routes.
    dist = {start: 0.0}
    prev = {}
    heap = [(0.0, start)]
    seen = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in seen:
            continue
        seen.add(node)
        if node == goal:
            break
        for to, weight, limit, width in adjacency.get(node, ()):
            nd = d + weight
            if to not in dist or nd < dist[to] - 1e-12 or (
                abs(nd - dist[to]) <= 1e-12 and node < prev[to][0]
            ):
                dist[to] = nd
                prev[to] = (node, limit, width)
                heapq.heappush(heap, (nd, to))
    if goal not in seen and goal != start:
        return None
    path = [goal]
    edges = []
    while path[-1] != start:
        node, limit, width = prev[path[-1]]
        edges.append((limit, width))
        path.append(node)
    path.reverse()
    edges.reverse()
    return path, edges


class BaselineReasoner(Reasoner):
    """Route-following planner with the early-stop collision rule."""

    def __init__(self, config: PlannerConfig | None = None):
        self.config = config or PlannerConfig()
        self._centerline: _Centerline | None = None
        self._next_checkpoint = 0
        self._fallback_width = 3.5

    def plan(self, view, mission, route, self_pose, clock):
        cfg = self.config
        if self._centerline is None:
            self._centerline = self._build_centerline(mission, route, self_pose)
        cl = self._centerline
        s_here = cl.table.project(self_pose.position)

        while (
            self._next_checkpoint < len(cl.checkpoint_s)
            and s_here >= cl.checkpoint_s[self._next_checkpoint] - 0.5
        ):
            self._next_checkpoint += 1
        if self._next_checkpoint >= len(cl.checkpoint_s):
            return self._halt_plan(self_pose, cl.width_at(min(s_here, cl.table.total_length)))

        mission_end = cl.checkpoint_s[-1]
        end_s = min(s_here + cfg.lookahead, mission_end)
        stopping = end_s >= mission_end - 1e-9

        corridor = self._gates_between(cl, s_here, end_s, speeds=None)
        blocker = self._nearest_blocker(view, cl, Trajectory(tuple(corridor)), s_here)
        if blocker is not None:
            stop_at = s_here + blocker - cfg.stop_margin - cfg.stop_pad
            if stop_at <= s_here + 1e-6:
                return self._halt_plan(self_pose, cl.width_at(s_here))
            if stop_at < end_s:
                end_s = stop_at
                stopping = True

        gates = self._gates_between(
            cl, s_here, end_s, speeds=(mission, stopping, s_here, end_s)
        )
        return Trajectory(tuple(gates))

    # -- internals ---------------------------------------------------------

    def _build_centerline(self, mission, route, self_pose):
        adjacency = _build_graph(route, self.config.junction_tolerance)
        waypoints = [wp for lane in route.lanes for wp in lane.waypoints]
        if not waypoints:
            raise MissionInfeasibleError("route network has no waypoints")
        start = min(
            waypoints,
            key=lambda wp: (math.hypot(wp.x - self_pose.x, wp.y - self_pose.y), wp.id),
        ).id

        node_path = [start]
        edge_attrs = []
        checkpoint_nodes = []
        at = start
        for cp in mission.checkpoints:
            goal = route.checkpoint_waypoint(cp).id
            found = _shortest_path(adjacency, at, goal)
            if found is None:
                raise MissionInfeasibleError(f"no route from {at!r} to checkpoint {cp!r}")
            leg_nodes, leg_edges = found
            node_path.extend(leg_nodes[1:])
            edge_attrs.extend(leg_edges)
            checkpoint_nodes.append(len(node_path) - 1)
            at = goal

        coords = []
        limits = []
        widths = []
        index_of_node: list[int] = []
        for k, node in enumerate(node_path):
            wp = route.waypoint(node)
            point = (wp.x, wp.y)
            if coords and point == coords[-1]:
                index_of_node.append(len(coords) - 1)
                continue
            if coords:
                limit, width = edge_attrs[k - 1]
                limits.append(limit)
                widths.append(width)
            coords.append(point)
            index_of_node.append(len(coords) - 1)
        if len(coords) < 2:
            raise MissionInfeasibleError("mission route collapses to a single point")

        cl = _Centerline(coords, limits, widths, checkpoint_s=[])
        anchors = cl.table.anchors
        checkpoint_s = [anchors[index_of_node[k]] for k in checkpoint_nodes]
        cl.checkpoint_s = checkpoint_s
        self._fallback_width = widths[0]
        return cl

    def _gates_between(self, cl, s_here, end_s, speeds):
        cfg = self.config
        s_values = [s_here - cfg.back_gate_offset]
        s = s_here + cfg.gate_spacing
        while s < end_s - 0.25 * cfg.gate_spacing:
            s_values.append(s)
            s += cfg.gate_spacing
        s_values.append(end_s)

        gates = []
        for sv in s_values:
            target = None
            if speeds is not None:
                mission, stopping, s0, se = speeds
                target = self._target_speed(cl, mission, stopping, s0, se, sv)
            gates.append(cl.gate_at(sv, target_speed=target))
        return gates

    def _target_speed(self, cl, mission, stopping, s0, se, s):
        cfg = self.config
        base = min(cfg.cruise_speed, cl.limit_at(min(max(s, 0.0), cl.table.total_length)))
        if mission.speed_cap is not None:
            base = min(base, mission.speed_cap)
        if not stopping:
            return base
        # The ramp is a pure function of arc position, so successive replans
        # command a consistent deceleration toward the stop point. It bottoms
        # out at creep speed rather than zero: the trajectory is truncated at
        # the stop point, and the end-of-path clamp performs the actual halt.
        ramp = base * (se - s) / cfg.ramp_length
        return max(min(base, ramp), cfg.creep_speed)

    def _nearest_blocker(self, view, cl, corridor, s_here):
        cfg = self.config
        nearest = None
        for record in view.perceived:
            vx = record.speed * math.cos(record.pose.heading)
            vy = record.speed * math.sin(record.pose.heading)
            tau = 0.0
            while tau <= cfg.prediction_horizon + 1e-9:
                q = (record.pose.x + vx * tau, record.pose.y + vy * tau)
                if corridor_contains(corridor, q):
                    ahead = cl.table.project(q) - s_here
                    if ahead > 0.0 and (nearest is None or ahead < nearest):
                        nearest = ahead
                tau += cfg.prediction_step
        return nearest

    def _halt_plan(self, self_pose, width):
        # Two zero-speed gates straddling the vehicle: stay put.
        heading = self_pose.heading
        ux, uy = math.cos(heading), math.sin(heading)
        nx, ny = -uy, ux
        half = width / 2.0
        gates = []
        for along in (-1.0, 1.0):
            cx = self_pose.x + ux * along
            cy = self_pose.y + uy * along
            gates.append(
                Gate(
                    left=(cx + nx * half, cy + ny * half),
                    right=(cx - nx * half, cy - ny * half),
                    target_speed=0.0,
                )
            )
        return Trajectory(tuple(gates))
