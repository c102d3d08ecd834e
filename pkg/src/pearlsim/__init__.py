"""pearlsim: a deterministic 2-D driving simulator and validation harness.

The world model advances simulator objects through pluggable motion
behaviors; trajectories are strings of gates interpolated linearly or with
uniform cubic B-splines; sensor views mask and degrade what a reasoner
perceives; validators judge every step; and the harness turns scenario files
into regression suites, comparisons, and an interactive steered session.
"""

from .behaviors import (
    CommandBehavior,
    CommandState,
    HoldBehavior,
    MotionBehavior,
    RouteBehavior,
    TrailerBehavior,
    TrajectoryBehavior,
    compose,
)
from .factory import create_world
from .formats import (
    FormatError,
    Mission,
    RouteNetwork,
    Scenario,
    ScenarioBundle,
    link_scenario,
    load_mission,
    load_route_network,
    load_scenario,
    parse_mission,
    parse_route_network,
    parse_scenario,
    serialize_mission,
    serialize_route_network,
    serialize_scenario,
)
from .geometry import (
    Gate,
    PathTable,
    Pose,
    Trajectory,
    bspline_basis,
    bspline_point,
    build_path_table,
    corridor_contains,
    heading_between,
    midpoints,
    normalize_angle,
)
from .harness import (
    ComparisonReport,
    SuiteReport,
    TestReport,
    build_reasoner,
    compare_runs,
    make_validators,
    run_scenario,
    run_suite,
)
from .reasoner import BaselineReasoner, MissionInfeasibleError, PlannerConfig, Reasoner
from .validators import (
    CheckpointCompletionValidator,
    CollisionValidator,
    CorridorKeepingValidator,
    MinDistanceValidator,
    MissionTracker,
    SpeedLimitValidator,
    TimeoutValidator,
    Validator,
    Violation,
)
from .views import DegradationConfig, SensorConfig, ViewExtract, degrade, extract
from .world import (
    CollisionEvent,
    ObjectShape,
    ObjectState,
    SimObject,
    SimulationError,
    StepReport,
    WorldModel,
    WorldSnapshot,
)

__version__ = "0.1.0"
