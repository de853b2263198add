"""Curvature-constrained weed-visiting tours and an NMPC that drives them."""

from ._backend import BACKEND
from .errors import (
    DiscontinuousTour,
    DuplicateTarget,
    EmptySegment,
    Infeasible,
    InvalidRadius,
    InvalidStep,
    MissionFailed,
    OutOfDomain,
    PackingInfeasible,
    SolverConfigError,
    TooFewTargets,
    ValidationError,
    WeedNavError,
)
from .geometry import (
    Configuration,
    DubinsPath,
    ReferencePath,
    concatenate,
    dubins_sample,
    dubins_shortest,
    path_at,
    wrap_angle,
)
from .nmpc import Obstacle, OcpParams, OcpSolution, build_nlp, control_step, solve_ocp
from .routing import (
    Field,
    Tour,
    build_cluster_graph,
    gtsp_to_atsp,
    solve_atsp,
    solve_decoupled,
    solve_dtsp_coupled,
    solve_etsp,
    tour_cost,
)
from .simulation import MissionLog, check_arrival, fallback_policy, run_mission
from .vehicle import ControlInput, RobotLimits, rk4_step

__version__ = "0.1.0"
