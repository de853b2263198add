"""Receding-horizon controller with an optimized artificial reference."""

from .ipm import CONVERGED, INFEASIBLE, MAX_ITERATIONS, IpmOptions, IpmResult
from .ocp import (
    Obstacle,
    OcpNlp,
    OcpParams,
    OcpSolution,
    build_nlp,
    control_step,
    offset_cost,
    rk4_predict,
    solve_ocp,
    stage_cost,
)

__all__ = [
    "CONVERGED", "INFEASIBLE", "MAX_ITERATIONS", "IpmOptions", "IpmResult", "Obstacle", "OcpNlp",
    "OcpParams", "OcpSolution", "build_nlp", "control_step", "offset_cost", "rk4_predict", "solve_ocp",
    "stage_cost",
]
