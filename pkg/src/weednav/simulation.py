"""Closed-loop mission executor: measure, solve, apply, segment after segment."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MissionFailed, ValidationError
from .geometry import Configuration, ReferencePath, wrap_angle
from .nmpc import CONVERGED, OcpParams, control_step
from .routing import Tour
from .vehicle import ControlInput, RobotLimits, input_violations, rk4_step

ARRIVAL_SPEED = 0.02  # m/s; "reach and stop"
MAX_CONSECUTIVE_FAILURES = 3


@dataclass(frozen=True)
class WaypointRecord:
    index: int
    time: float
    position_error: float
    heading_error: float


@dataclass
class MissionLog:
    """Per-step trace plus per-waypoint arrivals.

    ``states`` has one more row than ``inputs``: row ``i + 1`` is the result of
    applying ``inputs[i]`` to row ``i`` for ``dt`` seconds.
    """

    dt: float
    states: list = field(default_factory=list)  # Configuration
    inputs: list = field(default_factory=list)  # ControlInput
    s_bar: list = field(default_factory=list)
    status: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    solve_time: list = field(default_factory=list)
    segment: list = field(default_factory=list)
    waypoints: list = field(default_factory=list)  # WaypointRecord
    reference_length: float = 0.0
    n_waypoints: int = 0
    limits: Optional[RobotLimits] = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.dt

    def state_array(self) -> np.ndarray:
        return np.array([q.as_array() for q in self.states]).reshape(-1, 3)

    def input_array(self) -> np.ndarray:
        return np.array([u.as_array() for u in self.inputs]).reshape(-1, 2)

    @property
    def path_length(self) -> float:
        xy = self.state_array()[:, :2]
        return float(np.sum(np.hypot(*np.diff(xy, axis=0).T))) if len(xy) > 1 else 0.0

    @property
    def min_turn_violations(self) -> int:
        lim = self.limits or RobotLimits()
        return sum(1 for u in self.inputs if u.v < lim.r_min * abs(u.omega) - 1e-6)

    @property
    def infeasible_count(self) -> int:
        return sum(1 for s in self.status if s != CONVERGED)

    @property
    def success(self) -> bool:
        return len(self.waypoints) == self.n_waypoints

    @property
    def max_position_error(self) -> float:
        return max((w.position_error for w in self.waypoints), default=0.0)


def check_arrival(state: Configuration, target: Configuration, applied_v: float, limits: RobotLimits) -> bool:
    """Within ``goal_pos_tol`` of the target and (nearly) stopped."""
    return state.distance_to(target) <= limits.goal_pos_tol and abs(applied_v) <= ARRIVAL_SPEED


def fallback_policy(last_status: str, prev_u: ControlInput, limits: RobotLimits) -> ControlInput:
    """Brake toward (0, 0) as fast as the rate bounds allow, keeping v >= r_min |omega|."""
    w = prev_u.omega
    w_new = math.copysign(max(abs(w) - limits.domega_max, 0.0), w) if w != 0.0 else 0.0
    v_new = max(prev_u.v - limits.dv_max, limits.r_min * abs(w_new), 0.0)
    return ControlInput(v_new, w_new)


def step_cap(segment: ReferencePath, params: OcpParams) -> int:
    return max(500, int(math.ceil(20.0 * segment.total_length / (params.limits.v_max * params.dt))))


def run_mission(
    tour: Optional[Tour],
    segments: Sequence[ReferencePath],
    params: OcpParams,
    sim_dt: Optional[float] = None,
    max_steps: Optional[int] = None,
    start: Optional[Configuration] = None,
    raise_on_failure: bool = True,
) -> MissionLog:
    """Drive the simulated robot through ``segments`` in order.

    ``max_steps`` overrides the per-segment step cap. The plant is the
    prediction model, integrated with the same RK4 step.
    """
    dt = params.dt if sim_dt is None else float(sim_dt)
    if abs(dt - params.dt) > 1e-12:
        raise ValidationError("sim_dt must equal the controller sampling time")
    if not segments:
        raise ValidationError("no segments to run")
    lim = params.limits
    state = start if start is not None else segments[0].start
    log = MissionLog(dt=dt, limits=lim, n_waypoints=len(segments))
    log.reference_length = float(sum(s.total_length for s in segments))
    if tour is not None:
        log.reference_length = float(tour.total_cost)
    log.states.append(state)
    prev_u = ControlInput(0.0, 0.0)

    for w_idx, seg in enumerate(segments):
        target = seg.end
        cap = step_cap(seg, params) if max_steps is None else int(max_steps)
        warm = None
        failures = 0
        steps = 0
        while not check_arrival(state, target, prev_u.v, lim):
            if steps >= cap:
                if raise_on_failure:
                    raise MissionFailed(w_idx, "StepCap", log)
                return log
            t0 = time.perf_counter()
            u, sol = control_step(state, seg, prev_u, params, warm)
            elapsed = time.perf_counter() - t0
            if sol.status == CONVERGED:
                failures = 0
                warm = sol
            else:
                failures += 1
                if failures >= MAX_CONSECUTIVE_FAILURES:
                    log.status.append(sol.status)
                    if raise_on_failure:
                        raise MissionFailed(w_idx, "Infeasible", log)
                    return log
                u = fallback_policy(sol.status, prev_u, lim)
                warm = None
            state = rk4_step(state, u, dt)
            log.inputs.append(u)
            log.states.append(state)
            log.s_bar.append(sol.s_bar)
            log.status.append(sol.status)
            log.iterations.append(sol.iterations)
            log.solve_time.append(elapsed)
            log.segment.append(w_idx)
            prev_u = u
            steps += 1
        log.waypoints.append(
            WaypointRecord(
                index=w_idx,
                time=(len(log.states) - 1) * dt,
                position_error=state.distance_to(target),
                heading_error=abs(wrap_angle(state.theta - target.theta)),
            )
        )
    return log


def replay(start: Configuration, inputs: Sequence[ControlInput], dt: float) -> list:
    """Re-integrate logged inputs from ``start``."""
    out = [start]
    for u in inputs:
        out.append(rk4_step(out[-1], u, dt))
    return out


def applied_input_violations(log: MissionLog) -> list:
    """``(step, names)`` for every applied input that breaks a limit."""
    lim = log.limits or RobotLimits()
    prev = ControlInput(0.0, 0.0)
    bad = []
    for i, u in enumerate(log.inputs):
        v = input_violations(u, prev, lim)
        if v:
            bad.append((i, v))
        prev = u
    return bad
