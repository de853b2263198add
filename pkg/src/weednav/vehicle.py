"""Differential-drive kinematics, its RK4 discretization and actuator limits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverConfigError
from .geometry import Configuration, wrap_angle


@dataclass(frozen=True)
class ControlInput:
    """Linear velocity ``v`` (m/s) and angular velocity ``omega`` (rad/s)."""

    v: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        v, w = float(self.v), float(self.omega)
        if not (math.isfinite(v) and math.isfinite(w)):
            raise ValueError(f"non-finite control input ({v}, {w})")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "omega", w)

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.omega])


@dataclass(frozen=True)
class RobotLimits:
    """Actuator box, per-step rate bounds, turning radius and arrival tolerances.

    When ``dv_max`` / ``domega_max`` are left as ``None`` they default to the
    channel maximum divided by ``rate_divisor``.
    """

    v_min: float = 0.0
    v_max: float = 0.5
    omega_max: float = 1.9
    r_min: float = 0.5
    rate_divisor: float = 5.0
    dv_max: float | None = None
    domega_max: float | None = None
    goal_pos_tol: float = 0.05
    heading_tol: float = 0.2
    footprint_radius: float = 0.0

    def __post_init__(self):
        if self.dv_max is None:
            object.__setattr__(self, "dv_max", self.v_max / self.rate_divisor if self.rate_divisor > 0 else -1.0)
        if self.domega_max is None:
            object.__setattr__(
                self, "domega_max", self.omega_max / self.rate_divisor if self.rate_divisor > 0 else -1.0
            )
        vals = [self.v_min, self.v_max, self.omega_max, self.r_min, self.rate_divisor, self.dv_max,
                self.domega_max, self.goal_pos_tol, self.heading_tol, self.footprint_radius]
        if not all(math.isfinite(float(v)) for v in vals):
            raise SolverConfigError("robot limits must be finite")
        if self.v_min != 0.0:
            raise SolverConfigError("v_min must be 0 (forward-only motion)")
        checks = {
            "v_max": self.v_max, "omega_max": self.omega_max, "r_min": self.r_min,
            "rate_divisor": self.rate_divisor, "dv_max": self.dv_max, "domega_max": self.domega_max,
            "goal_pos_tol": self.goal_pos_tol, "heading_tol": self.heading_tol,
        }
        for name, v in checks.items():
            if not v > 0.0:
                raise SolverConfigError(f"{name} must be positive, got {v}")
        if self.footprint_radius < 0.0:
            raise SolverConfigError("footprint_radius must be non-negative")

    @property
    def v_bounds(self) -> tuple:
        return (self.v_min, self.v_max)

    @property
    def omega_bounds(self) -> tuple:
        return (-self.omega_max, self.omega_max)

    @property
    def du_bounds(self) -> tuple:
        return (self.dv_max, self.domega_max)


def dynamics(state, u) -> np.ndarray:
    """Unicycle vector field ``(v cos(theta), v sin(theta), omega)``."""
    th = state.theta if isinstance(state, Configuration) else float(state[2])
    v, w = (u.v, u.omega) if isinstance(u, ControlInput) else (float(u[0]), float(u[1]))
    return np.array([v * math.cos(th), v * math.sin(th), w])


def rk4_step(state: Configuration, u: ControlInput, dt: float) -> Configuration:
    """One classic Runge-Kutta step with the input held constant."""
    x = state.as_array()
    k1 = dynamics(x, u)
    k2 = dynamics(x + 0.5 * dt * k1, u)
    k3 = dynamics(x + 0.5 * dt * k2, u)
    k4 = dynamics(x + dt * k3, u)
    nx = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Configuration(nx[0], nx[1], wrap_angle(nx[2]))


def input_violations(u: ControlInput, prev: ControlInput, limits: RobotLimits, tol: float = 1e-6) -> list:
    """Names of the box, rate and min-turn constraints that ``u`` breaks."""
    out = []
    if u.v < limits.v_min - tol or u.v > limits.v_max + tol:
        out.append("v_box")
    if abs(u.omega) > limits.omega_max + tol:
        out.append("omega_box")
    if abs(u.v - prev.v) > limits.dv_max + tol:
        out.append("v_rate")
    if abs(u.omega - prev.omega) > limits.domega_max + tol:
        out.append("omega_rate")
    if u.v < limits.r_min * abs(u.omega) - tol:
        out.append("min_turn")
    return out
