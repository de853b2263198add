import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import unicycle_arc
from weednav import Configuration, ControlInput, RobotLimits, SolverConfigError, rk4_step
from weednav.vehicle import dynamics, input_violations


def test_default_limits():
    lim = RobotLimits()
    assert lim.v_bounds == (0.0, 0.5)
    assert lim.omega_bounds == (-1.9, 1.9)
    assert lim.du_bounds == pytest.approx((0.1, 0.38))


@pytest.mark.parametrize(
    "kwargs",
    [dict(v_max=0.0), dict(omega_max=-1.0), dict(r_min=0.0), dict(goal_pos_tol=0.0), dict(v_min=-0.1),
     dict(rate_divisor=0.0), dict(footprint_radius=-0.1), dict(v_max=float("nan"))],
)
def test_bad_limits_rejected(kwargs):
    with pytest.raises(SolverConfigError):
        RobotLimits(**kwargs)


def test_dynamics_vector_field():
    assert np.allclose(dynamics(Configuration(0, 0, math.pi / 2), ControlInput(2.0, 0.3)), [0.0, 2.0, 0.3])


def test_rk4_exact_on_straight_line():
    q = rk4_step(Configuration(1, 2, 0.4), ControlInput(0.5, 0.0), 0.1)
    assert q.x == pytest.approx(1 + 0.05 * math.cos(0.4), abs=1e-15)
    assert q.y == pytest.approx(2 + 0.05 * math.sin(0.4), abs=1e-15)


def test_rk4_at_full_turn_rate():
    q = rk4_step(Configuration(0, 0, 0), ControlInput(0.5, 1.9), 0.1)
    x, y, th = unicycle_arc((0, 0, 0), 0.5, 1.9, 0.1)
    assert math.hypot(q.x - x, q.y - y) < 1e-6
    assert abs(q.theta - th) < 1e-12


@given(st.floats(0, 0.5), st.floats(-1.9, 1.9), st.floats(-math.pi, math.pi))
@settings(max_examples=300, deadline=None)
def test_rk4_matches_arc(v, w, th):
    q = rk4_step(Configuration(0.3, -0.2, th), ControlInput(v, w), 0.1)
    x, y, th2 = unicycle_arc((0.3, -0.2, th), v, w, 0.1)
    assert math.hypot(q.x - x, q.y - y) < 1e-6
    assert abs(math.remainder(q.theta - th2, 2 * math.pi)) < 1e-9


class TestInputViolations:
    lim = RobotLimits()

    def test_clean_input(self):
        assert input_violations(ControlInput(0.3, 0.5), ControlInput(0.25, 0.4), self.lim) == []

    def test_each_rule(self):
        assert "v_box" in input_violations(ControlInput(0.6, 0.0), ControlInput(0.55, 0.0), self.lim)
        assert "omega_box" in input_violations(ControlInput(0.5, 2.0), ControlInput(0.5, 1.9), self.lim)
        assert "v_rate" in input_violations(ControlInput(0.3, 0.0), ControlInput(0.0, 0.0), self.lim)
        assert "omega_rate" in input_violations(ControlInput(0.5, 0.5), ControlInput(0.5, 0.0), self.lim)
        assert "min_turn" in input_violations(ControlInput(0.1, 0.3), ControlInput(0.1, 0.3), self.lim)
