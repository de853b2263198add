"""Solution checks for the NMPC tests, independent of the solver internals."""

import math

import numpy as np

from weednav import path_at, rk4_step, wrap_angle
from weednav.nmpc import rk4_predict


def check_solution(sol, seg, x0, prev_u, params):
    """Independent feasibility pass over a returned solution; returns the worst violations."""
    lim = params.limits
    out = {}
    out["initial"] = sol.states[0].distance_to(x0) + abs(wrap_angle(sol.states[0].theta - x0.theta))
    dyn = 0.0
    for k, u in enumerate(sol.inputs):
        q = rk4_step(sol.states[k], u, params.dt)
        nxt = sol.states[k + 1]
        dyn = max(dyn, abs(q.x - nxt.x), abs(q.y - nxt.y), abs(wrap_angle(q.theta - nxt.theta)))
    out["dynamics"] = dyn
    ref = path_at(seg, min(max(sol.s_bar, 0.0), 1.0))
    xh = sol.states[-1]
    out["terminal"] = max(abs(xh.x - ref.x), abs(xh.y - ref.y), abs(wrap_angle(xh.theta - ref.theta)))
    box = rate = turn = 0.0
    prev = prev_u
    for u in sol.inputs:
        box = max(box, -u.v, u.v - lim.v_max, abs(u.omega) - lim.omega_max)
        rate = max(rate, abs(u.v - prev.v) - lim.dv_max, abs(u.omega - prev.omega) - lim.domega_max)
        turn = max(turn, lim.r_min * abs(u.omega) - u.v)
        prev = u
    out["box"], out["rate"], out["min_turn"] = box, rate, turn
    out["s_range"] = max(-sol.s_bar, sol.s_bar - 1.0)
    clear = 0.0
    for o in params.obstacles:
        for q in sol.states[1:]:
            clear = max(clear, o.radius + lim.footprint_radius - math.hypot(q.x - o.x, q.y - o.y))
    out["obstacles"] = clear
    return out


def assert_feasible(sol, seg, x0, prev_u, params):
    v = check_solution(sol, seg, x0, prev_u, params)
    assert v["initial"] <= 1e-9
    assert v["dynamics"] <= 1e-6
    assert v["terminal"] <= 1e-4
    for key in ("box", "rate", "min_turn", "s_range"):
        assert v[key] <= 1e-6, key
    assert v["obstacles"] <= 1e-4


def feasible_point(nlp, rng):
    """A point satisfying the dynamics, built by rolling out admissible inputs."""
    H, lim = nlp.params.H, nlp.params.limits
    x = np.array(nlp.x0, dtype=float)
    X, U = [], []
    for _ in range(H):
        w = rng.uniform(-lim.omega_max, lim.omega_max)
        v = rng.uniform(lim.r_min * abs(w), lim.v_max) if lim.r_min * abs(w) < lim.v_max else lim.v_max
        x = rk4_predict(x, np.array([v, w]), nlp.params.dt)
        X.append(x)
        U.append([v, w])
    return np.concatenate([np.ravel(X), np.ravel(U), [rng.uniform(0.02, 0.98)]])
