"""Artificial-reference OCP over one path segment, by direct multiple shooting.

Decision vector ``z = [x(1..H), u(0..H-1), s]``: ``3H + 2H + 1`` entries. The
shooting states carry an unwrapped heading so the RK4 defects stay smooth;
heading errors against the path are wrapped before they enter the cost or
the terminal constraint.

With the input constant over a step the unicycle heading is linear in time,
so classic RK4 has the closed form

    x+ = x + (h v / 6) (cos a + 4 cos b + cos c)
    y+ = y + (h v / 6) (sin a + 4 sin b + sin c)
    theta+ = theta + h omega

with ``a = theta``, ``b = theta + h omega / 2``, ``c = theta + h omega``. All
derivatives below are taken from that form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import EmptySegment, SolverConfigError
from ..geometry import Configuration, ReferencePath, nearest_parameter, path_eval, path_eval_smooth, wrap_angle
from ..vehicle import ControlInput, RobotLimits
from . import ipm


@dataclass(frozen=True)
class Obstacle:
    """Disc obstacle."""

    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class OcpParams:
    H: int = 20
    dt: float = 0.1
    Q: np.ndarray = field(default_factory=lambda: np.diag([0.1, 0.1, 0.01]))
    R: np.ndarray = field(default_factory=lambda: np.diag([0.1, 1.0]))
    q_s: float = 1e4
    limits: RobotLimits = field(default_factory=RobotLimits)
    obstacles: tuple = ()
    state_box: Optional[tuple] = None  # (x_min, y_min, x_max, y_max) geo-fence, off by default
    max_iter: int = 200
    tol: float = 1e-6

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        R = np.array(self.R, dtype=float)
        if isinstance(self.H, bool) or int(self.H) != self.H or self.H < 2:
            raise SolverConfigError(f"horizon H must be an integer >= 2, got {self.H}")
        if not (self.dt > 0.0) or not math.isfinite(self.dt):
            raise SolverConfigError(f"dt must be positive, got {self.dt}")
        if Q.shape != (3, 3) or R.shape != (2, 2):
            raise SolverConfigError("Q must be 3x3 and R 2x2")
        for name, M in (("Q", Q), ("R", R)):
            if not np.all(np.isfinite(M)) or not np.allclose(M, M.T):
                raise SolverConfigError(f"{name} must be finite and symmetric")
            if np.linalg.eigvalsh(M).min() <= 0.0:
                raise SolverConfigError(f"{name} must be positive definite")
        if not (self.q_s > 0.0) or not math.isfinite(self.q_s):
            raise SolverConfigError(f"q_s must be positive, got {self.q_s}")
        if self.max_iter < 1 or not (self.tol > 0.0):
            raise SolverConfigError("max_iter must be >= 1 and tol > 0")
        obs = []
        for o in self.obstacles:
            o = o if isinstance(o, Obstacle) else Obstacle(*o)
            if not (o.radius > 0.0) or not all(math.isfinite(v) for v in (o.x, o.y, o.radius)):
                raise SolverConfigError(f"bad obstacle {o}")
            obs.append(o)
        if self.state_box is not None:
            b = tuple(float(v) for v in self.state_box)
            if len(b) != 4 or not (b[0] < b[2] and b[1] < b[3]):
                raise SolverConfigError("state_box must be (x_min, y_min, x_max, y_max)")
            object.__setattr__(self, "state_box", b)
        Q.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "H", int(self.H))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "obstacles", tuple(obs))


@dataclass(frozen=True)
class OcpSolution:
    states: tuple  # H + 1 Configurations, states[0] is the measured state
    inputs: tuple  # H ControlInputs
    s_bar: float
    cost: float
    status: str  # "Converged", "MaxIterations" or "Infeasible"
    kkt_residual: float
    iterations: int
    solve_time: float = 0.0
    # raw iterate kept for warm starts
    z: np.ndarray = field(default=None, repr=False, compare=False)
    y: np.ndarray = field(default=None, repr=False, compare=False)
    lam: np.ndarray = field(default=None, repr=False, compare=False)
    w: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return self.status == ipm.CONVERGED


def stage_cost(x: Configuration, u: ControlInput, ref: Configuration, Q, R) -> float:
    """Quartic tracking term ``(e'Qe)^2 + (u'Ru)^2``; the heading error is wrapped."""
    e = np.array([x.x - ref.x, x.y - ref.y, wrap_angle(x.theta - ref.theta)])
    uu = np.array([u.v, u.omega])
    a = float(e @ np.asarray(Q) @ e)
    b = float(uu @ np.asarray(R) @ uu)
    return a * a + b * b


def offset_cost(s_bar: float, q_s: float) -> float:
    """Penalty ``q_s (1 - s)^2`` pulling the artificial reference to the segment end."""
    return q_s * (1.0 - s_bar) ** 2


def _rk4_terms(th, v, om, h):
    a, b, c = th, th + 0.5 * h * om, th + h * om
    ca, cb, cc = np.cos(a), np.cos(b), np.cos(c)
    sa, sb, sc = np.sin(a), np.sin(b), np.sin(c)
    Cx = ca + 4.0 * cb + cc
    Sx = sa + 4.0 * sb + sc
    Cw = -(2.0 * h * sb + h * sc)
    Sw = 2.0 * h * cb + h * cc
    Cww = -h * h * (cb + cc)
    Sww = -h * h * (sb + sc)
    return Cx, Sx, Cw, Sw, Cww, Sww


def rk4_predict(x: np.ndarray, u: np.ndarray, h: float) -> np.ndarray:
    """Closed-form RK4 step on raw arrays (heading left unwrapped)."""
    Cx, Sx, *_ = _rk4_terms(x[..., 2], u[..., 0], u[..., 1], h)
    A = h / 6.0
    return np.stack([x[..., 0] + A * u[..., 0] * Cx, x[..., 1] + A * u[..., 0] * Sx, x[..., 2] + h * u[..., 1]], axis=-1)


class OcpNlp:
    """The transcribed OCP: objective, constraints and their exact derivatives."""

    def __init__(self, x0: Configuration, segment: ReferencePath, prev_u: ControlInput, params: OcpParams):
        if segment is None or len(segment) == 0:
            raise EmptySegment("segment has no samples")
        self.x0 = x0.as_array()
        self.segment = segment
        self.prev_u = prev_u.as_array()
        self.params = params
        H = params.H
        self.H = H
        self.n = 5 * H + 1
        self.m_eq = 3 * H + 3
        self.ix = np.arange(3 * H).reshape(H, 3)
        self.iu = 3 * H + np.arange(2 * H).reshape(H, 2)
        self.i_s = 5 * H
        self._build_linear_ineq()
        self.m_in = self.G_lin.shape[0] + H * len(params.obstacles)
        self._build_eq_pattern()

    # -- layout -------------------------------------------------------------
    def split(self, z):
        H = self.H
        return z[:3 * H].reshape(H, 3), z[3 * H:5 * H].reshape(H, 2), float(z[5 * H])

    def _build_linear_ineq(self):
        """Rows ``G z + h >= 0`` for boxes, rates, min-turn, s bounds and geo-fence."""
        H, lim, p = self.H, self.params.limits, self.params
        rows, offs = [], []

        def row(entries, off):
            r = np.zeros(self.n)
            for j, v in entries:
                r[j] += v
            rows.append(r)
            offs.append(off)

        for k in range(H):
            iv, iw = self.iu[k]
            row([(iv, -1.0)], lim.v_max)  # v <= v_max
            row([(iw, 1.0)], lim.omega_max)  # omega >= -omega_max
            row([(iw, -1.0)], lim.omega_max)  # omega <= omega_max
            # v >= r_min |omega| as two smooth rows; together they also imply v >= v_min = 0
            row([(iv, 1.0), (iw, -lim.r_min)], 0.0)
            row([(iv, 1.0), (iw, lim.r_min)], 0.0)
        for k in range(H):
            iv, iw = self.iu[k]
            if k == 0:
                pv, pw = self.prev_u
                row([(iv, -1.0)], lim.dv_max + pv)
                row([(iv, 1.0)], lim.dv_max - pv)
                row([(iw, -1.0)], lim.domega_max + pw)
                row([(iw, 1.0)], lim.domega_max - pw)
            else:
                jv, jw = self.iu[k - 1]
                row([(iv, -1.0), (jv, 1.0)], lim.dv_max)
                row([(iv, 1.0), (jv, -1.0)], lim.dv_max)
                row([(iw, -1.0), (jw, 1.0)], lim.domega_max)
                row([(iw, 1.0), (jw, -1.0)], lim.domega_max)
        row([(self.i_s, 1.0)], 0.0)
        row([(self.i_s, -1.0)], 1.0)
        if p.state_box is not None:
            x_lo, y_lo, x_hi, y_hi = p.state_box
            for k in range(H):
                ix, iy, _ = self.ix[k]
                row([(ix, 1.0)], -x_lo)
                row([(ix, -1.0)], x_hi)
                row([(iy, 1.0)], -y_lo)
                row([(iy, -1.0)], y_hi)
        self.G_lin = np.array(rows)
        self.h_lin = np.array(offs)

    def _build_eq_pattern(self):
        H = self.H
        J = np.zeros((self.m_eq, self.n))
        for k in range(H):
            J[3 * k:3 * k + 3, self.ix[k]] = np.eye(3)
        J[3 * H:3 * H + 3, self.ix[H - 1]] = np.eye(3)
        self._J_eq_base = J

    # -- helpers ------------------------------------------------------------
    def _prev_states(self, X):
        return np.vstack([self.x0[None, :], X[:-1]])

    def _path(self, s):
        return path_eval_smooth(self.segment, s)

    def _errors(self, X, s):
        """Stage errors e_k for k = 0..H-1 and the path slope at s."""
        ref, slope, _ = self._path(s)
        states = self._prev_states(X)
        e = states - ref
        e[:, 2] = wrap_angle(e[:, 2])
        return e, ref, slope

    # -- objective ----------------------------------------------------------
    def objective(self, z):
        X, U, s = self.split(z)
        Q, R = self.params.Q, self.params.R
        e, _, _ = self._errors(X, s)
        a = np.einsum("ki,ij,kj->k", e, Q, e)
        b = np.einsum("ki,ij,kj->k", U, R, U)
        return float(np.sum(a * a) + np.sum(b * b) + self.params.q_s * (1.0 - s) ** 2)

    def gradient(self, z):
        X, U, s = self.split(z)
        Q, R = self.params.Q, self.params.R
        e, _, slope = self._errors(X, s)
        qe = e @ Q
        a = np.sum(qe * e, axis=1)
        ru = U @ R
        b = np.sum(ru * U, axis=1)
        g = np.zeros(self.n)
        gx = 4.0 * a[:, None] * qe  # gradient w.r.t. the stage state
        g[self.ix[:-1].ravel()] = gx[1:].ravel()
        g[self.iu.ravel()] = (4.0 * b[:, None] * ru).ravel()
        g[self.i_s] = -float(np.sum(gx @ slope)) - 2.0 * self.params.q_s * (1.0 - s)
        return g

    # -- constraints --------------------------------------------------------
    def eq(self, z):
        X, U, s = self.split(z)
        h = self.params.dt
        prev = self._prev_states(X)
        d = X - rk4_predict(prev, U, h)
        ref, _, _ = self._path(s)
        t = X[-1] - ref
        t[2] = wrap_angle(t[2])
        return np.concatenate([d.ravel(), t])

    def eq_jacobian(self, z):
        X, U, s = self.split(z)
        H, h = self.H, self.params.dt
        A = h / 6.0
        prev = self._prev_states(X)
        th, v, om = prev[:, 2], U[:, 0], U[:, 1]
        Cx, Sx, Cw, Sw, _, _ = _rk4_terms(th, v, om, h)
        J = self._J_eq_base.copy()
        for k in range(H):
            r = 3 * k
            iv, iw = self.iu[k]
            J[r, iv] = -A * Cx[k]
            J[r, iw] = -A * v[k] * Cw[k]
            J[r + 1, iv] = -A * Sx[k]
            J[r + 1, iw] = -A * v[k] * Sw[k]
            J[r + 2, iw] = -h
            if k > 0:
                px, py, pt = self.ix[k - 1]
                J[r, px] = -1.0
                J[r + 1, py] = -1.0
                J[r + 2, pt] = -1.0
                J[r, pt] = A * v[k] * Sx[k]
                J[r + 1, pt] = -A * v[k] * Cx[k]
        _, slope, _ = self._path(s)
        J[3 * H:3 * H + 3, self.i_s] = -slope
        return J

    def ineq(self, z):
        g = self.G_lin @ z + self.h_lin
        obs = self.params.obstacles
        if not obs:
            return g
        X = z[:3 * self.H].reshape(self.H, 3)
        fp = self.params.limits.footprint_radius
        rows = [(X[:, 0] - o.x) ** 2 + (X[:, 1] - o.y) ** 2 - (o.radius + fp) ** 2 for o in obs]
        return np.concatenate([g] + rows)

    def ineq_jacobian(self, z):
        obs = self.params.obstacles
        if not obs:
            return self.G_lin
        H = self.H
        X = z[:3 * H].reshape(H, 3)
        J = np.zeros((len(obs) * H, self.n))
        rr = np.arange(H)
        for i, o in enumerate(obs):
            J[i * H + rr, self.ix[:, 0]] = 2.0 * (X[:, 0] - o.x)
            J[i * H + rr, self.ix[:, 1]] = 2.0 * (X[:, 1] - o.y)
        return np.vstack([self.G_lin, J])

    # -- second order -------------------------------------------------------
    def lagrangian_hessian(self, z, y, lam):
        """Hessian of ``f - y'c - lam'g``."""
        X, U, s = self.split(z)
        H, h = self.H, self.params.dt
        Q, R = self.params.Q, self.params.R
        W = np.zeros((self.n, self.n))
        e, _, slope = self._errors(X, s)
        curv = self._path(s)[2]
        i_s = self.i_s
        # terminal rows x_H - p(s): -y'c adds +y_T'p''
        W[i_s, i_s] += float(y[3 * H:3 * H + 3] @ curv)
        for k in range(H):
            qe = Q @ e[k]
            a = float(e[k] @ qe)
            M = 8.0 * np.outer(qe, qe) + 4.0 * a * Q
            Mp = M @ slope
            W[i_s, i_s] += float(slope @ Mp) - 4.0 * a * float(qe @ curv)
            if k > 0:
                ix = self.ix[k - 1]
                W[np.ix_(ix, ix)] += M
                W[ix, i_s] -= Mp
                W[i_s, ix] -= Mp
            ru = R @ U[k]
            b = float(U[k] @ ru)
            iu = self.iu[k]
            W[np.ix_(iu, iu)] += 8.0 * np.outer(ru, ru) + 4.0 * b * R
        W[i_s, i_s] += 2.0 * self.params.q_s
        # dynamics: c_k = x_{k+1} - F(x_k, u_k), so -y'c adds +y'F''
        A = h / 6.0
        prev = self._prev_states(X)
        th, v, om = prev[:, 2], U[:, 0], U[:, 1]
        Cx, Sx, Cw, Sw, Cww, Sww = _rk4_terms(th, v, om, h)
        Y = y[:3 * H].reshape(H, 3)
        for k in range(H):
            yx, yy = Y[k, 0], Y[k, 1]
            iv, iw = self.iu[k]
            vw = yx * A * Cw[k] + yy * A * Sw[k]
            ww = yx * A * v[k] * Cww[k] + yy * A * v[k] * Sww[k]
            W[iv, iw] += vw
            W[iw, iv] += vw
            W[iw, iw] += ww
            if k > 0:
                it = self.ix[k - 1][2]
                tt = -yx * A * v[k] * Cx[k] - yy * A * v[k] * Sx[k]
                tv = -yx * A * Sx[k] + yy * A * Cx[k]
                tw = -yx * A * v[k] * Sw[k] + yy * A * v[k] * Cw[k]
                W[it, it] += tt
                W[it, iv] += tv
                W[iv, it] += tv
                W[it, iw] += tw
                W[iw, it] += tw
        obs = self.params.obstacles
        if obs:
            m_lin = self.G_lin.shape[0]
            for i in range(len(obs)):
                lk = lam[m_lin + i * H:m_lin + (i + 1) * H]
                W[self.ix[:, 0], self.ix[:, 0]] -= 2.0 * lk
                W[self.ix[:, 1], self.ix[:, 1]] -= 2.0 * lk
        return W

    # -- initial guesses ----------------------------------------------------
    def cold_start(self):
        """Pure-pursuit rollout along the segment, rate-limited and braking at the end.

        With obstacles the rollout stops short of the first blocked sample, and
        ``s`` starts where the rollout ends.

        Starting from zero inputs is a trap: at rest the lateral direction is
        not controllable to first order, so a polyline chord slightly off the
        current heading makes the rest point a (degenerate) KKT point.
        """
        H, h = self.H, self.params.dt
        lim = self.params.limits
        seg = self.segment
        z = np.zeros(self.n)
        s0 = nearest_parameter(seg, self.x0[0], self.x0[1])
        z[self.i_s] = s0
        if seg.total_length <= 0.0:
            z[:3 * H] = np.tile(self.x0, H)
            return z
        x = self.x0.copy()
        v, w = float(self.prev_u[0]), float(self.prev_u[1])
        s_stop = self._stop_parameter(s0)
        end = path_eval(seg, s_stop)[0]
        look = max(0.2, 2.0 * lim.r_min)
        for k in range(H):
            s_here = nearest_parameter(seg, x[0], x[1])
            s_look = min(s_stop, s_here + look / seg.total_length)
            tgt, _ = path_eval(seg, s_look)
            dx, dy = tgt[0] - x[0], tgt[1] - x[1]
            dist_end = math.hypot(end[0] - x[0], end[1] - x[1])
            alpha = wrap_angle(math.atan2(dy, dx) - x[2]) if dx or dy else 0.0
            # brake so that the end is reached with the rate-limited deceleration
            v_cap = math.sqrt(2.0 * lim.dv_max / h * dist_end)
            v_des = min(lim.v_max, v_cap)
            v = float(np.clip(v_des, v - lim.dv_max, v + lim.dv_max))
            v = max(v, 0.0)
            dist = max(math.hypot(dx, dy), 1e-9)
            w_des = 2.0 * v * math.sin(alpha) / dist
            w = float(np.clip(w_des, w - lim.domega_max, w + lim.domega_max))
            w = float(np.clip(w, -lim.omega_max, lim.omega_max))
            w = float(np.clip(w, -v / lim.r_min, v / lim.r_min))
            u = np.array([v, w])
            x = rk4_predict(x, u, h)
            z[self.ix[k]] = x
            z[self.iu[k]] = u
        z[self.i_s] = max(s0, nearest_parameter(seg, x[0], x[1]))
        return z

    def _stop_parameter(self, s0: float, margin: float = 0.1) -> float:
        """Where the initial guess should stop: short of the first blocked sample ahead."""
        seg = self.segment
        if not self.params.obstacles:
            return 1.0
        fp = self.params.limits.footprint_radius
        pts = seg.samples[:, :2]
        clear = np.min(
            [np.hypot(pts[:, 0] - o.x, pts[:, 1] - o.y) - (o.radius + fp) for o in self.params.obstacles], axis=0
        )
        blocked = (seg.knots >= s0) & (clear < margin)
        if not blocked.any():
            return 1.0
        return max(s0, float(seg.knots[np.argmax(blocked)]) - margin / seg.total_length)

    def warm_start(self, prev: OcpSolution):
        """Shift the previous solution one step; repeat the last input."""
        H = self.H
        X, U, s = self.split(prev.z)
        Xn = np.empty_like(X)
        Xn[:-1] = X[1:]
        Un = np.empty_like(U)
        Un[:-1] = U[1:]
        Un[-1] = U[-1]
        Xn[-1] = rk4_predict(X[-1], U[-1], self.params.dt)
        # previous x(1) is the new x0 up to a 2*pi heading shift
        shift = self.x0[2] - X[0, 2]
        Xn[:, 2] += TWO_PI * round(shift / TWO_PI)
        z = np.concatenate([Xn.ravel(), Un.ravel(), [s]])
        y = lam = w = None
        if prev.y is not None and prev.y.size == self.m_eq:
            Y = prev.y[:3 * H].reshape(H, 3)
            Yn = np.vstack([Y[1:], Y[-1:]])
            y = np.concatenate([Yn.ravel(), prev.y[3 * H:]])
        if prev.lam is not None and prev.lam.size == self.m_in:
            lam = prev.lam.copy()
            w = prev.w.copy()
        return z, y, lam, w


TWO_PI = 2.0 * math.pi


def build_nlp(x0: Configuration, segment: ReferencePath, prev_applied_u: ControlInput, params: OcpParams) -> OcpNlp:
    """Transcribe the OCP for the measured state ``x0`` on ``segment``."""
    return OcpNlp(x0, segment, prev_applied_u, params)


def _to_solution(nlp: OcpNlp, res: ipm.IpmResult, elapsed: float) -> OcpSolution:
    X, U, s = nlp.split(res.z)
    states = (Configuration.from_array(nlp.x0),) + tuple(Configuration(*r) for r in X)
    inputs = tuple(ControlInput(float(r[0]), float(r[1])) for r in U)
    return OcpSolution(
        states=states, inputs=inputs, s_bar=s, cost=nlp.objective(res.z), status=res.status,
        kkt_residual=res.kkt_residual, iterations=res.iterations, solve_time=elapsed,
        z=res.z, y=res.y, lam=res.lam, w=res.w,
    )


def solve_ocp(nlp: OcpNlp, warm_start: Optional[OcpSolution] = None) -> OcpSolution:
    """Solve the transcribed OCP; a previous solution gives a shifted warm start.

    If the warm-started run does not converge the problem is solved again from
    the cold-start guess; the reported iteration count covers both runs.
    Never raises on numerical failure: the outcome is reported in ``status``.
    """
    p = nlp.params
    opts = ipm.IpmOptions(tol=p.tol, max_iter=p.max_iter)
    t0 = time.perf_counter()
    spent = 0
    if warm_start is not None and warm_start.z is not None and warm_start.z.size == nlp.n:
        z, y, lam, w = nlp.warm_start(warm_start)
        mu0 = 1e-3
        if w is not None:
            # slacks must describe the shifted point, not the old one
            w = np.maximum(nlp.ineq(z), mu0)
            lam = np.maximum(lam, mu0 / w) if lam is not None else None
        res = ipm.solve(nlp, z, y, lam, w, mu0=mu0, options=opts)
        if res.status == ipm.CONVERGED:
            return _to_solution(nlp, res, time.perf_counter() - t0)
        spent = res.iterations
    res = ipm.solve(nlp, nlp.cold_start(), options=opts)
    res.iterations += spent
    return _to_solution(nlp, res, time.perf_counter() - t0)


def control_step(x_measured: Configuration, segment: ReferencePath, prev_applied_u: ControlInput,
                 params: OcpParams, warm: Optional[OcpSolution] = None):
    """One receding-horizon step: returns the first optimal input and the full solution."""
    nlp = build_nlp(x_measured, segment, prev_applied_u, params)
    sol = solve_ocp(nlp, warm)
    return sol.inputs[0], sol
