"""Dense primal-dual interior-point method for small smooth NLPs.

Solves ``min f(z)  s.t.  c(z) = 0,  g(z) >= 0`` through slacks ``g(z) - w = 0``
with ``w > 0``, a log barrier driven monotonically to zero, Newton steps on
the reduced KKT system with inertia correction, and a filter line search
(barrier objective vs. constraint violation) with a second-order correction.
When the line search stalls a Levenberg-Marquardt restoration phase
minimizes the constraint violation alone; if it cannot push the violation
below ``infeasible_tol`` the problem is declared infeasible.

Stationarity and complementarity are measured relative to the multiplier
size (large multipliers make an absolute test meaningless in floating
point); the primal feasibility test is absolute.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
import scipy.linalg


class Problem(Protocol):
    n: int
    m_eq: int
    m_in: int

    def objective(self, z: np.ndarray) -> float: ...
    def gradient(self, z: np.ndarray) -> np.ndarray: ...
    def eq(self, z: np.ndarray) -> np.ndarray: ...
    def eq_jacobian(self, z: np.ndarray) -> np.ndarray: ...
    def ineq(self, z: np.ndarray) -> np.ndarray: ...
    def ineq_jacobian(self, z: np.ndarray) -> np.ndarray: ...
    def lagrangian_hessian(self, z: np.ndarray, y: np.ndarray, lam: np.ndarray) -> np.ndarray: ...


log = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITERATIONS = "MaxIterations"
INFEASIBLE = "Infeasible"


@dataclass
class IpmOptions:
    tol: float = 1e-6
    max_iter: int = 200
    mu0: float = 0.1
    infeasible_tol: float = 1e-3
    slack_floor: float = 1e-2
    tau_min: float = 0.99
    kappa_eps: float = 10.0
    max_restorations: int = 5
    s_max: float = 100.0
    mu_min: float = 1e-11
    compl_tol: float = 1e-9  # keeps bound-active variables within ~compl_tol/lambda of their bound
    # fallback when compl_tol is out of reach: best point meeting tol with this complementarity
    acceptable_compl_tol: float = 1e-7
    acceptable_iter: int = 15
    stall_iter: int = 5


@dataclass
class IpmResult:
    z: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    w: np.ndarray
    status: str
    iterations: int
    stationarity: float
    violation: float
    complementarity: float

    @property
    def kkt_residual(self) -> float:
        return max(self.stationarity, self.violation, self.complementarity)


def _inertia(K: np.ndarray, rel_tol: float = 0.0):
    """Counts of (positive, negative, zero) eigenvalues via a Bunch-Kaufman LDL.

    Pivots below ``rel_tol`` times the largest one count as zero.
    """
    _, D, _ = scipy.linalg.ldl(K, lower=True)
    size = D.shape[0]
    thresh = rel_tol * float(np.abs(D).max())
    pos = neg = zero = 0
    i = 0
    while i < size:
        if i + 1 < size and D[i + 1, i] != 0.0:
            ev = np.linalg.eigvalsh(D[i:i + 2, i:i + 2])
            i += 2
        else:
            ev = (D[i, i],)
            i += 1
        for e in ev:
            if abs(e) <= thresh or not math.isfinite(e):
                zero += 1
            elif e > 0:
                pos += 1
            else:
                neg += 1
    return pos, neg, zero


def _fraction_to_boundary(v: np.ndarray, dv: np.ndarray, tau: float) -> float:
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-tau * v[neg] / dv[neg])))


class _Solver:
    def __init__(self, prob: Problem, opts: IpmOptions):
        self.p = prob
        self.o = opts
        self.delta_w_last = 0.0

    def evaluate(self, z):
        p = self.p
        return {
            "f": p.objective(z), "gf": p.gradient(z), "c": p.eq(z), "Jc": p.eq_jacobian(z),
            "g": p.ineq(z), "Jg": p.ineq_jacobian(z),
        }

    @staticmethod
    def violation(c, g):
        v = float(np.abs(c).max()) if c.size else 0.0
        if g.size:
            v = max(v, float(np.maximum(-g, 0.0).max()))
        return v

    def errors(self, ev, y, lam, w, mu):
        """Scaled (stationarity, feasibility, complementarity) errors of the barrier problem."""
        o = self.o
        m = y.size + lam.size
        s_d = max(o.s_max, (float(np.abs(y).sum()) + float(np.abs(lam).sum())) / max(m, 1)) / o.s_max
        s_c = max(o.s_max, float(np.abs(lam).sum()) / max(lam.size, 1)) / o.s_max
        stat = ev["gf"] - ev["Jc"].T @ y - ev["Jg"].T @ lam
        e_stat = float(np.abs(stat).max()) / s_d
        e_feas = max(float(np.abs(ev["c"]).max()) if ev["c"].size else 0.0,
                     float(np.abs(ev["g"] - w).max()) if w.size else 0.0)
        e_comp = float(np.abs(w * lam - mu).max()) / s_c if w.size else 0.0
        return e_stat, e_feas, e_comp

    def newton_step(self, ev, H, y, lam, w, mu):
        """Inertia-corrected Newton direction; returns a solver for extra right-hand sides."""
        n, m = self.p.n, self.p.m_eq
        Jc, Jg, g = ev["Jc"], ev["Jg"], ev["g"]
        sigma = lam / w
        W = H + (Jg.T * sigma) @ Jg
        r_d = ev["gf"] - Jc.T @ y - Jg.T @ lam

        def rhs_for(r_c, r_g):
            rz = -r_d + Jg.T @ (mu / w - lam) - Jg.T @ (sigma * r_g)
            return np.concatenate([rz, -r_c])

        rhs = rhs_for(ev["c"], g - w)
        dw_reg, dc_reg = 0.0, 0.0
        sol = None
        for attempt in range(40):
            K = np.zeros((n + m, n + m))
            K[:n, :n] = W
            K[:n, :n][np.diag_indices(n)] += dw_reg
            K[:n, n:] = Jc.T
            K[n:, :n] = Jc
            K[n:, n:][np.diag_indices(m)] -= dc_reg
            # once the constraint block is regularized, tiny pivots are genuine
            pos, neg, zero = _inertia(K, 0.0 if dc_reg > 0.0 else 1e-14)
            if pos == n and neg == m and zero == 0:
                try:
                    sol = np.linalg.solve(K, rhs)
                except np.linalg.LinAlgError:
                    sol = None
                if sol is not None and np.all(np.isfinite(sol)):
                    break
                zero = 1
            if zero > 0 and dc_reg == 0.0:
                dc_reg = 1e-8 * max(mu, 1e-8) ** 0.25
                continue
            if dw_reg == 0.0:
                dw_reg = 1e-4 if self.delta_w_last == 0.0 else max(1e-20, self.delta_w_last / 3.0)
            else:
                dw_reg *= 8.0 if self.delta_w_last == 0.0 else 4.0
        else:
            return None
        if dw_reg > 0.0:
            self.delta_w_last = dw_reg

        def unpack(sol, r_g):
            dz = sol[:n]
            dw = Jg @ dz + r_g
            return dz, -sol[n:], dw, mu / w - lam - sigma * dw

        def resolve(r_c, r_g):
            return unpack(np.linalg.solve(K, rhs_for(r_c, r_g)), r_g)

        return unpack(sol, g - w), resolve

    def restore(self, z):
        """Levenberg-Marquardt on 0.5*||c||^2 + 0.5*||min(g, 0)||^2."""
        p = self.p
        lm = 1e-3
        for _ in range(100):
            c = p.eq(z)
            g = p.ineq(z)
            act = g < 0.0
            r = np.concatenate([c, g[act]])
            if r.size == 0 or np.abs(r).max() <= 1e-9:
                break
            J = np.vstack([p.eq_jacobian(z), p.ineq_jacobian(z)[act]])
            phi = 0.5 * float(r @ r)
            grad = J.T @ r
            improved = False
            for _ in range(30):
                dz = -np.linalg.solve(J.T @ J + lm * np.eye(p.n), grad)
                zt = z + dz
                rt = np.concatenate([p.eq(zt), np.minimum(p.ineq(zt), 0.0)])
                if 0.5 * float(rt @ rt) < phi - 1e-4 * float(-grad @ dz):
                    z = zt
                    lm = max(lm / 3.0, 1e-12)
                    improved = True
                    break
                lm *= 4.0
            if not improved or float(np.abs(grad).max()) < 1e-14:
                break
        return z, self.violation(p.eq(z), p.ineq(z))

    def result(self, z, y, lam, w, status, it, ev):
        e_stat, e_feas, e_comp = self.errors(ev, y, lam, w, 0.0)
        viol = max(e_feas, self.violation(ev["c"], ev["g"]))
        return IpmResult(z, y, lam, w, status, it, e_stat, viol, e_comp)

    def run(self, z, y, lam, w, mu):
        o, p = self.o, self.p
        n_restore = 0
        ev = self.evaluate(z)
        w = np.maximum(ev["g"], o.slack_floor) if w is None else np.maximum(w, 1e-12)
        lam = mu / w if lam is None else lam
        y = np.zeros(p.m_eq) if y is None else y
        theta = lambda c, g, w: float(np.abs(c).sum()) + float(np.abs(g - w).sum())
        th0 = theta(ev["c"], ev["g"], w)
        theta_max = 1e4 * max(1.0, th0)
        theta_min = 1e-4 * max(1.0, th0)
        filt = []
        it = 0
        best = None
        n_acc = n_stall = 0
        while True:
            e_stat, e_feas, e_comp = self.errors(ev, y, lam, w, 0.0)
            viol = self.violation(ev["c"], ev["g"])
            if max(e_stat, e_feas, viol) <= o.tol:
                if e_comp <= o.compl_tol:
                    return self.result(z, y, lam, w, CONVERGED, it, ev)
                if e_comp <= o.acceptable_compl_tol:
                    n_acc += 1
                    if best is None or e_comp < best[0]:
                        best = (e_comp, z, y, lam, w, ev)
                else:
                    n_acc = 0
            else:
                n_acc = 0
            if best is not None and (n_acc >= o.acceptable_iter or n_stall >= o.stall_iter or it >= o.max_iter):
                _, bz, by, blam, bw, bev = best
                return self.result(bz, by, blam, bw, CONVERGED, it, bev)
            if it >= o.max_iter or n_stall >= o.stall_iter:
                status = MAX_ITERATIONS
                if viol > o.infeasible_tol:
                    _, v = self.restore(z.copy())
                    if v > o.infeasible_tol:
                        status = INFEASIBLE
                return self.result(z, y, lam, w, status, it, ev)
            while mu > o.mu_min:
                es, ef, ec = self.errors(ev, y, lam, w, mu)
                if max(es, ef) > max(o.kappa_eps * mu, o.tol) or ec > o.kappa_eps * mu:
                    break
                mu = max(o.mu_min, min(0.2 * mu, mu ** 1.5))
                filt = []
            it += 1
            log.debug("it=%d mu=%.1e f=%.6g stat=%.2e feas=%.2e comp=%.2e", it, mu, ev["f"], e_stat, e_feas, e_comp)
            step = self.newton_step(ev, p.lagrangian_hessian(z, y, lam), y, lam, w, mu)
            accepted = False
            if step is not None:
                (dz, dy, dw, dlam), resolve = step
                tau = max(o.tau_min, 1.0 - mu)
                a_d = _fraction_to_boundary(lam, dlam, tau)
                th = theta(ev["c"], ev["g"], w)
                ph = ev["f"] - mu * float(np.sum(np.log(w)))
                a_p = _fraction_to_boundary(w, dw, tau)
                alpha = a_p
                soc_done = False
                while alpha > 1e-9:
                    gphi = float(ev["gf"] @ dz) - mu * float(np.sum(dw / w))
                    zt, wt = z + alpha * dz, w + alpha * dw
                    ct, gt = p.eq(zt), p.ineq(zt)
                    tht = theta(ct, gt, wt)
                    pht = p.objective(zt) - mu * float(np.sum(np.log(wt)))
                    ok = False
                    f_type = False
                    if math.isfinite(pht) and tht <= theta_max and not any(
                        tht >= tf and pht >= pf for tf, pf in filt
                    ):
                        switching = gphi < 0.0 and alpha * (-gphi) ** 2.3 > th ** 1.1
                        if th <= theta_min and switching:
                            ok = pht <= ph + 1e-4 * alpha * gphi
                            f_type = True
                        else:
                            ok = tht <= (1.0 - 1e-5) * th or pht <= ph - 1e-8 * th
                    if ok:
                        if not f_type:
                            filt.append(((1.0 - 1e-5) * th, ph - 1e-8 * th))
                        accepted = True
                        break
                    if not soc_done and alpha == a_p and tht >= th:
                        # second-order correction: re-solve with the trial residuals
                        soc_done = True
                        try:
                            sdz, sdy, sdw, sdl = resolve(alpha * ev["c"] + ct, alpha * (ev["g"] - w) + (gt - wt))
                        except np.linalg.LinAlgError:
                            sdz = None
                        if sdz is not None:
                            a_s = _fraction_to_boundary(w, sdw, tau)
                            zs, ws = z + a_s * sdz, w + a_s * sdw
                            cs, gs = p.eq(zs), p.ineq(zs)
                            ths = theta(cs, gs, ws)
                            phs = p.objective(zs) - mu * float(np.sum(np.log(ws)))
                            if math.isfinite(phs) and not any(ths >= tf and phs >= pf for tf, pf in filt) and (
                                ths <= (1.0 - 1e-5) * th or phs <= ph - 1e-8 * th
                            ):
                                filt.append(((1.0 - 1e-5) * th, ph - 1e-8 * th))
                                zt, wt, dy, alpha = zs, ws, sdy, a_s
                                a_d = _fraction_to_boundary(lam, sdl, tau)
                                dlam = sdl
                                accepted = True
                                break
                    alpha *= 0.5
            if accepted:
                small = float(np.abs(zt - z).max()) <= 1e-12 * (1.0 + float(np.abs(z).max()))
                n_stall = n_stall + 1 if small else 0
                z = zt
                w = np.maximum(wt, 1e-300)
                y = y + alpha * dy
                lam = lam + a_d * dlam
                # keep the duals within a band around the central path
                kappa = 1e10
                lam = np.clip(lam, mu / (kappa * w), kappa * mu / w)
                ev = self.evaluate(z)
                continue
            log.debug("line search failed at iteration %d; restoring", it)
            n_restore += 1
            zr, v = self.restore(z.copy())
            if best is not None and v <= o.infeasible_tol:
                _, bz, by, blam, bw, bev = best
                return self.result(bz, by, blam, bw, CONVERGED, it, bev)
            if v > o.infeasible_tol or n_restore > o.max_restorations:
                ev = self.evaluate(zr)
                status = INFEASIBLE if v > o.infeasible_tol else MAX_ITERATIONS
                return self.result(zr, y, lam, w, status, it, ev)
            z = zr
            ev = self.evaluate(z)
            w = np.maximum(ev["g"], max(mu, 1e-8))
            lam = mu / w
            y = np.zeros(p.m_eq)
            filt = []


def solve(prob: Problem, z0: np.ndarray, y0: Optional[np.ndarray] = None, lam0: Optional[np.ndarray] = None,
          w0: Optional[np.ndarray] = None, mu0: Optional[float] = None,
          options: Optional[IpmOptions] = None) -> IpmResult:
    """Run the interior-point method from ``z0`` (duals and slacks optional)."""
    opts = options or IpmOptions()
    mu = opts.mu0 if mu0 is None else mu0
    return _Solver(prob, opts).run(np.array(z0, dtype=float), y0, lam0, w0, mu)
