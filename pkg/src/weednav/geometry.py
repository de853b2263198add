"""Dubins curves, fixed-step path sampling and the interpolated path function.

Angles are kept in (-pi, pi]. A :class:`ReferencePath` is the dense polyline
the NMPC uses as its guidance path; :func:`path_at` maps the normalized
parameter ``s`` in [0, 1] onto it proportionally to arc length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DiscontinuousTour, InvalidRadius, InvalidStep, OutOfDomain

TWO_PI = 2.0 * math.pi

# Enumeration order doubles as the tie-break order.
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

# mod2pi results this close to 2*pi are full turns produced by rounding.
_FULL_TURN_SNAP = 1e-10


def wrap_angle(a):
    """Map an angle (scalar or array) into (-pi, pi]."""
    if isinstance(a, np.ndarray):
        return math.pi - np.mod(math.pi - a, TWO_PI)
    return math.pi - math.fmod(math.fmod(math.pi - a, TWO_PI) + TWO_PI, TWO_PI)


def _mod2pi(a: float) -> float:
    r = math.fmod(a, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r > TWO_PI - _FULL_TURN_SNAP:
        r = 0.0
    return r


@dataclass(frozen=True)
class Configuration:
    """Planar pose; ``theta`` is normalized on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        x, y, th = float(self.x), float(self.y), float(self.theta)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(th)):
            raise ValueError(f"non-finite configuration ({x}, {y}, {th})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "theta", wrap_angle(th))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_array(cls, a) -> "Configuration":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def distance_to(self, other: "Configuration") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


def _snap_zero(v: float) -> float:
    return 0.0 if -1e-10 < v < 0.0 else v


def _snap_unit(v: float) -> float:
    if 1.0 < abs(v) < 1.0 + 1e-10:
        return math.copysign(1.0, v)
    return v


def _words_normalized(alpha: float, beta: float, d: float):
    """Segment lengths (in units of rho) of every feasible word.

    ``alpha``/``beta`` are the start/end headings relative to the chord,
    ``d`` the chord length divided by rho. Yields ``(word, t, p, q)``.
    """
    sa, sb = math.sin(alpha), math.sin(beta)
    ca, cb = math.cos(alpha), math.cos(beta)
    c_ab = math.cos(alpha - beta)
    out = []

    # LSL, RSR: p2 is a squared norm, negative only through rounding
    p2 = max(2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb), 0.0)
    tmp = math.atan2(cb - ca, d + sa - sb)
    out.append(("LSL", _mod2pi(tmp - alpha), math.sqrt(p2), _mod2pi(beta - tmp)))
    p2 = max(2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa), 0.0)
    tmp = math.atan2(ca - cb, d - sa + sb)
    out.append(("RSR", _mod2pi(alpha - tmp), math.sqrt(p2), _mod2pi(tmp - beta)))
    # LSR
    p2 = _snap_zero(-2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb))
    if p2 >= 0.0:
        p = math.sqrt(p2)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        out.append(("LSR", _mod2pi(tmp - alpha), p, _mod2pi(tmp - beta)))
    # RSL
    p2 = _snap_zero(-2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb))
    if p2 >= 0.0:
        p = math.sqrt(p2)
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        out.append(("RSL", _mod2pi(alpha - tmp), p, _mod2pi(beta - tmp)))
    # RLR
    tmp = _snap_unit((6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0)
    if abs(tmp) <= 1.0:
        phi = math.atan2(ca - cb, d - sa + sb)
        p = _mod2pi(TWO_PI - math.acos(tmp))
        t = _mod2pi(alpha - phi + p / 2.0)
        out.append(("RLR", t, p, _mod2pi(alpha - beta - t + p)))
    # LRL
    tmp = _snap_unit((6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0)
    if abs(tmp) <= 1.0:
        phi = math.atan2(ca - cb, d + sa - sb)
        p = _mod2pi(TWO_PI - math.acos(tmp))
        t = _mod2pi(-alpha - phi + p / 2.0)
        out.append(("LRL", t, p, _mod2pi(beta - alpha - t + p)))
    return out


def dubins_length(x0, y0, th0, x1, y1, th1, rho) -> float:
    """Length of the shortest Dubins path; scalar fast path without a DubinsPath."""
    dx, dy = x1 - x0, y1 - y0
    d = math.hypot(dx, dy) / rho
    chord = math.atan2(dy, dx) if d > 0.0 else 0.0
    best = math.inf
    for _, t, p, q in _words_normalized(_mod2pi(th0 - chord), _mod2pi(th1 - chord), d):
        L = t + p + q
        if L < best:
            best = L
    return best * rho


@dataclass(frozen=True)
class DubinsPath:
    word: str
    seg_lengths: tuple
    rho: float
    start: Configuration
    end: Configuration

    @property
    def length(self) -> float:
        return float(sum(self.seg_lengths))

    def point_at(self, dist: float) -> Configuration:
        """Pose after travelling ``dist`` meters along the path (clamped)."""
        return Configuration.from_array(_integrate_word(self, np.array([dist]))[0])


def _advance(x, y, th, kind, ell, rho):
    """Exact pose after an arc/line of length ``ell``; ``ell`` may be an array."""
    if kind == "S":
        return x + ell * np.cos(th), y + ell * np.sin(th), th + 0.0 * ell
    sgn = 1.0 if kind == "L" else -1.0
    dth = sgn * ell / rho
    nx = x + sgn * rho * (np.sin(th + dth) - np.sin(th))
    ny = y - sgn * rho * (np.cos(th + dth) - np.cos(th))
    return nx, ny, th + dth


def _integrate_word(path: DubinsPath, dist: np.ndarray) -> np.ndarray:
    dist = np.clip(np.asarray(dist, dtype=float), 0.0, path.length)
    out = np.empty((dist.size, 3))
    x, y, th = path.start.x, path.start.y, path.start.theta
    offset = 0.0
    for i, (kind, ell) in enumerate(zip(path.word, path.seg_lengths)):
        last = i == 2
        mask = (dist >= offset) & ((dist < offset + ell) | last)
        if np.any(mask):
            px, py, pth = _advance(x, y, th, kind, dist[mask] - offset, path.rho)
            out[mask, 0], out[mask, 1], out[mask, 2] = px, py, pth
        x, y, th = _advance(x, y, th, kind, ell, path.rho)
        offset += ell
    out[:, 2] = wrap_angle(out[:, 2])
    return out


def dubins_shortest(q_from: Configuration, q_to: Configuration, rho: float) -> DubinsPath:
    """Minimum-length Dubins path from ``q_from`` to ``q_to``.

    Ties are broken by the fixed order LSL, RSR, LSR, RSL, RLR, LRL.
    """
    if not (rho > 0.0) or not math.isfinite(rho):
        raise InvalidRadius(f"turning radius must be positive, got {rho}")
    dx, dy = q_to.x - q_from.x, q_to.y - q_from.y
    d = math.hypot(dx, dy) / rho
    chord = math.atan2(dy, dx) if d > 0.0 else 0.0
    alpha = _mod2pi(q_from.theta - chord)
    beta = _mod2pi(q_to.theta - chord)
    best = None
    for word, t, p, q in _words_normalized(alpha, beta, d):
        L = t + p + q
        if best is None or L < best[0]:
            best = (L, word, t, p, q)
    # LSL is feasible for every input (its p^2 is a squared norm), so best is set.
    _, word, t, p, q = best
    return DubinsPath(word, (t * rho, p * rho, q * rho), float(rho), q_from, q_to)


@dataclass(frozen=True, eq=False)
class ReferencePath:
    """Fixed-step samples of a path with their cumulative arc length."""

    samples: np.ndarray  # (n, 3) rows of x, y, theta
    cumulative_arclength: np.ndarray  # (n,), starts at 0
    spacing: float = 0.05
    _unit_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).reshape(-1, 3)
        cum = np.asarray(self.cumulative_arclength, dtype=float).ravel()
        if samples.shape[0] == 0 or cum.shape[0] != samples.shape[0]:
            raise ValueError("samples and cumulative_arclength must be non-empty and aligned")
        if np.any(np.diff(cum) <= 0.0):
            raise ValueError("cumulative_arclength must be strictly increasing")
        samples.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "cumulative_arclength", cum)
        total = cum[-1]
        unit = cum / total if total > 0.0 else np.zeros_like(cum)
        unit.setflags(write=False)
        object.__setattr__(self, "_unit_s", unit)

    @property
    def total_length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @property
    def start(self) -> Configuration:
        return Configuration.from_array(self.samples[0])

    @property
    def end(self) -> Configuration:
        return Configuration.from_array(self.samples[-1])

    @property
    def knots(self) -> np.ndarray:
        """Sample locations in the normalized parameter."""
        return self._unit_s

    def __len__(self):
        return self.samples.shape[0]


def dubins_sample(path: DubinsPath, step: float = 0.05) -> ReferencePath:
    """Sample ``path`` every ``step`` meters; the last sample is exactly ``path.end``."""
    if not (step > 0.0) or not math.isfinite(step):
        raise InvalidStep(f"sampling step must be positive, got {step}")
    L = path.length
    n_inner = int(math.floor(L / step))
    dist = np.arange(n_inner + 1) * step
    # drop an interior sample that would sit on top of the endpoint
    dist = dist[dist < L - 1e-9]
    dist = np.append(dist, L) if L > 0.0 else np.zeros(1)
    pts = _integrate_word(path, dist)
    pts[-1] = path.end.as_array()
    return ReferencePath(pts, dist, spacing=step)


def _interval(ref: ReferencePath, s):
    """Knot interval index for each ``s`` (right-continuous, last interval at s=1)."""
    knots = ref.knots
    idx = np.searchsorted(knots, s, side="right") - 1
    return np.clip(idx, 0, max(len(knots) - 2, 0))


def path_eval(ref: ReferencePath, s: float):
    """Pose and its derivative w.r.t. ``s`` at a (possibly out-of-range) ``s``.

    Outside [0, 1] the end intervals are extended linearly; this is what the
    optimizer sees while an iterate is still infeasible. The heading component
    is returned unwrapped relative to the left knot.
    """
    pts = ref.samples
    if len(ref) == 1:
        return pts[0].copy(), np.zeros(3)
    i = int(_interval(ref, s))
    k0, k1 = ref.knots[i], ref.knots[i + 1]
    h = k1 - k0
    delta = pts[i + 1] - pts[i]
    delta[2] = wrap_angle(delta[2])
    slope = delta / h
    return pts[i] + (s - k0) * slope, slope


def path_eval_smooth(ref: ReferencePath, s: float, blend: float = 0.002):
    """Like :func:`path_eval` but C1: every interior knot is rounded off.

    Within ``blend`` times the shorter adjacent interval of a knot the two
    line pieces are joined by a parabola tangent to both. The largest
    departure from the polyline is ``|slope jump| * width / 4``, far below
    the 5 cm sampling scale. Returns ``(pose, first, second)`` derivatives.
    """
    pts = ref.samples
    n = len(ref)
    if n == 1:
        return pts[0].copy(), np.zeros(3), np.zeros(3)
    knots = ref.knots
    i = int(_interval(ref, s))
    # the nearest interior knot, if any, decides whether we are in a blend
    j = i if (s - knots[i]) <= (knots[i + 1] - s) else i + 1
    if 0 < j < n - 1:
        hl = knots[j] - knots[j - 1]
        hr = knots[j + 1] - knots[j]
        d = blend * min(hl, hr)
        t = s - knots[j]
        if abs(t) < d:
            dl = pts[j] - pts[j - 1]
            dr = pts[j + 1] - pts[j]
            dl[2] = wrap_angle(dl[2])
            dr[2] = wrap_angle(dr[2])
            ml, mr = dl / hl, dr / hr
            q = (t + d) / (2.0 * d)
            pose = pts[j] + ml * t + (mr - ml) * (t + d) ** 2 / (4.0 * d)
            return pose, ml + (mr - ml) * q, (mr - ml) / (2.0 * d)
    pose, slope = path_eval(ref, s)
    return pose, slope, np.zeros(3)


def path_at(ref: ReferencePath, s: float) -> Configuration:
    """Interpolated pose at normalized arc-length parameter ``s`` in [0, 1]."""
    if not (0.0 <= s <= 1.0):
        raise OutOfDomain(f"s={s} outside [0, 1]")
    if s == 1.0:
        return Configuration.from_array(ref.samples[-1])
    p, _ = path_eval(ref, s)
    return Configuration.from_array(p)


def nearest_parameter(ref: ReferencePath, x: float, y: float) -> float:
    """Normalized parameter of the sample closest to ``(x, y)``; first one on ties."""
    d2 = (ref.samples[:, 0] - x) ** 2 + (ref.samples[:, 1] - y) ** 2
    return float(ref.knots[int(np.argmin(d2))])


def concatenate(paths: Sequence[DubinsPath], step: float = 0.05, tol: float = 1e-6) -> list:
    """One :class:`ReferencePath` per tour leg, checking leg-to-leg continuity."""
    for i in range(len(paths) - 1):
        a, b = paths[i].end, paths[i + 1].start
        gap = max(a.distance_to(b), abs(wrap_angle(a.theta - b.theta)))
        if gap > tol:
            raise DiscontinuousTour(f"leg {i} ends {gap:.3g} away from the start of leg {i + 1}")
    return [dubins_sample(p, step) for p in paths]
