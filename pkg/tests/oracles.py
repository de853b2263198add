"""Reference implementations written independently of the package.

The Dubins oracle builds every candidate path from circle geometry (turning
centres, tangent lines, the third circle of CCC words), integrates it with
exact arcs and keeps the shortest candidate that actually lands on the goal.
It shares no code or formulas with ``weednav.geometry``.
"""

import itertools
import math

import numpy as np

TAU = 2.0 * math.pi


def _m(a):
    return a % TAU


def _left_normal(th):
    return np.array([-math.sin(th), math.cos(th)])


def _centre(p, th, side, r):
    # side +1: left turn circle, -1: right turn circle
    return p + side * r * _left_normal(th)


def _angle(v):
    return math.atan2(v[1], v[0])


def integrate(start, segments, r):
    """Exact integration of ``[(kind, length), ...]`` with kind in 'L', 'S', 'R'."""
    x, y, th = start
    for kind, ell in segments:
        if kind == "S":
            x += ell * math.cos(th)
            y += ell * math.sin(th)
            continue
        s = 1.0 if kind == "L" else -1.0
        dth = s * ell / r
        cx, cy = x - s * r * math.sin(th), y + s * r * math.cos(th)
        th2 = th + dth
        x, y, th = cx + s * r * math.sin(th2), cy - s * r * math.cos(th2), th2
    return x, y, th


def _csc(p0, th0, p1, th1, r, a, b):
    sa = 1.0 if a == "L" else -1.0
    sb = 1.0 if b == "L" else -1.0
    c0 = _centre(p0, th0, sa, r)
    c1 = _centre(p1, th1, sb, r)
    d = c1 - c0
    D = float(np.hypot(*d))
    if a == b:
        phi = _angle(d)
        L = D
    else:
        if D < 2.0 * r:
            return None
        L = math.sqrt(max(D * D - 4.0 * r * r, 0.0))
        # LSR: centre offset is 2r to the right of the tangent heading
        phi = _angle(d) + (math.atan2(2.0 * r, L) if a == "L" else -math.atan2(2.0 * r, L))
    t = _m(sa * (phi - th0)) * r
    q = _m(sb * (th1 - phi)) * r
    return [(a, t), ("S", L), (b, q)]


def _ccc(p0, th0, p1, th1, r, a):
    sa = 1.0 if a == "L" else -1.0
    c0 = _centre(p0, th0, sa, r)
    c1 = _centre(p1, th1, sa, r)
    d = c1 - c0
    D = float(np.hypot(*d))
    if D > 4.0 * r or D < 1e-12:
        return []
    mid = 0.5 * (c0 + c1)
    h = math.sqrt(max(4.0 * r * r - 0.25 * D * D, 0.0))
    perp = np.array([-d[1], d[0]]) / D
    b = "R" if a == "L" else "L"
    out = []
    for sign in (1.0, -1.0):
        c2 = mid + sign * h * perp
        m1 = 0.5 * (c0 + c2)
        m2 = 0.5 * (c2 + c1)
        # heading on a circle of turning sign s at point p: angle(p - c) + s*pi/2
        h1 = _angle(m1 - c0) + sa * math.pi / 2
        h2 = _angle(m2 - c1) + sa * math.pi / 2
        t = _m(sa * (h1 - th0)) * r
        u = _m(-sa * (h2 - h1)) * r
        q = _m(sa * (th1 - h2)) * r
        out.append([(a, t), (b, u), (a, q)])
    return out


def dubins_oracle(q0, q1, r, tol=1e-6):
    """Shortest verified path length and its word."""
    p0, th0 = np.array(q0[:2], float), float(q0[2])
    p1, th1 = np.array(q1[:2], float), float(q1[2])
    cands = []
    for a, b in (("L", "L"), ("R", "R"), ("L", "R"), ("R", "L")):
        c = _csc(p0, th0, p1, th1, r, a, b)
        if c is not None:
            cands.append((a + "S" + b, c))
    for a in ("L", "R"):
        for c in _ccc(p0, th0, p1, th1, r, a):
            cands.append(("".join(k for k, _ in c), c))
    best = (math.inf, None)
    for word, segs in cands:
        x, y, th = integrate((p0[0], p0[1], th0), segs, r)
        dth = (th - th1 + math.pi) % TAU - math.pi
        if math.hypot(x - p1[0], y - p1[1]) <= tol and abs(dth) <= tol:
            L = sum(ell for _, ell in segs)
            if L < best[0]:
                best = (L, word)
    return best


def unicycle_arc(state, v, w, dt):
    """Closed-form unicycle motion under constant inputs."""
    x, y, th = state
    if abs(w) < 1e-12:
        return x + v * dt * math.cos(th), y + v * dt * math.sin(th), th
    R = v / w
    th2 = th + w * dt
    return x + R * (math.sin(th2) - math.sin(th)), y - R * (math.cos(th2) - math.cos(th)), th2


def brute_force_atsp(cost):
    """Minimum Hamiltonian cycle by enumerating permutations (node 0 fixed)."""
    cost = np.asarray(cost, float)
    n = cost.shape[0]
    best = math.inf
    for perm in itertools.permutations(range(1, n)):
        o = (0,) + perm
        c = sum(cost[o[i], o[(i + 1) % n]] for i in range(n))
        best = min(best, c)
    return best


def brute_force_gtsp(cost, clusters):
    """Minimum cycle visiting exactly one node of every cluster."""
    cost = np.asarray(cost, float)
    m = len(clusters)
    best = math.inf
    for perm in itertools.permutations(range(1, m)):
        seq = (0,) + perm
        for pick in itertools.product(*(clusters[c] for c in seq)):
            c = sum(cost[pick[i], pick[(i + 1) % m]] for i in range(m))
            best = min(best, c)
    return best


def subset_dp_tsp(cost):
    """Held-Karp written with dictionaries over frozensets (slow but obvious)."""
    cost = np.asarray(cost, float)
    n = cost.shape[0]
    dp = {(frozenset([j]), j): cost[0, j] for j in range(1, n)}
    for size in range(2, n):
        for sub in itertools.combinations(range(1, n), size):
            S = frozenset(sub)
            for j in sub:
                rest = S - {j}
                dp[(S, j)] = min(dp[(rest, k)] + cost[k, j] for k in rest)
    full = frozenset(range(1, n))
    return min(dp[(full, j)] + cost[j, 0] for j in range(1, n))
