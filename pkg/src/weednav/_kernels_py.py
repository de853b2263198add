"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_core.pyx`` move for move so both backends return identical
tours; keep the two files in sync.
"""

from __future__ import annotations

from collections import deque

import numpy as np

TWO_PI = 2.0 * np.pi
_SNAP = 1e-10


def _mod2pi(a):
    r = np.mod(a, TWO_PI)
    return np.where(r > TWO_PI - _SNAP, 0.0, r)


def _dubins_row(x0, y0, th0, x, y, th, rho):
    dx = x - x0
    dy = y - y0
    d = np.hypot(dx, dy) / rho
    chord = np.where(d > 0.0, np.arctan2(dy, dx), 0.0)
    alpha = _mod2pi(th0 - chord)
    beta = _mod2pi(th - chord)
    sa, sb = np.sin(alpha), np.sin(beta)
    ca, cb = np.cos(alpha), np.cos(beta)
    c_ab = np.cos(alpha - beta)
    dd = d * d

    # LSL
    p2 = np.maximum(2.0 + dd - 2.0 * c_ab + 2.0 * d * (sa - sb), 0.0)
    tmp = np.arctan2(cb - ca, d + sa - sb)
    best = _mod2pi(tmp - alpha) + np.sqrt(p2) + _mod2pi(beta - tmp)
    # RSR
    p2 = np.maximum(2.0 + dd - 2.0 * c_ab + 2.0 * d * (sb - sa), 0.0)
    tmp = np.arctan2(ca - cb, d - sa + sb)
    best = np.minimum(best, _mod2pi(alpha - tmp) + np.sqrt(p2) + _mod2pi(tmp - beta))
    with np.errstate(invalid="ignore"):
        # LSR
        p2 = -2.0 + dd + 2.0 * c_ab + 2.0 * d * (sa + sb)
        p2 = np.where((p2 < 0.0) & (p2 > -1e-10), 0.0, p2)
        p = np.sqrt(np.maximum(p2, 0.0))
        tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
        L = _mod2pi(tmp - alpha) + p + _mod2pi(tmp - beta)
        best = np.where(p2 >= 0.0, np.minimum(best, L), best)
        # RSL
        p2 = -2.0 + dd + 2.0 * c_ab - 2.0 * d * (sa + sb)
        p2 = np.where((p2 < 0.0) & (p2 > -1e-10), 0.0, p2)
        p = np.sqrt(np.maximum(p2, 0.0))
        tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
        L = _mod2pi(alpha - tmp) + p + _mod2pi(beta - tmp)
        best = np.where(p2 >= 0.0, np.minimum(best, L), best)
        # RLR
        tmp = (6.0 - dd + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0
        tmp = np.where((np.abs(tmp) > 1.0) & (np.abs(tmp) < 1.0 + 1e-10), np.sign(tmp), tmp)
        ok = np.abs(tmp) <= 1.0
        phi = np.arctan2(ca - cb, d - sa + sb)
        p = _mod2pi(TWO_PI - np.arccos(np.clip(tmp, -1.0, 1.0)))
        t = _mod2pi(alpha - phi + p / 2.0)
        L = t + p + _mod2pi(alpha - beta - t + p)
        best = np.where(ok, np.minimum(best, L), best)
        # LRL
        tmp = (6.0 - dd + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0
        tmp = np.where((np.abs(tmp) > 1.0) & (np.abs(tmp) < 1.0 + 1e-10), np.sign(tmp), tmp)
        ok = np.abs(tmp) <= 1.0
        phi = np.arctan2(ca - cb, d + sa - sb)
        p = _mod2pi(TWO_PI - np.arccos(np.clip(tmp, -1.0, 1.0)))
        t = _mod2pi(-alpha - phi + p / 2.0)
        L = t + p + _mod2pi(beta - alpha - t + p)
        best = np.where(ok, np.minimum(best, L), best)
    return best * rho


def dubins_matrix(x, y, theta, rho):
    """All-pairs shortest Dubins lengths; entry (i, j) is from node i to node j."""
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    n = x.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        out[i] = _dubins_row(x[i], y[i], theta[i], x, y, theta, rho)
        out[i, i] = 0.0
    return out


def atsp_local_search(cost, cand_out, cand_in, tour, queue, eps, max_moves):
    """Or-opt and segment-exchange (3-opt without reversal) descent.

    ``cand_out[i]`` lists cheap successors of ``i`` sorted by cost, ``cand_in[i]``
    cheap predecessors; ``-1`` pads short lists. Only nodes in ``queue`` start
    with their don't-look bit cleared. Returns ``(tour, moves)``.
    """
    n = len(tour)
    tour = [int(v) for v in tour]
    if n < 5:
        return np.array(tour, dtype=np.int64), 0
    # nested lists index much faster than a 2-D array in pure Python
    d = cost if isinstance(cost, list) else cost.tolist()
    pos = [0] * n
    for i, v in enumerate(tour):
        pos[v] = i
    co = cand_out.tolist()
    ci = cand_in.tolist()
    m_out = len(co[0])
    m_in = len(ci[0])
    inq = [False] * n
    q = deque()
    for v in queue:
        v = int(v)
        if not inq[v]:
            inq[v] = True
            q.append(v)
    moves = 0

    while q and moves < max_moves:
        a = q.popleft()
        inq[a] = False
        pa = pos[a]
        touched = None

        # segment exchange: a->b', c->a', b->c'
        a1 = tour[(pa + 1) % n]
        d_aa1 = d[a][a1]
        for ib in range(m_out):
            b1 = co[a][ib]
            if b1 < 0:
                break
            g1 = d_aa1 - d[a][b1]
            if g1 <= 0.0:
                break
            rb1 = (pos[b1] - pa) % n
            if rb1 <= 1:
                continue
            b = tour[(pos[b1] - 1) % n]
            g2 = g1 + d[b][b1]
            for ic in range(m_out):
                c1 = co[b][ic]
                if c1 < 0:
                    break
                g3 = g2 - d[b][c1]
                if g3 <= 0.0:
                    break
                rc1 = (pos[c1] - pa) % n
                if rc1 == 0:
                    rc1 = n
                if rc1 <= rb1:
                    continue
                c = tour[(pos[c1] - 1) % n]
                gain = g3 + d[c][c1] - d[c][a1]
                if gain > eps:
                    r = tour[pa:] + tour[:pa]
                    tour = [a] + r[rb1:rc1] + r[1:rb1] + r[rc1:]
                    touched = (a, a1, b, b1, c, c1)
                    break
            if touched is not None:
                break

        # or-opt: move the segment of length L starting at a
        if touched is None:
            p = tour[(pa - 1) % n]
            for L in (1, 2, 3):
                if n - L < 3:
                    break
                se = tour[(pa + L - 1) % n]
                nx = tour[(pa + L) % n]
                rem = d[p][a] + d[se][nx] - d[p][nx]
                if not rem > eps:
                    continue
                # insert between c and its successor, with c -> a cheap
                for ic in range(m_in):
                    c = ci[a][ic]
                    if c < 0:
                        break
                    g = rem - d[c][a]
                    if g <= 0.0:
                        break
                    rc = (pos[c] - pa) % n
                    if rc < L or rc > n - 2:
                        continue
                    cn = tour[(pos[c] + 1) % n]
                    gain = g + d[c][cn] - d[se][cn]
                    if gain > eps:
                        touched = (p, a, se, nx, c, cn)
                        break
                if touched is None:
                    # insert before cn, with se -> cn cheap
                    for ic in range(m_out):
                        cn = co[se][ic]
                        if cn < 0:
                            break
                        g = rem - d[se][cn]
                        if g <= 0.0:
                            break
                        rcn = (pos[cn] - pa) % n
                        if rcn < L + 1:
                            continue
                        c = tour[(pos[cn] - 1) % n]
                        gain = g + d[c][cn] - d[c][a]
                        if gain > eps:
                            touched = (p, a, se, nx, c, cn)
                            break
                if touched is not None:
                    r = tour[pa:] + tour[:pa]
                    seg, rest = r[:L], r[L:]
                    rc = (pos[touched[4]] - pa) % n
                    k = rc - L + 1
                    tour = rest[:k] + seg + rest[k:]
                    break

        if touched is not None:
            moves += 1
            for i, v in enumerate(tour):
                pos[v] = i
            for v in touched:
                if not inq[v]:
                    inq[v] = True
                    q.append(v)
            if not inq[a]:
                inq[a] = True
                q.append(a)

    return np.array(tour, dtype=np.int64), moves
