# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: all-pairs Dubins lengths and the ATSP local search.

Move order and acceptance rules are identical to ``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, sqrt, acos, fmod, fabs, hypot, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double SNAP = 1e-10


cdef inline double _mod2pi(double a) noexcept nogil:
    cdef double r = fmod(a, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r > TWO_PI - SNAP:
        r = 0.0
    return r


cdef double _dubins(double x0, double y0, double th0,
                    double x1, double y1, double th1, double rho) noexcept nogil:
    cdef double dx = x1 - x0, dy = y1 - y0
    cdef double d = hypot(dx, dy) / rho
    cdef double chord = atan2(dy, dx) if d > 0.0 else 0.0
    cdef double alpha = _mod2pi(th0 - chord)
    cdef double beta = _mod2pi(th1 - chord)
    cdef double sa = sin(alpha), sb = sin(beta), ca = cos(alpha), cb = cos(beta)
    cdef double c_ab = cos(alpha - beta)
    cdef double dd = d * d
    cdef double p2, p, tmp, phi, t, L, best

    # LSL
    p2 = 2.0 + dd - 2.0 * c_ab + 2.0 * d * (sa - sb)
    if p2 < 0.0:
        p2 = 0.0
    tmp = atan2(cb - ca, d + sa - sb)
    best = _mod2pi(tmp - alpha) + sqrt(p2) + _mod2pi(beta - tmp)
    # RSR
    p2 = 2.0 + dd - 2.0 * c_ab + 2.0 * d * (sb - sa)
    if p2 < 0.0:
        p2 = 0.0
    tmp = atan2(ca - cb, d - sa + sb)
    L = _mod2pi(alpha - tmp) + sqrt(p2) + _mod2pi(tmp - beta)
    if L < best:
        best = L
    # LSR
    p2 = -2.0 + dd + 2.0 * c_ab + 2.0 * d * (sa + sb)
    if p2 < 0.0 and p2 > -1e-10:
        p2 = 0.0
    if p2 >= 0.0:
        p = sqrt(p2)
        tmp = atan2(-ca - cb, d + sa + sb) - atan2(-2.0, p)
        L = _mod2pi(tmp - alpha) + p + _mod2pi(tmp - beta)
        if L < best:
            best = L
    # RSL
    p2 = -2.0 + dd + 2.0 * c_ab - 2.0 * d * (sa + sb)
    if p2 < 0.0 and p2 > -1e-10:
        p2 = 0.0
    if p2 >= 0.0:
        p = sqrt(p2)
        tmp = atan2(ca + cb, d - sa - sb) - atan2(2.0, p)
        L = _mod2pi(alpha - tmp) + p + _mod2pi(beta - tmp)
        if L < best:
            best = L
    # RLR
    tmp = (6.0 - dd + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0
    if fabs(tmp) > 1.0 and fabs(tmp) < 1.0 + 1e-10:
        tmp = 1.0 if tmp > 0.0 else -1.0
    if fabs(tmp) <= 1.0:
        phi = atan2(ca - cb, d - sa + sb)
        p = _mod2pi(TWO_PI - acos(tmp))
        t = _mod2pi(alpha - phi + p / 2.0)
        L = t + p + _mod2pi(alpha - beta - t + p)
        if L < best:
            best = L
    # LRL
    tmp = (6.0 - dd + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0
    if fabs(tmp) > 1.0 and fabs(tmp) < 1.0 + 1e-10:
        tmp = 1.0 if tmp > 0.0 else -1.0
    if fabs(tmp) <= 1.0:
        phi = atan2(ca - cb, d + sa - sb)
        p = _mod2pi(TWO_PI - acos(tmp))
        t = _mod2pi(-alpha - phi + p / 2.0)
        L = t + p + _mod2pi(beta - alpha - t + p)
        if L < best:
            best = L
    return best * rho


def dubins_matrix(x, y, theta, double rho):
    """All-pairs shortest Dubins lengths; entry (i, j) is from node i to node j."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i, j
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(n):
                if i == j:
                    o[i, j] = 0.0
                else:
                    o[i, j] = _dubins(xv[i], yv[i], tv[i], xv[j], yv[j], tv[j], rho)
    return out


cdef inline Py_ssize_t _md(Py_ssize_t a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t r = a % n
    if r < 0:
        r += n
    return r


cdef void _rebuild_pos(long[::1] tour, long[::1] pos, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        pos[tour[i]] = i


def atsp_local_search(double[:, ::1] d, long[:, ::1] cand_out, long[:, ::1] cand_in,
                      tour_in, queue, double eps, long max_moves):
    """Or-opt and segment-exchange descent; see ``_kernels_py.atsp_local_search``."""
    cdef Py_ssize_t n = len(tour_in)
    tour_arr = np.array(tour_in, dtype=np.int64)
    if n < 5:
        return tour_arr, 0
    cdef long[::1] tour = tour_arr
    pos_arr = np.empty(n, dtype=np.int64)
    cdef long[::1] pos = pos_arr
    buf_arr = np.empty(n, dtype=np.int64)
    cdef long[::1] buf = buf_arr
    inq_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] inq = inq_arr
    # circular FIFO; each node is queued at most once so n slots suffice
    qbuf_arr = np.empty(n + 1, dtype=np.int64)
    cdef long[::1] qb = qbuf_arr
    cdef Py_ssize_t qh = 0, qt = 0, qcap = n + 1
    cdef Py_ssize_t m_out = cand_out.shape[1], m_in = cand_in.shape[1]
    cdef long moves = 0
    cdef long a, a1, b, b1, c, c1, p, se, nx, cn, v
    cdef Py_ssize_t pa, rb1, rc1, rc, rcn, ib, ic, L, k, i, j, found
    cdef double d_aa1, g1, g2, g3, gain, rem, g
    cdef long touched[6]

    _rebuild_pos(tour, pos, n)
    for v in queue:
        if not inq[v]:
            inq[v] = 1
            qb[qt] = v
            qt = (qt + 1) % qcap

    with nogil:
        while qh != qt and moves < max_moves:
            a = qb[qh]
            qh = (qh + 1) % qcap
            inq[a] = 0
            pa = pos[a]
            found = 0

            a1 = tour[_md(pa + 1, n)]
            d_aa1 = d[a, a1]
            for ib in range(m_out):
                b1 = cand_out[a, ib]
                if b1 < 0:
                    break
                g1 = d_aa1 - d[a, b1]
                if g1 <= 0.0:
                    break
                rb1 = _md(pos[b1] - pa, n)
                if rb1 <= 1:
                    continue
                b = tour[_md(pos[b1] - 1, n)]
                g2 = g1 + d[b, b1]
                for ic in range(m_out):
                    c1 = cand_out[b, ic]
                    if c1 < 0:
                        break
                    g3 = g2 - d[b, c1]
                    if g3 <= 0.0:
                        break
                    rc1 = _md(pos[c1] - pa, n)
                    if rc1 == 0:
                        rc1 = n
                    if rc1 <= rb1:
                        continue
                    c = tour[_md(pos[c1] - 1, n)]
                    gain = g3 + d[c, c1] - d[c, a1]
                    if gain > eps:
                        # new order: a, r[rb1:rc1], r[1:rb1], r[rc1:]
                        k = 0
                        buf[k] = a
                        k += 1
                        for j in range(rb1, rc1):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(1, rb1):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(rc1, n):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(n):
                            tour[j] = buf[j]
                        touched[0] = a
                        touched[1] = a1
                        touched[2] = b
                        touched[3] = b1
                        touched[4] = c
                        touched[5] = c1
                        found = 1
                        break
                if found:
                    break

            if not found:
                p = tour[_md(pa - 1, n)]
                for L in range(1, 4):
                    if n - L < 3:
                        break
                    se = tour[_md(pa + L - 1, n)]
                    nx = tour[_md(pa + L, n)]
                    rem = d[p, a] + d[se, nx] - d[p, nx]
                    if not rem > eps:
                        continue
                    for ic in range(m_in):
                        c = cand_in[a, ic]
                        if c < 0:
                            break
                        g = rem - d[c, a]
                        if g <= 0.0:
                            break
                        rc = _md(pos[c] - pa, n)
                        if rc < L or rc > n - 2:
                            continue
                        cn = tour[_md(pos[c] + 1, n)]
                        gain = g + d[c, cn] - d[se, cn]
                        if gain > eps:
                            found = 1
                            break
                    if not found:
                        for ic in range(m_out):
                            cn = cand_out[se, ic]
                            if cn < 0:
                                break
                            g = rem - d[se, cn]
                            if g <= 0.0:
                                break
                            rcn = _md(pos[cn] - pa, n)
                            if rcn < L + 1:
                                continue
                            c = tour[_md(pos[cn] - 1, n)]
                            gain = g + d[c, cn] - d[c, a]
                            if gain > eps:
                                found = 1
                                break
                    if found:
                        touched[0] = p
                        touched[1] = a
                        touched[2] = se
                        touched[3] = nx
                        touched[4] = c
                        touched[5] = cn
                        rc = _md(pos[c] - pa, n)
                        # rest = r[L:], insert r[:L] after rest[rc - L]
                        k = 0
                        for j in range(L, rc + 1):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(0, L):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(rc + 1, n):
                            buf[k] = tour[_md(pa + j, n)]
                            k += 1
                        for j in range(n):
                            tour[j] = buf[j]
                        break

            if found:
                moves += 1
                _rebuild_pos(tour, pos, n)
                for i in range(6):
                    v = touched[i]
                    if not inq[v]:
                        inq[v] = 1
                        qb[qt] = v
                        qt = (qt + 1) % qcap
                if not inq[a]:
                    inq[a] = 1
                    qb[qt] = a
                    qt = (qt + 1) % qcap

    return tour_arr, moves
