"""Tour construction: coupled Dubins-TSP via heading clusters, and the
decoupled Euclidean-order + alternating-heading baseline.

The coupled planner discretizes each target into ``K`` candidate headings,
turns the resulting one-node-per-cluster problem into a plain asymmetric TSP
(Noon-Bean transformation) and solves that with an iterated local search.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .errors import DuplicateTarget, Infeasible, InvalidRadius, TooFewTargets, ValidationError
from .geometry import Configuration, DubinsPath, dubins_length, dubins_shortest

MIN_SEPARATION = 1e-9
EXHAUSTIVE_MAX_TARGETS = 6  # coupled planner enumerates cluster orders up to this size


@dataclass(frozen=True, eq=False)
class Field:
    targets: np.ndarray  # (W, 2)
    bounds: Optional[tuple] = None  # (xmin, ymin, xmax, ymax), plotting only

    def __post_init__(self):
        pts = np.asarray(self.targets, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("targets must be an array of (x, y) rows")
        if pts.shape[0] < 2:
            raise TooFewTargets(f"need at least 2 targets, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("target coordinates must be finite")
        pairs = cKDTree(pts).query_pairs(MIN_SEPARATION)
        if pairs:
            i, j = sorted(min(pairs))
            raise DuplicateTarget(f"targets {i} and {j} coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "targets", pts)

    def __len__(self):
        return self.targets.shape[0]


@dataclass(frozen=True, eq=False)
class ClusterGraph:
    """One cluster of ``K`` heading nodes per target; node ``i`` is target ``i // K``."""

    n_targets: int
    K: int
    node_config: np.ndarray  # (N, 3)
    cost: np.ndarray  # (N, N); inf marks forbidden (intra-cluster) arcs

    @property
    def n_nodes(self) -> int:
        return self.n_targets * self.K

    def cluster_of(self, node: int) -> int:
        return node // self.K

    def clusters(self) -> list:
        return [list(range(c * self.K, (c + 1) * self.K)) for c in range(self.n_targets)]


@dataclass(frozen=True, eq=False)
class Tour:
    order: tuple  # target indices in visiting order
    headings: np.ndarray  # heading at each visited target, in tour order
    configurations: tuple  # Configuration per visited target
    closed: bool
    total_cost: float

    def __len__(self):
        return len(self.order)

    def legs(self) -> list:
        """Consecutive configuration pairs, including the wrap-around leg when closed."""
        q = self.configurations
        pairs = [(q[i], q[i + 1]) for i in range(len(q) - 1)]
        if self.closed:
            pairs.append((q[-1], q[0]))
        return pairs


def candidate_headings(K: int) -> np.ndarray:
    return np.arange(K) * (2.0 * math.pi / K)


def build_cluster_graph(field: Field, K: int, rho: float) -> ClusterGraph:
    """All inter-cluster Dubins distances between the ``W*K`` heading nodes."""
    if len(field) < 2:
        raise TooFewTargets("need at least 2 targets")
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    if not rho > 0.0:
        raise InvalidRadius(f"turning radius must be positive, got {rho}")
    W = len(field)
    th = candidate_headings(K)
    cfg = np.empty((W * K, 3))
    cfg[:, 0] = np.repeat(field.targets[:, 0], K)
    cfg[:, 1] = np.repeat(field.targets[:, 1], K)
    cfg[:, 2] = np.tile(th, W)
    # candidate headings are in [0, 2pi); store them normalized like any pose
    cfg[:, 2] = math.pi - np.mod(math.pi - cfg[:, 2], 2.0 * math.pi)
    cost = _backend.dubins_matrix(cfg[:, 0], cfg[:, 1], cfg[:, 2], float(rho))
    for c in range(W):
        cost[c * K:(c + 1) * K, c * K:(c + 1) * K] = np.inf
    cfg.setflags(write=False)
    return ClusterGraph(W, K, cfg, cost)


@dataclass(frozen=True, eq=False)
class AtspInstance:
    """Noon-Bean image of a clustered instance.

    ``matrix`` is the ATSP cost (inf = forbidden), ``omega`` the exit-arc offset,
    ``clusters`` the original node lists and ``cluster_of`` the inverse map.
    ATSP node ids equal the original node ids.
    """

    matrix: np.ndarray
    omega: float
    clusters: tuple
    cluster_of: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def noon_bean(cost: np.ndarray, clusters: Sequence[Sequence[int]]) -> AtspInstance:
    """Noon-Bean transformation for arbitrary clusters of a GTSP cost matrix."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    cluster_of = np.full(n, -1, dtype=np.int64)
    for c, members in enumerate(clusters):
        cluster_of[list(members)] = c
    if np.any(cluster_of < 0):
        raise ValidationError("every node must belong to a cluster")
    inter = cluster_of[:, None] != cluster_of[None, :]
    finite = inter & np.isfinite(cost)
    omega = float(cost[finite].sum()) + 1.0

    out = np.full((n, n), np.inf)
    for members in clusters:
        members = list(members)
        k = len(members)
        for t, i in enumerate(members):
            pred = members[(t - 1) % k]
            if k > 1:
                out[i, members[(t + 1) % k]] = 0.0
            # exits of i are re-sourced from its cyclic predecessor
            row = np.where(finite[i], cost[i] + omega, np.inf)
            out[pred, finite[i]] = row[finite[i]]
    return AtspInstance(out, omega, tuple(tuple(m) for m in clusters), cluster_of)


def gtsp_to_atsp(graph: ClusterGraph) -> AtspInstance:
    return noon_bean(graph.cost, graph.clusters())


def atsp_to_gtsp(instance: AtspInstance, atsp_order: Sequence[int]) -> list:
    """Chosen node per cluster, in visiting order.

    A cluster is represented by the node through which the tour first enters
    it. Tours that split a cluster (not optimal after the transformation) are
    still mapped, using the first entry.
    """
    order = list(atsp_order)
    n = len(order)
    co = instance.cluster_of
    # rotate so the tour starts at a cluster entry
    start = 0
    for i in range(n):
        if co[order[i]] != co[order[i - 1]]:
            start = i
            break
    order = order[start:] + order[:start]
    seen = set()
    chosen = []
    for i, v in enumerate(order):
        c = co[v]
        if c in seen:
            continue
        if i == 0 or co[order[i - 1]] != c:
            seen.add(c)
            chosen.append(int(v))
    return chosen


def _candidate_lists(cost: np.ndarray, m: int):
    n = cost.shape[0]
    c = cost.copy()
    np.fill_diagonal(c, np.inf)
    m = max(1, min(m, n - 1))
    out = np.argsort(c, axis=1, kind="stable")[:, :m].astype(np.int64)
    out[~np.isfinite(np.take_along_axis(c, out, axis=1))] = -1
    inn = np.argsort(c.T, axis=1, kind="stable")[:, :m].astype(np.int64)
    inn[~np.isfinite(np.take_along_axis(c.T, inn, axis=1))] = -1
    return np.ascontiguousarray(out), np.ascontiguousarray(inn)


def cycle_cost(cost: np.ndarray, order) -> float:
    order = np.asarray(order, dtype=np.int64)
    return float(cost[order, np.roll(order, -1)].sum())


def nearest_neighbor_tour(cost: np.ndarray, start: int) -> np.ndarray:
    n = cost.shape[0]
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    cur = start
    for k in range(n):
        order[k] = cur
        visited[cur] = True
        if k == n - 1:
            break
        row = np.where(visited, np.inf, cost[cur])
        nxt = int(np.argmin(row))
        if not np.isfinite(row[nxt]):
            # only forbidden arcs remain; take the first unvisited node
            nxt = int(np.flatnonzero(~visited)[0])
        cur = nxt
    return order


def _kick(order: np.ndarray, rng: np.random.Generator, cost: np.ndarray, max_seg: int = 50):
    """Reorder three short consecutive blocks: A B C D -> A D C B.

    All four junction arcs change, so a single 3-change cannot undo it. Blocks
    are delimited by non-zero arcs only: zero-cost arcs (e.g. the intra-cluster
    cycles of a Noon-Bean instance) are never worth breaking at random.
    """
    n = order.size
    arcs = cost[order, np.roll(order, -1)]
    cuts = np.flatnonzero(arcs != 0.0)
    if cuts.size < 4:
        cuts = np.arange(n)
    m = cuts.size
    lim = max(1, min(max_seg, (m - 1) // 3))
    l1, l2, l3 = (int(v) for v in rng.integers(1, lim + 1, size=3))
    k0 = int(rng.integers(m))
    # r starts just after the arc at cuts[k0]; the arc at cut c splits r at (c - cuts[k0]) % n
    shift = int(cuts[k0]) + 1
    r = np.roll(order, -shift)
    rel = np.sort((cuts - cuts[k0]) % n)  # rel[0] == 0 is the arc closing r
    i1 = int(rel[l1])
    i2 = int(rel[l1 + l2])
    i3 = int(rel[l1 + l2 + l3]) if l1 + l2 + l3 < m else n
    b, c, d, rest = r[:i1], r[i1:i2], r[i2:i3], r[i3:]
    new = np.concatenate([d, c, b, rest])
    touched = {int(b[0]), int(b[-1]), int(c[0]), int(c[-1]), int(d[0]), int(d[-1])}
    if rest.size:
        touched.update((int(rest[0]), int(rest[-1])))
    return new, sorted(touched)


def solve_atsp(
    matrix,
    budget: int = 200,
    seed: int = 0,
    time_limit: Optional[float] = None,
    backend: Optional[str] = None,
    n_candidates: int = 10,
) -> np.ndarray:
    """Heuristic Hamiltonian cycle of a dense asymmetric cost matrix.

    Nearest-neighbour start, then iterated local search: ``budget`` kicks, each
    followed by Or-opt / segment-exchange descent. ``inf`` marks forbidden
    arcs. The result is deterministic for a fixed ``(seed, budget)``;
    ``time_limit`` (seconds) only cuts the kick loop short.
    """
    cost = np.array(matrix, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValidationError("cost matrix must be square")
    n = cost.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 nodes")
    off = cost.copy()
    np.fill_diagonal(off, np.inf)
    if np.any(np.isnan(off)):
        raise ValidationError("cost matrix contains NaN")
    dead = np.flatnonzero(~np.isfinite(off).any(axis=1))
    if dead.size:
        raise Infeasible(f"node {int(dead[0])} has no allowed outgoing arc")

    rng = np.random.default_rng(seed)
    if n <= 4:
        best, best_c = None, math.inf
        for perm in itertools.permutations(range(1, n)):
            o = np.array((0,) + perm, dtype=np.int64)
            c = cycle_cost(cost, o)
            if c < best_c:
                best, best_c = o, c
        if best is None:
            raise Infeasible("no Hamiltonian cycle uses only allowed arcs")
        return best

    _, local_search = _backend.kernels(backend)
    if local_search is _backend._kernels_py.atsp_local_search:
        kernel_cost = off.tolist()
    else:
        kernel_cost = np.ascontiguousarray(off)
    co, ci = _candidate_lists(off, n_candidates)
    finite = off[np.isfinite(off)]
    eps = 1e-12 * max(1.0, float(np.abs(finite).max()))
    max_moves = 100 * n * n

    order = nearest_neighbor_tour(off, int(rng.integers(n)))
    order, _ = local_search(kernel_cost, co, ci, order, order, eps, max_moves)
    best, best_c = np.asarray(order), cycle_cost(off, order)
    t0 = time.monotonic()
    for _ in range(int(budget)):
        if time_limit is not None and time.monotonic() - t0 > time_limit:
            break
        kicked, touched = _kick(best, rng, off)
        if not np.isfinite(cycle_cost(off, kicked)):
            continue
        cand, _ = local_search(kernel_cost, co, ci, kicked, touched, eps, max_moves)
        c = cycle_cost(off, cand)
        if c < best_c - eps:
            best, best_c = np.asarray(cand), c
    return best


def held_karp(cost) -> tuple:
    """Exact minimum Hamiltonian cycle by dynamic programming over subsets.

    Returns ``(cost, order)`` with ``order[0] == 0``. Exponential; n <= 16.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if n > 16:
        raise ValidationError("held_karp is limited to 16 nodes")
    if n == 1:
        return 0.0, np.zeros(1, dtype=np.int64)
    m = n - 1
    full = 1 << m
    dp = np.full((full, m), np.inf)
    parent = np.full((full, m), -1, dtype=np.int64)
    for j in range(m):
        dp[1 << j, j] = cost[0, j + 1]
    masks = np.arange(full)
    pop = np.array([bin(v).count("1") for v in range(full)])
    sub = cost[1:, 1:]
    for k in range(2, m + 1):
        layer = masks[pop == k]
        for j in range(m):
            sel = layer[(layer >> j) & 1 == 1]
            prev = sel ^ (1 << j)
            cand = dp[prev] + sub[:, j][None, :]
            arg = np.argmin(cand, axis=1)
            dp[sel, j] = cand[np.arange(sel.size), arg]
            parent[sel, j] = arg
    closing = dp[full - 1] + cost[1:, 0]
    j = int(np.argmin(closing))
    best = float(closing[j])
    order = []
    mask = full - 1
    while j >= 0:
        order.append(j + 1)
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    return best, np.array([0] + order[::-1], dtype=np.int64)


def path_to_cycle_cost(cost: np.ndarray) -> np.ndarray:
    """Append a zero-cost dummy node so a min cycle yields a min open path."""
    n = cost.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = cost
    return out


def _configs_from(field: Field, order, headings) -> tuple:
    pts = field.targets
    return tuple(Configuration(pts[i, 0], pts[i, 1], th) for i, th in zip(order, headings))


def _sequence_cost(configs, rho: float, closed: bool) -> float:
    total = 0.0
    q = configs
    for i in range(len(q) - 1):
        total += dubins_length(q[i].x, q[i].y, q[i].theta, q[i + 1].x, q[i + 1].y, q[i + 1].theta, rho)
    if closed and len(q) > 1:
        total += dubins_length(q[-1].x, q[-1].y, q[-1].theta, q[0].x, q[0].y, q[0].theta, rho)
    return total


def tour_cost(tour: Tour, rho: float) -> float:
    """Total Dubins length of the tour, recomputed from its configurations."""
    return _sequence_cost(tour.configurations, rho, tour.closed)


def tour_legs(tour: Tour, rho: float) -> list:
    """Shortest Dubins path for every leg, in tour order."""
    return [dubins_shortest(a, b, rho) for a, b in tour.legs()]


def make_tour(field: Field, order, headings, rho: float, closed: bool = True) -> Tour:
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(len(field))):
        raise ValidationError("order must be a permutation of the targets")
    configs = _configs_from(field, order, headings)
    heads = np.array([q.theta for q in configs])
    heads.setflags(write=False)
    return Tour(order, heads, configs, bool(closed), _sequence_cost(configs, rho, closed))


def _refine_headings(graph: ClusterGraph, order: Sequence[int], closed: bool) -> list:
    """Best heading node per cluster for a fixed cluster order (exact layered DP)."""
    K = graph.K
    W = len(order)
    cost = graph.cost
    starts = range(K) if closed else [None]
    best_total, best_nodes = math.inf, None
    for h0 in starts:
        first = [order[0] * K + h0] if h0 is not None else [order[0] * K + k for k in range(K)]
        acc = {v: 0.0 for v in first}
        back = []
        for w in range(1, W):
            nodes = [order[w] * K + k for k in range(K)]
            prev = list(acc.keys())
            vals = np.array([acc[p] for p in prev])
            sub = cost[np.ix_(prev, nodes)] + vals[:, None]
            arg = np.argmin(sub, axis=0)
            back.append({v: prev[a] for v, a in zip(nodes, arg)})
            acc = {v: float(sub[a, k]) for k, (v, a) in enumerate(zip(nodes, arg))}
        if closed:
            totals = {v: acc[v] + cost[v, first[0]] for v in acc}
        else:
            totals = acc
        last = min(totals, key=lambda v: (totals[v], v))
        if totals[last] < best_total:
            nodes = [last]
            for b in reversed(back):
                nodes.append(b[nodes[-1]])
            best_total, best_nodes = totals[last], nodes[::-1]
    return best_nodes


def _exhaustive(graph: ClusterGraph, closed: bool):
    """Every cluster order with its optimal headings; tiny fields only."""
    W = graph.n_targets
    perms = ((0,) + p for p in itertools.permutations(range(1, W))) if closed else itertools.permutations(range(W))
    best = (math.inf, None, None)
    for perm in perms:
        nodes = _refine_headings(graph, perm, closed)
        c = sum(graph.cost[nodes[i], nodes[i + 1]] for i in range(W - 1))
        if closed:
            c += graph.cost[nodes[-1], nodes[0]]
        if c < best[0] - 1e-12:
            best = (c, list(perm), nodes)
    return best[1], best[2]


def _polish(graph: ClusterGraph, order: list, nodes: list, closed: bool, max_passes: int = 100):
    """Cluster-level 2-opt / Or-opt on a mapped tour, then exact heading DP.

    A reversed stretch gets every heading turned by pi: a Dubins path driven
    backwards is a forward path between the flipped poses with the same
    length, so only the two junction legs change cost. Needs even ``K``
    (pi must be a candidate heading); with odd ``K`` only Or-opt runs.
    """
    K = graph.K
    W = len(order)
    C = graph.cost.reshape(W, K, W, K)
    T = np.array(order, dtype=np.int64)
    H = np.array([v % K for v in nodes], dtype=np.int64)
    flip = K % 2 == 0

    def seq_cost(T, H):
        c = C[T[:-1], H[:-1], T[1:], H[1:]].sum()
        if closed:
            c += C[T[-1], H[-1], T[0], H[0]]
        return float(c)

    best = seq_cost(T, H)
    for _ in range(max_passes):
        improved = False
        # Or-opt: move 1..3 consecutive targets, optionally reversed
        for L in (1, 2, 3):
            if W - L < 2:
                break
            i = 0
            while i < W:
                if not closed and i + L > W:
                    break
                idx = (np.arange(L) + i) % W
                segT, segH = T[idx], H[idx]
                keep = np.array([k for k in range((i + L) % W, (i + L) % W + W - L)]) % W
                RT, RH = T[keep], H[keep]
                m = RT.size
                if closed:
                    rem = (C[RT[-1], RH[-1], segT[0], segH[0]] + C[segT[-1], segH[-1], RT[0], RH[0]]
                           - C[RT[-1], RH[-1], RT[0], RH[0]])
                    u = np.arange(m - 1)
                else:
                    # keep is a rotation; restore linear order for open tours
                    keep = np.concatenate([np.arange(0, i), np.arange(i + L, W)])
                    RT, RH = T[keep], H[keep]
                    m = RT.size
                    rem = 0.0
                    if i > 0:
                        rem += C[T[i - 1], H[i - 1], segT[0], segH[0]]
                    if i + L < W:
                        rem += C[segT[-1], segH[-1], T[i + L], H[i + L]]
                    if 0 < i and i + L < W:
                        rem -= C[T[i - 1], H[i - 1], T[i + L], H[i + L]]
                    u = np.arange(m - 1)
                ua, ub = u, u + 1
                base = C[RT[ua], RH[ua], RT[ub], RH[ub]]
                ins_f = C[RT[ua], RH[ua], segT[0], segH[0]] + C[segT[-1], segH[-1], RT[ub], RH[ub]] - base
                cands = [(ins_f, False)]
                if flip:
                    fT, fH = segT[::-1], (segH[::-1] + K // 2) % K
                    ins_r = C[RT[ua], RH[ua], fT[0], fH[0]] + C[fT[-1], fH[-1], RT[ub], RH[ub]] - base
                    cands.append((ins_r, True))
                done = False
                for ins, rev in cands:
                    k = int(np.argmin(ins))
                    if rem - ins[k] > 1e-9:
                        st, sh = (segT, segH) if not rev else (segT[::-1], (segH[::-1] + K // 2) % K)
                        T = np.concatenate([RT[:k + 1], st, RT[k + 1:]])
                        H = np.concatenate([RH[:k + 1], sh, RH[k + 1:]])
                        improved = done = True
                        break
                if not done:
                    i += 1
        # 2-opt with flipped headings
        if flip:
            for i in range(-1 if not closed else 0, W - 2):
                j = np.arange(i + 2, W)
                if closed and i == 0:
                    j = j[j <= W - 1]
                j1 = (j + 1) % W
                if i >= 0:
                    old = C[T[i], H[i], T[i + 1], H[i + 1]]
                    new1 = C[T[i], H[i], T[j], (H[j] + K // 2) % K]
                else:
                    old = 0.0
                    new1 = 0.0
                if closed:
                    old2 = C[T[j], H[j], T[j1], H[j1]]
                    new2 = C[T[i + 1], (H[i + 1] + K // 2) % K, T[j1], H[j1]]
                else:
                    last = j == W - 1
                    old2 = np.where(last, 0.0, C[T[j], H[j], T[np.minimum(j + 1, W - 1)], H[np.minimum(j + 1, W - 1)]])
                    new2 = np.where(last, 0.0, C[T[i + 1], (H[i + 1] + K // 2) % K,
                                                 T[np.minimum(j + 1, W - 1)], H[np.minimum(j + 1, W - 1)]])
                gain = old + old2 - new1 - new2
                if gain.size == 0:
                    continue
                k = int(np.argmax(gain))
                if gain[k] > 1e-9:
                    jj = int(j[k])
                    T[i + 1:jj + 1] = T[i + 1:jj + 1][::-1].copy()
                    H[i + 1:jj + 1] = ((H[i + 1:jj + 1] + K // 2) % K)[::-1].copy()
                    improved = True
        nodes_now = _refine_headings(graph, list(T), closed)
        H = np.array([v % K for v in nodes_now], dtype=np.int64)
        c = seq_cost(T, H)
        if not improved or c > best - 1e-9:
            best = min(best, c)
            break
        best = c
    return [int(t) for t in T], [int(t * K + h) for t, h in zip(T, H)]


def solve_dtsp_coupled(
    field: Field,
    K: int = 10,
    rho: float = 0.5,
    seed: int = 0,
    budget: int = 2000,
    closed: bool = True,
    time_limit: Optional[float] = None,
    refine: bool = True,
    backend: Optional[str] = None,
) -> Tour:
    """Jointly choose visiting order and headings over ``K`` candidate headings.

    With ``refine`` the mapped tour is polished by cluster-level 2-opt / Or-opt
    and its headings re-optimized exactly over the same candidate set; every
    step is accepted only if it shortens the tour.
    """
    graph = build_cluster_graph(field, K, rho)
    clusters = graph.clusters()
    cost = graph.cost
    if not closed:
        cost = path_to_cycle_cost(cost)
        n = graph.n_nodes
        cost[n, n] = np.inf
        clusters = clusters + [[n]]
    inst = noon_bean(cost, clusters)
    atsp_order = solve_atsp(
        inst.matrix, budget=budget, seed=seed, time_limit=time_limit, backend=backend, n_candidates=30
    )
    chosen = atsp_to_gtsp(inst, atsp_order)
    if not closed:
        dummy = graph.n_nodes
        i = chosen.index(dummy)
        chosen = chosen[i + 1:] + chosen[:i]
    order = [v // K for v in chosen]
    if refine:
        chosen = _refine_headings(graph, order, closed)
        order, chosen = _polish(graph, order, chosen, closed)
        if len(field) <= EXHAUSTIVE_MAX_TARGETS:
            order, chosen = _exhaustive(graph, closed)
    headings = [graph.node_config[v, 2] for v in chosen]
    return make_tour(field, order, headings, rho, closed)


def _two_opt(dist: np.ndarray, order: np.ndarray) -> np.ndarray:
    """First-improvement 2-opt on a symmetric matrix until no move improves."""
    n = order.size
    order = order.copy()
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            js = np.arange(i + 2, n if i > 0 else n - 1)
            if js.size == 0:
                continue
            c = order[js]
            d = order[(js + 1) % n]
            delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
            k = int(np.argmin(delta))
            if delta[k] < -1e-12:
                j = int(js[k])
                order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                improved = True
    return order


def solve_etsp(
    field: Field,
    seed: int = 0,
    budget: int = 50,
    closed: bool = True,
    exact: bool = False,
) -> np.ndarray:
    """Euclidean visiting order: nearest neighbour + 2-opt (+ Or-opt kicks).

    ``exact=True`` solves by dynamic programming (W <= 16).
    """
    W = len(field)
    if W < 2:
        raise TooFewTargets("need at least 2 targets")
    pts = field.targets
    dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    if not closed:
        dist = path_to_cycle_cost(dist)
    n = dist.shape[0]
    if exact or n <= 4:
        _, order = held_karp(dist)
    else:
        rng = np.random.default_rng(seed)
        off = dist.copy()
        np.fill_diagonal(off, np.inf)
        order = _two_opt(dist, nearest_neighbor_tour(off, int(rng.integers(n))))
        best_c = cycle_cost(dist, order)
        for _ in range(int(budget)):
            kicked, _ = _kick(order, rng, dist)
            cand = _two_opt(dist, kicked)
            c = cycle_cost(dist, cand)
            if c < best_c - 1e-12:
                order, best_c = cand, c
    order = [int(v) for v in order]
    if not closed:
        i = order.index(W)
        order = order[i + 1:] + order[:i]
    return np.array(order, dtype=np.int64)


def euclidean_tour_length(field: Field, order, closed: bool = True) -> float:
    p = field.targets[np.asarray(order)]
    seg = np.hypot(*np.diff(p, axis=0).T).sum()
    if closed:
        seg += math.hypot(*(p[0] - p[-1]))
    return float(seg)


def alternating_headings(order, field: Field, rho: float = 0.5, closed: bool = True) -> Tour:
    """Headings that make every odd leg (1-indexed) a straight segment.

    When the tour has an odd number of targets the last one has no odd leg of
    its own; it takes the direction of its outgoing wrap-around leg for a
    closed tour and of its incoming leg for an open one.
    """
    order = [int(i) for i in order]
    p = field.targets[order]
    W = len(order)
    heads = np.full(W, np.nan)
    for a in range(0, W - 1, 2):
        dx, dy = p[a + 1] - p[a]
        heads[a] = heads[a + 1] = math.atan2(dy, dx)
    if W % 2 == 1:
        if closed:
            dx, dy = p[0] - p[-1]
        else:
            dx, dy = p[-1] - p[-2]
        heads[-1] = math.atan2(dy, dx)
    return make_tour(field, order, heads, rho, closed)


def solve_decoupled(field: Field, rho: float = 0.5, seed: int = 0, budget: int = 50, closed: bool = True) -> Tour:
    """Baseline: Euclidean order first, then alternating headings."""
    return alternating_headings(solve_etsp(field, seed=seed, budget=budget, closed=closed), field, rho, closed)


__all__ = [
    "AtspInstance",
    "ClusterGraph",
    "DubinsPath",
    "Field",
    "Tour",
    "alternating_headings",
    "atsp_to_gtsp",
    "build_cluster_graph",
    "candidate_headings",
    "cycle_cost",
    "euclidean_tour_length",
    "gtsp_to_atsp",
    "held_karp",
    "make_tour",
    "noon_bean",
    "solve_atsp",
    "solve_decoupled",
    "solve_dtsp_coupled",
    "solve_etsp",
    "tour_cost",
    "tour_legs",
]
