import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_atsp, brute_force_gtsp, dubins_oracle, subset_dp_tsp
from weednav import _backend
from weednav.errors import DuplicateTarget, Infeasible, TooFewTargets, ValidationError
from weednav.routing import (
    Field,
    alternating_headings,
    atsp_to_gtsp,
    build_cluster_graph,
    cycle_cost,
    euclidean_tour_length,
    gtsp_to_atsp,
    held_karp,
    make_tour,
    noon_bean,
    solve_atsp,
    solve_decoupled,
    solve_dtsp_coupled,
    solve_etsp,
    tour_cost,
)

try:
    _backend.kernels("cython")
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False


def random_field(rng, W, size=20.0):
    return Field(rng.uniform(0, size, (W, 2)), (0, 0, size, size))


class TestField:
    def test_needs_two_targets(self):
        with pytest.raises(TooFewTargets):
            Field(np.array([[0.0, 0.0]]))

    def test_duplicates_rejected(self):
        with pytest.raises(DuplicateTarget):
            Field(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            Field(np.array([[0.0, 0.0], [np.nan, 1.0]]))


class TestClusterGraph:
    def test_two_targets_forward_leg(self):
        g = build_cluster_graph(Field(np.array([[0.0, 0.0], [10.0, 0.0]])), 1, 1.0)
        assert g.cost[0, 1] == pytest.approx(10.0, abs=1e-12)
        # the way back has to turn around: straight 10 plus a full loop
        assert g.cost[1, 0] == pytest.approx(dubins_oracle((10, 0, 0), (0, 0, 0), 1.0)[0], abs=1e-9)

    def test_intra_cluster_arcs_forbidden(self):
        g = build_cluster_graph(random_field(np.random.default_rng(0), 4), 3, 0.5)
        for members in g.clusters():
            assert np.all(np.isinf(g.cost[np.ix_(members, members)]))

    def test_costs_match_oracle(self):
        rng = np.random.default_rng(1)
        g = build_cluster_graph(random_field(rng, 5, 6.0), 4, 0.5)
        for _ in range(40):
            i, j = rng.integers(g.n_nodes, size=2)
            if g.cluster_of(i) == g.cluster_of(j):
                continue
            assert g.cost[i, j] == pytest.approx(dubins_oracle(g.node_config[i], g.node_config[j], 0.5)[0], abs=1e-6)


class TestNoonBean:
    def test_small_instances_preserve_optimum(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            m = int(rng.integers(2, 5))
            sizes = rng.integers(1, 4, size=m)
            clusters, k = [], 0
            for s in sizes:
                clusters.append(list(range(k, k + s)))
                k += s
            cost = rng.uniform(1, 10, (k, k))
            for c in clusters:
                cost[np.ix_(c, c)] = np.inf
            inst = noon_bean(cost, clusters)
            opt_atsp = subset_dp_tsp(inst.matrix)
            assert opt_atsp - m * inst.omega == pytest.approx(brute_force_gtsp(cost, clusters), abs=1e-9)

    def test_mapping_back_visits_each_cluster_once(self):
        rng = np.random.default_rng(3)
        g = build_cluster_graph(random_field(rng, 5, 6.0), 3, 0.5)
        inst = gtsp_to_atsp(g)
        order = solve_atsp(inst.matrix, seed=0)
        chosen = atsp_to_gtsp(inst, order)
        assert sorted(g.cluster_of(v) for v in chosen) == list(range(5))


class TestAtsp:
    def test_matches_brute_force_on_small_instances(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            cost = rng.uniform(1, 100, (7, 7))
            order = solve_atsp(cost, seed=0)
            assert cycle_cost(cost, order) <= 1.05 * brute_force_atsp(cost) + 1e-9

    def test_held_karp_against_independent_dp(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 5, 8):
            cost = rng.uniform(1, 10, (n, n))
            c, order = held_karp(cost)
            assert c == pytest.approx(subset_dp_tsp(cost), abs=1e-9)
            assert cycle_cost(cost, order) == pytest.approx(c, abs=1e-9)

    def test_dead_node_is_infeasible(self):
        cost = np.ones((4, 4))
        cost[2, :] = np.inf
        with pytest.raises(Infeasible):
            solve_atsp(cost)

    def test_deterministic(self):
        cost = np.random.default_rng(6).uniform(1, 9, (30, 30))
        assert np.array_equal(solve_atsp(cost, seed=3), solve_atsp(cost, seed=3))

    @given(st.integers(2, 9), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_result_is_a_permutation(self, n, seed):
        cost = np.random.default_rng(seed).uniform(0, 5, (n, n))
        assert sorted(solve_atsp(cost, seed=seed)) == list(range(n))


@pytest.mark.skipif(not HAVE_EXT, reason="compiled extension not built")
class TestBackends:
    def test_dubins_matrix_identical(self):
        rng = np.random.default_rng(7)
        x, y, th = rng.uniform(-5, 5, 40), rng.uniform(-5, 5, 40), rng.uniform(-np.pi, np.pi, 40)
        a = _backend.kernels("python")[0](x, y, th, 0.5)
        b = _backend.kernels("cython")[0](x, y, th, 0.5)
        assert np.allclose(a, b, rtol=0, atol=1e-12)

    def test_atsp_search_identical(self):
        cost = np.random.default_rng(8).uniform(1, 50, (60, 60))
        a = solve_atsp(cost, seed=1, backend="python", budget=30)
        b = solve_atsp(cost, seed=1, backend="cython", budget=30)
        assert np.array_equal(a, b)


class TestTours:
    def test_coupled_cost_is_recomputable(self):
        fld = random_field(np.random.default_rng(9), 12)
        for closed in (True, False):
            t = solve_dtsp_coupled(fld, 6, 0.5, seed=0, closed=closed)
            assert sorted(t.order) == list(range(12))
            assert t.total_cost == pytest.approx(tour_cost(t, 0.5), abs=1e-9)

    def test_coupled_matches_exhaustive_optimum_on_tiny_fields(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            fld = random_field(rng, 4, 5.0)
            g = build_cluster_graph(fld, 4, 0.5)
            opt = brute_force_gtsp(g.cost, g.clusters())
            t = solve_dtsp_coupled(fld, 4, 0.5, seed=0)
            assert t.total_cost == pytest.approx(opt, abs=1e-9)

    def test_dubins_tour_not_shorter_than_euclidean(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            fld = random_field(rng, 8)
            e = euclidean_tour_length(fld, solve_etsp(fld, exact=True))
            assert solve_dtsp_coupled(fld, 10, 0.5).total_cost >= e - 1e-9
            assert solve_decoupled(fld, 0.5).total_cost >= e - 1e-9

    def test_two_target_closed_tour(self):
        fld = Field(np.array([[0.0, 0.0], [3.0, 1.0]]))
        t = solve_dtsp_coupled(fld, 4, 0.5)
        assert len(t.legs()) == 2
        assert t.total_cost == pytest.approx(tour_cost(t, 0.5), abs=1e-12)

    def test_alternating_headings_make_odd_legs_straight(self):
        fld = random_field(np.random.default_rng(12), 7)
        order = list(range(7))
        t = alternating_headings(order, fld, 0.5)
        p = fld.targets[order]
        for a in range(0, 6, 2):
            d = math.dist(p[a], p[a + 1])
            q0, q1 = t.configurations[a], t.configurations[a + 1]
            assert dubins_oracle(q0.as_array(), q1.as_array(), 0.5)[0] == pytest.approx(d, abs=1e-9)

    def test_make_tour_rejects_bad_order(self):
        fld = random_field(np.random.default_rng(13), 4)
        with pytest.raises(ValidationError):
            make_tour(fld, [0, 1, 1, 3], np.zeros(4), 0.5)


def test_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = {**os.environ, "WEEDNAV_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import weednav; print(weednav.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
