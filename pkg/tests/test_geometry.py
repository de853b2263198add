import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dubins_oracle, integrate
from weednav import Configuration, InvalidRadius, InvalidStep, dubins_sample, dubins_shortest, path_at, wrap_angle
from weednav.errors import DiscontinuousTour
from weednav.geometry import WORDS, concatenate, nearest_parameter, path_eval, path_eval_smooth

coord = st.floats(-20, 20, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)
radius = st.floats(0.2, 2.0)


def pose(x, y, th):
    return Configuration(x, y, th)


class TestDubinsExamples:
    def test_identity_has_zero_length(self):
        p = dubins_shortest(pose(0, 0, 0), pose(0, 0, 0), 1.0)
        assert p.length == 0.0

    def test_collinear_is_pure_straight(self):
        p = dubins_shortest(pose(0, 0, 0), pose(10, 0, 0), 1.0)
        assert p.word in ("LSL", "RSR")
        assert p.length == pytest.approx(10.0, abs=1e-12)

    def test_half_circle(self):
        p = dubins_shortest(pose(0, 0, 0), pose(0, 2, math.pi), 1.0)
        assert p.word == "LSL"
        assert p.seg_lengths[0] == pytest.approx(math.pi, abs=1e-9)
        assert p.seg_lengths[1] == pytest.approx(0.0, abs=1e-9)
        assert p.seg_lengths[2] == pytest.approx(0.0, abs=1e-9)

    def test_rejects_bad_radius(self):
        with pytest.raises(InvalidRadius):
            dubins_shortest(pose(0, 0, 0), pose(1, 0, 0), 0.0)

    def test_oracle_agreement_on_fixed_pairs(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            q0, q1 = rng.uniform(-5, 5, 3), rng.uniform(-5, 5, 3)
            r = rng.uniform(0.2, 2.0)
            L, word = dubins_oracle(q0, q1, r)
            p = dubins_shortest(pose(*q0), pose(*q1), r)
            assert p.length == pytest.approx(L, abs=1e-6)

    def test_word_replays_to_end(self):
        p = dubins_shortest(pose(1, 2, 0.3), pose(-2, 0.5, 2.9), 0.7)
        assert p.word in WORDS
        x, y, th = integrate((1, 2, 0.3), list(zip(p.word, p.seg_lengths)), 0.7)
        assert math.hypot(x + 2, y - 0.5) < 1e-9
        assert abs(wrap_angle(th - 2.9)) < 1e-9


class TestDubinsProperties:
    @given(coord, coord, angle, coord, coord, angle, radius)
    @settings(max_examples=200, deadline=None)
    def test_euclidean_lower_bound(self, x0, y0, t0, x1, y1, t1, r):
        p = dubins_shortest(pose(x0, y0, t0), pose(x1, y1, t1), r)
        assert p.length >= math.hypot(x1 - x0, y1 - y0) - 1e-9

    @given(coord, coord, angle, coord, coord, angle, radius, st.floats(0.1, 10.0))
    @settings(max_examples=150, deadline=None)
    def test_scaling_invariance(self, x0, y0, t0, x1, y1, t1, r, c):
        a = dubins_shortest(pose(x0, y0, t0), pose(x1, y1, t1), r).length
        b = dubins_shortest(pose(c * x0, c * y0, t0), pose(c * x1, c * y1, t1), c * r).length
        assert b == pytest.approx(c * a, rel=1e-9, abs=1e-9)

    @given(coord, coord, angle, coord, coord, angle, radius)
    @settings(max_examples=100, deadline=None)
    def test_sampled_curvature_bounded(self, x0, y0, t0, x1, y1, t1, r):
        ref = dubins_sample(dubins_shortest(pose(x0, y0, t0), pose(x1, y1, t1), r), 0.05)
        if len(ref) < 2:
            return
        dth = np.abs(wrap_angle(np.diff(ref.samples[:, 2])))
        ds = np.diff(ref.cumulative_arclength)
        assert np.all(dth / ds <= 1.0 / r + 1e-6)

    @given(coord, coord, angle, coord, coord, angle, radius)
    @settings(max_examples=100, deadline=None)
    def test_sample_endpoint_is_exact(self, x0, y0, t0, x1, y1, t1, r):
        q1 = pose(x1, y1, t1)
        ref = dubins_sample(dubins_shortest(pose(x0, y0, t0), q1, r), 0.05)
        assert np.array_equal(ref.samples[-1], q1.as_array())


class TestReferencePath:
    def test_half_circle_sampling_endpoint(self):
        ref = dubins_sample(dubins_shortest(pose(0, 0, 0), pose(0, 2, math.pi), 1.0), 0.05)
        assert np.allclose(ref.samples[-1], [0, 2, math.pi], atol=1e-6)

    def test_bad_step(self):
        p = dubins_shortest(pose(0, 0, 0), pose(1, 0, 0), 1.0)
        with pytest.raises(InvalidStep):
            dubins_sample(p, 0.0)

    def test_path_at_endpoints_and_midpoint(self, straight_5m):
        assert path_at(straight_5m, 0.0).distance_to(pose(0, 0, 0)) < 1e-12
        assert path_at(straight_5m, 1.0).distance_to(pose(5, 0, 0)) < 1e-12
        mid = path_at(straight_5m, 0.5)
        assert mid.x == pytest.approx(2.5) and abs(mid.y) < 1e-12

    def test_heading_interpolation_takes_short_way(self):
        from weednav.geometry import ReferencePath

        ref = ReferencePath(np.array([[0, 0, 3.0], [0.05, 0, -3.0]]), np.array([0.0, 0.05]))
        th = path_at(ref, 0.5).theta
        assert abs(abs(th) - math.pi) < 0.3

    def test_smooth_eval_exact_at_ends(self, curved_segment):
        for s in (0.0, 1.0):
            assert np.array_equal(path_eval_smooth(curved_segment, s)[0], path_eval(curved_segment, s)[0])

    def test_smooth_eval_stays_near_polyline(self, curved_segment):
        # rounding a knot moves the pose by at most blend * |jump in per-interval increment| / 4
        inc = np.diff(curved_segment.samples, axis=0)
        inc[:, 2] = wrap_angle(inc[:, 2])
        bound = 0.002 * np.abs(np.diff(inc, axis=0)).max(axis=0) / 4.0 + 1e-12
        for s in np.linspace(0, 1, 997):
            a = path_eval(curved_segment, s)[0]
            b = path_eval_smooth(curved_segment, s)[0]
            assert np.all(np.abs(a - b) <= bound)
            assert np.abs(a - b).max() < 1e-4

    def test_smooth_eval_derivative(self, curved_segment):
        h = 1e-7
        for s in np.linspace(0.01, 0.99, 41):
            _, d, _ = path_eval_smooth(curved_segment, s)
            fd = (path_eval_smooth(curved_segment, s + h)[0] - path_eval_smooth(curved_segment, s - h)[0]) / (2 * h)
            assert np.allclose(d, fd, rtol=1e-4, atol=1e-3)

    def test_nearest_parameter(self, straight_5m):
        assert nearest_parameter(straight_5m, 2.51, 0.3) == pytest.approx(0.5, abs=0.011)

    def test_concatenate_rejects_gaps(self):
        a = dubins_shortest(pose(0, 0, 0), pose(1, 0, 0), 0.5)
        b = dubins_shortest(pose(1.5, 0, 0), pose(3, 0, 0), 0.5)
        with pytest.raises(DiscontinuousTour):
            concatenate([a, b])
