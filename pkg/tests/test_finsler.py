import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asym_mms.errors import DuplicatePoint, OutOfDomain
from asym_mms.finsler import (
    FinslerModel,
    axis_grid_space,
    finsler_slopes,
    funk_ball_grid,
    funk_distance,
    funk_theta_bound_check,
    grid_points,
    randers_distance,
    sample_space,
)
from asym_mms.slope import slopes
from asym_mms.space import FiniteAsymmSpace, from_digraph, reversibility, validate

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
STENCIL = [(a, b) for a in range(-2, 3) for b in range(-2, 3)
           if (a, b) != (0, 0) and np.gcd(a, b) == 1]


def funk_ray(x1, x2):
    """Distance from the boundary hit of the ray x1 -> x2 (Hilbert-type form)."""
    v = x2 - x1
    # |x1 + s v| = 1, s > 0
    a, b, c = v @ v, 2 * x1 @ v, x1 @ x1 - 1
    s = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    B = x1 + s * v
    return np.log(np.linalg.norm(x1 - B) / np.linalg.norm(x2 - B))


ball_points = st.tuples(st.floats(0, 0.95), st.floats(0, 2 * np.pi)).map(
    lambda rt: rt[0] * np.array([np.cos(rt[1]), np.sin(rt[1])]))


class TestFunk:
    @pytest.mark.parametrize("r", [0.1 * k for k in range(1, 10)])
    def test_radial_closed_forms(self, r):
        assert funk_distance(np.zeros(2), r * E1) == pytest.approx(-np.log(1 - r), abs=1e-12)
        assert funk_distance(r * E1, np.zeros(2)) == pytest.approx(np.log(1 + r), abs=1e-12)

    def test_examples(self):
        assert funk_distance(np.zeros(2), 0.5 * E1) == pytest.approx(0.693147, abs=1e-6)
        assert funk_distance(0.5 * E1, np.zeros(2)) == pytest.approx(0.405465, abs=1e-6)
        x = np.array([0.3, -0.2])
        assert funk_distance(x, x) == 0.0

    def test_boundary_limits_monotone(self):
        out = [funk_distance(np.zeros(2), (1 - 10.0 ** -k) * E1) for k in range(2, 9)]
        back = [funk_distance((1 - 10.0 ** -k) * E1, np.zeros(2)) for k in range(2, 9)]
        assert all(b > a for a, b in zip(out, out[1:]))
        assert all(b > a for a, b in zip(back, back[1:]))
        assert out[-1] > 18 and abs(back[-1] - np.log(2)) < 1e-7

    @given(ball_points, ball_points)
    @settings(max_examples=200, deadline=None)
    def test_matches_ray_construction(self, x, y):
        if np.linalg.norm(x - y) < 1e-6:
            return
        assert funk_distance(x, y) == pytest.approx(funk_ray(x, y), rel=1e-9, abs=1e-12)

    def test_triangle_on_sample(self, rng):
        X = rng.uniform(-0.6, 0.6, (25, 2))
        X = X[np.linalg.norm(X, axis=1) < 0.95]
        assert validate(FiniteAsymmSpace(FinslerModel.funk(2).pairwise(X))).ok

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            FinslerModel.funk(2).distance(np.zeros(2), 1.2 * E1)


class TestRanders:
    def test_examples(self):
        o = np.zeros(2)
        assert randers_distance(o, E1) == 1.5 and randers_distance(E1, o) == 0.5
        assert randers_distance(o, E2) == 1.0 == randers_distance(E2, o)

    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
    @settings(max_examples=200, deadline=None)
    def test_ratio_at_most_three(self, v):
        x, y = np.array(v[:2]), np.array(v[2:])
        if np.linalg.norm(x - y) < 1e-6:
            return
        assert randers_distance(x, y) <= 3 * randers_distance(y, x) * (1 + 1e-12)

    def test_slopes_closed_form(self):
        m = FinslerModel.randers(2)
        asc, desc = finsler_slopes(m, np.zeros(2), E1)
        assert asc == pytest.approx(2 / 3, abs=1e-12) and desc == pytest.approx(2.0, abs=1e-12)

    def test_grid_slopes_exact(self):
        h = 0.125
        P = grid_points(h, 0, 1, 2)
        sp = axis_grid_space(FinslerModel.randers(2), P, h)
        asc, desc = slopes(sp, P[:, 0])
        interior = (P[:, 0] > 0) & (P[:, 0] < 1)
        assert np.max(np.abs(asc[interior] - 2 / 3)) <= 1e-12
        assert np.max(np.abs(desc[interior] - 2)) <= 1e-12
        assert reversibility(sp) == pytest.approx(3.0, abs=1e-12)


class TestDualNorm:
    @pytest.mark.parametrize("kind", ["funk", "randers", "interp"])
    def test_zero_covector(self, kind):
        m = FinslerModel(kind, 2, 0.5)
        assert finsler_slopes(m, np.array([0.1, 0.2]), np.zeros(2)) == (0.0, 0.0)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=50, deadline=None)
    def test_funk_origin_is_euclidean(self, a, b):
        xi = np.array([a, b])
        asc, desc = finsler_slopes(FinslerModel.funk(2), np.zeros(2), xi)
        assert asc == pytest.approx(np.linalg.norm(xi), abs=1e-10)
        assert desc == pytest.approx(np.linalg.norm(xi), abs=1e-10)

    @given(ball_points, st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=100, deadline=None)
    def test_funk_closed_form(self, x, a, b):
        # the unit F-ball at x is the unit ball translated by -x
        xi = np.array([a, b])
        got = FinslerModel.funk(2).dual_norm(x, xi)
        assert got == pytest.approx(np.linalg.norm(xi) - xi @ x, abs=1e-9)

    @pytest.mark.parametrize("dim", [3, 4])
    def test_funk_higher_dim(self, dim, rng):
        x = rng.uniform(-0.4, 0.4, dim)
        xi = rng.normal(size=dim)
        got = FinslerModel.funk(dim).dual_norm(x, xi)
        assert got == pytest.approx(np.linalg.norm(xi) - xi @ x, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.7])
    def test_interp_dual_is_sup(self, alpha, rng):
        m = FinslerModel.interp(alpha, 2)
        x = np.array([0.2, -0.1])
        xi = np.array([0.7, 0.4])
        th = np.linspace(0, 2 * np.pi, 20001)
        Y = np.stack([np.cos(th), np.sin(th)], 1)
        brute = max(xi @ y / m.norm(x, y) for y in Y)
        assert m.dual_norm(x, xi) == pytest.approx(brute, rel=1e-6)
        assert m.dual_norm(x, xi) >= brute - 1e-12


class TestInterp:
    def test_endpoints(self, rng):
        X = rng.uniform(-0.5, 0.5, (6, 2))
        funk = FinslerModel.funk(2).pairwise(X)
        np.testing.assert_allclose(FinslerModel.interp(1.0, 2).pairwise(X), funk, atol=1e-13)
        sym = FinslerModel.interp(0.0, 2).pairwise(X)
        np.testing.assert_allclose(sym, sym.T, atol=1e-14)

    def test_matches_auxiliary_graph(self):
        # shortest paths of the infinitesimal norm on a fine grid approach d_alpha
        alpha, h = 0.5, 0.02
        m = FinslerModel.interp(alpha, 2)
        P = grid_points(h, -0.3, 0.3, 2)
        idx = {tuple(np.round(p / h).astype(int)): i for i, p in enumerate(P)}
        edges = []
        for i, p in enumerate(P):
            k = np.round(p / h).astype(int)
            for dx, dy in STENCIL:
                j = idx.get((k[0] + dx, k[1] + dy))
                if j is not None:
                    mid = 0.5 * (p + P[j])
                    edges.append((i, j, m.norm(mid, P[j] - p)))
        sp = from_digraph(len(P), edges)
        a = idx[(-10, -5)]
        b = idx[(10, 5)]
        exact = m.distance(P[a], P[b])
        approx = sp.dist[a, b]
        # 16-neighbor stencils overestimate straight segments by under 3%
        assert exact * (1 - 1e-3) <= approx <= exact * 1.03


class TestSampling:
    def test_two_points(self):
        sp = sample_space(FinslerModel.funk(2), [[0, 0], [0.5, 0]], k=1)
        np.testing.assert_allclose(sp.dist, [[0, np.log(2)], [np.log(1.5), 0]], atol=1e-15)

    def test_single_point(self):
        sp = sample_space(FinslerModel.funk(2), [[0.1, 0.1]], k=1)
        assert sp.dist.shape == (1, 1) and sp.dist[0, 0] == 0

    def test_duplicate(self):
        with pytest.raises(DuplicatePoint):
            sample_space(FinslerModel.randers(2), [[0, 0], [0, 0]], k=1)

    def test_neighbors_bidirectional(self, rng):
        sp = sample_space(FinslerModel.funk(2), rng.uniform(-0.5, 0.5, (30, 2)), k=3)
        for i, row in enumerate(sp.neighbors):
            assert all(i in sp.neighbors[j] for j in row)

    def test_randers_axis_grid_lengths(self):
        h = 0.25
        sp = axis_grid_space(FinslerModel.randers(2), grid_points(h, 0, 1, 2), h)
        lengths = set(np.round(sp.csr[2], 12))
        assert lengths == {0.125, 0.25, 0.375}

    def test_funk_ball_grid(self):
        P = funk_ball_grid(0.1, 0.5)
        assert np.all(np.linalg.norm(P, axis=1) <= 0.5 + 1e-12)
        assert len(P) == 81


class TestTheta:
    def test_small_ball(self, rng):
        X = rng.uniform(-0.1, 0.1, (40, 2))
        ok, ratio = funk_theta_bound_check(X, 0.1)
        assert ok and ratio <= 2 * np.exp(0.1) - 1

    def test_single_sample(self):
        assert funk_theta_bound_check([[0.01, 0.0]], 0.5) == (True, 1.0)

    @pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
    def test_radial_pair(self, r):
        rp = 1 - np.exp(-r)
        ratio = np.log(1 / (1 - rp)) / np.log(1 + rp)
        # push the endpoint just inside the forward ball
        ok, got = funk_theta_bound_check([[0, 0], [rp * (1 - 1e-9), 0]], r)
        assert ok and got == pytest.approx(ratio, rel=1e-6) and got < 2 * np.exp(r) - 1
