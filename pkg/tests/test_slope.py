import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asym_mms.errors import BudgetExceeded, InputError, InvalidExponent, NegativeGradient
from asym_mms.space import FiniteAsymmSpace, from_digraph
from asym_mms.slope import (
    CurveFamily,
    DiscretePath,
    ScalarField,
    ascending_slope,
    cheeger_energy,
    descending_slope,
    forward_lip_constant,
    generate_curves,
    local_lip,
    minimal_weak_upper_gradient,
    path_integral,
    slope_identities_check,
    slopes,
)

from conftest import random_space, space_and_field, spaces
from oracles import lattice_energy


def brute_slopes(space, f):
    asc = np.zeros(space.n)
    desc = np.zeros(space.n)
    for x, row in enumerate(space.neighbors):
        for y in row:
            asc[x] = max(asc[x], (f[y] - f[x]) / space.dist[x, y])
            desc[x] = max(desc[x], (f[x] - f[y]) / space.dist[x, y])
    return asc, desc


class TestSlopes:
    def test_two_point(self, two_point):
        f = [0.0, 1.0]
        np.testing.assert_array_equal(ascending_slope(two_point, f), [1.0, 0.0])
        np.testing.assert_array_equal(descending_slope(two_point, f), [0.0, 0.5])
        np.testing.assert_array_equal(local_lip(two_point, f), [1.0, 0.5])

    def test_constant(self, rng):
        sp = random_space(rng, 6)
        asc, desc = slopes(sp, np.full(6, 3.0))
        assert not asc.any() and not desc.any()

    @given(space_and_field())
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force(self, sf):
        sp, f = sf
        asc, desc = slopes(sp, f)
        basc, bdesc = brute_slopes(sp, f)
        np.testing.assert_array_equal(asc, basc)
        np.testing.assert_array_equal(desc, bdesc)

    @given(space_and_field(), st.floats(0, 10))
    @settings(max_examples=40, deadline=None)
    def test_positive_homogeneity(self, sf, lam):
        sp, f = sf
        np.testing.assert_allclose(slopes(sp, lam * f)[0], lam * slopes(sp, f)[0], rtol=1e-12, atol=1e-300)

    @given(space_and_field())
    @settings(max_examples=40, deadline=None)
    def test_chain_rule_inequality(self, sf):
        sp, f = sf
        # phi = 0.5 * tanh is non-decreasing and 0.5-Lipschitz
        lhs = slopes(sp, 0.5 * np.tanh(f))[0]
        assert np.all(lhs <= 0.5 * slopes(sp, f)[0] + 1e-14)

    def test_field_rejects_nan(self):
        with pytest.raises(InputError):
            ScalarField([1.0, np.nan])

    def test_field_is_read_only(self):
        g = ScalarField([1.0, 2.0])
        with pytest.raises(ValueError):
            np.asarray(g)[0] = 5


class TestLipschitz:
    def test_two_point(self, two_point):
        assert forward_lip_constant(two_point, [0, 1]) == 1.0

    def test_constant(self, two_point):
        assert forward_lip_constant(two_point, [2, 2]) == 0.0

    @given(spaces())
    @settings(max_examples=30, deadline=None)
    def test_distance_function(self, sp):
        assert forward_lip_constant(sp, sp.dist[0]) <= 1.0 + 1e-12


class TestCheeger:
    def test_two_point(self, two_point):
        assert cheeger_energy(two_point, [0, 1], 2) == 0.5

    def test_constant(self, two_point):
        assert cheeger_energy(two_point, [1, 1], 3) == 0.0

    def test_invalid_exponent(self, two_point):
        with pytest.raises(InvalidExponent):
            cheeger_energy(two_point, [0, 1], 1.0)

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_homogeneity(self, q, rng):
        sp = random_space(rng, 8)
        f = rng.normal(size=8)
        assert cheeger_energy(sp, 2 * f, q) == pytest.approx(2 ** q * cheeger_energy(sp, f, q), rel=1e-13)

    def test_directions(self, two_point):
        f = [0, 1]
        assert cheeger_energy(two_point, f, 2, "backward") == 0.125
        assert cheeger_energy(two_point, f, 2, "absolute") == 0.625


class TestCurves:
    def test_path_integral(self, two_point):
        p = DiscretePath.on(two_point, [0, 1])
        assert path_integral(two_point, [2, 4], p) == 3.0
        assert path_integral(two_point, [1, 1], p) == p.forward_length
        assert path_integral(two_point, [0, 0], p) == 0.0
        with pytest.raises(NegativeGradient):
            path_integral(two_point, [-1, 0], p)

    def test_not_a_neighbor(self):
        sp = from_digraph(3, [(0, 1, 1), (1, 2, 1)])
        with pytest.raises(InputError):
            DiscretePath.on(sp, [0, 2])

    def test_edges_two_point(self, two_point):
        assert len(generate_curves(two_point, "edges")) == 2

    def test_paths_three_cycle(self):
        sp = from_digraph(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (1, 0, 1), (2, 1, 1), (0, 2, 1)])
        fam = generate_curves(sp, "paths", max_edges=2)
        steps = sorted(p.steps for p in fam)
        assert steps.count(1) == 6 and steps.count(2) == 6

    def test_geodesics_path_graph(self):
        n = 5
        edges = [(i, i + 1, 1.0) for i in range(n - 1)] + [(i + 1, i, 2.0) for i in range(n - 1)]
        fam = generate_curves(from_digraph(n, edges), "geodesics")
        for p in fam:
            d = np.diff(p.vertices)
            assert np.all(d == d[0])  # monotone segments
        assert len(fam) == n * (n - 1)

    def test_budget(self, rng):
        sp = random_space(rng, 8, dense=True)
        with pytest.raises(BudgetExceeded):
            generate_curves(sp, "paths", max_edges=6, cap=100)

    def test_p_energy(self, two_point):
        p = DiscretePath.on(two_point, [0, 1, 0])
        assert p.forward_length == 3.0
        assert p.p_energy(2) == pytest.approx((1 + 4) / 2)


class TestMinimalGradient:
    def test_constant(self, two_point):
        fam = generate_curves(two_point, "edges")
        G = minimal_weak_upper_gradient(two_point, [1.0, 1.0], fam)
        np.testing.assert_array_equal(G, [0.0, 0.0])

    def test_single_edge(self, two_point):
        fam = CurveFamily((DiscretePath.on(two_point, [0, 1]),))
        G = minimal_weak_upper_gradient(two_point, [0.0, 1.0], fam, q=2)
        np.testing.assert_allclose(G, [1.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_feasible_and_kkt(self, q, rng):
        sp = random_space(rng, 7)
        f = rng.normal(size=7)
        fam = generate_curves(sp, "paths", max_edges=3)
        G = minimal_weak_upper_gradient(sp, f, fam, q)
        for p in fam:
            rhs = f[p.vertices[-1]] - f[p.vertices[0]]
            assert rhs <= path_integral(sp, G, p) + 1e-9
        assert G.info["kkt_residual"] <= 1e-8

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_lattice(self, seed):
        rng = np.random.default_rng(seed)
        W = rng.uniform(0.5, 2, (3, 3))
        base = from_digraph(3, [(i, j, W[i, j]) for i in range(3) for j in range(3) if i != j])
        sp = FiniteAsymmSpace(base.dist)
        f = rng.uniform(0, 1, 3)
        fam = generate_curves(sp, "paths", max_edges=2)
        G = minimal_weak_upper_gradient(sp, f, fam, 2)
        lat = lattice_energy(sp, f, fam, 2)
        e = G.info["objective"] / 2
        assert e <= lat + 1e-12
        assert lat - e <= 1e-3

    def test_larger_family_never_decreases(self, rng):
        sp = random_space(rng, 6, dense=True)
        f = rng.normal(size=6)
        vals = [minimal_weak_upper_gradient(sp, f, generate_curves(sp, "paths", max_edges=k)).info["objective"]
                for k in (1, 2, 3)]
        assert vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12

    def test_edge_constraint_bounds_slope(self, rng):
        # (G_x + G_y) / 2 >= slope along x -> y, so max(G_x, G_y) >= |D+f|(x)
        sp = random_space(rng, 8)
        f = rng.normal(size=8)
        G = np.asarray(minimal_weak_upper_gradient(sp, f, generate_curves(sp, "edges")))
        for x, row in enumerate(sp.neighbors):
            ratios = [(f[y] - f[x]) / sp.dist[x, y] for y in row]
            y = row[int(np.argmax(ratios))]
            assert max(ratios) <= max(G[x], G[y]) + 1e-9


class TestIdentities:
    def test_two_point_example(self, two_point):
        assert slope_identities_check(two_point, [-1.0, 2.0]).ok

    @given(space_and_field())
    @settings(max_examples=60, deadline=None)
    def test_random(self, sf):
        sp, f = sf
        g = np.roll(f, 1)
        rep = slope_identities_check(sp, f, pairs=[g])
        assert rep.ok, rep.checks

    def test_nonnegative_degenerates(self, rng):
        sp = random_space(rng, 6)
        f = np.abs(rng.normal(size=6))
        rep = slope_identities_check(sp, f)
        assert rep.ok and not rep.flags
        np.testing.assert_array_equal(slopes(sp, f)[0], slopes(sp, np.maximum(f, 0))[0])

    def test_nonpositive(self, rng):
        sp = random_space(rng, 6)
        f = -np.abs(rng.normal(size=6))
        np.testing.assert_array_equal(slopes(sp, f)[0], slopes(sp, np.minimum(f, 0))[0])

    def test_strict_split_flagged(self):
        # x has value -1 and two neighbors: +1 at length 10, -0.5 at length 0.1
        sp = FiniteAsymmSpace([[0, 10, 0.1], [10, 0, 10], [0.1, 10, 0]], neighbors=[[1, 2], [0], [0]])
        rep = slope_identities_check(sp, [-1.0, 1.0, -0.5])
        assert rep.ok
        assert [fl["point"] for fl in rep.flags] == [0]
