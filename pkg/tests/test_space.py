import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asym_mms.errors import EmptySubset, InputError, NegativeWeight
from asym_mms.space import (
    FiniteAsymmSpace,
    ball,
    from_digraph,
    reverse,
    reversibility,
    symmetrize,
    validate,
)

from conftest import random_space, spaces


def brute_shortest_paths(n, edges):
    """All simple paths enumerated explicitly; fine for n <= 5."""
    w = {}
    for u, v, c in edges:
        w[(u, v)] = min(c, w.get((u, v), np.inf))
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for length in range(2, n + 1):
        for seq in itertools.permutations(range(n), length):
            cost = sum(w.get(e, np.inf) for e in zip(seq[:-1], seq[1:]))
            d[seq[0], seq[-1]] = min(d[seq[0], seq[-1]], cost)
    return d


class TestValidate:
    def test_symmetric_pair_ok(self):
        assert validate(FiniteAsymmSpace([[0, 1], [1, 0]])).ok

    def test_asymmetric_pair_ok(self, two_point):
        assert validate(two_point).ok

    def test_triangle_violation_reported(self):
        d = [[0, 1, 5], [1, 0, 1], [1, 1, 0]]
        rep = validate(FiniteAsymmSpace(d))
        assert not rep.ok
        tri = [v for v in rep.violations if v.kind == "triangle"]
        assert [(v.indices, v.magnitude) for v in tri] == [((0, 1, 2), 3.0)]

    @pytest.mark.parametrize("kind,dist,measure", [
        ("negative", [[0, -1], [1, 0]], None),
        ("zero_offdiagonal", [[0, 0], [1, 0]], None),
        ("nonpositive_mass", [[0, 1], [1, 0]], [1, 0]),
    ])
    def test_axiom_violations(self, kind, dist, measure):
        rep = validate(FiniteAsymmSpace(dist, measure))
        assert kind in {v.kind for v in rep.violations}

    def test_report_is_json_safe(self):
        rep = validate(FiniteAsymmSpace([[0, np.inf], [1, 0]])).to_dict()
        assert rep["ok"]

    def test_ragged_input_rejected(self):
        with pytest.raises(InputError):
            FiniteAsymmSpace([[0, 1, 2], [1, 0, 1]])


class TestReversibility:
    def test_symmetric_is_one(self):
        sp = FiniteAsymmSpace([[0, 2, 3], [2, 0, 1], [3, 1, 0]])
        assert reversibility(sp) == 1.0
        assert reversibility(sp, [0, 2]) == 1.0

    def test_two_point(self, two_point):
        assert reversibility(two_point) == 2.0

    def test_one_way_edge_is_infinite(self):
        sp = from_digraph(2, [(0, 1, 1.0)])
        assert reversibility(sp) == np.inf

    def test_empty_subset(self, two_point):
        with pytest.raises(EmptySubset):
            reversibility(two_point, [])

    @given(spaces(3, 7), st.data())
    @settings(max_examples=40, deadline=None)
    def test_monotone_under_inclusion(self, sp, data):
        big = data.draw(st.sets(st.integers(0, sp.n - 1), min_size=1))
        small = data.draw(st.sets(st.sampled_from(sorted(big)), min_size=1))
        assert reversibility(sp, small) <= reversibility(sp, big)

    @given(spaces())
    @settings(max_examples=30, deadline=None)
    def test_symmetrized_is_one(self, sp):
        assert reversibility(symmetrize(sp)) == 1.0


class TestTransforms:
    @given(spaces())
    @settings(max_examples=30, deadline=None)
    def test_reverse_involution(self, sp):
        rr = reverse(reverse(sp))
        np.testing.assert_array_equal(rr.dist, sp.dist)
        assert rr.neighbors == sp.neighbors

    def test_symmetrize_two_point(self, two_point):
        np.testing.assert_array_equal(symmetrize(two_point).dist, [[0, 1.5], [1.5, 0]])

    def test_symmetrize_fixed_point(self):
        d = np.array([[0, 2.0], [2.0, 0]])
        np.testing.assert_array_equal(symmetrize(FiniteAsymmSpace(d)).dist, d)

    def test_symmetrize_inf_absorbs(self):
        sp = from_digraph(2, [(0, 1, 1.0)])
        assert np.all(np.isinf(symmetrize(sp).dist[[0, 1], [1, 0]]))


class TestBall:
    def test_two_point(self, two_point):
        assert ball(two_point, "a", 1.5) == [0, 1]
        assert ball(two_point, "a", 1.5, "backward") == [0]

    def test_infinite_radius(self, two_point):
        assert ball(two_point, 0, np.inf) == [0, 1]

    def test_tiny_radius(self, two_point):
        assert ball(two_point, 1, 1e-9) == [1]

    def test_bad_radius(self, two_point):
        with pytest.raises(InputError):
            ball(two_point, 0, 0.0)


class TestFromDigraph:
    def test_three_cycle(self):
        sp = from_digraph(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])
        assert sp.dist[0, 1] == 1 and sp.dist[1, 0] == 2

    def test_unreachable(self):
        assert np.isinf(from_digraph(2, [(0, 1, 1)]).dist[1, 0])

    def test_complete_symmetric(self):
        sp = from_digraph(4, [(i, j, 1) for i in range(4) for j in range(4) if i != j])
        np.testing.assert_array_equal(sp.dist, 1 - np.eye(4))

    def test_negative_weight(self):
        with pytest.raises(NegativeWeight):
            from_digraph(2, [(0, 1, -1)])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_path_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        edges = [(i, j, rng.uniform(0.1, 3)) for i in range(n) for j in range(n)
                 if i != j and rng.random() < 0.5]
        np.testing.assert_allclose(from_digraph(n, edges).dist, brute_shortest_paths(n, edges),
                                   rtol=1e-14)

    @given(spaces(2, 10))
    @settings(max_examples=40, deadline=None)
    def test_always_valid(self, sp):
        assert validate(sp).ok


def test_mesh_size_and_csr(rng):
    sp = random_space(rng, 6)
    indptr, indices, lengths = sp.csr
    assert indptr[-1] == sum(len(r) for r in sp.neighbors)
    assert sp.mesh_size == pytest.approx(max(sp.dist[i, j] for i, r in enumerate(sp.neighbors) for j in r))
