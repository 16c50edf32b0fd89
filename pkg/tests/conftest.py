import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from asym_mms.space import FiniteAsymmSpace, from_digraph


@pytest.fixture
def two_point():
    """a -> b costs 1, b -> a costs 2, unit masses."""
    return FiniteAsymmSpace([[0.0, 1.0], [2.0, 0.0]], [1.0, 1.0], [[1], [0]], ["a", "b"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_space(rng, n, dense=False, lo=0.5, hi=2.0, measure=True):
    """Shortest-path space of a random strongly connected digraph."""
    edges = [(i, (i + 1) % n, rng.uniform(lo, hi)) for i in range(n)]
    edges += [((i + 1) % n, i, rng.uniform(lo, hi)) for i in range(n)]
    prob = 1.0 if dense else 0.3
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < prob:
                edges.append((i, j, rng.uniform(lo, hi)))
    m = rng.uniform(0.5, 2.0, n) if measure else None
    return from_digraph(n, edges, measure=m)


@st.composite
def spaces(draw, min_n=2, max_n=8):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_space(np.random.default_rng(seed), n)


@st.composite
def space_and_field(draw, min_n=2, max_n=8):
    sp = draw(spaces(min_n, max_n))
    vals = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=sp.n, max_size=sp.n))
    return sp, np.array(vals)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}")
