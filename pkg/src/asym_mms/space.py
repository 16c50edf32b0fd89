"""Finite asymmetric metric measure spaces.

A space is an ``n x n`` distance matrix (``inf`` allowed, rows are the
"from" point), a strictly positive measure, and a directed neighbor
relation.  The neighbor relation is input data: discrete slopes and curve
families are local with respect to it, not with respect to the metric.

Extended reals are IEEE floats.  ``inf + x == inf`` for finite ``x`` gives
the saturating addition the triangle check needs; ``inf - inf`` never
occurs because the checks only add distances.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import EmptySubset, InputError, NegativeWeight

TRIANGLE_TOL = 1e-12


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "indices": list(v.indices), "magnitude": _json_float(v.magnitude)}
                for v in self.violations
            ],
        }


def _json_float(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True, eq=False)
class FiniteAsymmSpace:
    """Finite point set with an asymmetric distance, a measure and neighbors.

    Parameters
    ----------
    dist : (n, n) array_like
        ``dist[i, j]`` is the distance *from* point ``i`` *to* point ``j``.
        ``inf`` is allowed.  The diagonal is forced to zero.
    measure : (n,) array_like, optional
        Point masses, uniform 1 by default.
    neighbors : sequence of sequences of int, optional
        Directed adjacency.  Defaults to every other point at finite
        distance.  An empty list declares the point isolated.
    points : sequence of str, optional
        Point ids, ``"p0", "p1", ...`` by default.
    """

    dist: np.ndarray
    measure: np.ndarray = None
    neighbors: tuple = None
    points: tuple = None
    coords: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError(f"distance matrix must be square, got shape {d.shape}")
        n = d.shape[0]
        np.fill_diagonal(d, 0.0)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

        if self.measure is None:
            m = np.ones(n)
        else:
            m = np.array(self.measure, dtype=np.float64).reshape(-1)
            if m.shape != (n,):
                raise InputError(f"measure has {m.size} entries, expected {n}")
        m.setflags(write=False)
        object.__setattr__(self, "measure", m)

        if self.neighbors is None:
            finite = np.isfinite(d)
            nbrs = tuple(
                tuple(int(j) for j in np.flatnonzero(finite[i]) if j != i) for i in range(n)
            )
        else:
            if len(self.neighbors) != n:
                raise InputError(f"neighbors has {len(self.neighbors)} rows, expected {n}")
            nbrs = tuple(tuple(sorted({int(j) for j in row})) for row in self.neighbors)
            for i, row in enumerate(nbrs):
                for j in row:
                    if not 0 <= j < n:
                        raise InputError(f"neighbor index {j} of point {i} out of range")
        object.__setattr__(self, "neighbors", nbrs)

        if self.points is None:
            pts = tuple(f"p{i}" for i in range(n))
        else:
            pts = tuple(str(p) for p in self.points)
            if len(pts) != n:
                raise InputError(f"{len(pts)} point ids for {n} points")
        object.__setattr__(self, "points", pts)

        if self.coords is not None:
            c = np.array(self.coords, dtype=np.float64)
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.dist.shape[0]

    def __len__(self):
        return self.n

    @cached_property
    def csr(self):
        """``(indptr, indices, lengths)`` of the neighbor relation."""
        counts = [len(row) for row in self.neighbors]
        indptr = np.zeros(self.n + 1, dtype=np.intp)
        np.cumsum(counts, out=indptr[1:])
        indices = np.fromiter(
            (j for row in self.neighbors for j in row), dtype=np.intp, count=indptr[-1]
        )
        tails = np.repeat(np.arange(self.n, dtype=np.intp), counts)
        lengths = np.ascontiguousarray(self.dist[tails, indices])
        return indptr, indices, lengths

    @cached_property
    def edges(self):
        """``(tails, heads, lengths)`` arrays of all directed neighbor edges."""
        indptr, indices, lengths = self.csr
        tails = np.repeat(np.arange(self.n, dtype=np.intp), np.diff(indptr))
        return tails, indices, lengths

    @cached_property
    def mesh_size(self):
        """Largest neighbor-edge length (0 if there are no edges)."""
        lengths = self.csr[2]
        return float(lengths.max()) if lengths.size else 0.0

    def index(self, point):
        """Index of a point given its id or its index."""
        if isinstance(point, (int, np.integer)):
            return int(point)
        return self.points.index(str(point))

    def with_measure(self, measure):
        return FiniteAsymmSpace(self.dist, measure, self.neighbors, self.points, self.coords)


def validate(space):
    """Check the asymmetric-metric axioms; violations are data, not errors."""
    d = space.dist
    n = space.n
    out = []
    for i, j in zip(*np.nonzero(d < 0)):
        out.append(Violation("negative", (int(i), int(j)), float(d[i, j])))
    off = ~np.eye(n, dtype=bool)
    for i, j in zip(*np.nonzero((d == 0) & off)):
        out.append(Violation("zero_offdiagonal", (int(i), int(j)), 0.0))
    for i, j in zip(*np.nonzero(np.isnan(d))):
        out.append(Violation("nan", (int(i), int(j)), float("nan")))
    for j in range(n):
        via = d[:, j, None] + d[None, j, :]
        finite_via = np.isfinite(via)
        with np.errstate(invalid="ignore"):
            excess = np.where(finite_via, d - via, -np.inf)
        bad = excess > TRIANGLE_TOL
        for i, k in zip(*np.nonzero(bad)):
            if i == j or j == k or i == k:
                continue
            out.append(Violation("triangle", (int(i), int(j), int(k)), float(excess[i, k])))
    for i in np.flatnonzero(~(space.measure > 0)):
        out.append(Violation("nonpositive_mass", (int(i),), float(space.measure[i])))
    for i, row in enumerate(space.neighbors):
        for j in row:
            if j == i:
                out.append(Violation("self_neighbor", (i,), 0.0))
            elif not np.isfinite(d[i, j]):
                out.append(Violation("infinite_neighbor", (i, j), float("inf")))
    return ValidationReport(tuple(out))


def reversibility(space, subset=None):
    """``sup d(x, y) / d(y, x)`` over ordered pairs of distinct points in ``subset``.

    Pairs with both distances infinite are skipped; a finite denominator with
    an infinite numerator gives ``inf``.  The result is at least 1.
    """
    idx = np.arange(space.n) if subset is None else np.array(sorted(set(subset)), dtype=np.intp)
    if idx.size == 0:
        raise EmptySubset("reversibility needs a nonempty subset")
    d = space.dist[np.ix_(idx, idx)]
    dt = d.T
    off = ~np.eye(idx.size, dtype=bool)
    both_inf = np.isinf(d) & np.isinf(dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d / dt
    ratio = np.where(np.isinf(d) & np.isfinite(dt), np.inf, ratio)
    ratio = np.where(dt == 0, np.inf, ratio)
    mask = off & ~both_inf
    if not mask.any():
        return 1.0
    return float(max(1.0, ratio[mask].max()))


def reverse(space):
    """Space with ``d_rev(x, y) = d(y, x)`` and the neighbor relation reversed."""
    rev = [[] for _ in range(space.n)]
    for i, row in enumerate(space.neighbors):
        for j in row:
            rev[j].append(i)
    return FiniteAsymmSpace(space.dist.T, space.measure, rev, space.points, space.coords)


def symmetrize(space):
    """Arithmetic-mean symmetrization; ``inf`` absorbs."""
    d = 0.5 * (space.dist + space.dist.T)
    nb = [set(row) for row in space.neighbors]
    for i, row in enumerate(space.neighbors):
        for j in row:
            nb[j].add(i)
    nbrs = [sorted(j for j in row if np.isfinite(d[i, j])) for i, row in enumerate(nb)]
    return FiniteAsymmSpace(d, space.measure, nbrs, space.points, space.coords)


def ball(space, center, radius, direction="forward"):
    """Open forward ``{y : d(x, y) < r}`` or backward ``{y : d(y, x) < r}`` ball."""
    x = space.index(center)
    if not radius > 0:
        raise InputError("radius must be positive")
    if direction == "forward":
        row = space.dist[x]
    elif direction == "backward":
        row = space.dist[:, x]
    else:
        raise InputError(f"unknown direction {direction!r}")
    members = set(np.flatnonzero(row < radius).tolist())
    members.add(x)
    return sorted(members)


def from_digraph(n, edges: Iterable[Sequence], measure=None, points=None):
    """Shortest-path space of a weighted digraph.

    ``edges`` holds ``(tail, head, weight)`` triples; parallel edges keep
    the smallest weight and self-loops are ignored.  Neighbors are the edge
    heads of each tail.
    """
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    nbrs = [set() for _ in range(n)]
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not w > 0:
            raise NegativeWeight(f"edge {u}->{v} has non-positive weight {w}")
        if u == v:
            continue
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge {u}->{v} out of range for {n} points")
        d[u, v] = min(d[u, v], w)
        nbrs[u].add(v)
    d = kernels.floyd_warshall(d)
    return FiniteAsymmSpace(d, measure, [sorted(s) for s in nbrs], points)
