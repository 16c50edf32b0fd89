"""Discrete slopes, Cheeger energies and minimal weak upper gradients.

Slopes are local with respect to the space's neighbor relation:

    |D+f|(x) = max_{y ~ x} [f(y) - f(x)]+ / d(x, y)
    |D-f|(x) = max_{y ~ x} [f(x) - f(y)]+ / d(x, y)

and an isolated point has slope 0.

The minimal weak upper gradient over a finite curve family solves

    minimize  sum_x G(x)^q m(x)
    s.t.      f(end) - f(start) <= int_gamma G   for every curve,  G >= 0,

with the trapezoidal rule for curve integrals.  The integral of a
concatenation is the sum of the pieces, so the constraint of a curve is
implied by those of its edges whenever the edges are members of the
family.  Only the remaining (non-implied) constraints enter the solver.
"""

from collections import deque
from dataclasses import dataclass, field
import heapq

import numpy as np

from . import kernels
from .errors import BudgetExceeded, InputError, InvalidExponent, NegativeGradient, SolverStall
from .numerics import minimize_separable
from .report import CheckReport

DEFAULT_CURVE_CAP = 200_000


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values indexed by the points of a space.

    ``info`` carries solver diagnostics for fields produced by an
    optimization; it plays no part in arithmetic.
    """

    values: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise InputError("scalar fields must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


def _values(space, f):
    v = np.asarray(f.values if isinstance(f, ScalarField) else f, dtype=np.float64).reshape(-1)
    if v.size != space.n:
        raise InputError(f"field has {v.size} values, space has {space.n} points")
    if not np.all(np.isfinite(v)):
        raise InputError("scalar fields must be finite")
    return np.ascontiguousarray(v)


def _check_q(q):
    if not q > 1:
        raise InvalidExponent(f"exponent must exceed 1, got {q}")


def slopes(space, f):
    """``(ascending, descending)`` slope arrays."""
    indptr, indices, lengths = space.csr
    return kernels.neighbor_slopes(indptr, indices, lengths, _values(space, f))


def ascending_slope(space, f):
    return ScalarField(slopes(space, f)[0])


def descending_slope(space, f):
    return ScalarField(slopes(space, f)[1])


def local_lip(space, f):
    asc, desc = slopes(space, f)
    return ScalarField(np.maximum(asc, desc))


def forward_lip_constant(space, f):
    """``max [f(y) - f(x)] / d(x, y)`` over finite-distance pairs, at least 0."""
    v = _values(space, f)
    d = space.dist
    mask = np.isfinite(d) & (d > 0)
    if not mask.any():
        return 0.0
    ratio = (v[None, :] - v[:, None])[mask] / d[mask]
    return float(max(0.0, ratio.max()))


def cheeger_energy(space, f, q, direction="forward"):
    """``(1/q) sum slope^q m`` with the ascending, descending or full slope."""
    _check_q(q)
    asc, desc = slopes(space, f)
    if direction == "forward":
        s = asc
    elif direction == "backward":
        s = desc
    elif direction == "absolute":
        s = np.maximum(asc, desc)
    else:
        raise InputError(f"unknown direction {direction!r}")
    return float(np.sum(s ** q * space.measure) / q)


@dataclass(frozen=True)
class DiscretePath:
    """Neighbor path ``v_0 -> v_1 -> ... -> v_N`` with ``N >= 1``."""

    vertices: tuple
    lengths: tuple

    @classmethod
    def on(cls, space, vertices):
        vs = tuple(int(v) for v in vertices)
        if len(vs) < 2:
            raise InputError("a path needs at least one edge")
        lens = []
        for a, b in zip(vs[:-1], vs[1:]):
            if b not in space.neighbors[a]:
                raise InputError(f"{b} is not a neighbor of {a}")
            lens.append(float(space.dist[a, b]))
        if not np.all(np.isfinite(lens)):
            raise InputError("path has an edge of infinite length")
        return cls(vs, tuple(lens))

    @property
    def steps(self):
        return len(self.lengths)

    @property
    def forward_length(self):
        return float(sum(self.lengths))

    def p_energy(self, p):
        """Constant-time-step energy ``sum d_i^p / N^(p-1)`` on ``[0, 1]``."""
        return float(sum(l ** p for l in self.lengths) / self.steps ** (p - 1.0))

    def edges(self):
        return zip(self.vertices[:-1], self.vertices[1:])


@dataclass(frozen=True)
class CurveFamily:
    paths: tuple
    policy: str = "custom"

    def __post_init__(self):
        if not self.paths:
            raise InputError("a curve family must be nonempty")

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def path_integral(space, G, path):
    """Trapezoidal ``sum (G(v_i) + G(v_{i+1})) / 2 * d(v_i, v_{i+1})``."""
    g = _values(space, G)
    if np.any(g < 0):
        raise NegativeGradient("upper gradients must be nonnegative")
    v = np.asarray(path.vertices)
    return float(np.sum(0.5 * (g[v[:-1]] + g[v[1:]]) * np.asarray(path.lengths)))


def _subpath_closure(space, seqs, cap):
    seen = set()
    out = []
    for s in seqs:
        for i in range(len(s) - 1):
            for j in range(i + 2, len(s) + 1):
                sub = s[i:j]
                if sub not in seen:
                    seen.add(sub)
                    out.append(sub)
                    if len(out) > cap:
                        raise BudgetExceeded(f"curve family exceeds {cap} paths")
    return out


def _shortest_path_tree(space, src):
    indptr, indices, lengths = space.csr
    dist = np.full(space.n, np.inf)
    pred = np.full(space.n, -1, dtype=np.intp)
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            alt = du + lengths[k]
            if alt < dist[v] - 1e-15 * max(1.0, alt):
                dist[v] = alt
                pred[v] = u
                heapq.heappush(heap, (alt, v))
    return dist, pred


def generate_curves(space, policy="edges", max_edges=None, cap=DEFAULT_CURVE_CAP):
    """Build a subpath-closed curve family.

    Parameters
    ----------
    policy : {"edges", "paths", "geodesics"}
        ``edges`` gives the single-edge paths; ``paths`` all simple
        neighbor paths with at most ``max_edges`` edges; ``geodesics`` one
        shortest neighbor path per ordered reachable pair (Dijkstra with
        lowest-index tie breaking), closed under taking subpaths.
    cap : int
        Maximum family size; ``BudgetExceeded`` beyond it.
    """
    if policy == "edges":
        seqs = [(i, j) for i, row in enumerate(space.neighbors) for j in row]
        if len(seqs) > cap:
            raise BudgetExceeded(f"curve family exceeds {cap} paths")
    elif policy == "paths":
        if max_edges is None or max_edges < 1:
            raise InputError("policy 'paths' needs max_edges >= 1")
        seqs = []
        stack = deque(((i,) for i in range(space.n)))
        while stack:
            s = stack.popleft()
            for j in space.neighbors[s[-1]]:
                if j in s:
                    continue
                t = s + (j,)
                seqs.append(t)
                if len(seqs) > cap:
                    raise BudgetExceeded(f"curve family exceeds {cap} paths")
                if len(t) - 1 < max_edges:
                    stack.append(t)
        seqs.sort(key=lambda s: (len(s), s))
    elif policy == "geodesics":
        seqs = []
        for src in range(space.n):
            dist, pred = _shortest_path_tree(space, src)
            for dst in range(space.n):
                if dst == src or not np.isfinite(dist[dst]):
                    continue
                path = [dst]
                while path[-1] != src:
                    path.append(int(pred[path[-1]]))
                seqs.append(tuple(reversed(path)))
        seqs = _subpath_closure(space, seqs, cap)
    else:
        raise InputError(f"unknown curve policy {policy!r}")
    if not seqs:
        raise InputError("the neighbor relation has no edges")
    return CurveFamily(tuple(DiscretePath.on(space, s) for s in seqs), policy)


def _curve_constraints(space, f, curves):
    """Rows ``(coef, rhs)`` meaning ``coef . G >= rhs``, implied ones dropped."""
    edge_set = {p.vertices for p in curves if p.steps == 1}
    rows = {}
    for path in curves:
        if path.steps > 1 and all(e in edge_set for e in path.edges()):
            continue
        rhs = f[path.vertices[-1]] - f[path.vertices[0]]
        if rhs <= 0:
            continue  # G >= 0 already implies it
        coef = {}
        for (a, b), l in zip(path.edges(), path.lengths):
            coef[a] = coef.get(a, 0.0) + 0.5 * l
            coef[b] = coef.get(b, 0.0) + 0.5 * l
        key = tuple(sorted(coef.items()))
        rows[key] = max(rows.get(key, -np.inf), rhs)
    return rows


def minimal_weak_upper_gradient(space, f, curves, q=2.0, tol=1e-9):
    """Minimal nonnegative ``G`` satisfying the upper-gradient inequality on ``curves``.

    Solved exactly (to rounding) by an active-set Newton method on the
    reduced constraint set.  The returned field's ``info`` records the KKT
    residual, the objective ``sum G^q m`` and the iteration count.
    """
    _check_q(q)
    v = _values(space, f)
    m = space.measure
    n = space.n
    rows = _curve_constraints(space, v, curves)
    if not rows:
        return ScalarField(np.zeros(n), {"kkt_residual": 0.0, "objective": 0.0, "iterations": 0,
                                         "constraints": 0})
    k = len(rows)
    A = np.zeros((k + n, n))
    b = np.zeros(k + n)
    for r, (key, rhs) in enumerate(rows.items()):
        for j, c in key:
            A[r, j] = -c
        b[r] = -rhs
    A[k:, :] = -np.eye(n)
    # a large constant gradient is feasible since every coefficient sum is positive
    need = max(-b[r] / -A[r].sum() for r in range(k))
    G0 = np.full(n, 2.0 * need + 1.0)

    def value(G):
        return float(np.sum(m * np.abs(G) ** q))

    def grad_hess(G):
        Gp = np.maximum(G, 0.0)
        g = q * m * Gp ** (q - 1.0)
        with np.errstate(divide="ignore"):
            h = q * (q - 1.0) * m * Gp ** (q - 2.0)
        h = np.where(np.isfinite(h), h, 1e12 * q * m)
        return g, np.minimum(h, 1e12 * q * m)

    res = minimize_separable(value, grad_hess, A, b, G0, quadratic=(q == 2.0))
    G = np.maximum(res.z, 0.0)
    scale = 1.0 + float(np.abs(grad_hess(G)[0]).max())
    if res.kkt_residual > tol * scale or res.feasibility > tol * scale:
        raise SolverStall(
            f"upper-gradient program ended with KKT residual {res.kkt_residual:.3e}",
            residual=res.kkt_residual, iterations=res.iterations,
        )
    return ScalarField(G, {
        "kkt_residual": res.kkt_residual,
        "feasibility": res.feasibility,
        "objective": value(G),
        "iterations": res.iterations,
        "constraints": k,
        "multipliers": res.multipliers[:k],
    })


def slope_identities_check(space, f, pairs=(), tol=1e-12):
    """Check the sign-reflection, positive/negative split and subadditivity rules.

    ``|D-f| = |D+(-f)|`` holds exactly.  The split
    ``|D+f| = |D+f^+| + |D+(-f^-)|`` holds exactly wherever ``f(x) >= 0``
    or ``x`` has a single neighbor; at other points with ``f(x) < 0`` the
    two maxima may be attained at different neighbors, and only ``<=``
    survives discretization.  Those points are reported as flags.
    ``pairs`` holds extra fields ``g`` for ``|D+(f+g)| <= |D+f| + |D+g|``.
    """
    v = _values(space, f)
    asc, desc = slopes(space, v)
    rep = CheckReport("slope_identities")
    refl = slopes(space, -v)[0]
    err = float(np.abs(desc - refl).max(initial=0.0))
    rep.add("reflection", err <= tol, max_error=err)

    pos = slopes(space, np.maximum(v, 0.0))[0]
    neg = slopes(space, np.minimum(v, 0.0))[0]
    split = pos + neg
    degree = np.diff(space.csr[0])
    exact_pts = (v >= 0) | (degree <= 1)
    err_exact = float(np.abs(asc - split)[exact_pts].max(initial=0.0))
    over = float(np.max(asc - split, initial=0.0))
    rep.add("split_exact", err_exact <= tol, max_error=err_exact)
    rep.add("split_inequality", over <= tol, max_excess=over)
    for i in np.flatnonzero(~exact_pts & (split - asc > tol)):
        rep.flags.append({"point": int(i), "kind": "split_strict", "gap": float(split[i] - asc[i])})

    worst = 0.0
    for g in pairs:
        gv = _values(space, g)
        lhs = slopes(space, v + gv)[0]
        rhs = asc + slopes(space, gv)[0]
        worst = max(worst, float(np.max(lhs - rhs, initial=0.0)))
    rep.add("subadditivity", worst <= tol, max_excess=worst, pairs=len(pairs))
    return rep
