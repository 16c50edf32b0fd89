"""Model Finsler metrics with closed-form distances.

Three families are provided:

``funk``
    The Funk metric on the open unit ball.  Forward distances from the
    origin blow up at the boundary while backward ones stay below log 2.
``randers``
    ``F(y) = |y| + y_1 / 2`` on R^n, a Minkowski norm with constant
    reversibility 3.
``interp``
    ``F_a(x, y) = F_0(x, y) + a <x, y> / (1 - |x|^2)`` on the unit ball, where
    ``F_0`` is the Klein (hyperbolic) norm.  ``a = 1`` is Funk, ``a = 0``
    is hyperbolic.

The drift term of ``interp`` is exact: ``<x, y> / (1 - |x|^2) = d phi_x(y)``
with ``phi(x) = -log(1 - |x|^2) / 2``.  Integrating it along any curve gives
``phi(end) - phi(start)``, so

    d_a(x1, x2) = d_0(x1, x2) + a (phi(x2) - phi(x1)),
    d_0(x1, x2) = (d_F(x1, x2) + d_F(x2, x1)) / 2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DuplicatePoint, InputError, OutOfDomain
from .space import FiniteAsymmSpace

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FinslerModel:
    """One of the model metrics.

    Parameters
    ----------
    kind : {"funk", "randers", "interp"}
    dim : int
        Ambient dimension, at least 1.
    alpha : float
        Interpolation weight for ``interp``; ignored otherwise.  ``funk`` is
        stored as ``interp`` with ``alpha = 1`` semantics.
    """

    kind: str
    dim: int = 2
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("funk", "randers", "interp"):
            raise InputError(f"unknown model {self.kind!r}")
        if int(self.dim) < 1:
            raise InputError("dimension must be at least 1")
        if self.kind == "funk":
            object.__setattr__(self, "alpha", 1.0)
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def funk(cls, dim=2):
        return cls("funk", dim)

    @classmethod
    def randers(cls, dim=2):
        return cls("randers", dim)

    @classmethod
    def interp(cls, alpha, dim=2):
        return cls("interp", dim, alpha)

    @property
    def bounded_domain(self):
        return self.kind != "randers"

    def check_domain(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InputError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise OutOfDomain("non-finite coordinates")
        if self.bounded_domain and np.any(np.sum(x * x, axis=-1) >= 1.0):
            raise OutOfDomain("point outside the open unit ball")
        return x

    def norm(self, x, y):
        """``F(x, y)`` for a tangent vector ``y`` at ``x``."""
        x = self.check_domain(x)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "randers":
            return float(np.linalg.norm(y) + 0.5 * y[0])
        return _interp_norm(x, y, self.alpha)

    def distance(self, x1, x2):
        x1 = self.check_domain(x1)
        x2 = self.check_domain(x2)
        if self.kind == "randers":
            return randers_distance(x1, x2)
        if self.alpha == 1.0:
            return funk_distance(x1, x2)
        return interp_distance(x1, x2, self.alpha)

    def pairwise(self, X):
        """Distance matrix ``D[i, j] = d(X[i], X[j])``."""
        X = self.check_domain(np.atleast_2d(X))
        if self.kind == "randers":
            diff = X[None, :, :] - X[:, None, :]
            return np.linalg.norm(diff, axis=-1) + 0.5 * diff[..., 0]
        D = _funk_matrix(X)
        if self.alpha == 1.0:
            return D
        phi = _potential(X)
        return 0.5 * (D + D.T) + self.alpha * (phi[None, :] - phi[:, None])

    def dual_norm(self, x, xi, tol=1e-10):
        """``F*(x, xi) = max { xi(y) : F(x, y) <= 1 }``."""
        x = self.check_domain(x)
        xi = np.asarray(xi, dtype=np.float64)
        if not np.any(xi):
            return 0.0
        # positively homogeneous: rescale so tiny covectors cannot underflow
        scale = float(np.max(np.abs(xi)))
        xi = xi / scale
        if self.kind == "randers":
            # closed form for |y| + <b, y>, b = e1 / 2
            b2 = 0.25
            bxi = 0.5 * xi[0]
            return scale * float((np.sqrt((1.0 - b2) * (xi @ xi) + bxi * bxi) - bxi) / (1.0 - b2))
        return scale * _interp_dual_norm(x, xi, self.alpha, tol)


def _interp_norm(x, y, alpha):
    xx = x @ x
    yy = y @ y
    xy = x @ y
    root = np.sqrt(max(yy * (1.0 - xx) + xy * xy, 0.0))
    return float((root + alpha * xy) / (1.0 - xx))


def _potential(X):
    return -0.5 * np.log1p(-np.sum(X * X, axis=-1))


def funk_distance(x1, x2):
    """Funk distance from ``x1`` to ``x2`` in the open unit ball.

    Uses the closed form

        log[(sqrt(D) - <x1, a>) / (sqrt(D) - <x2, a>)],  a = x2 - x1,
        D = |a|^2 - (|x1|^2 |x2|^2 - <x1, x2>^2),

    with the rationalised form of either term when it would cancel.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    for x in (x1, x2):
        if not np.all(np.isfinite(x)) or x @ x >= 1.0:
            raise OutOfDomain("Funk distance needs points in the open unit ball")
    a = x2 - x1
    aa = a @ a
    if aa == 0.0:
        return 0.0
    return float(_funk_terms(x1 @ x1, x2 @ x2, x1 @ a, x2 @ a, aa))


def _funk_terms(n1, n2, p1, p2, aa):
    # D = |a|^2 (1 - |x1|^2) + <x1, a>^2 = |a|^2 (1 - |x2|^2) + <x2, a>^2
    root = np.sqrt(np.maximum(aa * (1.0 - n1) + p1 * p1, 0.0))
    num = np.where(p1 > 0, aa * (1.0 - n1) / (root + np.abs(p1)), root - p1)
    den = np.where(p2 > 0, aa * (1.0 - n2) / (root + np.abs(p2)), root - p2)
    return np.log(num) - np.log(den)


def _funk_matrix(X):
    G = X @ X.T
    nrm = np.diag(G).copy()
    # a = x_j - x_i ; <x_i, a> = G_ij - n_i ; <x_j, a> = n_j - G_ij
    aa = nrm[:, None] + nrm[None, :] - 2.0 * G
    aa = np.maximum(aa, 0.0)
    p1 = G - nrm[:, None]
    p2 = nrm[None, :] - G
    n1 = np.broadcast_to(nrm[:, None], G.shape)
    n2 = np.broadcast_to(nrm[None, :], G.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        D = _funk_terms(n1, n2, p1, p2, aa)
    D[aa == 0.0] = 0.0
    np.fill_diagonal(D, 0.0)
    return D


def randers_distance(x, y):
    """``|y - x| + (y_1 - x_1) / 2``; straight lines are geodesics."""
    a = np.asarray(y, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    return float(np.linalg.norm(a) + 0.5 * a[0])


def interp_distance(x1, x2, alpha):
    """Distance of the interpolated metric ``F_0 + alpha * dphi``."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    sym = 0.5 * (funk_distance(x1, x2) + funk_distance(x2, x1))
    dphi = _potential(x2[None])[0] - _potential(x1[None])[0]
    return float(sym + alpha * dphi)


def _golden_max(g, lo, hi, tol):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    t = 0.5 * (a + b)
    return t, g(t)


def _interp_dual_norm(x, xi, alpha, tol):
    n = x.size
    if n == 1:
        return max(xi[0] * s / _interp_norm(x, np.array([s]), alpha) for s in (1.0, -1.0))
    # the maximiser lies in span(x, xi): components orthogonal to that
    # plane leave xi(y) unchanged and only increase F(x, y)
    r = float(np.linalg.norm(x))
    if r > 0:
        ea = x / r
    else:
        ea = xi / np.linalg.norm(xi)
    rest = xi - (xi @ ea) * ea
    if np.linalg.norm(rest) > 1e-14 * np.linalg.norm(xi):
        eb = rest / np.linalg.norm(rest)
    else:
        k = int(np.argmin(np.abs(ea)))
        eb = np.zeros(n)
        eb[k] = 1.0
        eb -= (eb @ ea) * ea
        eb /= np.linalg.norm(eb)
    x2 = np.array([r, 0.0])
    xi2 = np.array([xi @ ea, xi @ eb])

    def g(theta):
        u = np.array([np.cos(theta), np.sin(theta)])
        return (xi2 @ u) / _interp_norm(x2, u, alpha)

    thetas = np.linspace(0.0, 2.0 * np.pi, 721)[:-1]
    vals = np.array([g(t) for t in thetas])
    k = int(np.argmax(vals))
    step = thetas[1] - thetas[0]
    _, best = _golden_max(g, thetas[k] - step, thetas[k] + step, 1e-9)
    # the objective is smooth at the maximiser, so a theta error of 1e-9
    # moves the value by O(1e-18) relative
    return float(max(best, vals[k]))


def finsler_slopes(model, x, df):
    """Ascending and descending slopes ``(F*(x, df), F*(x, -df))`` of a linear function."""
    df = np.asarray(df, dtype=np.float64)
    return model.dual_norm(x, df), model.dual_norm(x, -df)


def sample_space(model, points, k=4, density=None, point_ids=None):
    """Finite space from a point cloud with exact model distances.

    Neighbors are the ``k`` nearest points under the symmetrised distance,
    made bidirectional.  ``density`` (callable on coordinates) sets the
    measure; it is uniform otherwise.
    """
    X = model.check_domain(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    n = X.shape[0]
    if k < 1:
        raise InputError("k must be at least 1")
    D = model.pairwise(X)
    sym = D + D.T
    off = ~np.eye(n, dtype=bool)
    if np.any(off & (np.linalg.norm(X[:, None] - X[None], axis=-1) == 0.0)):
        raise DuplicatePoint("sample points must be pairwise distinct")
    nbrs = [set() for _ in range(n)]
    for i in range(n):
        order = np.argsort(np.where(off[i], sym[i], np.inf), kind="stable")
        for j in order[: min(k, n - 1)]:
            nbrs[i].add(int(j))
            nbrs[int(j)].add(i)
    m = None if density is None else np.array([float(density(x)) for x in X])
    return FiniteAsymmSpace(D, m, [sorted(s) for s in nbrs], point_ids, coords=X)


def grid_points(h, lo, hi, dim=2):
    """Regular grid ``lo + h * k`` in each coordinate, up to ``hi`` inclusive."""
    ticks = lo + h * np.arange(int(np.floor((hi - lo) / h + 1e-9)) + 1)
    mesh = np.meshgrid(*([ticks] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def axis_grid_space(model, points, h):
    """Space on grid points whose neighbors are the axis steps ``+-h e_i``."""
    X = model.check_domain(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    keys = {tuple(np.round(x / h).astype(np.int64)): i for i, x in enumerate(X)}
    nbrs = []
    for x in X:
        base = np.round(x / h).astype(np.int64)
        row = []
        for ax in range(X.shape[1]):
            for s in (-1, 1):
                key = base.copy()
                key[ax] += s
                j = keys.get(tuple(key))
                if j is not None:
                    row.append(j)
        nbrs.append(row)
    return FiniteAsymmSpace(model.pairwise(X), None, nbrs, None, coords=X)


def funk_ball_grid(h, radius, dim=2):
    """Grid points of spacing ``h`` inside the Euclidean ball of ``radius`` < 1."""
    if not 0 < radius < 1:
        raise OutOfDomain("radius must lie in (0, 1)")
    K = int(np.floor(radius / h + 1e-9))
    P = grid_points(h, -K * h, K * h, dim)
    keep = np.linalg.norm(P, axis=1) <= radius + 1e-12
    return P[keep]


def funk_theta_bound_check(samples, r):
    """Reversibility of samples in the forward ball ``B+_0(r)`` versus ``2 e^r - 1``.

    Returns ``(ok, ratio)``; samples outside the ball are ignored and a
    set with fewer than two points has ratio 1.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    model = FinslerModel.funk(X.shape[1])
    X = model.check_domain(X)
    origin = np.zeros(X.shape[1])
    inside = np.array([funk_distance(origin, x) < r for x in X])
    Y = X[inside]
    bound = 2.0 * np.exp(r) - 1.0
    if Y.shape[0] < 2:
        return True, 1.0
    D = model.pairwise(Y)
    off = ~np.eye(Y.shape[0], dtype=bool) & (D.T > 0)
    ratio = float(max(1.0, (D[off] / D.T[off]).max())) if off.any() else 1.0
    return bool(ratio <= bound), ratio
