"""Hopf-Lax semigroup on finite asymmetric spaces.

    Q_t f(y) = min_x  f(x) + d(x, y)^p / (p t^(p-1))

On a finite space every infimum is a minimum, so the minimizing sets and
the extreme distances

    dminus(y, t) = min d(x, y),  dplus(y, t) = max d(x, y)   over minimizers x

are computed exactly, up to a tie tolerance of 1e-12 on the objective.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError, InvalidExponent
from .report import CheckReport
from .slope import ScalarField, _values, forward_lip_constant, slopes

TIE_TOL = 1e-12


def _conj(p):
    return p / (p - 1.0)


def _check(t, p):
    if not p > 1:
        raise InvalidExponent(f"p must exceed 1, got {p}")
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")


@dataclass(frozen=True)
class HopfLaxProfile:
    t: float
    p: float
    q_values: ScalarField
    argmins: tuple
    d_minus: np.ndarray
    d_plus: np.ndarray

    @property
    def values(self):
        return np.asarray(self.q_values)


def _objective(dist, f, t, p):
    finite = np.isfinite(dist)
    dd = np.where(finite, dist, 0.0)
    phi = f[:, None] + dd ** p / (p * t ** (p - 1.0))
    return np.where(finite, phi, np.inf)


def hopf_lax(space, f, t, p=2.0, tie_tol=TIE_TOL):
    """Evaluate ``Q_t f`` with minimizer sets and the extreme distances."""
    _check(t, p)
    v = _values(space, f)
    q, dm, dp, _ = kernels.hopf_lax(np.ascontiguousarray(space.dist), v, float(t), float(p), tie_tol)
    phi = _objective(space.dist, v, t, p)
    ties = phi <= q[None, :] + tie_tol
    argmins = tuple(tuple(int(i) for i in np.flatnonzero(ties[:, y])) for y in range(space.n))
    return HopfLaxProfile(float(t), float(p), ScalarField(q), argmins, np.asarray(dm), np.asarray(dp))


def backward_hopf_lax(space, f, t, p=2.0):
    """``min_x f(x) + d(y, x)^p / (p t^(p-1))``, the transform on the reverse metric."""
    _check(t, p)
    v = _values(space, f)
    return _objective(space.dist.T, v, t, p).min(axis=0)


def d_monotonicity_check(space, f, p, times):
    """``dplus(y, s) <= dminus(y, t)`` for every point and grid pair ``s < t``."""
    times = np.asarray(times, dtype=np.float64)
    if times.size and (np.any(times <= 0) or np.any(np.diff(times) <= 0)):
        raise InputError("times must be positive and strictly increasing")
    profiles = [hopf_lax(space, f, t, p) for t in times]
    rep = CheckReport("d_monotonicity")
    worst = 0.0
    for a in range(len(profiles)):
        for b in range(a + 1, len(profiles)):
            excess = profiles[a].d_plus - profiles[b].d_minus
            worst = max(worst, float(excess.max(initial=0.0)))
            for y in np.flatnonzero(excess > 0):
                rep.failures.append({"point": int(y), "s": float(times[a]), "t": float(times[b]),
                                     "excess": float(excess[y])})
    rep.add("monotone", not rep.failures, max_excess=worst, pairs=len(times) * (len(times) - 1) // 2)
    rep.data["d_minus"] = [pr.d_minus for pr in profiles]
    rep.data["d_plus"] = [pr.d_plus for pr in profiles]
    return rep


def time_derivative_check(space, f, p, t, h=None, rtol=1e-3):
    """One-sided finite differences of ``t -> Q_t f`` against ``-(1/q)(d/t)^p``.

    Points whose minimizer set at ``t +- h`` is not contained in the set
    at ``t`` have a switching time inside the difference window; they are
    flagged and excluded from the comparison.
    """
    _check(t, p)
    if h is None:
        h = 1e-5 * t
    if not 0 < h < t:
        raise InputError("need 0 < h < t")
    q = _conj(p)
    mid = hopf_lax(space, f, t, p)
    hi = hopf_lax(space, f, t + h, p)
    lo = hopf_lax(space, f, t - h, p)
    right_fd = (hi.values - mid.values) / h
    left_fd = (mid.values - lo.values) / h
    right = -(mid.d_plus / t) ** p / q
    left = -(mid.d_minus / t) ** p / q
    rep = CheckReport("time_derivative")
    switching = []
    for y in range(space.n):
        s = set(mid.argmins[y])
        if not (set(hi.argmins[y]) <= s and set(lo.argmins[y]) <= s):
            switching.append(y)
            rep.flags.append({"point": y, "kind": "switching"})
    keep = np.ones(space.n, dtype=bool)
    keep[switching] = False

    def rel(fd, ex):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(fd - ex) / np.abs(ex)
        return np.where(ex == 0, np.where(fd == 0, 0.0, np.inf), r)

    er = rel(right_fd, right)[keep]
    el = rel(left_fd, left)[keep]
    rep.add("right", bool(np.all(er <= rtol)), max_rel_error=float(er.max(initial=0.0)))
    rep.add("left", bool(np.all(el <= rtol)), max_rel_error=float(el.max(initial=0.0)))
    rep.data.update(right_fd=right_fd, right_formula=right, left_fd=left_fd, left_formula=left,
                    switching=switching)
    return rep


def hj_residual(space, f, p, t, h=None):
    """Central-difference ``dQ/dt + |D+Q_t f|^q / q`` with the discrete slope.

    Nonpositive in the mesh limit; on a fixed finite space the positive
    part is a discretization artifact of order the mesh size.
    """
    _check(t, p)
    if h is None:
        h = 1e-5 * t
    if not 0 < h < t:
        raise InputError("need 0 < h < t")
    q = _conj(p)
    mid = hopf_lax(space, f, t, p)
    dqdt = (hopf_lax(space, f, t + h, p).values - hopf_lax(space, f, t - h, p).values) / (2 * h)
    asc = slopes(space, mid.values)[0]
    return ScalarField(dqdt + asc ** q / q)


def difference_bound_check(space, f, p, t, rtol=1e-12):
    """``Q(z) - Q(y) <= (dminus(y) + d(y, z))^(p-1) d(y, z) / t^(p-1)`` on finite pairs."""
    _check(t, p)
    prof = hopf_lax(space, f, t, p)
    Q = prof.values
    d = space.dist
    fin = np.isfinite(d)
    dd = np.where(fin, d, 0.0)
    bound = (prof.d_minus[:, None] + dd) ** (p - 1.0) * dd / t ** (p - 1.0)
    lhs = Q[None, :] - Q[:, None]
    slack = rtol * (1.0 + np.abs(Q)[None, :] + np.abs(Q)[:, None])
    bad = fin & (lhs > bound + slack)
    rep = CheckReport("difference_bound")
    for y, z in zip(*np.nonzero(bad)):
        rep.failures.append({"y": int(y), "z": int(z), "excess": float(lhs[y, z] - bound[y, z])})
    rep.add("pairs", not rep.failures, checked=int(fin.sum()))
    return rep


def lipschitz_bound_check(space, f, p, t, atol=1e-12):
    """``inf f <= Q_t f <= sup f`` and ``Lip(Q_t f) <= 2^(p-1) (p osc f / t)^(1/q)``."""
    _check(t, p)
    v = _values(space, f)
    q = _conj(p)
    Q = hopf_lax(space, f, t, p).values
    osc = float(v.max() - v.min())
    lip = forward_lip_constant(space, Q)
    bound = 2.0 ** (p - 1.0) * (p * osc / t) ** (1.0 / q)
    rep = CheckReport("lipschitz_bound")
    rep.add("range", bool(np.all(Q >= v.min() - atol) and np.all(Q <= v.max() + atol)),
            q_min=float(Q.min()), q_max=float(Q.max()))
    rep.add("lipschitz", lip <= bound + atol, lip=lip, bound=bound)
    return rep
