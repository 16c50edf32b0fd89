"""Pure numpy implementations of the hot loops.

These are the reference versions: the compiled module in ``_kernels.pyx``
must agree with them to rounding.  Both take plain float64/intp arrays and
return new arrays; callers never see which backend ran.
"""

import numpy as np


def floyd_warshall(dist):
    d = np.array(dist, dtype=np.float64, copy=True)
    n = d.shape[0]
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def neighbor_slopes(indptr, indices, lengths, f):
    n = len(indptr) - 1
    asc = np.zeros(n)
    desc = np.zeros(n)
    if len(indices) == 0:
        return asc, desc
    tails = np.repeat(np.arange(n), np.diff(indptr))
    diff = f[indices] - f[tails]
    np.maximum.at(asc, tails, np.maximum(diff, 0.0) / lengths)
    np.maximum.at(desc, tails, np.maximum(-diff, 0.0) / lengths)
    return asc, desc


def hopf_lax(dist, f, t, p, tie_tol):
    finite = np.isfinite(dist)
    dd = np.where(finite, dist, 0.0)
    phi = f[:, None] + dd ** p / (p * t ** (p - 1.0))
    phi = np.where(finite, phi, np.inf)
    q = phi.min(axis=0)
    ties = phi <= q[None, :] + tie_tol
    d_minus = np.where(ties, dd, np.inf).min(axis=0)
    d_plus = np.where(ties, dd, -np.inf).max(axis=0)
    return q, d_minus, d_plus, ties.sum(axis=0).astype(np.intp)


def smoothed_cheeger(indptr, indices, lengths, m, g, q, eps):
    """Value and gradient of sum_x m_x M_x^q / q with a log-sum-exp max.

    ``M_x = eps * log(1 + sum_y exp(a_xy / eps))`` smooths
    ``max(0, max_y a_xy)`` with ``a_xy = (g_y - g_x) / d_xy``.
    """
    n = len(g)
    grad = np.zeros(n)
    counts = np.diff(indptr)
    if len(indices) == 0:
        return 0.0, grad
    tails = np.repeat(np.arange(n), counts)
    a = (g[indices] - g[tails]) / lengths
    amax = np.zeros(n)
    np.maximum.at(amax, tails, a)
    w = np.exp((a - amax[tails]) / eps)
    s = np.exp(-amax / eps)
    np.add.at(s, tails, w)
    mval = amax + eps * np.log(s)
    mval[counts == 0] = 0.0
    value = float(np.sum(m * mval ** q) / q)
    coef = m * mval ** (q - 1.0) / s
    e = coef[tails] * w / lengths
    np.add.at(grad, indices, e)
    np.add.at(grad, tails, -e)
    return value, grad
