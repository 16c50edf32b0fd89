# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in ``_kernels_py``; same signatures."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, pow, INFINITY, isfinite

cnp.import_array()


def floyd_warshall(dist):
    cdef double[:, ::1] d = np.array(dist, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double dik, cand
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == INFINITY:
                continue
            for j in range(n):
                cand = dik + d[k, j]
                if cand < d[i, j]:
                    d[i, j] = cand
    return np.asarray(d)


def neighbor_slopes(const cnp.intp_t[::1] indptr, const cnp.intp_t[::1] indices,
                    const double[::1] lengths, const double[::1] f):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    asc_arr = np.zeros(n)
    desc_arr = np.zeros(n)
    cdef double[::1] asc = asc_arr
    cdef double[::1] desc = desc_arr
    cdef Py_ssize_t x, e
    cdef double diff, r
    for x in range(n):
        for e in range(indptr[x], indptr[x + 1]):
            diff = f[indices[e]] - f[x]
            if diff > 0:
                r = diff / lengths[e]
                if r > asc[x]:
                    asc[x] = r
            elif diff < 0:
                r = -diff / lengths[e]
                if r > desc[x]:
                    desc[x] = r
    return asc_arr, desc_arr


cdef inline double _cost(double d, double p, double scale) nogil:
    if p == 2.0:
        return d * d * scale
    return pow(d, p) * scale


def hopf_lax(const double[:, ::1] dist, const double[::1] f, double t, double p,
             double tie_tol):
    cdef Py_ssize_t n = f.shape[0]
    q_arr = np.full(n, INFINITY)
    dm_arr = np.full(n, INFINITY)
    dp_arr = np.full(n, -INFINITY)
    cnt_arr = np.zeros(n, dtype=np.intp)
    cdef double[::1] qv = q_arr
    cdef double[::1] dm = dm_arr
    cdef double[::1] dp = dp_arr
    cdef cnp.intp_t[::1] cnt = cnt_arr
    cdef double scale = 1.0 / (p * pow(t, p - 1.0))
    cdef Py_ssize_t x, y
    cdef double phi, dxy, fx
    # row-major sweeps: x outer keeps dist access contiguous
    with nogil:
        for x in range(n):
            fx = f[x]
            for y in range(n):
                dxy = dist[x, y]
                if isfinite(dxy):
                    phi = fx + _cost(dxy, p, scale)
                    if phi < qv[y]:
                        qv[y] = phi
        for x in range(n):
            fx = f[x]
            for y in range(n):
                dxy = dist[x, y]
                if isfinite(dxy):
                    phi = fx + _cost(dxy, p, scale)
                    if phi <= qv[y] + tie_tol:
                        cnt[y] += 1
                        if dxy < dm[y]:
                            dm[y] = dxy
                        if dxy > dp[y]:
                            dp[y] = dxy
    return q_arr, dm_arr, dp_arr, cnt_arr


def smoothed_cheeger(const cnp.intp_t[::1] indptr, const cnp.intp_t[::1] indices,
                     const double[::1] lengths, const double[::1] m,
                     const double[::1] g, double q, double eps):
    cdef Py_ssize_t n = g.shape[0]
    grad_arr = np.zeros(n)
    w_arr = np.empty(indices.shape[0])
    cdef double[::1] grad = grad_arr
    cdef double[::1] wb = w_arr
    cdef Py_ssize_t x, e
    cdef double a, amax, s, mval, coef, w, value = 0.0
    with nogil:
        for x in range(n):
            if indptr[x + 1] == indptr[x]:
                continue
            amax = 0.0
            for e in range(indptr[x], indptr[x + 1]):
                a = (g[indices[e]] - g[x]) / lengths[e]
                wb[e] = a
                if a > amax:
                    amax = a
            s = exp(-amax / eps)
            for e in range(indptr[x], indptr[x + 1]):
                wb[e] = exp((wb[e] - amax) / eps)
                s += wb[e]
            mval = amax + eps * log(s)
            if q == 2.0:
                value += m[x] * mval * mval
                coef = m[x] * mval / s
            else:
                value += m[x] * pow(mval, q)
                coef = m[x] * pow(mval, q - 1.0) / s
            for e in range(indptr[x], indptr[x + 1]):
                w = coef * wb[e] / lengths[e]
                grad[indices[e]] += w
                grad[x] -= w
    return value / q, grad_arr
