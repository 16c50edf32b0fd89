"""Dense two-phase tableau simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Meant for the small, highly degenerate transport problems of this
package (a few thousand columns at most).  Exact bases matter more than
speed: the final primal and dual solutions are recomputed from the basis
matrix, so complementary slackness holds to rounding.

Pivoting is Dantzig's rule until a run of degenerate pivots, then Bland's
rule for the rest of that run, which rules out cycling.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import CycleGuardTripped, InputError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-11
_DEGENERATE_RUN = 25


@dataclass
class LpProblem:
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=np.float64))
        self.b_eq = np.asarray(self.b_eq, dtype=np.float64).reshape(-1)
        m, n = self.A_eq.shape
        if self.c.shape != (n,) or self.b_eq.shape != (m,):
            raise InputError(
                f"inconsistent LP shapes: c {self.c.shape}, A {self.A_eq.shape}, b {self.b_eq.shape}"
            )
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A_eq))
                and np.all(np.isfinite(self.b_eq))):
            raise InputError("LP data must be finite")


@dataclass
class LpResult:
    status: str
    x: np.ndarray = None
    y: np.ndarray = None
    objective: float = np.nan
    dual_objective: float = np.nan
    reduced_costs: np.ndarray = None
    basis: np.ndarray = None
    iterations: int = 0
    slackness: float = np.nan
    info: dict = field(default_factory=dict)

    @property
    def gap(self):
        return abs(self.objective - self.dual_objective)


class _Tableau:
    def __init__(self, T, basis):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, r, e):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = e
        self.iterations += 1


def _run_simplex(tab, cost, allowed, tol, max_iter):
    """Minimize ``cost . x`` over the current tableau; returns status."""
    T = tab.T
    degenerate = 0
    while True:
        if tab.iterations >= max_iter:
            raise CycleGuardTripped(
                f"simplex exceeded {max_iter} pivots", iterations=tab.iterations
            )
        cb = cost[tab.basis]
        z = cost - cb @ T[:, :-1]
        z[~allowed] = 0.0
        cand = np.flatnonzero(z < -tol)
        if cand.size == 0:
            return OPTIMAL
        bland = degenerate >= _DEGENERATE_RUN
        e = int(cand[0]) if bland else int(cand[np.argmin(z[cand])])
        col = T[:, e]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(ties[np.argmin(np.asarray(tab.basis)[ties])])
        degenerate = degenerate + 1 if T[r, -1] <= 1e-12 else 0
        tab.pivot(r, e)


def lp_solve(problem, tol=1e-9, max_iter=None):
    """Solve a standard-form LP.

    Returns an :class:`LpResult`.  For an optimal result ``x`` is a basic
    (vertex) solution and ``y`` the matching dual, with
    ``c - A.T @ y >= -tol`` and ``c.x == b.y`` to rounding.
    """
    c, A, b = problem.c, problem.A_eq.copy(), problem.b_eq.copy()
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    basis = [-1] * m
    for j in range(n):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1:
            basis[nz[0]] = j
    art_rows = [i for i in range(m) if basis[i] == -1]
    k = len(art_rows)
    T = np.zeros((m, n + k + 1))
    T[:, :n] = A
    T[:, -1] = b
    for a, i in enumerate(art_rows):
        T[i, n + a] = 1.0
        basis[i] = n + a
    tab = _Tableau(T, basis)
    ncol = n + k

    if k:
        cost1 = np.zeros(ncol)
        cost1[n:] = 1.0
        _run_simplex(tab, cost1, np.ones(ncol, dtype=bool), tol, max_iter)
        infeas = float(np.sum(tab.T[[i for i in range(len(tab.basis)) if tab.basis[i] >= n], -1]))
        if infeas > tol * max(1.0, float(np.abs(b).sum())):
            return LpResult(INFEASIBLE, iterations=tab.iterations, info={"phase1": infeas})
        keep = []
        for i in range(len(tab.basis)):
            if tab.basis[i] < n:
                keep.append(i)
                continue
            row = tab.T[i, :n]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                tab.pivot(i, j)
                keep.append(i)
        row_ids = np.array([i for i in range(m)])[keep]
        tab.T = np.ascontiguousarray(np.delete(tab.T[keep], np.s_[n:ncol], axis=1))
        tab.basis = [tab.basis[i] for i in keep]
    else:
        row_ids = np.arange(m)
        tab.T = T[:, list(range(n)) + [n + k]]

    allowed = np.ones(n, dtype=bool)
    A_r, b_r = A[row_ids], b[row_ids]
    for _ in range(5):
        status = _run_simplex(tab, c, allowed, tol, max_iter)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED, iterations=tab.iterations)
        B = A_r[:, tab.basis]
        xb = np.linalg.solve(B, b_r)
        y_r = np.linalg.solve(B.T, c[tab.basis])
        rc = c - A_r.T @ y_r
        if xb.min() >= -tol and rc.min() >= -tol:
            break
        # drift in the tableau: refactor from the basis and keep pivoting
        Binv = np.linalg.inv(B)
        tab.T = np.hstack([Binv @ A_r, (Binv @ b_r)[:, None]])
    x = np.zeros(n)
    x[tab.basis] = np.maximum(xb, 0.0)
    rc[tab.basis] = 0.0
    y = np.zeros(m)
    y[row_ids] = y_r
    y[flip] *= -1.0
    return LpResult(
        OPTIMAL,
        x=x,
        y=y,
        objective=float(c @ x),
        dual_objective=float(problem.b_eq @ y),
        reduced_costs=rc,
        basis=np.array(tab.basis),
        iterations=tab.iterations,
        slackness=float(np.abs(x @ rc)),
    )
