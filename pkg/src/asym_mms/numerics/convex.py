"""Certified minimization of strongly convex, piecewise-smooth objectives.

Two building blocks:

* :func:`accelerated_gradient` -- FISTA with backtracking and adaptive
  restart, used on smoothed objectives as a warm start.
* :func:`minimize_separable` -- a primal active-set method with Newton
  steps for ``min sum_i phi_i(z_i)  s.t.  A z <= b``.  Max-type
  nonsmooth terms are handled through their epigraph, which turns them
  into linear constraints; this is what lands iterates exactly on kinks.

:func:`prox_solve` chains them behind the :class:`ConvexProblem` contract.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import SolverStall


@dataclass
class ConvexProblem:
    """A ``sigma``-strongly convex objective.

    ``fun(x)`` returns ``(value, subgradient)``; where possible the
    subgradient should be the least-norm element, since it doubles as the
    optimality certificate.  ``smooth(x, eps)`` is an optional smoothed
    surrogate ``(value, gradient)`` used with continuation ``eps0 * 4**-k``.
    ``polish(x)`` is an optional structure-exploiting finisher returning
    ``(x, residual)``.
    """

    fun: Callable
    sigma: float
    x0: np.ndarray
    smooth: Optional[Callable] = None
    eps0: float = 0.0
    polish: Optional[Callable] = None
    rounds: int = 3


@dataclass
class Certificate:
    residual: float
    iterations: int
    error_bound: float
    info: dict = field(default_factory=dict)


def accelerated_gradient(fg, x0, L0=1.0, max_iter=500, gtol=1e-10):
    """FISTA with backtracking and gradient restart for smooth ``fg``."""
    x = np.array(x0, dtype=np.float64)
    y = x.copy()
    t = 1.0
    L = L0
    fy, gy = fg(y)
    it = 0
    for it in range(1, max_iter + 1):
        while True:
            xn = y - gy / L
            fx, gx = fg(xn)
            d = xn - y
            if fx <= fy + gy @ d + 0.5 * L * (d @ d) + 1e-14 * abs(fy):
                break
            L *= 2.0
        if np.linalg.norm(gx) <= gtol:
            x = xn
            break
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if gx @ (xn - x) > 0:
            # restart: momentum points uphill
            y, t = xn.copy(), 1.0
            fy, gy = fx, gx
        else:
            y = xn + ((t - 1.0) / tn) * (xn - x)
            t = tn
            fy, gy = fg(y)
        x = xn
        L *= 0.9
    return x, it


@dataclass
class ActiveSetResult:
    z: np.ndarray
    multipliers: np.ndarray
    active: list
    kkt_residual: float
    feasibility: float
    iterations: int


def _dependent(AW, rows, rtol=1e-10):
    """Mask of ``rows`` lying in the row space of the full-rank ``AW``."""
    Q = np.linalg.qr(AW.T)[0]
    resid = rows - (rows @ Q) @ Q.T
    return np.linalg.norm(resid, axis=1) <= rtol * np.linalg.norm(rows, axis=1)


def minimize_separable(value, grad_hess, A, b, z0, tol=1e-12, max_iter=None, quadratic=False,
                       h_floor=1e-10, h_cap=1e8):
    """Primal active-set Newton method for ``min sum phi_i(z_i), A z <= b``.

    ``grad_hess(z)`` returns the gradient and the (positive) diagonal
    Hessian of the separable objective.  The Hessian is clipped to
    ``[h_floor, h_cap]`` times its mean; this changes the path but not the
    fixed point, because convergence is tested on the true stationarity
    residual.
    ``z0`` must be feasible.  The
    multipliers returned satisfy ``grad + A.T @ lam = 0`` on convergence,
    ``lam >= 0`` and ``lam = 0`` off the active set.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    z = np.array(z0, dtype=np.float64)
    nrow = A.shape[0]
    if max_iter is None:
        max_iter = 20 * (nrow + z.size) + 100
    viol = float(np.max(A @ z - b, initial=0.0))
    if viol > 1e-9 * (1.0 + np.abs(b).max(initial=0.0)):
        raise ValueError(f"starting point infeasible by {viol:g}")
    W = []
    lam = np.zeros(0)
    in_w = np.zeros(nrow, dtype=bool)
    last_drop = None
    for it in range(1, max_iter + 1):
        g, h = grad_hess(z)
        href = max(float(np.mean(h)), 1e-300)
        h = np.clip(h, h_floor * href, h_cap * href)
        if W:
            # full KKT solve: stays accurate when h spans many decades
            AW = A[W]
            k = len(W)
            nz = z.size
            KKT = np.zeros((nz + k, nz + k))
            KKT[np.arange(nz), np.arange(nz)] = h
            KKT[:nz, nz:] = AW.T
            KKT[nz:, :nz] = AW
            rhs = np.concatenate([-g, b[W] - AW @ z])
            try:
                sol = np.linalg.solve(KKT, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
            p, lam = sol[:nz], sol[nz:]
        else:
            lam = np.zeros(0)
            p = -g / h
        scale = 1.0 + np.abs(g).max(initial=0.0)
        # h * p = -(g + A_W^T lam): the stationarity residual of the true
        # gradient, whatever the Hessian model
        stat = np.abs(h * p).max(initial=0.0)
        if W and stat > tol * scale:
            # the same residual evaluated directly; immune to a stiff h
            stat = min(stat, float(np.abs(g + A[W].T @ lam).max()))
        if stat <= tol * scale:
            if W and lam.min() < -tol * (1.0 + np.abs(lam).max()):
                j = int(np.argmin(lam))
                last_drop = W[j]
                in_w[W[j]] = False
                del W[j]
                continue
            break
        Ap = A @ p
        slack = b - A @ z
        cand = np.flatnonzero((Ap > 1e-14 * np.abs(p).max()) & ~in_w)
        alpha_max = np.inf
        blocking = None
        if cand.size and W:
            # rows in the span of the working set have A p = 0 in exact
            # arithmetic; adding one would make the multipliers ambiguous
            cand = cand[~_dependent(A[W], A[cand])]
        if cand.size:
            ratios = np.maximum(slack[cand], 0.0) / Ap[cand]
            amin = ratios.min()
            ties = cand[ratios <= amin + 1e-15]
            if last_drop is not None and ties.size > 1:
                ties = ties[ties != last_drop] if np.any(ties != last_drop) else ties
            blocking = int(ties.min())
            alpha_max = float(amin)
        alpha = min(1.0, alpha_max)
        slope = float(g @ p)
        if not quadratic and alpha > 0 and slope < 0:
            f0 = value(z)
            while alpha > 1e-16:
                trial = z + alpha * p
                # convexity: a non-positive slope at the trial point means
                # the whole segment descends, which survives rounding in f
                gt = grad_hess(trial)[0]
                if gt @ p <= 1e-12 * np.linalg.norm(gt) * np.linalg.norm(p):
                    break
                if value(trial) <= f0 + 1e-4 * alpha * slope:
                    break
                alpha *= 0.5
        z = z + alpha * p
        if alpha == alpha_max and blocking is not None:
            W.append(blocking)
            in_w[blocking] = True
        last_drop = None
    else:
        raise SolverStall("active-set iteration budget exhausted", iterations=max_iter)
    g, _ = grad_hess(z)
    full = np.zeros(nrow)
    if W:
        # multipliers from the true stationarity system, free of the floor
        lam = np.linalg.lstsq(A[W].T, -g, rcond=None)[0]
        full[W] = np.maximum(lam, 0.0)
    kkt = float(np.abs(g + A.T @ full).max(initial=0.0))
    feas = float(np.max(A @ z - b, initial=0.0))
    return ActiveSetResult(z, full, list(W), kkt, feas, it)


def prox_solve(problem, tol=1e-9, max_iter=2000):
    """Minimize a :class:`ConvexProblem` and certify the result.

    Runs ``problem.rounds`` continuation rounds on the smoothed surrogate
    (if any), then the polishing hook (if any), and finally checks the
    subgradient norm against ``tol``.  By strong convexity the distance to
    the true minimizer is at most ``residual / sigma``.
    """
    x = np.array(problem.x0, dtype=np.float64)
    iters = 0
    if problem.smooth is not None and problem.eps0 > 0:
        for k in range(problem.rounds):
            eps = problem.eps0 * 4.0 ** (-k)
            x, n_it = accelerated_gradient(
                lambda v, e=eps: problem.smooth(v, e), x,
                L0=problem.sigma, max_iter=max_iter, gtol=tol,
            )
            iters += n_it
    info = {}
    if problem.polish is not None:
        x, residual = problem.polish(x)
        info["polished"] = True
    else:
        residual = float(np.linalg.norm(problem.fun(x)[1]))
    if not residual <= tol:
        raise SolverStall(
            f"subgradient residual {residual:.3e} above tolerance {tol:.3e}",
            residual=residual, iterations=iters,
        )
    return x, Certificate(residual, iters, residual / problem.sigma, info)
