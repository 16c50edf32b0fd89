"""Asymmetric optimal transport on finite spaces.

The coupling problem

    min sum_{x,y} c(x, y) pi(x, y)   s.t.  pi 1 = mu,  pi^T 1 = nu,  pi >= 0

is solved exactly with the dense simplex of :mod:`asym_mms.numerics`.
Pairs with ``d(x, y) = inf`` are left out of the program instead of being
priced with a large sentinel; if no coupling survives, the problem is
reported as :class:`InfiniteCost`.

With ``c = d^p / p`` the simplex duals ``(u, v)`` give Kantorovich
potentials ``psi = -u`` and ``phi = v``:

    phi(y) - psi(x) <= d(x, y)^p / p,
    (1/p) W_p(mu, nu)^p = sum phi nu - sum psi mu.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfiniteCost, InputError, InvalidExponent, MassNotUnit
from .numerics import OPTIMAL, LpProblem, lp_solve
from .report import CheckReport
from .slope import ScalarField, _values, slopes
from .space import reversibility

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability vector on the points of a space."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("measure weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL * max(1, w.size):
            raise MassNotUnit(f"measure has total mass {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, n, i):
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, w):
        w = np.asarray(w, dtype=np.float64)
        return cls(w / w.sum())

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class Coupling:
    plan: np.ndarray

    def marginals(self):
        return self.plan.sum(axis=1), self.plan.sum(axis=0)

    def support(self, tol=0.0):
        return list(zip(*np.nonzero(self.plan > tol)))


def _weights(space, mu):
    w = mu.weights if isinstance(mu, Measure) else Measure(mu).weights
    if w.size != space.n:
        raise InputError(f"measure has {w.size} weights, space has {space.n} points")
    return w


def _transport_lp(space, mu, nu, cost):
    """Solve the coupling LP for an ``n x n`` cost with ``inf`` entries."""
    n = space.n
    finite = np.isfinite(cost)
    # rows/columns without mass carry no flow; keep them out of the program
    rows = np.flatnonzero(mu > 0)
    cols = np.flatnonzero(nu > 0)
    pairs = [(i, j) for i in rows for j in cols if finite[i, j]]
    if not pairs:
        raise InfiniteCost("no coupling with finite cost")
    pi_idx = np.array(pairs, dtype=np.intp)
    k = len(pairs)
    r_pos = {int(i): a for a, i in enumerate(rows)}
    c_pos = {int(j): b for b, j in enumerate(cols)}
    A = np.zeros((rows.size + cols.size, k))
    A[[r_pos[int(i)] for i in pi_idx[:, 0]], np.arange(k)] = 1.0
    A[[rows.size + c_pos[int(j)] for j in pi_idx[:, 1]], np.arange(k)] = 1.0
    b = np.concatenate([mu[rows], nu[cols]])
    c = cost[pi_idx[:, 0], pi_idx[:, 1]]
    res = lp_solve(LpProblem(c, A, b))
    if res.status != OPTIMAL:
        raise InfiniteCost("no coupling with finite cost")
    plan = np.zeros((n, n))
    plan[pi_idx[:, 0], pi_idx[:, 1]] = res.x
    u = np.zeros(n)
    v = np.zeros(n)
    u[rows] = res.y[: rows.size]
    v[cols] = res.y[rows.size:]
    return plan, u, v, res, rows, cols


def _fill_potentials(space, cost, u, v, rows, cols):
    """Extend duals to massless points while keeping ``u_x + v_y <= c``."""
    n = space.n
    u = u.copy()
    v = v.copy()
    off_r = np.setdiff1d(np.arange(n), rows)
    off_c = np.setdiff1d(np.arange(n), cols)
    if off_c.size:
        sub = cost[np.ix_(rows, off_c)] - u[rows, None]
        best = sub.min(axis=0) if rows.size else np.zeros(off_c.size)
        v[off_c] = np.where(np.isfinite(best), best, 0.0)
    if off_r.size:
        sub = cost[off_r, :] - v[None, :]
        best = sub.min(axis=1)
        u[off_r] = np.where(np.isfinite(best), best, 0.0)
    return u, v


def _check_p(p, allow_one=True):
    if not (p >= 1 if allow_one else p > 1):
        raise InvalidExponent(f"invalid transport exponent {p}")


def wasserstein(space, mu, nu, p=2.0):
    """``W_p(mu, nu)`` and an optimal vertex coupling.

    Raises :class:`InfiniteCost` when every coupling moves mass along an
    infinite distance.
    """
    _check_p(p)
    a, b = _weights(space, mu), _weights(space, nu)
    plan, *_ , res, _, _ = _transport_lp(space, a, b, space.dist ** p)
    value = max(res.objective, 0.0) ** (1.0 / p)
    return float(value), Coupling(plan)


def c_p_transform(space, psi, p=2.0):
    """``psi^c(y) = min_x psi(x) + d(x, y)^p / p``."""
    _check_p(p, allow_one=False)
    v = _values(space, psi)
    d = space.dist
    fin = np.isfinite(d)
    val = np.where(fin, v[:, None] + np.where(fin, d, 0.0) ** p / p, np.inf)
    return ScalarField(val.min(axis=0))


@dataclass
class DualResult:
    psi: np.ndarray
    phi: np.ndarray
    dual_value: float
    primal_value: float
    gap: float
    coupling: Coupling
    report: CheckReport = field(repr=False, default=None)


def kantorovich_dual(space, mu, nu, p=2.0, tol=1e-10):
    """Optimal Kantorovich potentials with a full optimality certificate."""
    _check_p(p, allow_one=False)
    a, b = _weights(space, mu), _weights(space, nu)
    cost = space.dist ** p / p
    plan, u, v, res, rows, cols = _transport_lp(space, a, b, cost)
    u, v = _fill_potentials(space, cost, u, v, rows, cols)
    psi, phi = -u, v
    primal = float(np.sum(np.where(plan > 0, cost, 0.0) * plan))
    dual = float(phi @ b - psi @ a)
    gap = abs(primal - dual)
    rep = CheckReport("kantorovich_dual")
    fin = np.isfinite(cost)
    excess = np.where(fin, phi[None, :] - psi[:, None] - np.where(fin, cost, 0.0), -np.inf)
    rep.add("feasible", float(excess.max()) <= tol, max_excess=float(excess.max()))
    psic = np.asarray(c_p_transform(space, psi, p))
    rep.add("dominated", float(np.max(phi - psic)) <= tol, max_excess=float(np.max(phi - psic)))
    rep.add("gap", gap <= tol, gap=gap)
    sup = np.nonzero(plan > 0)
    cs = np.abs(psic[sup[1]] - psi[sup[0]] - cost[sup]) if sup[0].size else np.zeros(0)
    rep.add("slackness", float(cs.max(initial=0.0)) <= tol, max_error=float(cs.max(initial=0.0)))
    return DualResult(psi, phi, dual, primal, gap, Coupling(plan), rep)


def kr_w1(space, mu, nu):
    """``W_1`` as ``max sum psi (nu - mu)`` over forward 1-Lipschitz ``psi``.

    Solved as an LP in standard form with ``psi = psi_plus - psi_minus`` and
    one slack per ordered pair with finite distance.
    """
    a, b = _weights(space, mu), _weights(space, nu)
    n = space.n
    d = space.dist
    pairs = [(x, y) for x in range(n) for y in range(n) if x != y and np.isfinite(d[x, y])]
    k = len(pairs)
    A = np.zeros((k, 2 * n + k))
    rhs = np.zeros(k)
    for r, (x, y) in enumerate(pairs):
        # psi(y) - psi(x) + s = d(x, y)
        A[r, y] += 1.0
        A[r, n + y] -= 1.0
        A[r, x] -= 1.0
        A[r, n + x] += 1.0
        A[r, 2 * n + r] = 1.0
        rhs[r] = d[x, y]
    w = b - a
    c = np.concatenate([-w, w, np.zeros(k)])
    if k == 0:
        if np.any(w != 0):
            raise InfiniteCost("no coupling with finite cost")
        return 0.0, ScalarField(np.zeros(n))
    res = lp_solve(LpProblem(c, A, rhs))
    if res.status != OPTIMAL:
        raise InfiniteCost("Kantorovich-Rubinstein program is unbounded")
    psi = res.x[:n] - res.x[n:2 * n]
    psi = psi - psi.min()
    return float(psi @ w), ScalarField(psi)


def wp_reversibility(space, p, pairs):
    """Largest ``W_p(mu, nu) / W_p(nu, mu)`` over sampled pairs versus ``lambda_d``."""
    lam = reversibility(space)
    rep = CheckReport("wp_reversibility")
    worst = 1.0
    for mu, nu in pairs:
        a, _ = wasserstein(space, mu, nu, p)
        b, _ = wasserstein(space, nu, mu, p)
        if a == 0 and b == 0:
            continue
        r = np.inf if b == 0 else a / b
        worst = max(worst, r, (np.inf if a == 0 else b / a))
    d = space.dist
    off = ~np.eye(space.n, dtype=bool) & np.isfinite(d) & np.isfinite(d.T)
    dirac = float((d[off] / d.T[off]).max()) if off.any() else 1.0
    rep.add("bounded", worst <= lam * (1 + 1e-10), sup_ratio=worst, bound=lam)
    rep.add("dirac_attains", abs(dirac - lam) <= 1e-12 * lam, dirac_ratio=dirac, bound=lam)
    rep.data.update(sup_ratio=worst, bound=lam, dirac_ratio=dirac)
    return rep


def fisher_integrand(space, f, p):
    """``sum_{f > 0} |D+f|^q / f^(p-1) m`` for a density ``f``."""
    q = p / (p - 1.0)
    v = _values(space, f)
    asc = slopes(space, v)[0]
    pos = v > 0
    return float(np.sum(asc[pos] ** q / v[pos] ** (p - 1.0) * space.measure[pos]))


def kuwada_check(space, trajectory, p=2.0, h_index=None, slack=None, mass_tol=1e-8, lag=0.1):
    """Backward metric speed of ``mu_k = f_k m`` against the Fisher-type bound.

    For each ``k`` the speed proxy is ``W_p(mu_{k+j}, mu_k) / (t_{k+j} - t_k)``
    (later measure to earlier one) and the bound is
    ``(sum_{f_k > 0} |D+f_k|^q / f_k^(p-1) m)^(1/p)``.  The check is
    ``speed <= bound * (1 + slack)`` with ``slack = 10 tau + 10 h_mesh`` by
    default.

    Mass moves between points at a fixed positive distance, so on a finite
    space the proxy grows like ``lag^(1/p - 1)`` as the lag shrinks.  The
    default ``h_index`` therefore spans a macroscopic lag of about ``lag``
    time units.
    """
    _check_p(p, allow_one=False)
    q = p / (p - 1.0)
    if abs(q - trajectory.q) > 1e-12:
        raise InputError(f"p={p} is not conjugate to the flow exponent q={trajectory.q}")
    if h_index is None:
        h_index = max(1, int(round(lag / trajectory.tau)))
    j = int(h_index)
    if j < 1:
        raise InputError("h_index must be at least 1")
    F = trajectory.array()
    m = space.measure
    masses = F @ m
    if np.any(np.abs(masses - 1.0) > mass_tol):
        raise MassNotUnit(f"trajectory masses deviate from 1 by {np.abs(masses - 1).max():.3e}")
    if np.any(F < -mass_tol):
        raise InputError("trajectory states must be nonnegative")
    F = np.maximum(F, 0.0)
    if slack is None:
        slack = 10.0 * trajectory.tau + 10.0 * space.mesh_size
    rep = CheckReport("kuwada")
    rows = []
    for k in range(len(F) - j):
        dt = trajectory.times[k + j] - trajectory.times[k]
        w, _ = wasserstein(space, Measure.normalized(F[k + j] * m), Measure.normalized(F[k] * m), p)
        speed = w / dt
        bound = fisher_integrand(space, F[k], p) ** (1.0 / p)
        ok = speed <= bound * (1.0 + slack) + 1e-12
        rows.append({"k": k, "t": float(trajectory.times[k]), "speed": speed, "bound": bound, "ok": bool(ok)})
        if not ok:
            rep.failures.append(rows[-1])
        if F[k].min() <= 1e-8:
            # the bound degenerates as the density vanishes; record, do not fail
            rep.flags.append({"k": k, "kind": "vanishing_density", "min_f": float(F[k].min())})
    ratios = [r["speed"] / r["bound"] for r in rows if r["bound"] > 0]
    rep.add("speed_bound", not rep.failures, steps=len(rows), slack=slack, h_index=j,
            max_ratio=max(ratios, default=0.0))
    rep.data["rows"] = rows
    return rep
