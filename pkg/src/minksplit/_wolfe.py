"""Minimum-norm points of finite point sets and simplex-constrained least squares.

Everything in the package that projects onto a V-polytope goes through
:func:`min_norm_point` (Wolfe's corral algorithm).  :func:`simplex_qp` adds
linear equality constraints on the barycentric weights with an augmented
Lagrangian whose inner problems are again minimum-norm-point problems on a
lifted point set, followed by an exact active-set polish.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .exceptions import ConvergenceError

_WEIGHT_EPS = 1e-15


@dataclass
class MinNormResult:
    x: np.ndarray
    weights: np.ndarray  # dense, one per input point
    support: np.ndarray  # indices with positive weight
    gap: float
    iterations: int


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    # argmin ||sum a_i p_i|| subject to sum a_i = 1, via least squares on differences
    if len(P) == 1:
        return np.ones(1)
    D = (P[1:] - P[0]).T
    beta, *_ = np.linalg.lstsq(D, -P[0], rcond=None)
    return np.concatenate(([1.0 - beta.sum()], beta))


def _minor_cycle(P, S, w):
    while True:
        alpha = _affine_minimizer(P[S])
        if np.all(alpha > _WEIGHT_EPS):
            return S, alpha
        neg = alpha <= _WEIGHT_EPS
        denom = w[neg] - alpha[neg]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(denom > 0, w[neg] / denom, np.inf)
        theta = float(min(1.0, ratios.min()))
        w = (1.0 - theta) * w + theta * alpha
        keep = w > _WEIGHT_EPS
        if keep.all():
            # numerical tie: drop the smallest weight to make progress
            keep[int(np.argmin(w))] = False
        S = [s for s, k in zip(S, keep) if k]
        w = w[keep]
        w /= w.sum()
        if len(S) == 1:
            return S, np.ones(1)


def min_norm_point(points, gap_tol: float = 1e-12, max_iter: int = 100_000,
                   warm_support=None, warm_weights=None) -> MinNormResult:
    """Nearest point of ``conv(points)`` to the origin.

    Parameters
    ----------
    points : array, shape (k, d)
    gap_tol : float
        Relative tolerance on the Wolfe gap ``|x|^2 - min_j <x, p_j>``,
        scaled by ``|x| min(|x|, r)`` with ``r`` the spread of the points.
    warm_support, warm_weights : optional
        Starting corral, e.g. from a previous solve on a perturbed point set.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise ValueError("points must be a nonempty (k, d) array")
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(float(sq.max()), 1e-300)
    spread = max(float(np.abs(P - P.mean(axis=0)).max()), 1e-150)

    if warm_support is not None and len(warm_support) > 0:
        S = [int(i) for i in warm_support]
        w = np.asarray(warm_weights, dtype=float).copy()
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            w = np.full(len(S), 1.0 / len(S))
        w /= w.sum()
    else:
        S = [int(np.argmin(sq))]
        w = np.ones(1)
    if len(S) > 1:
        S, w = _minor_cycle(P, S, w)
    x = P[S].T @ w

    gap = np.inf
    it = 0
    stalled = False
    best = np.inf
    idle = 0
    patience = 2 * P.shape[1] + 10
    for it in range(1, max_iter + 1):
        dots = P @ x
        j = int(np.argmin(dots))
        xx = float(x @ x)
        gap = xx - float(dots[j])
        # |x|^2 for near points resolves small distances; |x| * spread for far
        # points pins down the nearest face
        nx = np.sqrt(xx)
        if gap <= gap_tol * max(nx * min(nx, spread), 1e-16 * spread ** 2):
            break
        # round-off floor: |x| stopped decreasing
        if xx < best * (1.0 - 1e-12):
            best, idle = xx, 0
        else:
            idle += 1
            if idle > patience and gap <= gap_tol * scale:
                break
        if j in S:
            # corral weights are stale (warm start or round-off); re-solve once
            if stalled:
                break
            stalled = True
        else:
            stalled = False
            S.append(j)
            w = np.append(w, 0.0)
        S, w = _minor_cycle(P, S, w)
        x = P[S].T @ w
    else:
        raise ConvergenceError(f"min-norm point did not converge (gap {gap:.3e})")

    weights = np.zeros(len(P))
    weights[S] = w
    return MinNormResult(x=x, weights=weights, support=np.array(S, dtype=int),
                         gap=max(gap, 0.0), iterations=it)


def nearest_in_hull(vertices, target, **kw) -> MinNormResult:
    """Projection of ``target`` onto ``conv(vertices)``; ``x`` is returned in
    original coordinates."""
    V = np.asarray(vertices, dtype=float)
    t = np.asarray(target, dtype=float)
    res = min_norm_point(V - t, **kw)
    res.x = res.x + t
    return res


@dataclass
class SimplexQPResult:
    theta: np.ndarray
    z: np.ndarray
    residual: float  # max-norm of E theta - f
    outer_iterations: int


def equality_floor(E: np.ndarray, f: np.ndarray) -> MinNormResult:
    """min over the simplex of ||E theta - f||; zero iff the constraints are
    compatible with the simplex."""
    return min_norm_point(E.T - f)


def _kkt_solve(U, a, G, h, support):
    """Equality-constrained least squares on a fixed support: weights and
    multipliers of ``min |U_S t - a|`` subject to ``G_S t = h``.

    Null-space method, so the equalities hold to round-off even when the
    support columns are nearly parallel.
    """
    Us = U[:, support]
    Gs = G[:, support]
    W, sv, Vt = np.linalg.svd(Gs)
    r = int(np.sum(sv > 1e-13 * sv[0])) if len(sv) and sv[0] > 0 else 0
    t = Vt[:r].T @ ((W[:, :r].T @ h) / sv[:r])
    Z = Vt[r:].T
    if Z.shape[1]:
        w, *_ = np.linalg.lstsq(Us @ Z, a - Us @ t, rcond=None)
        t = t + Z @ w
    lam, *_ = np.linalg.lstsq(Gs.T, -(Us.T @ (Us @ t - a)), rcond=None)
    return t, lam


def _certify(grad, G, lam, support, cost_tol) -> bool:
    """KKT test: some multiplier makes every reduced cost ``>= -cost_tol``.

    The given ``lam`` is tried first; multipliers are not unique on
    degenerate supports, so failing that an LP looks for another one.
    """
    if (grad + G.T @ lam).min() >= -cost_tol:
        return True
    res = linprog(np.zeros(len(lam)), A_ub=-G.T, b_ub=grad + cost_tol,
                  A_eq=G[:, support].T, b_eq=-grad[support], bounds=(None, None),
                  method="highs")
    return bool(res.status == 0)


def _polish(U, a, E, f, support, feas_tol, cost_tol):
    """Solve the equality-constrained least squares on a fixed support.

    Returns ``(theta, certified)``.  ``theta`` is ``None`` when the solution
    leaves the simplex or misses the equalities by more than ``feas_tol``;
    ``certified`` is True when the KKT conditions of the full problem hold.
    """
    support = np.asarray(support, dtype=int)
    G = np.vstack([np.ones((1, U.shape[1])), E])
    th, lam = _kkt_solve(U, a, G, np.concatenate(([1.0], f)), support)
    if th.min() < -1e-13:
        return None, False
    th = np.clip(th, 0.0, None)
    full = np.zeros(U.shape[1])
    full[support] = th / th.sum()
    if float(np.abs(E @ full - f).max(initial=0.0)) > feas_tol:
        return None, False
    grad = U.T @ (U @ full - a)
    return full, _certify(grad, G, lam, support, cost_tol)


def active_set_qp(U, a, E, f, feas_tol: float, cost_tol: float | None = None,
                  max_iter: int | None = None) -> SimplexQPResult | None:
    """Primal active-set method for ``min |U theta - a|`` over the simplex
    with ``E theta = f``.

    Starts from an LP vertex and adds one generator at a time by pricing,
    so the linear algebra only ever involves the current support.  Returns
    ``None`` when the LP finds no feasible start or the iteration cap is hit.
    """
    U = np.asarray(U, dtype=float)
    E = np.atleast_2d(np.asarray(E, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    a = np.asarray(a, dtype=float)
    k = U.shape[1]
    G = np.vstack([np.ones((1, k)), E])
    h = np.concatenate(([1.0], f))
    Ua = U.T - a
    if cost_tol is None:
        cost_tol = 1e-10 * (1.0 + float(np.abs(Ua).max())) ** 2
    if max_iter is None:
        max_iter = 4 * k + 100
    lp = linprog(0.5 * np.einsum("ij,ij->i", Ua, Ua), A_eq=G, b_eq=h, bounds=(0, None),
                 method="highs")
    if lp.status != 0:
        return None
    theta = np.clip(lp.x, 0.0, None)
    S = list(np.flatnonzero(theta > _WEIGHT_EPS))
    seen = set()
    for it in range(1, max_iter + 1):
        idx = np.array(S)
        th, lam = _kkt_solve(U, a, G, h, idx)
        cur = theta[idx]
        if th.min() >= -_WEIGHT_EPS:
            theta[:] = 0.0
            theta[idx] = np.clip(th, 0.0, None)
            grad = U.T @ (U @ theta - a)
            red = grad + G.T @ lam
            j = int(np.argmin(red))
            key = tuple(sorted(S))
            if red[j] >= -cost_tol:
                break
            if j in S or key in seen:
                # pricing is cycling on degenerate multipliers: take the best
                # feasible direction instead, which either certifies the point
                # or strictly decreases the objective
                d = _descent_direction(grad, G, theta, cost_tol)
                if d is None:
                    return None
                if not d.any():
                    break
                Ud = U @ d
                t = float(min(1.0, -(grad @ d) / (Ud @ Ud)))
                theta = np.clip(theta + t * d, 0.0, None)
                S = list(np.flatnonzero(theta > _WEIGHT_EPS))
                seen.clear()
                continue
            seen.add(key)
            S.append(j)
            continue
        # step towards the support solution until a weight hits zero
        d = th - cur
        neg = d < 0
        t = float(min(1.0, (cur[neg] / -d[neg]).min()))
        new = cur + t * d
        drop = new <= _WEIGHT_EPS
        if not drop.any():
            drop[int(np.argmin(new))] = True
        theta[idx] = np.where(drop, 0.0, new)
        S = [s for s, gone in zip(S, drop) if not gone]
        if not S:
            return None
    else:
        return None
    res = float(np.abs(E @ theta - f).max(initial=0.0))
    if res > feas_tol:
        return None
    return SimplexQPResult(theta, U @ theta, res, it)


def _descent_direction(grad, G, theta, tol: float):
    """Minimise ``<grad, d>`` over ``G d = 0``, ``0 <= theta + d``, ``d <= 1``.

    Returns zeros when no direction decreases the objective by more than
    ``tol`` (the KKT conditions hold), ``None`` if the LP fails, else the
    LP minimiser.
    """
    res = linprog(grad, A_eq=G, b_eq=np.zeros(len(G)),
                  bounds=np.column_stack([-theta, np.ones_like(theta)]), method="highs")
    if res.status != 0:
        return None
    if res.fun >= -tol:
        return np.zeros_like(theta)
    return res.x


def simplex_qp(U, a, E, f, tol: float = 1e-12, rho: float | None = None,
               max_outer: int = 200, floor: float | None = None) -> SimplexQPResult:
    """Minimise ``|U theta - a|`` over the unit simplex subject to ``E theta = f``.

    The caller must make sure the constraint set is nonempty (see
    :func:`equality_floor`; its max-norm residual may be passed as ``floor``).
    ``U`` has one column per generator.

    Each outer step solves a lifted min-norm-point problem, then tries an
    exact solve on the current support; the first support whose exact
    solution passes the KKT test ends the iteration.
    """
    U = np.asarray(U, dtype=float)
    E = np.atleast_2d(np.asarray(E, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    a = np.asarray(a, dtype=float)
    k = U.shape[1]

    Ua = (U.T - a)  # (k, n)
    scale_u = max(float(np.abs(Ua).max()), 1e-12)
    scale_e = max(float(np.abs(E).max()), float(np.abs(f).max()), 1e-12)
    # balance the lifted coordinates so both blocks start at unit size
    if rho is None:
        rho = 1e2 * (scale_u / scale_e) ** 2
    rho_max = rho * 1e8
    if floor is None:
        floor = float(np.linalg.norm(equality_floor(E, f).x, ord=np.inf))
    feas_tol = floor + tol * (1.0 + scale_e)
    cost_tol = 1e-10 * (1.0 + scale_u) ** 2

    Ef = (E.T - f)  # (k, m)
    mu = np.zeros(len(f))
    support = None
    weights = None
    z_prev = None
    res_prev = np.inf
    tried = set()
    fallback = None
    rn = np.inf
    for outer in range(1, max_outer + 1):
        lifted = np.hstack([Ua, np.sqrt(rho) * (Ef + mu / rho)])
        res = min_norm_point(lifted, warm_support=support, warm_weights=weights)
        theta = res.weights
        support = res.support
        weights = theta[support]
        r = E @ theta - f
        rn = float(np.abs(r).max())
        z = U @ theta
        key = tuple(sorted(int(i) for i in support))
        if key not in tried:
            tried.add(key)
            full, certified = _polish(U, a, E, f, support, feas_tol, cost_tol)
            if certified:
                return SimplexQPResult(full, U @ full, float(np.abs(E @ full - f).max()), outer)
            if full is not None and fallback is None:
                fallback = full
        dz = np.inf if z_prev is None else float(np.abs(z - z_prev).max())
        z_prev = z
        if rn <= feas_tol and dz <= tol * (1.0 + scale_u):
            break
        mu = mu + rho * r
        if rn > 0.25 * res_prev and rho < rho_max:
            rho *= 10.0
        res_prev = rn
    else:
        if fallback is not None and float(np.abs(E @ fallback - f).max()) <= feas_tol:
            return SimplexQPResult(fallback, U @ fallback,
                                   float(np.abs(E @ fallback - f).max()), outer)
        raise ConvergenceError(f"augmented Lagrangian stalled, residual {rn:.3e}")
    return SimplexQPResult(theta=theta, z=U @ theta, residual=rn, outer_iterations=outer)
