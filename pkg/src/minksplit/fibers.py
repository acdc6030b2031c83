"""Fibers ``K ∩ L^{-1}(y)`` of a linear map restricted to a convex body, and the
nearest-to-anchor selection on them.

Three solvers sit behind :func:`fiber_point`, chosen by the body family:

* polytopes and products of polytopes: the fiber problem is a least-squares
  problem over barycentric weights with linear side constraints, solved
  exactly by :func:`minksplit._wolfe.simplex_qp`;
* ellipsoids and products of ellipsoids: Newton's method on the multipliers
  of the ellipsoid constraints, with the affine constraint eliminated through
  the kernel basis;
* anything else (mixed products): Dykstra's alternating projections between
  the affine subspace and the body.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from ._wolfe import active_set_qp, equality_floor, simplex_qp
from .exceptions import ConvergenceError, EmptyFiberError
from .geometry import (ConvexBody, Ellipsoid, Polytope, ProductBody, as_point,
                       interior_point)
from .linmaps import LinearMap, ProductMap

DEFAULT_TOL = 1e-8
DYKSTRA_MAX_ITER = 100_000
MU_CAP = 1e18


@dataclass(frozen=True, eq=False)
class FiberSpec:
    """The fiber ``body ∩ map^{-1}(target)``."""

    body: ConvexBody
    map: LinearMap
    target: np.ndarray

    def __post_init__(self):
        L = self.map
        if isinstance(L, ProductMap):
            L = L.as_linear_map()
        elif not isinstance(L, LinearMap):
            L = LinearMap(L)
        if self.body.dim != L.domain_dim:
            raise ValueError(f"dimension mismatch: body in R^{self.body.dim}, "
                             f"map on R^{L.domain_dim}")
        object.__setattr__(self, "map", L)
        object.__setattr__(self, "target", as_point(self.target, L.range_dim))

    @property
    def dim(self) -> int:
        return self.body.dim

    def with_target(self, y) -> "FiberSpec":
        return FiberSpec(self.body, self.map, y)


@dataclass(frozen=True)
class SelectionRule:
    """Pick the point of the fiber nearest to ``anchor``."""

    anchor: np.ndarray
    kind: str = field(default="min_norm_to_anchor")

    def __post_init__(self):
        if self.kind != "min_norm_to_anchor":
            raise ValueError(f"unknown selection rule {self.kind!r}")
        object.__setattr__(self, "anchor", as_point(self.anchor))

    @classmethod
    def origin(cls, dim: int) -> "SelectionRule":
        return cls(np.zeros(dim))


def _family(body: ConvexBody) -> str:
    if isinstance(body, Polytope):
        return "polytope"
    if isinstance(body, Ellipsoid):
        return "ellipsoid"
    if isinstance(body, ProductBody):
        if all(isinstance(b, Polytope) for b in body.blocks):
            return "polytope"
        if all(isinstance(b, Ellipsoid) for b in body.blocks):
            return "ellipsoid"
    return "general"


# --- polytope family ---------------------------------------------------------

_SIMPLEX_FORMS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _simplex_form(body):
    """Write the body as ``{U theta : theta in simplex, B theta = b}``.

    A product of ``p`` polytopes uses generators scaled by ``p`` and asks every
    block but the last to carry weight ``1/p``.
    """
    cached = _SIMPLEX_FORMS.get(body)
    if cached is not None:
        return cached
    if isinstance(body, Polytope):
        form = (body.vertices.T.copy(), np.zeros((0, len(body.vertices))), np.zeros(0))
    else:
        p = len(body.blocks)
        cols, rows = [], []
        total = sum(len(b.vertices) for b in body.blocks)
        start = 0
        for i, (b, s) in enumerate(zip(body.blocks, body.slices)):
            k = len(b.vertices)
            block = np.zeros((body.dim, k))
            block[s] = p * b.vertices.T
            cols.append(block)
            if i < p - 1:
                row = np.zeros(total)
                row[start:start + k] = 1.0
                rows.append(row)
            start += k
        U = np.hstack(cols)
        B = np.array(rows).reshape(len(rows), total)
        form = (U, B, np.full(len(rows), 1.0 / p))
    _SIMPLEX_FORMS[body] = form
    return form


def _polytope_system(spec: FiberSpec):
    U, B, b = _simplex_form(spec.body)
    MU = spec.map.matrix @ U
    # weight the block rows so they do not dominate the emptiness test
    w = max(1.0, float(np.abs(MU).max()))
    E = np.vstack([MU, w * B])
    f = np.concatenate([spec.target, w * b])
    return U, E, f


def _polytope_blocks(body):
    if isinstance(body, Polytope):
        return [(slice(0, body.dim), body, 0)]
    out, start = [], 0
    for s, b in zip(body.slices, body.blocks):
        out.append((s, b, start))
        start += len(b.vertices)
    return out


def _polytope_fiber(spec: FiberSpec, anchor, tol):
    U, E, f = _polytope_system(spec)
    floor = equality_floor(E, f)
    gap = float(np.abs(floor.x).max())
    if gap > tol:
        return None, gap
    y = spec.target
    if gap > 0:
        # y misses the image by round-off: move it onto the image so that the
        # equalities are exactly solvable
        th = floor.weights.copy()
        for _, P, off in _polytope_blocks(spec.body):
            blk = th[off:off + len(P.vertices)]
            blk /= blk.sum() * len(_polytope_blocks(spec.body))
        y = spec.map.matrix @ (U @ th)
    feas_tol = gap + 1e-12 * (1.0 + float(np.abs(E).max()) + float(np.abs(f).max()))
    E_y = np.vstack([spec.map.matrix @ U, E[len(y):]])
    f_y = np.concatenate([y, f[len(y):]])
    res = active_set_qp(U, anchor, E_y, f_y, feas_tol)
    if res is None:
        res = simplex_qp(U, anchor, E, f, floor=gap)
    z = res.z
    return z, 0.0


def _polytope_extremes(spec: FiberSpec, directions):
    """Exact ``argmax`` / ``argmin`` of ``<d, z>`` over the fiber, by LP."""
    U, E, f = _polytope_system(spec)
    k = U.shape[1]
    A_eq = np.vstack([E, np.ones((1, k))])
    b_eq = np.concatenate([f, [1.0]])
    out = []
    for d in directions:
        c = U.T @ d
        pair = []
        for sign in (-1.0, 1.0):
            res = linprog(sign * c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
                          method="highs")
            if res.status != 0:
                raise EmptyFiberError("fiber LP infeasible")
            pair.append(U @ res.x)
        out.append((pair[0], pair[1]))  # (max, min)
    return out


# --- ellipsoid family ----------------------------------------------------------

def _ellipsoid_blocks(body):
    if isinstance(body, Ellipsoid):
        return [(slice(0, body.dim), body)]
    return list(zip(body.slices, body.blocks))


def _ellipsoid_fiber(spec: FiberSpec, anchor, tol, g_tol=1e-15, max_iter=500):
    """Nearest point of the fiber to ``anchor`` for ellipsoid bodies.

    Writing fiber points as ``z0 + N w`` with ``N`` an orthonormal kernel basis
    turns each ellipsoid into a quadratic ``g_i(w) <= 0``.  The concave dual
    ``h(mu)`` over the multipliers ``mu >= 0`` is maximised by projected
    Newton steps; the primal point comes from one SPD solve per evaluation.
    """
    L = spec.map
    z0 = L.particular_solution(spec.target)
    N = L.kernel_basis
    blocks = _ellipsoid_blocks(spec.body)
    if N.shape[1] == 0:
        lv = max(e.level(z0[s]) for s, e in blocks) - 1.0
        return (z0, 0.0) if lv <= 1e-12 else (None, lv)
    k = N.shape[1]
    wa = N.T @ (anchor - z0)
    A, b, e = [], [], []
    for s, ell in blocks:
        Ni = N[s]
        Qi = ell.shape_inv
        u0 = z0[s] - ell.center
        A.append(Ni.T @ Qi @ Ni)
        b.append(Ni.T @ Qi @ u0)
        e.append(float(u0 @ Qi @ u0) - 1.0)
        # a single block already missing the affine subspace
        wmin, *_ = np.linalg.lstsq(A[-1], -b[-1], rcond=None)
        gmin = float(wmin @ A[-1] @ wmin + 2 * b[-1] @ wmin + e[-1])
        if gmin > 1e-12:
            return None, gmin
    A = np.array(A)
    b = np.array(b)
    e = np.array(e)
    eye = np.eye(k)

    def evaluate(mu):
        H = eye + 2.0 * np.tensordot(mu, A, axes=1)
        cf = cho_factor(H)
        w = cho_solve(cf, wa - 2.0 * mu @ b)
        Aw = A @ w
        g = Aw @ w + 2.0 * b @ w + e
        G = 2.0 * (Aw + b)  # rows are gradients of g_i
        h = 0.5 * float((w - wa) @ (w - wa)) + float(mu @ g)
        return w, g, G, h, cf

    # Levenberg-Marquardt damping keeps the step an ascent direction when the
    # dual Hessian is rank deficient (parallel constraint gradients)
    mu = np.zeros(len(blocks))
    w, g, G, h, cf = evaluate(mu)
    damp = 0.0
    for _ in range(max_iter):
        pg = np.where(mu > 0, np.abs(g), np.maximum(g, 0.0))
        if pg.max() <= g_tol:
            break
        idx = np.flatnonzero(~((mu <= 0) & (g <= 0)))
        Hs = G[idx] @ cho_solve(cf, G[idx].T)
        ref = max(float(np.trace(Hs)), 1e-300)
        damp = max(damp, 1e-14 * ref)
        accepted = False
        while damp <= 1e20 * ref:
            step = np.zeros_like(mu)
            step[idx] = np.linalg.solve(Hs + damp * np.eye(len(idx)), g[idx])
            mu_new = np.maximum(mu + step, 0.0)
            if mu_new.max() > MU_CAP:
                break  # unbounded dual: the fiber is (nearly) empty
            cand = evaluate(mu_new)
            gain = cand[3] - h
            if gain > 0 and gain >= 1e-4 * float(g @ (mu_new - mu)):
                accepted = True
                break
            # below the resolution of h: accept if the optimality residual drops
            if abs(gain) <= 1e-14 * abs(h):
                pg_new = np.where(mu_new > 0, np.abs(cand[1]), np.maximum(cand[1], 0.0))
                if pg_new.max() < 0.5 * pg.max():
                    accepted = True
                    break
            damp *= 10.0
        if not accepted:
            break
        damp /= 100.0
        mu = mu_new
        w, g, G, h, cf = cand
    z = z0 + N @ w
    excess = float(max(g.max(), 0.0))
    if excess > g_tol:
        # the dual stalled: an empty fiber, or a fiber too thin to resolve
        lower, _ = image_distance(spec.body, L, spec.target)
        if lower > tol:
            return None, lower
        if excess > 1e3 * g_tol:
            raise ConvergenceError(f"ellipsoid fiber solver stalled, level excess {excess:.2e}")
    return z, 0.0


# --- general fallback ----------------------------------------------------------

def _dykstra_fiber(spec: FiberSpec, anchor, tol, max_iter=DYKSTRA_MAX_ITER):
    L, body, y = spec.map, spec.body, spec.target
    x = L.project_affine(anchor, y)
    p = np.zeros_like(x)
    for _ in range(max_iter):
        q = body.project(x + p)
        p = x + p - q
        x_new = L.project_affine(q, y)
        change = float(np.abs(x_new - x).max())
        x = x_new
        if change <= 1e-12 * (1.0 + np.abs(x).max()):
            gap = float(np.linalg.norm(x - q))
            if gap <= tol:
                return x, 0.0
            return None, gap
    raise ConvergenceError("Dykstra iteration cap reached")


def image_distance(body: ConvexBody, L, y, max_iter: int = 20_000,
                   rtol: float = 1e-10) -> tuple[float, float]:
    """Bracket ``dist(y, L(body))`` by accelerated projected gradient on
    ``min_{z in body} |L z - y|^2 / 2``.

    Returns ``(lower, upper)``; the lower bound comes from the support
    function in the direction of the current residual.
    """
    L = L.as_linear_map() if isinstance(L, (ProductMap, LinearMap)) else LinearMap(L)
    M = L.matrix
    y = as_point(y, L.range_dim)
    step = 1.0 / float(np.linalg.norm(M, 2) ** 2)
    z = interior_point(body)
    v = z.copy()
    t = 1.0
    lower, upper = 0.0, np.inf
    for _ in range(max_iter):
        z_new = body.project(v - step * (M.T @ (M @ v - y)))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = z_new + ((t - 1.0) / t_new) * (z_new - z)
        z, t = z_new, t_new
        r = y - M @ z
        upper = min(upper, float(np.linalg.norm(r)))
        if upper == 0.0:
            return 0.0, 0.0
        d = r / np.linalg.norm(r)
        lower = max(lower, float(d @ y - body.support(M.T @ d)[0]))
        if upper - lower <= rtol * (1.0 + upper):
            break
    return max(lower, 0.0), upper


# --- public operations -----------------------------------------------------------

def _solve(spec: FiberSpec, anchor, tol):
    fam = _family(spec.body)
    if fam == "polytope":
        return _polytope_fiber(spec, anchor, tol)
    if fam == "ellipsoid":
        return _ellipsoid_fiber(spec, anchor, tol)
    return _dykstra_fiber(spec, anchor, tol)


def fiber_point(spec: FiberSpec, rule: SelectionRule | None = None,
                tol: float = DEFAULT_TOL):
    """Point of the fiber nearest to ``rule.anchor``; ``None`` if the fiber is
    empty.

    Raises :class:`ConvergenceError` if the result misses the feasibility
    tolerance ``tol`` (map residual in max-norm, distance to the body).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    anchor = np.zeros(spec.dim) if rule is None else rule.anchor
    anchor = as_point(anchor, spec.dim)
    z, _ = _solve(spec, anchor, tol)
    if z is None:
        return None
    residual = float(np.abs(spec.map.matrix @ z - spec.target).max())
    # polytope solvers return explicit convex combinations, members by
    # construction; re-projecting would only measure projection error
    violation = 0.0 if _family(spec.body) == "polytope" else spec.body.distance(z)
    if residual > tol or violation > tol:
        raise ConvergenceError(f"fiber point misses tolerance: residual {residual:.2e}, "
                               f"body distance {violation:.2e}")
    return z


def fiber_nonempty(spec: FiberSpec, tol: float = DEFAULT_TOL) -> bool:
    fam = _family(spec.body)
    if fam == "polytope":
        U, E, f = _polytope_system(spec)
        return float(np.abs(equality_floor(E, f).x).max()) <= tol
    lower, upper = image_distance(spec.body, spec.map, spec.target)
    return lower <= tol


def require_fiber_point(spec: FiberSpec, rule: SelectionRule | None = None,
                        tol: float = DEFAULT_TOL) -> np.ndarray:
    z = fiber_point(spec, rule, tol)
    if z is None:
        raise EmptyFiberError(f"target {np.array2string(spec.target, precision=6)} "
                              f"is outside the image of the body")
    return z


def dist_to_fiber(z, spec: FiberSpec, tol: float = DEFAULT_TOL) -> float:
    """Euclidean distance from ``z`` to the fiber."""
    z = as_point(z, spec.dim)
    p = require_fiber_point(spec, SelectionRule(z), tol)
    return float(np.linalg.norm(z - p))


def _kernel_directions(spec: FiberSpec, n_dirs: int, rng) -> np.ndarray:
    N = spec.map.kernel_basis
    k = N.shape[1]
    if k == 1:
        return N.T.copy()
    G = rng.standard_normal((n_dirs, k))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G @ N.T


def fiber_diameter(spec: FiberSpec, n_dirs: int | None = None, seed: int = 0,
                   tol: float = DEFAULT_TOL, refine: int = 5) -> float:
    """Lower bound on the diameter of the fiber.

    Widths ``max <d, z> - min <d, z>`` are taken over ``n_dirs`` random unit
    directions of the kernel (the fiber lies in a translate of it), then the
    best pair of extreme points is used as a new direction a few times.
    """
    if n_dirs is None:
        n_dirs = 100 * max(1, spec.map.kernel_basis.shape[1])
    if n_dirs < 2:
        raise ValueError("n_dirs must be at least 2")
    if spec.map.kernel_basis.shape[1] == 0:
        require_fiber_point(spec, None, tol)
        return 0.0
    rng = np.random.default_rng(seed)
    dirs = _kernel_directions(spec, n_dirs, rng)
    if _family(spec.body) == "polytope":
        if not fiber_nonempty(spec, tol):
            raise EmptyFiberError("fiber is empty")
        extremes = lambda D: _polytope_extremes(spec, D)
    else:
        center = require_fiber_point(spec, None, tol)
        reach = 1e4 * (getattr(spec.body, "scale", 1.0) + np.abs(center).max())

        def extremes(D):
            out = []
            for d in D:
                hi = require_fiber_point(spec, SelectionRule(center + reach * d), tol)
                lo = require_fiber_point(spec, SelectionRule(center - reach * d), tol)
                out.append((hi, lo))
            return out

    best, best_pair = 0.0, None
    for d, (hi, lo) in zip(dirs, extremes(dirs)):
        width = float(d @ (hi - lo))
        if width > best:
            best, best_pair = width, (hi, lo)
    for _ in range(refine):
        if best_pair is None:
            break
        diff = best_pair[0] - best_pair[1]
        nrm = np.linalg.norm(diff)
        if nrm == 0:
            break
        best = max(best, float(nrm))
        d = diff / nrm
        hi, lo = extremes([d])[0]
        width = float(d @ (hi - lo))
        if width <= best * (1.0 + 1e-12):
            best = max(best, width)
            break
        best, best_pair = width, (hi, lo)
    return best
