"""Compact convex bodies: V-polytopes, ellipsoids and finite products of them.

Points are plain 1-d ``numpy`` arrays.  Bodies are immutable; derived data
(affine hulls, facets, eigen-decompositions) is computed once and cached.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from ._wolfe import nearest_in_hull
from .exceptions import ConvergenceError

FEAS_TOL = 1e-8
OPT_TOL = 1e-10
FACET_DIM_CAP = 6


def as_point(x, dim: int | None = None) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"expected a point, got array of shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and len(p) != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {len(p)}")
    return p


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def orthonormal_span(vectors, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) for the span of the given column vectors."""
    A = np.atleast_2d(np.asarray(vectors, dtype=float))
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if len(s) == 0 or s[0] == 0:
        return np.zeros((A.shape[0], 0))
    r = int(np.sum(s > rtol * s[0]))
    return U[:, :r]


class ConvexBody:
    """Common interface; concrete bodies override the three primitives."""

    dim: int

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def support(self, direction) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def distance(self, x) -> float:
        x = as_point(x, self.dim)
        return float(np.linalg.norm(self.project(x) - x))

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return self.distance(x) <= tol


@dataclass(frozen=True)
class Facet:
    """A facet relative to the affine hull: ``<normal, v> <= offset``."""

    normal: np.ndarray
    offset: float
    vertex_indices: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """Convex hull of a finite vertex list.

    The constructor trusts that ``vertices`` are extreme points; use
    :func:`convex_hull` to reduce an arbitrary point cloud.
    """

    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0:
            raise ValueError("polytope needs at least one vertex")
        if not np.all(np.isfinite(V)):
            raise ValueError("vertices must be finite")
        object.__setattr__(self, "vertices", _frozen(V))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def _affine(self) -> tuple[np.ndarray, np.ndarray]:
        origin = self.vertices.mean(axis=0)
        basis = orthonormal_span((self.vertices - origin).T, rtol=1e-10)
        if basis.shape[1] and np.abs(self.vertices - origin).max() < 1e-14:
            basis = basis[:, :0]
        return origin, basis

    @property
    def aff_dim(self) -> int:
        return self._affine[1].shape[1]

    @property
    def scale(self) -> float:
        return float(np.abs(self.vertices).max()) + 1.0

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        if len(self.vertices) == 1:
            return self.vertices[0].copy()
        return nearest_in_hull(self.vertices, x).x

    def support(self, direction):
        d = _direction(direction, self.dim)
        vals = self.vertices @ d
        i = int(np.argmax(vals))
        return float(vals[i]), self.vertices[i].copy()

    def facets(self) -> list[Facet]:
        """Facets relative to the affine hull (computed once, then cached)."""
        return self._facets

    @cached_property
    def _facets(self) -> list[Facet]:
        origin, B = self._affine
        r = B.shape[1]
        if r > FACET_DIM_CAP:
            raise ValueError(f"facet enumeration capped at affine dimension "
                             f"{FACET_DIM_CAP}, got {r}")
        if r == 0:
            return []
        Y = (self.vertices - origin) @ B
        tol = 1e-9 * (np.abs(Y).max() + 1.0)
        if r == 1:
            lo, hi = int(np.argmin(Y[:, 0])), int(np.argmax(Y[:, 0]))
            n = B[:, 0]
            return [Facet(_frozen(-n), float(-(self.vertices[lo] @ n)), (lo,)),
                    Facet(_frozen(n), float(self.vertices[hi] @ n), (hi,))]
        hull = ConvexHull(Y)
        eqs = hull.equations
        # qhull triangulates; glue adjacent simplices with the same hyperplane
        parent = np.arange(len(eqs))

        def root(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, nbrs in enumerate(hull.neighbors):
            for j in nbrs:
                if j > i and np.abs(eqs[i] - eqs[j]).max() < 1e-9:
                    parent[root(i)] = root(j)
        groups = sorted({root(i) for i in range(len(eqs))})
        facets: list[Facet] = []
        for g in groups:
            nrm, off = eqs[g][:-1], eqs[g][-1]
            on = np.flatnonzero(np.abs(Y @ nrm + off) <= tol)
            normal = B @ nrm
            offset = float(-off + normal @ origin)
            facets.append(Facet(_frozen(normal), offset, tuple(int(i) for i in on)))
        return facets


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """``{x : (x - center)^T shape^{-1} (x - center) <= 1}`` with ``shape`` SPD."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = as_point(self.center)
        Q = np.atleast_2d(np.asarray(self.shape, dtype=float))
        if Q.shape != (len(c), len(c)):
            raise ValueError(f"shape must be {len(c)}x{len(c)}, got {Q.shape}")
        if np.abs(Q - Q.T).max() > 1e-12 * max(1.0, np.abs(Q).max()):
            raise ValueError("shape matrix must be symmetric")
        Q = 0.5 * (Q + Q.T)
        lam = np.linalg.eigvalsh(Q)
        if lam.min() <= 0:
            raise ValueError("shape matrix must be positive definite")
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "shape", _frozen(Q))

    @classmethod
    def ball(cls, center, radius: float = 1.0) -> "Ellipsoid":
        c = as_point(center)
        return cls(c, radius ** 2 * np.eye(len(c)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @cached_property
    def _eig(self):
        lam, U = np.linalg.eigh(self.shape)
        return lam, U

    @cached_property
    def shape_inv(self) -> np.ndarray:
        lam, U = self._eig
        return (U / lam) @ U.T

    @property
    def scale(self) -> float:
        return float(np.abs(self.center).max() + np.sqrt(self._eig[0].max())) + 1.0

    def level(self, x) -> float:
        u = as_point(x, self.dim) - self.center
        return float(u @ self.shape_inv @ u)

    def project(self, x, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
        x = as_point(x, self.dim)
        lam, U = self._eig
        w = U.T @ (x - self.center)
        if np.sum(w * w / lam) <= 1.0:
            return x.copy()
        # KKT: y = lam w / (lam + t); find t >= 0 with sum lam w^2 / (lam + t)^2 = 1.
        # phi is convex decreasing, so Newton from t = 0 increases monotonically.
        lw2 = lam * w * w
        t = 0.0
        for _ in range(max_iter):
            den = lam + t
            phi = np.sum(lw2 / den ** 2) - 1.0
            dphi = -2.0 * np.sum(lw2 / den ** 3)
            step = -phi / dphi
            t += step
            if abs(step) <= tol * max(1.0, t):
                break
        else:
            raise ConvergenceError("ellipsoid projection: Newton iteration cap reached")
        y = lam * w / (lam + t)
        return self.center + U @ y

    def support(self, direction):
        d = _direction(direction, self.dim)
        Qd = self.shape @ d
        s = float(np.sqrt(d @ Qd))
        return float(self.center @ d + s), self.center + Qd / s


@dataclass(frozen=True, eq=False)
class ProductBody(ConvexBody):
    """Cartesian product of bodies, acting on concatenated coordinates."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("product needs at least one block")
        for b in blocks:
            if not isinstance(b, ConvexBody):
                raise TypeError(f"block {b!r} is not a ConvexBody")
        object.__setattr__(self, "blocks", blocks)

    @cached_property
    def slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b.dim))
            start += b.dim
        return tuple(out)

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    @property
    def scale(self) -> float:
        return max(getattr(b, "scale", 1.0) for b in self.blocks)

    def split(self, z):
        z = as_point(z, self.dim)
        return [z[s] for s in self.slices]

    def project(self, x) -> np.ndarray:
        parts = self.split(x)
        return np.concatenate([b.project(p) for b, p in zip(self.blocks, parts)])

    def support(self, direction):
        d = as_point(direction, self.dim)
        if not np.any(d):
            raise ValueError("support direction must be nonzero")
        val, pts = 0.0, []
        for b, s in zip(self.blocks, self.slices):
            ds = d[s]
            if np.any(ds):
                v, p = b.support(ds)
            else:
                p = b.project(_any_point(b))
                v = 0.0
            val += v
            pts.append(p)
        return val, np.concatenate(pts)


@dataclass(frozen=True, eq=False)
class MinkowskiSandwich(ConvexBody):
    """Polytope approximation of a Minkowski sum that involves curved summands.

    ``inner`` is the hull of exact support points of the sum, so it lies inside
    the true sum.  The true sum lies inside the halfspaces
    ``outer_normals @ x <= outer_offsets``.  ``gap`` is the largest observed
    support-function difference between the true sum and ``inner`` over a
    dense set of test directions, i.e. a sampled Hausdorff distance.
    """

    inner: Polytope
    outer_normals: np.ndarray
    outer_offsets: np.ndarray
    gap: float
    summands: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.inner.dim

    def project(self, x):
        return self.inner.project(x)

    def support(self, direction):
        return self.inner.support(direction)


def _direction(direction, dim) -> np.ndarray:
    d = as_point(direction, dim)
    if not np.any(d):
        raise ValueError("support direction must be nonzero")
    return d


def _any_point(body: ConvexBody) -> np.ndarray:
    if isinstance(body, Polytope):
        return body.vertices[0]
    if isinstance(body, Ellipsoid):
        return body.center
    if isinstance(body, ProductBody):
        return np.concatenate([_any_point(b) for b in body.blocks])
    return body.project(np.zeros(body.dim))


def interior_point(body: ConvexBody) -> np.ndarray:
    """A point of the relative interior (vertex centroid, centre, ...)."""
    if isinstance(body, Polytope):
        return body.vertices.mean(axis=0)
    if isinstance(body, Ellipsoid):
        return body.center.copy()
    if isinstance(body, ProductBody):
        return np.concatenate([interior_point(b) for b in body.blocks])
    if isinstance(body, MinkowskiSandwich):
        return interior_point(body.inner)
    raise TypeError(f"unsupported body {type(body).__name__}")


# --- hull construction -------------------------------------------------------

def is_convex_combination_of_others(points, i: int, tol: float = 1e-9) -> bool:
    """LP test: can ``points[i]`` be written as a convex combination of the rest?"""
    P = np.asarray(points, dtype=float)
    others = np.delete(P, i, axis=0)
    if len(others) == 0:
        return False
    k = len(others)
    A_eq = np.vstack([others.T, np.ones((1, k))])
    b_eq = np.concatenate([P[i], [1.0]])
    # minimise the l1 slack of the representation
    d = P.shape[1]
    A = np.hstack([A_eq, np.vstack([np.eye(d), np.zeros((1, d))]),
                   -np.vstack([np.eye(d), np.zeros((1, d))])])
    c = np.concatenate([np.zeros(k), np.ones(2 * d)])
    res = linprog(c, A_eq=A, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return False
    scale = np.abs(P).max() + 1.0
    return bool(res.fun <= tol * scale)


def convex_hull(points) -> Polytope:
    """Extreme points of a finite point set, as a :class:`Polytope`.

    Affine hulls of dimension at most six go through Qhull in affine
    coordinates; higher-dimensional inputs are reduced point by point with an
    LP membership test.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        raise ValueError("convex_hull of an empty point set")
    if P.ndim != 2:
        raise ValueError("points must form a 2-d array")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must be finite")
    _, first = np.unique(P, axis=0, return_index=True)
    P = P[np.sort(first)]  # drop duplicates, keep input order
    if len(P) == 1:
        return Polytope(P)
    origin = P.mean(axis=0)
    B = orthonormal_span((P - origin).T, rtol=1e-10)
    r = B.shape[1]
    if r == 0:
        return Polytope(P[:1])
    Y = (P - origin) @ B
    if r == 1:
        return Polytope(P[[int(np.argmin(Y[:, 0])), int(np.argmax(Y[:, 0]))]])
    if r <= FACET_DIM_CAP and len(P) > r + 1:
        try:
            hull = ConvexHull(Y)
            return Polytope(P[np.sort(hull.vertices)])
        except QhullError:
            pass
    if len(P) == r + 1:
        return Polytope(P)  # affinely independent
    keep = [i for i in range(len(P)) if not is_convex_combination_of_others(P, i)]
    return Polytope(P[keep])


# --- public operations ---------------------------------------------------------

def membership(body: ConvexBody, x, tol: float = FEAS_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return body.distance(as_point(x, body.dim)) <= tol


def project_point(body: ConvexBody, x) -> np.ndarray:
    return body.project(as_point(x, body.dim))


def distance(body: ConvexBody, x) -> float:
    return body.distance(x)


def support(body: ConvexBody, direction) -> tuple[float, np.ndarray]:
    """``(max_{x in body} <direction, x>, maximiser)``."""
    return body.support(direction)


def translate(body: ConvexBody, u) -> ConvexBody:
    u = as_point(u, body.dim)
    if isinstance(body, Polytope):
        return Polytope(body.vertices + u)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(body.center + u, body.shape)
    if isinstance(body, ProductBody):
        return ProductBody(tuple(translate(b, u[s]) for b, s in zip(body.blocks, body.slices)))
    raise TypeError(f"cannot translate {type(body).__name__}")


def _sample_directions(dim: int, count: int, seed: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.c_[np.cos(t), np.sin(t)]
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((count, dim))
    D = np.vstack([D, np.eye(dim), -np.eye(dim)])
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def minkowski_sum(A: ConvexBody, B: ConvexBody, n_dirs: int | None = None,
                  seed: int = 0):
    """Minkowski sum ``A + B``.

    Two polytopes give the exact hull of pairwise vertex sums.  Any curved
    summand gives a :class:`MinkowskiSandwich` built from ``n_dirs`` support
    evaluations (default ``2 * 10**dim``).
    """
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")
    if isinstance(A, Polytope) and isinstance(B, Polytope):
        sums = (A.vertices[:, None, :] + B.vertices[None, :, :]).reshape(-1, A.dim)
        return convex_hull(sums)
    dim = A.dim
    if n_dirs is None:
        n_dirs = 2 * 10 ** dim
    D = _sample_directions(dim, n_dirs, seed)
    vals, pts = [], []
    for d in D:
        va, pa = A.support(d)
        vb, pb = B.support(d)
        vals.append(va + vb)
        pts.append(pa + pb)
    inner = convex_hull(np.array(pts))
    check = _sample_directions(dim, 4 * n_dirs + 1, seed + 1)
    gap = 0.0
    for d in check:
        true = A.support(d)[0] + B.support(d)[0]
        gap = max(gap, true - inner.support(d)[0])
    return MinkowskiSandwich(inner=inner, outer_normals=_frozen(D),
                             outer_offsets=_frozen(vals), gap=float(gap),
                             summands=(A, B))


def is_strictly_convex(body: ConvexBody) -> bool:
    """No segment in the relative boundary.

    Points and segments count as strictly convex because their relative
    boundary has no segment.  A product is strictly convex only when at most
    one factor is more than a point and that factor is strictly convex.
    """
    if isinstance(body, Ellipsoid):
        return True
    if isinstance(body, Polytope):
        return body.aff_dim <= 1
    if isinstance(body, ProductBody):
        nontrivial = [b for b in body.blocks
                      if not (isinstance(b, Polytope) and b.aff_dim == 0)]
        return len(nontrivial) <= 1 and all(is_strictly_convex(b) for b in nontrivial)
    if isinstance(body, MinkowskiSandwich):
        return is_strictly_convex(body.inner)
    raise TypeError(f"unsupported body {type(body).__name__}")


def barycentric_margin(vertices, x) -> float:
    """``max min_i lam_i`` over representations ``x = sum lam_i v_i``;
    ``-inf`` when ``x`` is outside the hull."""
    V = np.asarray(vertices, dtype=float)
    k, d = V.shape
    # variables (lam_1..lam_k, t); maximise t subject to lam_i >= t
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_eq = np.hstack([np.vstack([V.T, np.ones((1, k))]), np.zeros((d + 1, 1))])
    b_eq = np.concatenate([x, [1.0]])
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    b_ub = np.zeros(k)
    bounds = [(0, None)] * k + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status != 0:
        return -np.inf
    return float(-res.fun)


def is_relative_interior_point(body: ConvexBody, x) -> bool:
    x = as_point(x, body.dim)
    if isinstance(body, Polytope):
        return barycentric_margin(body.vertices, x) > 1e-9
    if isinstance(body, Ellipsoid):
        return body.level(x) < 1.0 - 1e-9
    if isinstance(body, ProductBody):
        return all(is_relative_interior_point(b, p)
                   for b, p in zip(body.blocks, body.split(x)))
    if isinstance(body, MinkowskiSandwich):
        return is_relative_interior_point(body.inner, x)
    raise TypeError(f"unsupported body {type(body).__name__}")
