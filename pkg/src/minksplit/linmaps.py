"""Linear surjections, their kernels, and the two transversality tests."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import Ellipsoid, Polytope, ProductBody, as_point, orthonormal_span

RANK_RTOL = 1e-10
TRANSVERSAL_TOL = 1e-9


def _rank(A, rtol: float = RANK_RTOL) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Dense surjection ``R^n -> R^m`` (``matrix`` is ``m x n``).

    Surjectivity is checked on construction.  The kernel basis and the
    pseudo-inverse are factored once and reused by every affine projection.
    """

    matrix: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if M.ndim != 2 or M.size == 0:
            raise ValueError("matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix must be finite")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        m, n = M.shape
        U, s, Vt = np.linalg.svd(M)
        r = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
        if r < m:
            raise ValueError(f"map is not surjective: rank {r} < range dimension {m}")
        kernel = Vt[m:].T.copy()
        kernel.setflags(write=False)
        object.__setattr__(self, "_svd", (U, s, Vt))
        object.__setattr__(self, "kernel_basis", kernel)

    @property
    def range_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def pinv(self) -> np.ndarray:
        U, s, Vt = self._svd
        m = len(s)
        return (Vt[:m].T / s) @ U.T

    def __call__(self, z) -> np.ndarray:
        return self.matrix @ as_point(z, self.domain_dim)

    def particular_solution(self, y) -> np.ndarray:
        """Minimum-norm solution of ``M z = y``."""
        return self.pinv @ as_point(y, self.range_dim)

    def project_affine(self, z, y) -> np.ndarray:
        """Euclidean projection of ``z`` onto ``{z : M z = y}``."""
        z = as_point(z, self.domain_dim)
        return z - self.pinv @ (self.matrix @ z - y)

    def as_linear_map(self) -> "LinearMap":
        return self


@dataclass(frozen=True, eq=False)
class ProductMap:
    """``(y1, y2) -> left @ y1 + right @ y2``."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        Lb = np.atleast_2d(np.asarray(self.left, dtype=float))
        Rb = np.atleast_2d(np.asarray(self.right, dtype=float))
        if Lb.shape[0] != Rb.shape[0]:
            raise ValueError("left and right blocks need the same number of rows")
        Lb.setflags(write=False)
        Rb.setflags(write=False)
        object.__setattr__(self, "left", Lb)
        object.__setattr__(self, "right", Rb)
        # raises if the concatenated map is not surjective
        object.__setattr__(self, "_linear", LinearMap(np.hstack([Lb, Rb])))

    @property
    def range_dim(self) -> int:
        return self.left.shape[0]

    @property
    def domain_dims(self) -> tuple[int, int]:
        return self.left.shape[1], self.right.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self._linear.matrix

    @property
    def kernel_basis(self) -> np.ndarray:
        return self._linear.kernel_basis

    def as_linear_map(self) -> LinearMap:
        return self._linear

    def __call__(self, y1, y2) -> np.ndarray:
        return self.left @ as_point(y1, self.left.shape[1]) + \
            self.right @ as_point(y2, self.right.shape[1])


def make_sum_map(d: int) -> ProductMap:
    """The Minkowski-sum map ``(y1, y2) -> y1 + y2`` on ``R^d x R^d``."""
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    eye = np.eye(int(d))
    return ProductMap(eye, eye)


def coordinate_projection(n: int, keep) -> LinearMap:
    """Map ``R^n -> R^len(keep)`` that keeps the listed coordinates."""
    keep = list(keep)
    M = np.zeros((len(keep), n))
    M[np.arange(len(keep)), keep] = 1.0
    return LinearMap(M)


def kernel_transversal_to_factors(L: ProductMap) -> bool:
    """True iff ``Ker L`` meets ``Y1 x {0}`` and ``{0} x Y2`` only at 0.

    With ``N = [N1; N2]`` an orthonormal kernel basis, a kernel vector
    ``N c`` lies in ``Y1 x {0}`` iff ``N2 c = 0``; so the test is that both
    coordinate slices of the kernel basis have full column rank.
    """
    N = L.kernel_basis
    n1, _ = L.domain_dims
    k = N.shape[1]
    if k == 0:
        return True
    return _rank(N[n1:], TRANSVERSAL_TOL) == k and _rank(N[:n1], TRANSVERSAL_TOL) == k


@dataclass(frozen=True)
class TransversalityResult:
    passed: bool
    facet: int | None = None
    direction: np.ndarray | None = None
    vertex_indices: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def _intersection_direction(D: np.ndarray, K: np.ndarray, tol: float):
    """Unit vector in span(D) ∩ span(K) (orthonormal columns), or None."""
    if D.shape[1] == 0 or K.shape[1] == 0:
        return None
    R = K - D @ (D.T @ K)  # sines of the principal angles are its singular values
    _, s, Vt = np.linalg.svd(R, full_matrices=False)
    if s[-1] <= tol:
        v = K @ Vt[-1]
        return v / np.linalg.norm(v)
    return None


def transversality_check(C, L) -> TransversalityResult:
    """Does the relative boundary of ``C`` avoid segments parallel to ``Ker L``?

    For a polytope every boundary segment lies in a facet, and a facet whose
    direction space meets the kernel contains such a segment, so it suffices
    to scan facets.  Strictly convex bodies pass without inspection.
    """
    L = L.as_linear_map()
    if C.dim != L.domain_dim:
        raise ValueError(f"dimension mismatch: body in R^{C.dim}, map on R^{L.domain_dim}")
    if isinstance(C, Ellipsoid):
        return TransversalityResult(True)
    if isinstance(C, ProductBody):
        if all(isinstance(b, Ellipsoid) for b in C.blocks):
            raise NotImplementedError(
                "products of curved bodies: use kernel_transversal_to_factors")
        raise NotImplementedError("transversality of product bodies is not supported")
    if not isinstance(C, Polytope):
        raise TypeError(f"unsupported body {type(C).__name__}")
    K = L.kernel_basis
    if K.shape[1] == 0:
        return TransversalityResult(True)
    V = C.vertices
    for i, facet in enumerate(C.facets()):
        idx = list(facet.vertex_indices)
        D = orthonormal_span((V[idx[1:]] - V[idx[0]]).T, rtol=1e-10) if len(idx) > 1 \
            else np.zeros((C.dim, 0))
        v = _intersection_direction(D, K, TRANSVERSAL_TOL)
        if v is not None:
            return TransversalityResult(False, facet=i, direction=v,
                                        vertex_indices=facet.vertex_indices)
    return TransversalityResult(True)
