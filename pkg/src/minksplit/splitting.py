"""Splitting points and sampled maps through the fiber selection.

A split of ``c`` is a pair ``(a, b)`` in ``A x B`` with ``L(a, b) = c``.  For a
sampled map the split is taken sample by sample, which is exactly the
composition with the fiber map ``x -> (A x B) ∩ L^{-1}(f(x))``; continuity of
the result is then audited with :func:`continuity_report`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyFiberError
from .fibers import DEFAULT_TOL, FiberSpec, SelectionRule, fiber_point
from .geometry import ConvexBody, ProductBody, as_point
from .linmaps import LinearMap, ProductMap


@dataclass(frozen=True)
class SplitResult:
    a: np.ndarray
    b: np.ndarray
    residual: float  # |L(a, b) - c| in max-norm
    body_violation: float  # max(dist(a, A), dist(b, B))

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])


def _as_product_map(L, A, B) -> ProductMap:
    if isinstance(L, ProductMap):
        if L.domain_dims != (A.dim, B.dim):
            raise ValueError(f"map blocks act on R^{L.domain_dims[0]} x R^{L.domain_dims[1]}, "
                             f"bodies live in R^{A.dim} x R^{B.dim}")
        return L
    M = L.matrix if isinstance(L, LinearMap) else np.asarray(L, dtype=float)
    if M.shape[1] != A.dim + B.dim:
        raise ValueError("map domain does not match A x B")
    return ProductMap(M[:, :A.dim], M[:, A.dim:])


def split(A: ConvexBody, B: ConvexBody, L, c, rule: SelectionRule | None = None,
          tol: float = DEFAULT_TOL) -> SplitResult:
    """Min-norm-to-anchor split of ``c`` over ``A x B``.

    Raises
    ------
    EmptyFiberError
        If ``c`` is not in ``L(A, B)``.
    """
    L = _as_product_map(L, A, B)
    body = ProductBody((A, B))
    spec = FiberSpec(body, L, c)
    z = fiber_point(spec, rule, tol)
    if z is None:
        raise EmptyFiberError(f"point {np.array2string(spec.target, precision=6)} "
                              f"is outside L(A, B)")
    return _result(A, B, L, z, spec.target)


def _result(A, B, L, z, c) -> SplitResult:
    a, b = z[:A.dim].copy(), z[A.dim:].copy()
    residual = float(np.abs(L(a, b) - c).max())
    return SplitResult(a, b, residual, max(A.distance(a), B.distance(b)))


@dataclass(frozen=True)
class SampledMap:
    """A map sampled on a finite complex: ids, adjacency edges, one value per
    sample.  ``edges`` holds index pairs into ``ids``."""

    ids: tuple
    edges: tuple
    values: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.values, dtype=float))
        if len(V) != len(self.ids):
            raise ValueError("one value per sample id is required")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("sample ids must be unique")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < len(V) and 0 <= j < len(V)) or i == j:
                raise ValueError(f"bad edge ({i}, {j})")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", V)

    @classmethod
    def path(cls, values, ids=None, closed: bool = False) -> "SampledMap":
        V = np.atleast_2d(np.asarray(values, dtype=float))
        k = len(V)
        ids = tuple(range(k)) if ids is None else tuple(ids)
        edges = [(i, i + 1) for i in range(k - 1)]
        if closed and k > 2:
            edges.append((k - 1, 0))
        return cls(ids, tuple(edges), V)

    @classmethod
    def from_neighbors(cls, ids, neighbors, values) -> "SampledMap":
        """Build from per-sample neighbor id lists (each edge kept once)."""
        ids = tuple(ids)
        pos = {s: i for i, s in enumerate(ids)}
        edges = set()
        for i, nbrs in enumerate(neighbors):
            for s in nbrs:
                if s not in pos:
                    raise ValueError(f"unknown neighbor id {s!r} of sample {ids[i]!r}")
                j = pos[s]
                if j != i:
                    edges.add((min(i, j), max(i, j)))
        return cls(ids, tuple(sorted(edges)), values)

    def __len__(self) -> int:
        return len(self.ids)


def split_sampled_map(A: ConvexBody, B: ConvexBody, L, f: SampledMap,
                      rule: SelectionRule | None = None, tol: float = DEFAULT_TOL,
                      tracking: bool = False) -> list[SplitResult]:
    """Split every sample of ``f``.

    With ``tracking=True`` each sample after the first uses the previous split
    as its anchor.  That is a different selection (path dependent) and is off
    by default.
    """
    L = _as_product_map(L, A, B)
    body = ProductBody((A, B))
    out = []
    anchor_rule = rule
    for sid, c in zip(f.ids, f.values):
        spec = FiberSpec(body, L, c)
        z = fiber_point(spec, anchor_rule, tol)
        if z is None:
            raise EmptyFiberError(f"sample {sid!r}: value outside L(A, B)")
        out.append(_result(A, B, L, z, spec.target))
        if tracking:
            anchor_rule = SelectionRule(z)
    return out


@dataclass(frozen=True)
class ContinuityReport:
    edges: tuple
    jumps: np.ndarray
    max_jump: float
    argmax_edge: int
    refinement_ratio: float | None = None
    fine_max_jump: float | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _points(samples, component: str) -> np.ndarray:
    rows = []
    for s in samples:
        if isinstance(s, SplitResult):
            rows.append({"a": s.a, "b": s.b, "both": s.point}[component])
        else:
            rows.append(as_point(s))
    return np.array(rows)


def _jumps(P: np.ndarray, edges, kernel) -> np.ndarray:
    if not edges:
        return np.zeros(0)
    I = np.array([e[0] for e in edges])
    J = np.array([e[1] for e in edges])
    D = P[J] - P[I]
    if kernel is not None:
        D = D @ np.asarray(kernel, dtype=float)
    return np.linalg.norm(D, axis=1)


def _edges_from(adjacency, k):
    if adjacency is None or adjacency == "path":
        return tuple((i, i + 1) for i in range(k - 1))
    if adjacency == "cycle":
        return tuple((i, (i + 1) % k) for i in range(k))
    if isinstance(adjacency, SampledMap):
        return adjacency.edges
    return tuple((int(i), int(j)) for i, j in adjacency)


def continuity_report(splits, adjacency=None, fine=None, fine_adjacency=None,
                      component: str = "both", kernel=None) -> ContinuityReport:
    """Per-edge jump norms of a sampled selection.

    Parameters
    ----------
    splits : list of SplitResult or points
    adjacency : "path" (default), "cycle", a SampledMap, or index pairs
    fine, fine_adjacency : optional second sampling of the same map at half
        the step; ``refinement_ratio`` is then ``max_jump(fine) / max_jump``.
    component : "a", "b" or "both", which part of a split to compare.
    kernel : optional matrix with orthonormal columns; jumps are measured
        after projecting differences onto its span (e.g. the fiber direction).
    """
    if component not in ("a", "b", "both"):
        raise ValueError("component must be 'a', 'b' or 'both'")
    if len(splits) < 2:
        raise ValueError("continuity_report needs at least two samples")
    P = _points(splits, component)
    edges = _edges_from(adjacency, len(P))
    jumps = _jumps(P, edges, kernel)
    k = int(np.argmax(jumps)) if len(jumps) else -1
    mx = float(jumps[k]) if len(jumps) else 0.0
    ratio = fine_mx = None
    if fine is not None:
        Pf = _points(fine, component)
        fj = _jumps(Pf, _edges_from(fine_adjacency, len(Pf)), kernel)
        fine_mx = float(fj.max()) if len(fj) else 0.0
        ratio = fine_mx / mx if mx > 0 else (0.0 if fine_mx == 0 else np.inf)
    return ContinuityReport(edges, jumps, mx, k, ratio, fine_mx)
