"""Named bodies and the diagnostic experiments built on them.

* the spiral hull, whose horizontal projection has no continuous section;
* the flat disk with one raised point, which does have one;
* finite truncations of the Schauder-type body, where openness at the
  center degrades as the truncation grows;
* random ellipsoid pairs, where min-norm splitting is continuous.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky
from scipy.spatial import ConvexHull

from .exceptions import EmptyFiberError
from .fibers import (DEFAULT_TOL, FiberSpec, SelectionRule, dist_to_fiber,
                     fiber_diameter, fiber_point)
from .geometry import (ConvexBody, Ellipsoid, Polytope, as_point, convex_hull,
                       distance)
from .linmaps import LinearMap, ProductMap, make_sum_map
from .splitting import (ContinuityReport, SampledMap, continuity_report,
                        split_sampled_map)

# --- bodies ------------------------------------------------------------------


def spiral_points(n: int) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(n + 1) / n
    return np.column_stack([np.cos(t), np.sin(t), t])


def spiral_body(n: int = 720) -> Polytope:
    """Hull of one turn of the helix ``(cos t, sin t, t)``, sampled at
    ``t = 2 pi k / n`` for ``k = 0..n``."""
    if int(n) != n or n < 4:
        raise ValueError("spiral_body needs n >= 4")
    C = convex_hull(spiral_points(int(n)))
    if len(C.vertices) != n + 1:
        raise RuntimeError("helix samples should all be extreme")
    return C


def horizontal_projection() -> LinearMap:
    """``(x, y, z) -> (x, y)``."""
    return LinearMap(np.eye(2, 3))


def remark2_body(n: int = 720) -> Polytope:
    """Hull of the regular ``n``-gon in the plane ``z = 0`` and the point
    ``(1, 0, 1)`` above its vertex ``(1, 0, 0)``."""
    if int(n) != n or n < 4:
        raise ValueError("remark2_body needs n >= 4")
    t = 2.0 * np.pi * np.arange(int(n)) / n
    pts = np.column_stack([np.cos(t), np.sin(t), np.zeros(len(t))])
    return convex_hull(np.vstack([pts, [1.0, 0.0, 1.0]]))


def schauder_points(N: int) -> np.ndarray:
    eye = np.eye(N)
    k = np.arange(1, N + 1)[:, None]
    low = eye / k
    high = 2.0 * eye[0] - low
    return np.vstack([low, high])


def schauder_body(N: int) -> Polytope:
    """``conv{e_k / k, 2 e_1 - e_k / k : k = 1..N}`` in ``R^N``.

    For ``k = 1`` both points equal ``e_1``, the center of symmetry, so the
    body has ``2N - 2`` vertices.
    """
    if int(N) != N or not 2 <= N <= 64:
        raise ValueError("schauder_body needs 2 <= N <= 64")
    return convex_hull(schauder_points(int(N)))


def schauder_projection(N: int) -> LinearMap:
    """The projection killing ``e_1``, as the surjection ``R^N -> R^(N-1)``
    that drops the first coordinate."""
    if N < 2:
        raise ValueError("N must be at least 2")
    return LinearMap(np.eye(N - 1, N, k=1))


def lemma25_bound(lam: float, n: int, norm_P1: float = 1.0, norm_Pn: float = 1.0) -> float:
    """Lower bound ``min(lam / (3 n |P_n|), lam / (3 |P_1|))`` on the distance
    from ``lam e_1 + e_n / n`` to the Schauder body."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if n <= 1:
        raise ValueError("n must exceed 1")
    if norm_P1 <= 0 or norm_Pn <= 0:
        raise ValueError("projection norms must be positive")
    return float(min(lam / (3.0 * n * norm_Pn), lam / (3.0 * norm_P1)))


def random_ellipsoid(rng, dim: int, spread: float = 1.0) -> Ellipsoid:
    G = rng.standard_normal((dim, dim))
    return Ellipsoid(spread * rng.standard_normal(dim), G @ G.T + 0.1 * np.eye(dim))


def random_polytope(rng, dim: int, n_points: int) -> Polytope:
    return convex_hull(rng.standard_normal((n_points, dim)))


# --- openness probe --------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    """Distances from ``base_point`` to the fibers over ``targets``.

    ``verdict`` is "OpenAt", "NotOpenAt" (with ``epsilon``) or "Inconclusive"
    when fewer than ``min_tail`` targets lie within ``radius`` of ``L(z)``.
    """

    base_point: np.ndarray
    image: np.ndarray
    targets: np.ndarray
    dists: np.ndarray  # nan where the target is outside L(C)
    feasible: np.ndarray
    tail: np.ndarray  # indices of targets within radius of L(z)
    verdict: str
    epsilon: float | None
    modulus: float  # max dist / |y - L(z)| over feasible targets

    def __str__(self) -> str:
        eps = "" if self.epsilon is None else f"({self.epsilon:.6g})"
        return f"{self.verdict}{eps}"


def openness_probe(C: ConvexBody, L, z, targets, tol: float = DEFAULT_TOL,
                   radius: float = 1e-3, min_tail: int = 5) -> ProbeReport:
    """Sample ``dist(z, C ∩ L^{-1}(y))`` over targets ``y``.

    The restriction of ``L`` is open at ``z`` iff these distances go to zero
    as ``y -> L(z)``.  The verdict looks at the targets within ``radius`` of
    ``L(z)``: ``NotOpenAt(eps)`` if all their distances stay above
    ``eps >= 10 tol``, ``OpenAt`` otherwise.
    """
    L = L.as_linear_map() if isinstance(L, (LinearMap, ProductMap)) else LinearMap(L)
    z = as_point(z, C.dim)
    if C.distance(z) > tol:
        raise ValueError("base point is not in the body")
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    if Y.shape[1] != L.range_dim:
        raise ValueError("targets have the wrong dimension")
    Lz = L(z)
    dists = np.full(len(Y), np.nan)
    feasible = np.zeros(len(Y), dtype=bool)
    for i, y in enumerate(Y):
        spec = FiberSpec(C, L, y)
        p = fiber_point(spec, SelectionRule(z), tol)
        if p is None:
            continue
        feasible[i] = True
        dists[i] = float(np.linalg.norm(z - p))
    offsets = np.linalg.norm(Y - Lz, axis=1)
    tail = np.flatnonzero(feasible & (offsets <= radius))
    moved = feasible & (offsets > 0)
    modulus = float(np.max(dists[moved] / offsets[moved])) if moved.any() else 0.0
    if len(tail) < min_tail:
        verdict, eps = "Inconclusive", None
    else:
        eps = float(dists[tail].min())
        if eps >= 10.0 * tol:
            verdict = "NotOpenAt"
        else:
            verdict, eps = "OpenAt", None
    return ProbeReport(z, Lz, Y, dists, feasible, tail, verdict, eps, modulus)


def geometric_targets(base, start, ratio: float = 0.25, count: int = 30) -> np.ndarray:
    """``base + ratio^k (start - base)`` for ``k = 1..count``."""
    base = np.asarray(base, dtype=float)
    start = np.asarray(start, dtype=float)
    r = ratio ** np.arange(1, count + 1)
    return base + r[:, None] * (start - base)


# --- boundary paths -----------------------------------------------------------


def image_polygon(C: Polytope, L) -> ConvexHull:
    L = L.as_linear_map() if isinstance(L, (LinearMap, ProductMap)) else LinearMap(L)
    if not isinstance(C, Polytope):
        raise TypeError("image_polygon needs a polytope")
    return ConvexHull(C.vertices @ L.matrix.T)


def ray_exit(hull: ConvexHull, directions, center=None) -> np.ndarray:
    """Points where rays from ``center`` leave the hull."""
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    c = np.zeros(D.shape[1]) if center is None else np.asarray(center, dtype=float)
    Nrm, off = hull.equations[:, :-1], hull.equations[:, -1]
    slack = -(off + Nrm @ c)
    if slack.min() <= 0:
        raise ValueError("ray center must be interior to the image")
    rate = D @ Nrm.T
    with np.errstate(divide="ignore"):
        s = np.where(rate > 0, slack / rate, np.inf).min(axis=1)
    return c + s[:, None] * D


def boundary_targets(C: Polytope, L, angles, center=None) -> np.ndarray:
    """Boundary points of the planar image ``L(C)`` in the given directions."""
    angles = np.asarray(angles, dtype=float)
    D = np.column_stack([np.cos(angles), np.sin(angles)])
    return ray_exit(image_polygon(C, L), D, center)


@dataclass(frozen=True)
class PathExperiment:
    angles: np.ndarray
    targets: np.ndarray
    selections: np.ndarray
    report: ContinuityReport  # jumps of the fiber-direction component
    full_report: ContinuityReport  # plain Euclidean jumps

    @property
    def start_height(self) -> float:
        return float(self.selections[0, -1])

    @property
    def end_height(self) -> float:
        return float(self.selections[-1, -1])


def boundary_path_experiment(C: Polytope, L, delta: float = 0.01, n_path: int = 1000,
                             anchor=None, tol: float = DEFAULT_TOL) -> PathExperiment:
    """Min-norm selection along the boundary of the planar image ``L(C)``.

    Targets sit on the image boundary at ``n_path`` equally spaced angles in
    ``[delta, 2 pi - delta]``; the path is closed by the edge from the last
    sample back to the first.  Jumps are reported for the component of the
    selection along ``Ker L`` (``report``) and in full (``full_report``);
    the first is blind to the motion of the target itself.
    """
    L = L.as_linear_map() if isinstance(L, (LinearMap, ProductMap)) else LinearMap(L)
    if L.range_dim != 2:
        raise ValueError("boundary paths need a planar image")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    if n_path < 2:
        raise ValueError("n_path must be at least 2")
    angles = np.linspace(delta, 2.0 * np.pi - delta, n_path)
    Y = boundary_targets(C, L, angles)
    rule = SelectionRule(np.zeros(C.dim) if anchor is None else anchor)
    S = np.empty((n_path, C.dim))
    for i, y in enumerate(Y):
        p = fiber_point(FiberSpec(C, L, y), rule, tol)
        if p is None:
            raise EmptyFiberError(f"boundary target {i} fell outside the image")
        S[i] = p
    report = continuity_report(list(S), "cycle", kernel=L.kernel_basis)
    full = continuity_report(list(S), "cycle")
    return PathExperiment(angles, Y, S, report, full)


def spiral_jump_experiment(n: int = 720, delta: float = 0.01, n_path: int = 1000,
                           anchor=None) -> PathExperiment:
    if n < 100:
        raise ValueError("spiral_jump_experiment needs n >= 100")
    return boundary_path_experiment(spiral_body(n), horizontal_projection(), delta,
                                    n_path, anchor)


def remark2_jump_experiment(n: int = 720, delta: float = 0.01, n_path: int = 1000,
                            anchor=None) -> PathExperiment:
    return boundary_path_experiment(remark2_body(n), horizontal_projection(), delta,
                                    n_path, anchor)


def spiral_probe_targets(n: int = 720, ms=None) -> np.ndarray:
    """Image-boundary points at angles ``2 pi - 1/m`` (default ``m = 1..50``)."""
    ms = np.arange(1, 51) if ms is None else np.asarray(ms, dtype=float)
    if np.any(ms <= 1.0 / (2.0 * np.pi)):
        raise ValueError("m must exceed 1 / (2 pi)")
    return boundary_targets(spiral_body(n), horizontal_projection(), 2.0 * np.pi - 1.0 / ms)


def spiral_probe(n: int = 720, ms=None, tol: float = DEFAULT_TOL,
                 radius: float = 1e-3) -> ProbeReport:
    """Probe the spiral hull at ``(1, 0, 0)`` from the ``t -> 2 pi`` side.

    A hull sampled at step ``h = 2 pi / n`` is a polytope, so its projection
    is open at ``(1, 0, 0)`` once targets come within about ``h`` of
    ``(1, 0)``; the distances only stay near ``2 pi`` for angles ``1/m``
    above ``h``.  Either keep ``radius`` above ``1/m`` for coarse hulls, or
    take ``n`` large enough that ``h`` is well below ``radius``.
    """
    return openness_probe(spiral_body(n), horizontal_projection(), [1.0, 0.0, 0.0],
                          spiral_probe_targets(n, ms), tol, radius)


# --- a sum map that forgets its second factor --------------------------------------


def example32_experiment(n: int = 720, delta: float = 0.01, n_path: int = 1000,
                         tol: float = DEFAULT_TOL):
    """Split the identity of the image disk along its boundary with
    ``L(a, b) = P a`` (the second factor is forgotten).

    Returns the splits and the continuity report of the first factor.
    """
    A = spiral_body(n)
    B = convex_hull([[0.0], [1.0]])
    L = ProductMap(np.eye(2, 3), np.zeros((2, 1)))
    angles = np.linspace(delta, 2.0 * np.pi - delta, n_path)
    f = SampledMap.path(boundary_targets(A, np.eye(2, 3), angles), closed=True)
    splits = split_sampled_map(A, B, L, f, tol=tol)
    return splits, continuity_report(splits, f, component="a")


# --- ellipsoid splitting refinement ------------------------------------------------


def smooth_ball_path(rng, dim: int, n_samples: int, modes: int = 3,
                     radius: float = 0.95) -> np.ndarray:
    """Random smooth closed curve inside the open ball of the given radius."""
    t = np.linspace(0.0, 1.0, n_samples)[:, None]
    v = np.zeros((n_samples, dim))
    for k in range(1, modes + 1):
        a, b = rng.standard_normal((2, dim)) / k
        v += a * np.cos(2 * np.pi * k * t) + b * np.sin(2 * np.pi * k * t)
    return radius * v / np.sqrt(1.0 + np.sum(v * v, axis=1, keepdims=True))


@dataclass(frozen=True)
class RefinementResult:
    dim: int
    max_residual: float
    max_violation: float
    report: ContinuityReport

    @property
    def ratio(self) -> float:
        return self.report.refinement_ratio


def ellipsoid_refinement_experiment(A: Ellipsoid, B: Ellipsoid, rng, n_steps: int = 1000,
                                    tol: float = DEFAULT_TOL) -> RefinementResult:
    """Split a smooth path of ``A + B`` at step ``h`` and at ``h / 2``.

    The fine sampling has ``2 n_steps + 1`` points and the coarse one is every
    other fine point, so the path is solved only once.
    """
    d = A.dim
    m = 2 * n_steps + 1
    uA = smooth_ball_path(rng, d, m)
    uB = smooth_ball_path(rng, d, m)
    c = A.center + uA @ cholesky(A.shape, lower=True).T + \
        B.center + uB @ cholesky(B.shape, lower=True).T
    splits = split_sampled_map(A, B, make_sum_map(d), SampledMap.path(c), tol=tol)
    coarse = splits[::2]
    report = continuity_report(coarse, "path", fine=splits, fine_adjacency="path")
    return RefinementResult(d, max(s.residual for s in splits),
                            max(s.body_violation for s in splits), report)


def ellipsoid_refinement_suite(n_pairs: int = 20, n_steps: int = 1000, seed: int = 0,
                               dims=(2, 3, 4)) -> list[RefinementResult]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_pairs):
        d = int(dims[i % len(dims)])
        out.append(ellipsoid_refinement_experiment(random_ellipsoid(rng, d),
                                                   random_ellipsoid(rng, d), rng, n_steps))
    return out


# --- rank-one openness ---------------------------------------------------------


def rank_one_probe_suite(n_bodies: int = 50, n_points: int = 10, dim: int = 4,
                         seed: int = 0, tol: float = DEFAULT_TOL) -> list[ProbeReport]:
    """Probe random polytopes under random rank-one maps at random points."""
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n_bodies):
        C = random_polytope(rng, dim, int(rng.integers(dim + 2, 13)))
        L = LinearMap(rng.standard_normal((1, dim)))
        V = C.vertices
        for _ in range(n_points):
            z = rng.dirichlet(np.ones(len(V)) * rng.choice([0.2, 1.0])) @ V
            w = rng.dirichlet(np.ones(len(V))) @ V
            reports.append(openness_probe(C, L, z, geometric_targets(L(z), L(w)), tol))
    return reports


# --- Schauder truncations ---------------------------------------------------------


@dataclass(frozen=True)
class SchauderReport:
    N: int
    max_fiber_diameter: float
    max_fiber_error: float  # distance of the computed fibers to e_n/n and 2e_1 - e_n/n
    min_center_distance: float  # min over n of dist(e_1, fiber over e_n/n)
    min_bound_margin: float  # min of dist(lam e_1 + e_n/n, body) - bound
    probe: ProbeReport
    extra: dict = field(default_factory=dict, compare=False)


def schauder_experiment(N: int, lambdas=(0.1, 0.5, 1.0), tol: float = DEFAULT_TOL) -> SchauderReport:
    C = schauder_body(N)
    P = schauder_projection(N)
    e1 = np.eye(N)[0]
    diam = err = 0.0
    center = np.inf
    margin = np.inf
    for n in range(2, N + 1):
        low = np.eye(N)[n - 1] / n
        for y, expect in ((P(low), low), (-P(low), 2.0 * e1 - low)):
            spec = FiberSpec(C, P, y)
            p = fiber_point(spec, SelectionRule(e1), tol)
            if p is None:
                raise EmptyFiberError(f"no fiber over target {n}")
            err = max(err, float(np.linalg.norm(p - expect)))
            diam = max(diam, fiber_diameter(spec, tol=tol))
        center = min(center, dist_to_fiber(e1, FiberSpec(C, P, P(low)), tol))
        for lam in lambdas:
            d = distance(C, lam * e1 + low)
            margin = min(margin, d - lemma25_bound(lam, n))
    targets = np.array([P(np.eye(N)[n - 1] / n) for n in range(2, N + 1)])
    probe = openness_probe(C, P, e1, targets, tol)
    return SchauderReport(N, diam, err, center, margin, probe)
