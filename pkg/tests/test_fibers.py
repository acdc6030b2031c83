import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

import oracles
from minksplit._wolfe import active_set_qp, equality_floor, min_norm_point, simplex_qp
from minksplit.exceptions import EmptyFiberError
from minksplit.fibers import (FiberSpec, SelectionRule, dist_to_fiber, fiber_diameter,
                              fiber_nonempty, fiber_point, image_distance,
                              require_fiber_point)
from minksplit.gallery import (boundary_targets, horizontal_projection, schauder_body,
                               schauder_projection, spiral_body)
from minksplit.geometry import Ellipsoid, ProductBody, convex_hull
from minksplit.linmaps import LinearMap, make_sum_map

DISK = Ellipsoid.ball([0.0, 0.0])
TWOPI = 2 * np.pi


@pytest.fixture(scope="module")
def spiral():
    return spiral_body(720)


def _disks_spec(c):
    return FiberSpec(ProductBody((DISK, DISK)), make_sum_map(2), c)


# --- examples ---------------------------------------------------------------------------


def test_disk_sum_extreme_point():
    z = fiber_point(_disks_spec([2.0, 0.0]))
    assert np.allclose(z, [1, 0, 1, 0], atol=1e-6)
    assert fiber_diameter(_disks_spec([2.0, 0.0])) <= 1e-6


def test_disk_sum_outside_is_empty():
    assert fiber_point(_disks_spec([2.1, 0.0])) is None
    assert not fiber_nonempty(_disks_spec([2.1, 0.0]))
    with pytest.raises(EmptyFiberError):
        require_fiber_point(_disks_spec([5.0, 0.0]))


def test_spiral_fibers(spiral):
    P = horizontal_projection()
    z = fiber_point(FiberSpec(spiral, P, [-1.0, 0.0]), SelectionRule([3.0, 1.0, -2.0]))
    assert np.allclose(z, [-1, 0, np.pi], atol=1e-8)
    spec = FiberSpec(spiral, P, [1.0, 0.0])
    assert np.allclose(fiber_point(spec), [1, 0, 0], atol=1e-8)
    assert np.allclose(fiber_point(spec, SelectionRule([0.0, 0.0, 7.0])), [1, 0, TWOPI], atol=1e-8)


def test_spiral_fiber_diameters(spiral):
    P = horizontal_projection()
    assert fiber_diameter(FiberSpec(spiral, P, [1.0, 0.0])) >= TWOPI - 0.05
    assert fiber_diameter(FiberSpec(spiral, P, [-1.0, 0.0])) <= 1e-6


def test_dist_to_fiber_examples(spiral):
    P = horizontal_projection()
    z = np.array([1.0, 0.0, 0.0])
    t = TWOPI - 0.01
    # the image-polygon boundary point at angle t lies on one edge; its fiber
    # is a singleton on the lifted chord, at height about t
    y = boundary_targets(spiral, P, [t])[0]
    d = dist_to_fiber(z, FiberSpec(spiral, P, y))
    assert d == pytest.approx(np.linalg.norm(z - [np.cos(t), np.sin(t), t]), abs=1e-2)
    assert d > 6.2
    w = np.array([0.3, 0.2, 0.5])
    w = w @ spiral.vertices[[0, 200, 400]]
    assert dist_to_fiber(w, FiberSpec(spiral, P, w[:2])) <= 1e-8
    for N in (5, 9):
        C, Pn, e1 = schauder_body(N), schauder_projection(N), np.eye(N)[0]
        for n in range(2, N + 1):
            y = Pn(np.eye(N)[n - 1] / n)
            assert dist_to_fiber(e1, FiberSpec(C, Pn, y)) == pytest.approx(
                np.sqrt(1 + 1 / n ** 2), abs=1e-8)


def test_schauder_anchor_symmetry():
    N = 7
    z = fiber_point(FiberSpec(schauder_body(N), schauder_projection(N), np.zeros(N - 1)),
                    SelectionRule(np.eye(N)[0]))
    assert np.allclose(z, np.eye(N)[0], atol=1e-9)


def test_bad_inputs():
    with pytest.raises(ValueError):
        fiber_point(_disks_spec([0.0, 0.0]), tol=0.0)
    with pytest.raises(ValueError):
        FiberSpec(DISK, LinearMap(np.eye(3)), [0, 0, 0])
    with pytest.raises(ValueError):
        fiber_point(_disks_spec([0.0, 0.0]), SelectionRule([0.0, 0.0]))  # anchor needs R^4


# --- polytope fibers against vertex enumeration -----------------------------------------


def _random_polytope_instance(rng):
    dim = int(rng.integers(2, 5))
    k = int(rng.integers(dim + 1, 13))
    C = convex_hull(rng.standard_normal((k, dim)))
    m = int(rng.integers(1, dim))
    M = rng.standard_normal((m, dim))
    V = C.vertices
    if rng.random() < 0.8:
        y = M @ (rng.dirichlet(np.ones(len(V)) * 0.5) @ V)
    else:
        y = M @ V.mean(0) + 3.0 * rng.standard_normal(m)
    return C, LinearMap(M), y, 2.0 * rng.standard_normal(dim)


@pytest.mark.parametrize("seed", range(4))
def test_polytope_fibers_match_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(25):
        C, L, y, a = _random_polytope_instance(rng)
        z = fiber_point(FiberSpec(C, L, y), SelectionRule(a))
        ref = oracles.brute_force_fiber_point(C.vertices, L.matrix, y, a)
        if ref is None:
            assert z is None
            continue
        assert z is not None
        assert abs(np.linalg.norm(z - a) - np.linalg.norm(ref - a)) <= 1e-6
        assert np.abs(L.matrix @ z - y).max() <= 1e-8
        assert C.distance(z) <= 1e-8


def test_product_polytope_fibers_match_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(15):
        A = convex_hull(rng.standard_normal((4, 2)))
        B = convex_hull(rng.standard_normal((4, 2)))
        a = rng.dirichlet(np.ones(len(A.vertices))) @ A.vertices
        b = rng.dirichlet(np.ones(len(B.vertices))) @ B.vertices
        anchor = rng.standard_normal(4)
        L = make_sum_map(2)
        z = fiber_point(FiberSpec(ProductBody((A, B)), L, a + b), SelectionRule(anchor))
        V = np.array([np.concatenate([u, v]) for u in A.vertices for v in B.vertices])
        ref = oracles.brute_force_fiber_point(V, L.matrix, a + b, anchor)
        assert abs(np.linalg.norm(z - anchor) - np.linalg.norm(ref - anchor)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_polytope_fiber_feasible_and_optimal(seed):
    rng = np.random.default_rng(seed)
    C, L, y, a = _random_polytope_instance(rng)
    z = fiber_point(FiberSpec(C, L, y), SelectionRule(a))
    if z is None:
        assert oracles.fiber_vertices(C.vertices, L.matrix, y).size == 0
        return
    assert np.abs(L.matrix @ z - y).max() <= 1e-8
    # no fiber vertex is strictly closer in the first-order sense
    F = oracles.fiber_vertices(C.vertices, L.matrix, y)
    assert ((F - z) @ (a - z)).max() <= 1e-7


def test_fiber_diameter_close_to_oracle():
    rng = np.random.default_rng(9)
    for _ in range(10):
        C = convex_hull(rng.standard_normal((10, 3)))
        M = rng.standard_normal((1, 3))
        y = M @ C.vertices.mean(0)
        spec = FiberSpec(C, LinearMap(M), y)
        d = fiber_diameter(spec, n_dirs=300)
        ref = oracles.fiber_diameter(C.vertices, M, y)
        assert d <= ref + 1e-8
        assert d >= 0.95 * ref


# --- ellipsoid and mixed fibers against SLSQP -------------------------------------------


def test_ellipsoid_fibers_match_slsqp():
    rng = np.random.default_rng(21)
    for d in (2, 3):
        for _ in range(10):
            A = Ellipsoid(rng.standard_normal(d), np.diag(rng.uniform(0.5, 2.0, d)))
            B = Ellipsoid(rng.standard_normal(d), np.diag(rng.uniform(0.5, 2.0, d)))
            L = make_sum_map(d)
            c = A.center + B.center + 0.5 * rng.standard_normal(d)
            anchor = rng.standard_normal(2 * d)
            body = ProductBody((A, B))
            z = fiber_point(FiberSpec(body, L, c), SelectionRule(anchor))
            assert z is not None
            ineqs = [oracles.ellipsoid_ineq(A.center, A.shape, slice(0, d)),
                     oracles.ellipsoid_ineq(B.center, B.shape, slice(d, 2 * d))]
            ref = oracles.constrained_nearest(anchor, L.matrix, c, ineqs,
                                              np.concatenate([A.center, c - A.center]))
            assert np.linalg.norm(z - ref) <= 1e-5
            assert np.abs(L.matrix @ z - c).max() <= 1e-8


def test_mixed_product_matches_slsqp():
    rng = np.random.default_rng(4)
    for _ in range(6):
        A = convex_hull(rng.standard_normal((6, 2)))
        B = Ellipsoid(rng.standard_normal(2), np.diag(rng.uniform(0.5, 2.0, 2)))
        a0 = A.vertices.mean(0)
        c = a0 + B.center
        anchor = rng.standard_normal(4)
        z = fiber_point(FiberSpec(ProductBody((A, B)), make_sum_map(2), c), SelectionRule(anchor))
        h = ConvexHull(A.vertices)
        ineqs = [lambda x, h=h: -(h.equations[:, :2] @ x[:2] + h.equations[:, 2]),
                 oracles.ellipsoid_ineq(B.center, B.shape, slice(2, 4))]
        ref = oracles.constrained_nearest(anchor, make_sum_map(2).matrix, c, ineqs,
                                          np.concatenate([a0, B.center]))
        assert np.linalg.norm(z - ref) <= 1e-5


def test_image_distance_brackets():
    L = make_sum_map(2)
    body = ProductBody((DISK, DISK))
    lo, hi = image_distance(body, L, [3.0, 0.0])
    assert lo <= 1.0 + 1e-9 <= hi + 2e-9
    assert hi - lo < 1e-6
    lo, hi = image_distance(body, L, [0.5, 0.5])
    assert lo == 0.0


# --- the simplex-constrained least squares solvers ---------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_active_set_agrees_with_augmented_lagrangian(seed):
    rng = np.random.default_rng(seed)
    n, k, m = int(rng.integers(2, 5)), int(rng.integers(3, 15)), int(rng.integers(1, 3))
    U = rng.standard_normal((n, k))
    E = rng.standard_normal((m, k))
    f = E @ rng.dirichlet(np.ones(k))
    a = 2.0 * rng.standard_normal(n)
    floor = float(np.abs(equality_floor(E, f).x).max())
    r1 = active_set_qp(U, a, E, f, feas_tol=floor + 1e-10)
    r2 = simplex_qp(U, a, E, f, floor=floor)
    assert r1 is not None
    assert abs(np.linalg.norm(r1.z - a) - np.linalg.norm(r2.z - a)) <= 1e-7
    assert r1.theta.min() >= 0 and abs(r1.theta.sum() - 1) <= 1e-12
    assert r1.residual <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6), st.integers(1, 20))
def test_min_norm_point_matches_pairwise_oracle(seed, n, k):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((k, n)) + rng.standard_normal(n)
    res = min_norm_point(P)
    ref = oracles.nearest_in_hull(P, np.zeros(n))
    assert np.linalg.norm(res.x) <= np.linalg.norm(ref) + 1e-9
    assert np.linalg.norm(res.x - ref) <= 1e-6
    assert np.allclose(res.weights @ P, res.x, atol=1e-12)
