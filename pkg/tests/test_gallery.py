import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

import oracles
from minksplit.fibers import FiberSpec, SelectionRule, fiber_diameter, fiber_point
from minksplit.gallery import (boundary_targets, geometric_targets, horizontal_projection,
                               image_polygon, lemma25_bound, openness_probe,
                               random_ellipsoid, remark2_body, remark2_jump_experiment,
                               schauder_body, schauder_experiment, schauder_points,
                               schauder_projection, smooth_ball_path, spiral_body,
                               spiral_jump_experiment, spiral_points, spiral_probe,
                               spiral_probe_targets)
from minksplit.geometry import distance, is_relative_interior_point
from minksplit.linmaps import LinearMap

TWOPI = 2 * np.pi


# --- spiral ------------------------------------------------------------------------------


def test_spiral_n4():
    C = spiral_body(4)
    assert len(C.vertices) == 5
    expect = [[1, 0, 0], [0, 1, np.pi / 2], [-1, 0, np.pi], [0, -1, 3 * np.pi / 2],
              [1, 0, TWOPI]]
    V = C.vertices[np.argsort(C.vertices[:, 2])]
    assert np.allclose(V, expect, atol=1e-12)


def test_spiral_rejects_small_n():
    for n in (3, 2.5, 0):
        with pytest.raises(ValueError):
            spiral_body(n)
    with pytest.raises(ValueError):
        spiral_jump_experiment(50)


@pytest.mark.parametrize("n", [8, 60, 720])
def test_spiral_projection_is_inscribed_polygon(n):
    V = spiral_points(n) @ horizontal_projection().matrix.T
    hull = ConvexHull(V)
    assert len(hull.vertices) == n
    # Hausdorff distance to the unit disk: max over directions of 1 - h(u)
    t = np.linspace(0, TWOPI, 200 * n + 1)  # contains every edge normal
    U = np.column_stack([np.cos(t), np.sin(t)])
    h = (U @ V.T).max(1)
    assert (1 - h).max() == pytest.approx(oracles.polygon_hausdorff_to_disk(n), abs=1e-6)


def test_spiral_boundary_fibers_are_single_points():
    C, P = spiral_body(720), horizontal_projection()
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.05, TWOPI - 0.05, 12):
        y = boundary_targets(C, P, [t])[0]
        spec = FiberSpec(C, P, y)
        assert fiber_diameter(spec) <= 1e-5
        assert fiber_point(spec)[2] == pytest.approx(t, abs=2 * TWOPI / 720)


def test_spiral_probe_targets_validation():
    with pytest.raises(ValueError):
        spiral_probe_targets(720, [0.1])
    Y = spiral_probe_targets(720, [1, 2])
    assert Y.shape == (2, 2)


def test_spiral_probe_coarse_hull():
    # the coarse hull keeps the fiber far from (1,0,0) only for 1/m above its step
    r = spiral_probe(720, radius=0.25)
    assert r.verdict == "NotOpenAt" and r.epsilon >= 6.0
    assert np.nanmin(r.dists[3:]) >= 6.0


def test_spiral_probe_decays_linearly_below_the_step():
    # once 1/m drops below the step, targets sit on the last image edge and
    # the fiber reaches down to height about n/m: open, at Lipschitz rate ~ n
    ms = np.array([1e3, 1e4, 1e5, 1e6])
    r = spiral_probe(720, ms=ms)
    assert np.allclose(r.dists * ms, 719.0, rtol=1e-3)


# --- the flat disk with a raised point ----------------------------------------------------


def test_remark2_fibers():
    C, P = remark2_body(720), horizontal_projection()
    spec = FiberSpec(C, P, [1.0, 0.0])
    assert fiber_diameter(spec) == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(fiber_point(spec, SelectionRule([1.0, 0.0, 5.0])), [1, 0, 1], atol=1e-8)
    assert np.allclose(fiber_point(spec), [1, 0, 0], atol=1e-8)
    spec = FiberSpec(C, P, [-1.0, 0.0])
    assert fiber_diameter(spec) <= 1e-8
    assert np.allclose(fiber_point(spec), [-1, 0, 0], atol=1e-8)


def test_remark2_path_has_no_jump():
    e = remark2_jump_experiment(n=120, n_path=200)
    assert e.report.max_jump <= 1e-6
    assert np.abs(e.selections[:, 2]).max() <= 1e-8


def test_spiral_path_jumps_on_a_small_example():
    e = spiral_jump_experiment(n=720, n_path=200)
    assert e.start_height <= 0.05 and e.end_height >= TWOPI - 0.1
    assert e.report.max_jump >= TWOPI - 0.2
    assert e.report.argmax_edge == len(e.angles) - 1


# --- Schauder truncations -------------------------------------------------------------------


@pytest.mark.parametrize("N", [2, 5, 12])
def test_schauder_body_shape(N):
    C = schauder_body(N)
    assert len(C.vertices) == 2 * N - 2 if N > 2 else len(C.vertices) == 2
    e1 = np.eye(N)[0]
    # symmetric about e_1
    R = np.sort(np.round(2 * e1 - C.vertices, 12), axis=0)
    assert np.allclose(R, np.sort(np.round(C.vertices, 12), axis=0))
    assert is_relative_interior_point(C, e1)
    for i in range(len(C.vertices)):
        assert oracles.is_extreme(C.vertices, i)


def test_schauder_points_and_projection():
    P = schauder_points(3)
    assert P.shape == (6, 3)
    assert np.allclose(P[0], P[3])
    assert np.allclose(schauder_projection(3).matrix, [[0, 1, 0], [0, 0, 1]])
    with pytest.raises(ValueError):
        schauder_body(1)
    with pytest.raises(ValueError):
        schauder_body(65)


def test_schauder_fibers_are_points():
    N = 8
    C, P = schauder_body(N), schauder_projection(N)
    for n in range(2, N + 1):
        low = np.eye(N)[n - 1] / n
        assert fiber_diameter(FiberSpec(C, P, P(low))) <= 1e-8
        assert np.allclose(fiber_point(FiberSpec(C, P, -P(low))), 2 * np.eye(N)[0] - low,
                           atol=1e-8)


def test_lemma25_examples():
    assert lemma25_bound(1.0, 2) == pytest.approx(1 / 6)
    assert lemma25_bound(0.5, 1000) == pytest.approx(0.5 / 3000)
    assert lemma25_bound(0.01, 2, norm_P1=0.5) == pytest.approx(0.01 / 6)
    for bad in ((0.0, 2), (1.0, 1)):
        with pytest.raises(ValueError):
            lemma25_bound(*bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 10.0), st.integers(2, 10_000), st.floats(1e-4, 10.0))
def test_lemma25_monotone(lam, n, scale):
    b = lemma25_bound(lam, n)
    assert lemma25_bound(lam * (1 + scale), n) >= b
    assert lemma25_bound(lam, n + 1) <= b
    assert b <= lam / 3


@pytest.mark.parametrize("N", [4, 9, 16])
def test_lemma25_bound_holds_on_truncations(N):
    C = schauder_body(N)
    e1 = np.eye(N)[0]
    for n in range(2, N + 1):
        for lam in (0.01, 0.1, 0.5, 1.0):
            x = lam * e1 + np.eye(N)[n - 1] / n
            d = np.linalg.norm(x - oracles.nearest_in_hull(C.vertices, x))
            assert distance(C, x) == pytest.approx(d, abs=1e-7)
            assert d >= lemma25_bound(lam, n) - 1e-9


def test_schauder_experiment_small():
    r = schauder_experiment(10)
    assert r.max_fiber_diameter <= 1e-8 and r.max_fiber_error <= 1e-8
    assert r.min_center_distance >= 1.0
    assert r.min_bound_margin > 0
    # targets e_n/n never come within 1e-3 of the image of e_1 for N <= 64
    assert r.probe.verdict == "Inconclusive"
    assert np.nanmin(r.probe.dists) >= 1.0


# --- openness probe ------------------------------------------------------------------------


def test_probe_on_ellipsoid_is_open():
    rng = np.random.default_rng(0)
    E = random_ellipsoid(rng, 3)
    L = LinearMap(rng.standard_normal((2, 3)))
    z = E.center + 0.3 * (E.project(E.center + 10 * rng.standard_normal(3)) - E.center)
    r = openness_probe(E, L, z, geometric_targets(L(z), L(E.center) + 0.1))
    assert r.verdict == "OpenAt"
    assert r.modulus < 1e3


def test_probe_at_relative_interior_points_is_open():
    rng = np.random.default_rng(3)
    for _ in range(5):
        C = spiral_body(60)
        z = rng.dirichlet(np.ones(len(C.vertices))) @ C.vertices
        start = horizontal_projection()(z) + 0.05 * rng.standard_normal(2)
        r = openness_probe(C, horizontal_projection(), z,
                           geometric_targets(horizontal_projection()(z), start))
        assert r.verdict == "OpenAt"


def test_probe_inconclusive_and_errors():
    C = spiral_body(60)
    P = horizontal_projection()
    z = np.array([1.0, 0.0, 0.0])
    r = openness_probe(C, P, z, [[0.5, 0.0], [0.0, 0.5]])
    assert r.verdict == "Inconclusive" and str(r) == "Inconclusive"
    r = openness_probe(C, P, z, [[5.0, 0.0]] * 6 + [[1.0, 0.0]] * 5)
    assert np.isnan(r.dists[0]) and not r.feasible[0]
    with pytest.raises(ValueError):
        openness_probe(C, P, [5.0, 0.0, 0.0], [[0.0, 0.0]])
    with pytest.raises(ValueError):
        openness_probe(C, P, z, [[0.0, 0.0, 0.0]])


def test_geometric_targets():
    Y = geometric_targets([0.0], [1.0], 0.5, 3)
    assert Y.ravel().tolist() == [0.5, 0.25, 0.125]


def test_image_polygon_and_boundary_targets():
    C = spiral_body(8)
    hull = image_polygon(C, horizontal_projection())
    assert len(hull.vertices) == 8
    y = boundary_targets(C, horizontal_projection(), [np.pi / 8])[0]
    assert np.linalg.norm(y) == pytest.approx(np.cos(np.pi / 8), abs=1e-12)


def test_smooth_ball_path_stays_inside():
    rng = np.random.default_rng(1)
    v = smooth_ball_path(rng, 3, 500)
    assert np.linalg.norm(v, axis=1).max() < 0.95
    assert np.allclose(v[0], v[-1])
