"""Acceptance criteria, one test each, at their stated tolerances and time
limits.  Every test records a PASS/FAIL line; the lines are printed as they
happen and again in the pytest terminal summary.
"""
import time
from collections import Counter

import numpy as np
import pytest

import oracles
from minksplit.fibers import FiberSpec, SelectionRule, fiber_diameter, fiber_point
from minksplit.gallery import (boundary_targets, ellipsoid_refinement_suite,
                               example32_experiment, horizontal_projection,
                               lemma25_bound, openness_probe, rank_one_probe_suite,
                               remark2_jump_experiment, schauder_body,
                               schauder_experiment, schauder_projection, spiral_body,
                               spiral_jump_experiment)
from minksplit.geometry import convex_hull, distance
from minksplit.linmaps import LinearMap, transversality_check

TWOPI = 2 * np.pi
RESULTS = []


def _record(number, title, checks, elapsed, limit=None):
    ok = all(checks.values()) and (limit is None or elapsed <= limit)
    detail = ", ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in checks.items())
    timing = f"{elapsed:.1f}s" + ("" if limit is None else f" (limit {limit:g}s)")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{detail}; {timing}]"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_spiral_jump():
    t0 = time.perf_counter()
    e = spiral_jump_experiment(720, 0.01)
    diam = fiber_diameter(FiberSpec(spiral_body(720), horizontal_projection(), [1.0, 0.0]))
    elapsed = time.perf_counter() - t0
    print(f"heights {e.start_height:.4f} -> {e.end_height:.4f}, diameter {diam:.4f}")
    _record(1, "spiral selection jumps from height 0 to 2 pi", {
        "start near 0": abs(e.start_height) <= 0.05,
        "end near 2pi": abs(e.end_height - TWOPI) <= 0.05,
        "fiber diameter over (1,0)": diam >= TWOPI - 0.05,
    }, elapsed, 30)


def test_criterion_2_spiral_not_open():
    # A sampled hull is a polytope and becomes open within about one sampling
    # step 2 pi / n of (1, 0); n = 12000 puts that step below the 1e-3 radius
    # in which the verdict looks at targets.
    t0 = time.perf_counter()
    n = 12_000
    ms = np.arange(1000, 1601, 100)
    C = spiral_body(n)
    P = horizontal_projection()
    Y = boundary_targets(C, P, TWOPI - 1.0 / ms)
    r = openness_probe(C, P, [1.0, 0.0, 0.0], Y, radius=1e-3)
    elapsed = time.perf_counter() - t0
    print(f"{r}, dists {np.round(r.dists, 4)}")
    _record(2, "openness probe at (1,0,0) certifies NotOpenAt", {
        "verdict": r.verdict == "NotOpenAt",
        "epsilon >= 6": r.epsilon is not None and r.epsilon >= 6.0,
        "targets from the 2pi side": bool(np.all(np.arctan2(Y[:, 1], Y[:, 0]) < 0)),
    }, elapsed, 30)


def test_criterion_3_remark2_continuous():
    t0 = time.perf_counter()
    e = remark2_jump_experiment(720, 0.01, anchor=np.zeros(3))
    elapsed = time.perf_counter() - t0
    print(f"max kernel jump {e.report.max_jump:.3g}, full {e.full_report.max_jump:.3g}")
    _record(3, "flat disk with raised point admits a continuous selection", {
        "max jump <= 1e-3": e.report.max_jump <= 1e-3,
    }, elapsed)


def test_criterion_4_transversality():
    X = LinearMap([[1.0, 0.0]])
    t0 = time.perf_counter()
    sq = transversality_check(convex_hull([[0, 0], [1, 0], [0, 1], [1, 1]]), X)
    t_sq = time.perf_counter() - t0
    t0 = time.perf_counter()
    rot = transversality_check(convex_hull([[1, 0], [0, 1], [-1, 0], [0, -1]]), X)
    t_rot = time.perf_counter() - t0
    C = spiral_body(720)
    t0 = time.perf_counter()
    sp = transversality_check(C, horizontal_projection())
    t_sp = time.perf_counter() - t0
    ends = C.vertices[list(sp.vertex_indices)] if not sp else np.empty((0, 3))
    chord = (any(np.allclose(v, [1, 0, 0]) for v in ends)
             and any(np.allclose(v, [1, 0, TWOPI]) for v in ends))
    _record(4, "transversality checker", {
        "square fails": not sq,
        "rotated square passes": bool(rot),
        "spiral fails with (1,0,0)-(1,0,2pi) chord": (not sp) and chord,
        "each check <= 5s": max(t_sq, t_rot, t_sp) <= 5.0,
    }, t_sq + t_rot + t_sp)


def test_criterion_5_ellipsoid_refinement():
    t0 = time.perf_counter()
    R = ellipsoid_refinement_suite(n_pairs=20, n_steps=1000, seed=0, dims=(2, 3, 4))
    elapsed = time.perf_counter() - t0
    ratio = float(np.mean([r.ratio for r in R]))
    resid = max(r.max_residual for r in R)
    print(f"mean ratio {ratio:.3f}, max residual {resid:.2g}, dims {sorted({r.dim for r in R})}")
    _record(5, "min-norm Minkowski splitting refines continuously", {
        "residual <= 1e-8": resid <= 1e-8,
        "mean refinement ratio <= 0.75": ratio <= 0.75,
        "20 pairs in dims 2-4": len(R) == 20 and {r.dim for r in R} == {2, 3, 4},
    }, elapsed, 300)


def test_criterion_6_schauder():
    t0 = time.perf_counter()
    checks = {}
    for N in (5, 10, 20, 40):
        r = schauder_experiment(N, lambdas=(0.1, 0.5, 1.0))
        print(f"N={N}: diam {r.max_fiber_diameter:.2g}, err {r.max_fiber_error:.2g}, "
              f"min dist {r.min_center_distance:.4f}, margin {r.min_bound_margin:.3g}")
        checks[f"N={N} singleton fibers"] = (r.max_fiber_diameter <= 1e-6
                                            and r.max_fiber_error <= 1e-6)
        checks[f"N={N} dist(e1, fiber) >= 0.9"] = r.min_center_distance >= 0.9
        checks[f"N={N} bound"] = r.min_bound_margin >= -1e-6
    elapsed = time.perf_counter() - t0
    _record(6, "Schauder truncations lose openness at e1", checks, elapsed, 300)


def test_criterion_7_rank_one_open():
    t0 = time.perf_counter()
    R = rank_one_probe_suite(n_bodies=50, n_points=10, dim=4, seed=0)
    elapsed = time.perf_counter() - t0
    counts = Counter(r.verdict for r in R)
    print(dict(counts))
    _record(7, "rank-one restrictions are open", {
        "500 probes": len(R) == 500,
        "all OpenAt": counts["OpenAt"] == len(R),
    }, elapsed, 300)


def test_criterion_8_fiber_solver_vs_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_gap = worst_res = 0.0
    mismatched_empty = 0
    for _ in range(100):
        dim = int(rng.integers(2, 5))
        C = convex_hull(rng.standard_normal((int(rng.integers(dim + 1, 13)), dim)))
        M = rng.standard_normal((int(rng.integers(1, dim)), dim))
        y = M @ (rng.dirichlet(np.ones(len(C.vertices))) @ C.vertices)
        a = 2.0 * rng.standard_normal(dim)
        z = fiber_point(FiberSpec(C, LinearMap(M), y), SelectionRule(a))
        ref = oracles.brute_force_fiber_point(C.vertices, M, y, a)
        if (z is None) != (ref is None):
            mismatched_empty += 1
            continue
        if z is None:
            continue
        worst_gap = max(worst_gap, abs(np.linalg.norm(z - a) - np.linalg.norm(ref - a)))
        worst_res = max(worst_res, float(np.abs(M @ z - y).max()))
    elapsed = time.perf_counter() - t0
    print(f"worst anchor-distance gap {worst_gap:.2g}, worst residual {worst_res:.2g}")
    _record(8, "fiber solver matches brute-force enumeration", {
        "feasibility agrees": mismatched_empty == 0,
        "anchor distance within 1e-4": worst_gap <= 1e-4,
        "residual <= 1e-8": worst_res <= 1e-8,
    }, elapsed)


def test_criterion_9_example32():
    t0 = time.perf_counter()
    splits, rep = example32_experiment(720, 0.01)
    elapsed = time.perf_counter() - t0
    print(f"max first-factor jump {rep.max_jump:.4f} on edge {rep.edges[rep.argmax_edge]}")
    _record(9, "forgetful sum map has no continuous splitting", {
        "max jump >= 6": rep.max_jump >= 6.0,
        "residual <= 1e-8": max(s.residual for s in splits) <= 1e-8,
    }, elapsed)


@pytest.mark.parametrize("N", [5, 10, 16])
def test_lemma25_bound_against_projection_oracle(N):
    # the bound's own cross-check, on the criterion-6 truncations up to N = 16
    C = schauder_body(N)
    e1 = np.eye(N)[0]
    for n in range(2, N + 1):
        for lam in (0.1, 0.5, 1.0):
            x = lam * e1 + np.eye(N)[n - 1] / n
            ref = np.linalg.norm(x - oracles.nearest_in_hull(C.vertices, x))
            assert distance(C, x) == pytest.approx(ref, abs=1e-7)
            assert ref >= lemma25_bound(lam, n) - 1e-6
    assert schauder_projection(N).range_dim == N - 1
