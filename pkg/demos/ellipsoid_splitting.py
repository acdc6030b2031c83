"""
================================================
Splitting points of a sum of ellipsoids
================================================

For strictly convex summands the pair ``(a, b)`` with ``a + b = c`` nearest
the origin moves continuously with ``c``.  Sample a smooth closed path in
``A + B`` with step ``h`` and ``h / 2``: the largest jump between neighbours
roughly halves.
"""
import numpy as np

from minksplit.gallery import ellipsoid_refinement_experiment, random_ellipsoid

rng = np.random.default_rng(0)
for dim in (2, 3, 4):
    A, B = random_ellipsoid(rng, dim), random_ellipsoid(rng, dim)
    r = ellipsoid_refinement_experiment(A, B, rng, n_steps=1000)
    rep = r.report
    print(f"dim {dim}: jump {rep.max_jump:.2e} -> {rep.fine_max_jump:.2e} "
          f"(ratio {r.ratio:.3f}), residual {r.max_residual:.1e}")
