"""Splitting maps through linear surjections restricted to convex bodies.

Bodies and maps live in :mod:`~minksplit.geometry` and
:mod:`~minksplit.linmaps`; :mod:`~minksplit.fibers` solves
``C ∩ L^{-1}(y)`` and selects the point nearest an anchor;
:mod:`~minksplit.splitting` composes that selection with sampled maps;
:mod:`~minksplit.gallery` holds the named bodies and experiments.
"""
from .exceptions import ConvergenceError, EmptyFiberError, MinksplitError
from .fibers import (DEFAULT_TOL, FiberSpec, SelectionRule, dist_to_fiber,
                     fiber_diameter, fiber_nonempty, fiber_point, image_distance,
                     require_fiber_point)
from .geometry import (ConvexBody, Ellipsoid, MinkowskiSandwich, Polytope, ProductBody,
                       convex_hull, distance, interior_point, is_relative_interior_point,
                       is_strictly_convex, membership, minkowski_sum, project_point,
                       support, translate)
from .linmaps import (LinearMap, ProductMap, TransversalityResult, coordinate_projection,
                      kernel_transversal_to_factors, make_sum_map, transversality_check)
from .splitting import (ContinuityReport, SampledMap, SplitResult, continuity_report,
                        split, split_sampled_map)

__all__ = [
    "ConvergenceError", "EmptyFiberError", "MinksplitError",
    "DEFAULT_TOL", "FiberSpec", "SelectionRule", "dist_to_fiber", "fiber_diameter",
    "fiber_nonempty", "fiber_point", "image_distance", "require_fiber_point",
    "ConvexBody", "Ellipsoid", "MinkowskiSandwich", "Polytope", "ProductBody",
    "convex_hull", "distance", "interior_point", "is_relative_interior_point",
    "is_strictly_convex", "membership", "minkowski_sum", "project_point", "support",
    "translate",
    "LinearMap", "ProductMap", "TransversalityResult", "coordinate_projection",
    "kernel_transversal_to_factors", "make_sum_map", "transversality_check",
    "ContinuityReport", "SampledMap", "SplitResult", "continuity_report", "split",
    "split_sampled_map",
]
