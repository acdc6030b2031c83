"""``minksplit`` command line.

Exit codes: 0 success, 1 input error, 2 infeasible (empty fiber, point
outside the sum), 3 solver non-convergence.  Failures print one line on
standard error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .exceptions import ConvergenceError, EmptyFiberError
from .fibers import DEFAULT_TOL, SelectionRule
from .gallery import (remark2_body, remark2_jump_experiment, schauder_body,
                      schauder_experiment, spiral_body, spiral_jump_experiment)
from .geometry import Ellipsoid, MinkowskiSandwich, Polytope, minkowski_sum
from .linmaps import LinearMap, ProductMap, make_sum_map, transversality_check
from .splitting import continuity_report, split, split_sampled_map

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CONVERGENCE = 0, 1, 2, 3


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are input errors, not the infeasibility code argparse uses
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",") if t.strip()], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _default_tol() -> float:
    env = os.environ.get("MINKSPLIT_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        tol = float(env)
    except ValueError:
        raise _InputError(f"MINKSPLIT_TOL is not a number: {env!r}") from None
    if not tol > 0:
        raise _InputError("MINKSPLIT_TOL must be positive")
    return tol


def _fmt_point(p) -> str:
    # print round-off zeros as 0
    vals = [0.0 if abs(v) < 1e-12 else float(v) for v in p]
    return "(" + ",".join(f"{v:.10g}" for v in vals) + ")"


def _describe(obj) -> str:
    if isinstance(obj, Polytope):
        return f"polytope in R^{obj.dim}: {len(obj.vertices)} vertices, affine dimension {obj.aff_dim}"
    if isinstance(obj, Ellipsoid):
        return f"ellipsoid in R^{obj.dim}"
    if isinstance(obj, ProductMap):
        n1, n2 = obj.domain_dims
        return (f"product map R^{n1} x R^{n2} -> R^{obj.range_dim}, "
                f"kernel dimension {obj.kernel_basis.shape[1]}")
    return (f"linear map R^{obj.domain_dim} -> R^{obj.range_dim}, "
            f"kernel dimension {obj.kernel_basis.shape[1]}")


def _pair_map(args, A, B):
    if args.sum:
        if A.dim != B.dim:
            raise _InputError("--sum needs bodies of equal dimension")
        return make_sum_map(A.dim)
    if args.map is None:
        raise _InputError("give --map or --sum")
    return io.read_map(args.map)


def _rule(args, dim):
    if args.anchor is None:
        return None
    if len(args.anchor) != dim:
        raise _InputError(f"--anchor needs {dim} coordinates")
    return SelectionRule(args.anchor)


# --- subcommands --------------------------------------------------------------------


def cmd_validate(args):
    print(_describe(io.read_object(args.file)))


def cmd_sum(args):
    A, B = io.read_body(args.a), io.read_body(args.b)
    S = minkowski_sum(A, B, n_dirs=args.n_dirs, seed=args.seed)
    io.write_json(io.body_to_dict(S), args.output)
    if isinstance(S, MinkowskiSandwich):
        print(f"inner polytope with {len(S.inner.vertices)} vertices, sampled gap {S.gap:.3g}")
    else:
        print(f"polytope with {len(S.vertices)} vertices")


def cmd_split(args):
    A, B = io.read_body(args.a), io.read_body(args.b)
    L = _pair_map(args, A, B)
    if len(args.point) != L.range_dim:
        raise _InputError(f"--point needs {L.range_dim} coordinates")
    r = split(A, B, L, args.point, _rule(args, A.dim + B.dim), args.tol)
    print(f"a={_fmt_point(r.a)} b={_fmt_point(r.b)}")


def cmd_split_map(args):
    A, B = io.read_body(args.a), io.read_body(args.b)
    L = _pair_map(args, A, B)
    f = io.read_sampled_map(args.samples)
    if f.values.shape[1] != L.range_dim:
        raise _InputError(f"samples have {f.values.shape[1]} coordinates, map range is "
                          f"R^{L.range_dim}")
    splits = split_sampled_map(A, B, L, f, _rule(args, A.dim + B.dim), args.tol,
                               tracking=args.tracking)
    io.write_splits_csv(f.ids, splits, args.output)
    if args.report and f.edges:
        io.write_continuity_csv(continuity_report(splits, f), args.report)
    if f.edges:
        rep = continuity_report(splits, f)
        print(f"{len(splits)} samples, max jump {rep.max_jump:.6g} on edge {rep.edges[rep.argmax_edge]}")
    else:
        print(f"{len(splits)} samples")


def cmd_probe(args):
    from .gallery import openness_probe
    C = io.read_body(args.body)
    L = io.read_map(args.map)
    Y = io.read_points(args.targets)
    try:
        rep = openness_probe(C, L, args.at, Y, args.tol, radius=args.radius)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    io.write_probe_csv(rep, args.output)
    print(f"{rep}  ({int(rep.feasible.sum())}/{len(Y)} feasible targets, "
          f"{len(rep.tail)} within {args.radius:g})")


def cmd_gallery(args):
    if args.which in ("spiral", "remark2"):
        n = 720 if args.n is None else args.n
        run, make = ((spiral_jump_experiment, spiral_body) if args.which == "spiral"
                     else (remark2_jump_experiment, remark2_body))
        try:
            exp = run(n, args.delta, args.n_path, anchor=args.anchor)
        except ValueError as exc:
            raise _InputError(str(exc)) from None
        io.write_path_csv(exp, args.output)
        if args.export_body:
            io.write_json(io.body_to_dict(make(n)), args.export_body)
        print(f"start height {exp.start_height:.6g}, end height {exp.end_height:.6g}, "
              f"max kernel jump {exp.report.max_jump:.6g}")
        return
    N = 10 if args.dim is None else args.dim
    try:
        rep = schauder_experiment(N, tol=args.tol)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    io.write_probe_csv(rep.probe, args.output)
    if args.export_body:
        io.write_json(io.body_to_dict(schauder_body(N)), args.export_body)
    print(f"N={N}: max fiber diameter {rep.max_fiber_diameter:.3g}, "
          f"min dist(e1, fiber) {rep.min_center_distance:.6g}, "
          f"min bound margin {rep.min_bound_margin:.3g}, modulus {rep.probe.modulus:.6g}")


def cmd_transversal(args):
    C = io.read_body(args.body)
    L = io.read_map(args.map)
    try:
        res = transversality_check(C, L)
    except (NotImplementedError, ValueError) as exc:
        raise _InputError(str(exc)) from None
    if res:
        print("Pass")
    else:
        V = C.vertices[list(res.vertex_indices)]
        print(f"Fail: facet {res.facet} with vertices {list(res.vertex_indices)} "
              f"contains direction {_fmt_point(res.direction)}")
        print("facet vertices: " + " ".join(_fmt_point(v) for v in V))


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="feasibility tolerance (default: $MINKSPLIT_TOL or 1e-8)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    p = _Parser(prog="minksplit", description="Fiber selections and splittings of convex bodies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="parse a body or map file")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("sum", parents=[common], help="Minkowski sum of two bodies")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--n-dirs", type=int, default=None,
                   help="support samples for curved summands (default 2*10^dim)")
    s.set_defaults(func=cmd_sum)

    for name, func in (("split", cmd_split), ("split-map", cmd_split_map)):
        s = sub.add_parser(name, parents=[common],
                           help="split a point" if name == "split" else "split a sampled map")
        s.add_argument("--a", required=True)
        s.add_argument("--b", required=True)
        g = s.add_mutually_exclusive_group(required=True)
        g.add_argument("--map")
        g.add_argument("--sum", action="store_true", help="use the map (a, b) -> a + b")
        s.add_argument("--anchor", type=_floats, default=None,
                       help="selection anchor in A x B (default: origin)")
        if name == "split":
            s.add_argument("--point", type=_floats, required=True)
        else:
            s.add_argument("--samples", required=True, help="CSV or JSON sampled map")
            s.add_argument("-o", "--output", required=True)
            s.add_argument("--report", help="continuity CSV")
            s.add_argument("--tracking", action="store_true",
                           help="anchor each sample at the previous split")
        s.set_defaults(func=func)

    s = sub.add_parser("probe", parents=[common], help="openness probe at a body point")
    s.add_argument("--body", required=True)
    s.add_argument("--map", required=True)
    s.add_argument("--at", type=_floats, required=True)
    s.add_argument("--targets", required=True, help="CSV of target points")
    s.add_argument("--radius", type=float, default=1e-3)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("gallery", parents=[common], help="named experiments")
    s.add_argument("which", choices=("spiral", "remark2", "schauder"))
    s.add_argument("--n", type=int, default=None, help="polygon samples (spiral, remark2)")
    s.add_argument("--dim", type=int, default=None, help="truncation dimension (schauder)")
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--n-path", type=int, default=1000)
    s.add_argument("--anchor", type=_floats, default=None)
    s.add_argument("--export-body", help="also write the body as JSON")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_gallery)

    s = sub.add_parser("transversal", parents=[common],
                       help="boundary segments parallel to the kernel")
    s.add_argument("--body", required=True)
    s.add_argument("--map", required=True)
    s.set_defaults(func=cmd_transversal)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.tol is None:
            args.tol = _default_tol()
        elif not args.tol > 0:
            raise _InputError("--tol must be positive")
        args.func(args)
    except EmptyFiberError as exc:
        print(f"minksplit: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"minksplit: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (_InputError, io.FormatError, OSError, ValueError) as exc:
        print(f"minksplit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
