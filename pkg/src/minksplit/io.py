"""JSON and CSV formats for bodies, maps, sampled maps and reports.

Bodies::

    {"type": "polytope", "vertices": [[x, ...], ...]}
    {"type": "ellipsoid", "center": [...], "shape": [[...], ...]}

Maps::

    {"type": "linear_map", "matrix": [[...], ...]}
    {"type": "product_map", "left": [[...], ...], "right": [[...], ...]}

Floats are written with ``repr`` precision by the json module, so every
number round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import ConvexBody, Ellipsoid, MinkowskiSandwich, Polytope, convex_hull
from .linmaps import LinearMap, ProductMap
from .splitting import ContinuityReport, SampledMap


class FormatError(ValueError):
    """Malformed input file."""


def _matrix(obj, key, ndim=2):
    if key not in obj:
        raise FormatError(f"missing field {key!r}")
    try:
        a = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"field {key!r} is not numeric: {exc}") from None
    if a.ndim != ndim or a.size == 0:
        raise FormatError(f"field {key!r} must be a nonempty {ndim}-d array")
    if not np.all(np.isfinite(a)):
        raise FormatError(f"field {key!r} has non-finite entries")
    return a


def _load(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict) or "type" not in obj:
        raise FormatError(f"{path}: expected an object with a 'type' field")
    return obj


def body_from_dict(obj) -> ConvexBody:
    kind = obj.get("type")
    try:
        if kind == "polytope":
            return convex_hull(_matrix(obj, "vertices"))
        if kind == "ellipsoid":
            return Ellipsoid(_matrix(obj, "center", 1), _matrix(obj, "shape"))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"invalid {kind}: {exc}") from None
    raise FormatError(f"unknown body type {kind!r}")


def body_to_dict(body: ConvexBody) -> dict:
    if isinstance(body, MinkowskiSandwich):
        body = body.inner
    if isinstance(body, Polytope):
        return {"type": "polytope", "vertices": body.vertices.tolist()}
    if isinstance(body, Ellipsoid):
        return {"type": "ellipsoid", "center": body.center.tolist(),
                "shape": body.shape.tolist()}
    raise TypeError(f"no JSON form for {type(body).__name__}")


def map_from_dict(obj):
    kind = obj.get("type")
    try:
        if kind == "linear_map":
            return LinearMap(_matrix(obj, "matrix"))
        if kind == "product_map":
            return ProductMap(_matrix(obj, "left"), _matrix(obj, "right"))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"invalid {kind}: {exc}") from None
    raise FormatError(f"unknown map type {kind!r}")


def map_to_dict(L) -> dict:
    if isinstance(L, ProductMap):
        return {"type": "product_map", "left": L.left.tolist(), "right": L.right.tolist()}
    return {"type": "linear_map", "matrix": L.matrix.tolist()}


def read_body(path) -> ConvexBody:
    return body_from_dict(_load(path))


def read_map(path):
    return map_from_dict(_load(path))


def read_object(path):
    """A body or a map, whichever the file holds."""
    obj = _load(path)
    if obj["type"] in ("linear_map", "product_map"):
        return map_from_dict(obj)
    return body_from_dict(obj)


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


# --- sampled maps --------------------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_sampled_map(path) -> SampledMap:
    """Sampled map from CSV (``id, neighbors, v0, v1, ...`` with neighbor ids
    separated by ``;``) or from JSON ``{"ids", "edges", "values"}``."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        obj = _load(path)
        if obj["type"] != "sampled_map":
            raise FormatError(f"{path}: expected type 'sampled_map'")
        values = _matrix(obj, "values")
        ids = obj.get("ids", list(range(len(values))))
        try:
            return SampledMap(tuple(ids), tuple(map(tuple, obj.get("edges", []))), values)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from None
    ids, nbrs, rows = [], [], []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or row[0].startswith("#"):
                continue
            if k == 0 and not _is_number(row[-1]):
                continue  # header
            if len(row) < 3:
                raise FormatError(f"{path}:{k + 1}: need id, neighbors and coordinates")
            ids.append(row[0].strip())
            nbrs.append([s.strip() for s in row[1].split(";") if s.strip()])
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise FormatError(f"{path}:{k + 1}: non-numeric coordinate") from None
    if not rows:
        raise FormatError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: samples have different dimensions")
    try:
        return SampledMap.from_neighbors(ids, nbrs, np.array(rows))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_sampled_map(f: SampledMap, path) -> None:
    nbrs = {i: [] for i in range(len(f))}
    for i, j in f.edges:
        nbrs[i].append(f.ids[j])
        nbrs[j].append(f.ids[i])
    d = f.values.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "neighbors"] + [f"v{k}" for k in range(d)])
        for i, sid in enumerate(f.ids):
            w.writerow([sid, ";".join(map(str, nbrs[i]))] + [repr(float(v)) for v in f.values[i]])


def read_points(path) -> np.ndarray:
    """Rows of coordinates, optional header line."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or row[0].startswith("#"):
                continue
            if k == 0 and not all(_is_number(v) for v in row):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise FormatError(f"{path}:{k + 1}: non-numeric coordinate") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: expected rows of equal length")
    return np.array(rows)


# --- reports ---------------------------------------------------------------------


def _fmt(x) -> str:
    return "nan" if x is None or not np.isfinite(x) else repr(float(x))


def write_probe_csv(report, path) -> None:
    d = report.targets.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"y{k}" for k in range(d)] + ["dist"])
        for y, dist in zip(report.targets, report.dists):
            w.writerow([_fmt(v) for v in y] + [_fmt(dist)])


def write_continuity_csv(report: ContinuityReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "i", "j", "jump"])
        for k, ((i, j), jump) in enumerate(zip(report.edges, report.jumps)):
            w.writerow([k, i, j, _fmt(jump)])


def write_splits_csv(ids, splits, path) -> None:
    da, db = len(splits[0].a), len(splits[0].b)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"a{k}" for k in range(da)] + [f"b{k}" for k in range(db)]
                   + ["residual", "body_violation"])
        for sid, s in zip(ids, splits):
            w.writerow([sid] + [_fmt(v) for v in s.a] + [_fmt(v) for v in s.b]
                       + [_fmt(s.residual), _fmt(s.body_violation)])


def write_path_csv(experiment, path) -> None:
    """One row per path sample: angle, target, selection, and the kernel
    jump of the edge leaving the sample (the last row closes the cycle)."""
    S = experiment.selections
    Y = experiment.targets
    jumps = experiment.report.jumps
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "angle"] + [f"y{k}" for k in range(Y.shape[1])]
                   + [f"z{k}" for k in range(S.shape[1])] + ["jump"])
        for i in range(len(S)):
            w.writerow([i, _fmt(experiment.angles[i])] + [_fmt(v) for v in Y[i]]
                       + [_fmt(v) for v in S[i]] + [_fmt(jumps[i])])
