"""Readers and writers for clouds, grids, trees and dataset manifests.

CSV files are UTF-8 with LF line endings and reals printed with 17
significant digits, which round-trips IEEE doubles exactly. JSON uses the
shortest round-trip representation of each float.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import DataError
from .mass_tree import HimapTree
from .quantile_map import QuantileGrid

__all__ = [
    "read_cloud",
    "read_grid",
    "read_json",
    "read_manifest",
    "read_tree",
    "write_cloud",
    "write_grid",
    "write_json",
    "write_manifest",
    "write_tree",
]

MANIFEST_FORMAT = "himap-dataset"


def _fmt(v):
    return format(float(v), ".17g")


def _write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataError(f"{path}: no data rows")
    for line, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{line}: {len(r)} fields but the header has {len(header)}")
    try:
        arr = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value ({exc})") from None
    return header, arr


def write_cloud(path, cloud):
    """One point per row under the header ``x1,...,xd``."""
    cloud = cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)
    _write_table(path, [f"x{i + 1}" for i in range(cloud.dim)], cloud.points)


def read_cloud(path):
    header, arr = _read_table(path)
    if header != [f"x{i + 1}" for i in range(len(header))]:
        raise DataError(f"{path}: expected header x1,...,xd, got {','.join(header)}")
    return PointCloud(arr)


def write_grid(path, grid):
    """Columns ``t,q1,...,qd``: the level and the map value there."""
    header = ["t"] + [f"q{i + 1}" for i in range(grid.dim)]
    _write_table(path, header, np.column_stack([grid.levels, grid.values]))


def read_grid(path):
    header, arr = _read_table(path)
    expected = ["t"] + [f"q{i + 1}" for i in range(len(header) - 1)]
    if header != expected or len(header) < 2:
        raise DataError(f"{path}: expected header t,q1,...,qd, got {','.join(header)}")
    return QuantileGrid(arr[:, 0].copy(), arr[:, 1:].copy())


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def write_tree(path, tree):
    write_json(path, tree.to_dict())


def read_tree(path):
    obj = read_json(path)
    try:
        return HimapTree.from_dict(obj)
    except (KeyError, TypeError, IndexError) as exc:
        raise DataError(f"{path}: malformed tree ({exc!r})") from None


def write_manifest(path, members, params, X=None, x_eval=None):
    """Manifest listing member files (relative to the manifest) and group keys.

    ``members`` is a list of ``(key, filename)`` pairs.
    """
    obj = {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "members": [{"key": k, "file": str(f)} for k, f in members],
        "params": params,
    }
    if X is not None:
        obj["X"] = np.asarray(X, dtype=float).tolist()
    if x_eval is not None:
        obj["x_eval"] = np.asarray(x_eval, dtype=float).tolist()
    write_json(path, obj)


def read_manifest(path):
    """Return the manifest dict with member clouds loaded under ``clouds``."""
    obj = read_json(path)
    if obj.get("format") != MANIFEST_FORMAT:
        raise DataError(f"{path}: not a dataset manifest")
    base = Path(path).parent
    try:
        obj["clouds"] = [read_cloud(base / m["file"]) for m in obj["members"]]
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed member list ({exc!r})") from None
    return obj
