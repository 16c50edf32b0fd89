"""Reading and writing spaces, fields, measures and run manifests.

Space file (JSON, UTF-8)::

    {"points": ["a", "b"],
     "dist": [[0, 1], [null, 0]],      # null is an infinite distance
     "measure": [1, 1],                # optional, uniform 1 by default
     "neighbors": [[1], [0]],          # optional, all finite pairs by default
     "coords": [[0.0, 0.0], ...]}      # optional

Numbers in CSV output use ``%.17g`` so that a rerun reproduces files byte
for byte.
"""

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .space import FiniteAsymmSpace

FMT = "%.17g"


def fmt(x):
    return FMT % float(x)


def space_to_dict(space):
    dist = [[None if np.isinf(v) else float(v) for v in row] for row in space.dist]
    out = {
        "points": list(space.points),
        "dist": dist,
        "measure": [float(v) for v in space.measure],
        "neighbors": [list(row) for row in space.neighbors],
    }
    if space.coords is not None:
        out["coords"] = np.asarray(space.coords).tolist()
    return out


def space_from_dict(obj):
    if not isinstance(obj, dict) or "dist" not in obj:
        raise ParseError("space file needs a 'dist' matrix")
    rows = obj["dist"]
    if not isinstance(rows, list) or not rows:
        raise ParseError("'dist' must be a non-empty list of rows")
    n = len(rows)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"row {i} of 'dist' has the wrong length (ragged matrix)")
    try:
        dist = np.array([[np.inf if v is None else float(v) for v in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric distance entry: {exc}") from None
    try:
        return FiniteAsymmSpace(
            dist,
            obj.get("measure"),
            obj.get("neighbors"),
            obj.get("points"),
            obj.get("coords"),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def load_space(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from None
    return space_from_dict(obj)


def save_space(space, path):
    Path(path).write_text(json.dumps(space_to_dict(space), indent=1) + "\n", encoding="utf-8")


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    # tolerate one header row
    if rows:
        try:
            float(rows[0][-1])
        except ValueError:
            rows = rows[1:]
    return rows


def load_field(path, space):
    """Read ``point-id,value`` rows into a vector ordered like ``space.points``."""
    rows = _read_rows(path)
    vals = {}
    for r in rows:
        if len(r) != 2:
            raise ParseError(f"{path}: expected 'point-id,value' rows, got {r}")
        try:
            vals[r[0].strip()] = float(r[1])
        except ValueError:
            raise ParseError(f"{path}: bad value {r[1]!r}") from None
    missing = [p for p in space.points if p not in vals]
    if missing:
        raise ParseError(f"{path}: no value for points {missing[:5]}")
    return np.array([vals[p] for p in space.points])


def load_points(path):
    """Point-cloud CSV: ``id,x1,...,xn`` or bare coordinate rows."""
    rows = _read_rows(path)
    if not rows:
        raise ParseError(f"{path}: empty point cloud")
    ids, coords = [], []
    for k, r in enumerate(rows):
        try:
            c = [float(v) for v in r]
            ids.append(f"p{k}")
        except ValueError:
            try:
                c = [float(v) for v in r[1:]]
            except ValueError:
                raise ParseError(f"{path}: bad row {r}") from None
            ids.append(r[0].strip())
        coords.append(c)
    if len({len(c) for c in coords}) != 1:
        raise ParseError(f"{path}: rows have different dimensions")
    return ids, np.array(coords)


def write_field(path, space, values, header=("point", "value")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, v in zip(space.points, np.asarray(values)):
            w.writerow([p, fmt(v)])


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_matrix(path, M):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(M):
            w.writerow([fmt(v) for v in row])


def file_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(outdir, command, params, inputs, outputs):
    """Record everything needed to rerun a command."""
    from . import __version__
    from .kernels import BACKEND

    manifest = {
        "command": command,
        "parameters": params,
        "inputs": {str(p): file_hash(p) for p in inputs},
        "outputs": sorted(str(p) for p in outputs),
        "versions": {
            "asym_mms": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernels": BACKEND,
        },
    }
    path = Path(outdir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
