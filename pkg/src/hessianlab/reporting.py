"""Deterministic serialization: JSON documents, CSV tables and solution snapshots.

Floats are written with 17 significant digits so that values round-trip
exactly and repeated runs produce byte-identical files.

Snapshot layout (JSON object):

    format       "hessianlab-snapshot"
    version      1
    n, N, k      complex dimension, points per real axis, Hessian index
    spec         parameters that rebuild the ProblemSpec (see problem_from_params)
    diagnostics  {max_lambda1, max_grad, min_lambda_n, residual_inf, ...}
    u            flat list of N**(2n) values, row-major over (x_1, y_1, ..., x_n, y_n)
"""
from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np

SNAPSHOT_FORMAT = "hessianlab-snapshot"
SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    pass


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x)) if x != 0 else ("-0.0" if math.copysign(1, x) < 0 else "0.0")
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.complexfloating):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        out.write(json.dumps(obj))
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, float):
        out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(pad + json.dumps(k) + ": ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.write("[]")
            return
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.write("[" + ", ".join(fmt_float(v) if isinstance(v, float) else str(v) for v in obj) + "]")
            return
        out.write("[\n")
        for i, v in enumerate(obj):
            out.write(pad)
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out = io.StringIO()
    _emit(_plain(obj), out, indent, 0)
    out.write("\n")
    return out.getvalue()


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def save_snapshot(path, solution) -> None:
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "n": solution.grid.n,
        "N": solution.grid.N,
        "k": solution.k,
        "spec": solution.spec_params,
        "diagnostics": solution.diagnostics,
        "u": np.asarray(solution.u, dtype=float).ravel(),
    }
    write_json(path, doc)


def load_snapshot(path) -> dict:
    """Read and validate a snapshot; returns the document with ``u`` reshaped."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError("not a hessianlab snapshot")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {doc.get('version')!r}")
    for key in ("n", "N", "k", "spec", "u"):
        if key not in doc:
            raise SnapshotError(f"snapshot missing field {key!r}")
    n, N = doc["n"], doc["N"]
    u = np.asarray(doc["u"], dtype=float)
    if u.size != N ** (2 * n):
        raise SnapshotError(f"u has {u.size} values, expected {N ** (2 * n)}")
    doc["u"] = u.reshape((N,) * (2 * n))
    return doc
