"""CSV and JSON persistence of grid paths.

CSV rows are ``t, level-1 coordinates, row-major level-2 coordinates``; every
number is written with 17 significant digits so a round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .paths import GridPath, RoughPathGrid

FLOAT_FMT = "%.17g"


def fmt(x) -> str:
    return FLOAT_FMT % float(x)


def header(dim: int, depth: int) -> list[str]:
    cols = ["t"] + [f"x{i}" for i in range(dim)]
    if depth >= 2:
        cols += [f"a{i}{j}" if dim <= 10 else f"a{i}_{j}" for i in range(dim) for j in range(dim)]
    return cols


def _rows(path):
    if isinstance(path, RoughPathGrid):
        n, d = len(path), path.dim
        return np.hstack([path.times[:, None], path.level1, path.level2.reshape(n, d * d)]), 2
    if isinstance(path, GridPath):
        return np.hstack([path.times[:, None], path.values]), 1
    raise InvalidArgumentError(f"cannot serialize {type(path).__name__}")


def to_csv(path, dest=None) -> str:
    table, depth = _rows(path)
    dim = path.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(dim, depth))
    for row in table:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def read_table(src) -> tuple[list[str], np.ndarray]:
    text = Path(src).read_text() if not isinstance(src, io.StringIO) else src.getvalue()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InvalidArgumentError("empty CSV")
    head, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body if r], dtype=float)
    except ValueError as exc:
        raise InvalidArgumentError(f"non-numeric CSV cell: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(head):
        raise InvalidArgumentError("CSV rows do not match the header")
    return head, data


def from_csv(src):
    """Read a path CSV; a level-2 block (columns ``a..``) makes it a RoughPathGrid."""
    head, data = read_table(src)
    if not head or head[0] != "t":
        raise InvalidArgumentError("first CSV column must be 't'")
    dim = sum(1 for h in head if h.startswith("x"))
    n2 = sum(1 for h in head if h.startswith("a"))
    if dim < 1 or len(head) != 1 + dim + n2 or n2 not in (0, dim * dim):
        raise InvalidArgumentError("CSV columns do not describe a path")
    t = data[:, 0]
    if n2 == 0:
        return GridPath(t, data[:, 1:1 + dim])
    return RoughPathGrid(t, data[:, 1:1 + dim], data[:, 1 + dim:].reshape(-1, dim, dim))


def to_json(path) -> str:
    table, depth = _rows(path)
    env = {
        "kind": type(path).__name__,
        "dim": path.dim,
        "depth": depth,
        "columns": header(path.dim, depth),
        "rows": [[fmt(v) for v in row] for row in table],
    }
    return json.dumps(env, indent=1)


def from_json(text: str):
    env = json.loads(text)
    data = np.array([[float(v) for v in r] for r in env["rows"]], dtype=float)
    dim = int(env["dim"])
    if env["depth"] == 1:
        return GridPath(data[:, 0], data[:, 1:1 + dim])
    return RoughPathGrid(data[:, 0], data[:, 1:1 + dim], data[:, 1 + dim:].reshape(-1, dim, dim))


def write_table(dest, columns: list[str], rows) -> str:
    """Write a report table; floats get 17 significant digits, other cells pass through."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text
