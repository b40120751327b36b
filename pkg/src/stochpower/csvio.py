"""CSV files with a ``#``-comment metadata header.

Floats are written with 17 significant digits so they read back exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["read_csv", "write_csv", "write_array_csv"]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def _header(fh, meta: dict):
    for key, value in meta.items():
        fh.write(f"# {key}={value}\n")


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        _header(fh, meta or {})
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_array_csv(path, columns, index, values, meta: dict | None = None, chunk: int = 200_000) -> Path:
    """Integer index column plus a float matrix, streamed in chunks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = "%d" + ",%.17g" * values.shape[1]
    with path.open("w", newline="") as fh:
        _header(fh, meta or {})
        fh.write(",".join(columns) + "\n")
        for start in range(0, len(values), chunk):
            block = np.column_stack([index[start:start + chunk], values[start:start + chunk]])
            np.savetxt(fh, block, fmt=fmt, delimiter=",")
    return path


def _parse(cell: str):
    for kind in (int, float):
        try:
            return kind(cell)
        except ValueError:
            pass
    if cell in ("true", "false"):
        return cell == "true"
    return cell


def read_csv(path):
    """Return ``(meta, columns, rows)`` with numeric cells converted."""
    meta = {}
    with Path(path).open(newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse(c) for c in row] for row in reader]
    return meta, columns, rows
