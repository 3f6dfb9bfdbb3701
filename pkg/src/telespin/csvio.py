"""CSV emission/ingestion: '#'-prefixed metadata, then header, then rows.

Floats are written with 17 significant digits, so round-tripping is exact
and deterministic runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, columns: dict, metadata: dict | None = None) -> None:
    """Write named columns (equal-length 1-d arrays) with metadata header."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all CSV columns must have equal length")
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key} = {json.dumps(value)}")
    lines.append(",".join(names))
    for i in range(length):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Inverse of write_csv: (metadata dict, {name: array}).

    Columns parse as float arrays where possible and stay as string arrays
    otherwise (e.g. status or mode tags).
    """
    meta = {}
    rows = []
    header = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if raw.startswith("#"):
            key, _, value = raw[1:].partition("=")
            meta[key.strip()] = json.loads(value.strip())
            continue
        if header is None:
            header = raw.split(",")
            continue
        if raw:
            rows.append(raw.split(","))
    columns = {}
    for i, name in enumerate(header or []):
        raw_col = [r[i] for r in rows]
        try:
            columns[name] = np.asarray(raw_col, dtype=float)
        except ValueError:
            columns[name] = np.asarray(raw_col, dtype=object)
    return meta, columns
