"""CSV and JSON writers for run products."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .histogram import LogHistogram


def fmt(v):
    """Render one CSV cell: plain decimals in [1e-6, 1e6), scientific otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if v == 0 or 1e-6 <= abs(v) < 1e6:
            return repr(v)
        return np.format_float_scientific(v, unique=True)
    if v is None:
        return ""
    return str(v)


class CsvWriter:
    """Write a provenance comment, a header row and data rows."""

    def __init__(self, path, header, digest, seed):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write(f"# config_sha256={digest} master_seed={seed}\n")
        self._fh.write(",".join(header) + "\n")
        self.ncols = len(header)

    def row(self, *values):
        if len(values) != self.ncols:
            raise ValueError(f"expected {self.ncols} values, got {len(values)}")
        self._fh.write(",".join(fmt(v) for v in values) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_csv(path):
    """Parse a file written by :class:`CsvWriter` into (comment, header, rows)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    comment = lines[0]
    header = lines[1].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[2:] if ln]
    return comment, header, rows


def jsonable(v):
    """Plain JSON types; non-finite floats become the strings ``inf``/``nan``."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, LogHistogram):
        return jsonable(v.to_dict())
    if is_dataclass(v) and not isinstance(v, type):
        return jsonable(asdict(v))
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def write_json(path, obj):
    obj = jsonable(obj)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def snapshot_label(t):
    t = float(t)
    return str(int(t)) if t.is_integer() else repr(t)
