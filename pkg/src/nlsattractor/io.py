"""CSV time series and JSON summaries.

Numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly, and files always use LF line endings.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .diagnostics import CSV_COLUMNS, EnergySample

HEADER = ",".join(CSV_COLUMNS)


def fmt(x: float) -> str:
    return "%.17g" % x


def write_table(path, header, rows) -> Path:
    """Write a numeric table; ``rows`` are sequences of floats."""
    path = Path(path)
    lines = [",".join(header)]
    lines += [",".join(fmt(float(v)) for v in row) for row in rows]
    path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    return path


def read_table(path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(v) for v in row] for row in reader]


def write_timeseries(samples: list[EnergySample], path) -> Path:
    """CSV with one row per :class:`EnergySample`, in time order."""
    steps = [b.t - a.t for a, b in zip(samples, samples[1:])]
    # backward runs are in time order too, just decreasing
    if not (all(h > 0 for h in steps) or all(h < 0 for h in steps)):
        raise ValueError("samples must be in time order")
    return write_table(path, CSV_COLUMNS, ([getattr(s, c) for c in CSV_COLUMNS] for s in samples))


def read_timeseries(path) -> list[EnergySample]:
    header, rows = read_table(path)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected header {','.join(header)!r}")
    return [EnergySample(*row) for row in rows]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()  # numpy scalar
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_summary(summary: dict, path) -> Path:
    """Sorted-key JSON, so identical runs give identical bytes (up to ``wall_clock``)."""
    path = Path(path)
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True, allow_nan=False)
    path.write_bytes((text + "\n").encode("utf-8"))
    return path


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())
