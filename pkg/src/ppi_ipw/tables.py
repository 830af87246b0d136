"""Plain-text and CSV rendering of result tables."""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np


def fmt(value) -> str:
    """Six significant digits; the CSV and table formats both use it."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float) and value == 0.0:
        return "0"
    return f"{value:.6g}"


def to_csv(columns: Sequence[str], records: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(records)
    return buf.getvalue()


def aligned_table(columns: Sequence[str], records: Sequence[Sequence[str]]) -> str:
    widths = [max(len(c), *(len(r[i]) for r in records)) if records else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(columns, widths)))]
    for rec in records:
        lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(rec, widths))))
    return "\n".join(lines)
