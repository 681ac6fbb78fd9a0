"""CSV format for configuration/metric tables.

Layout: header ``feat_1,...,feat_n,<metric>,...`` followed by one row per
configuration.  Feature cells are exactly ``0`` or ``1``; metric cells are
decimal literals.  Rows may arrive in any order but each configuration may
appear once.  Export writes rows in integer-mask order (bit i-1 of the mask
is feat_i) with ``repr`` floats, so import/export round-trips bytes.
"""

from __future__ import annotations

import csv
import io
import re
from typing import Mapping

from .model import TableFormatError

__all__ = ["parse_table", "format_table", "FEATURE_COLUMN_PATTERN"]

FEATURE_COLUMN_PATTERN = re.compile(r"feat_([1-9][0-9]*)$")


def parse_table(text: str) -> tuple[int, tuple[str, ...], dict[int, tuple[float, ...]]]:
    """Parse table CSV text.

    Returns:
        (n_features, metric_names, rows) with rows keyed by mask.

    Raises:
        TableFormatError: bad header, non-0/1 feature cell, unparseable
            metric cell, wrong column count, or duplicate configuration.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TableFormatError("empty table: no header row") from None
    header = [h.strip() for h in header]

    n = 0
    for col in header:
        m = FEATURE_COLUMN_PATTERN.match(col)
        if m is None or int(m.group(1)) != n + 1:
            break
        n += 1
    if n == 0:
        raise TableFormatError(f"header must start with feat_1; got {header[:1]}")
    metric_names = tuple(header[n:])
    if not metric_names:
        raise TableFormatError("table has no metric columns")
    for name in metric_names:
        if FEATURE_COLUMN_PATTERN.match(name):
            raise TableFormatError(
                f"metric column {name!r} clashes with the feature-column pattern"
            )
        if not name:
            raise TableFormatError("empty metric column name")

    rows: dict[int, tuple[float, ...]] = {}
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue  # ignore blank lines
        if len(cells) != n + len(metric_names):
            raise TableFormatError(
                f"line {lineno}: expected {n + len(metric_names)} cells, got {len(cells)}"
            )
        mask = 0
        for i in range(n):
            cell = cells[i].strip()
            if cell == "1":
                mask |= 1 << i
            elif cell != "0":
                raise TableFormatError(
                    f"line {lineno}: feature cell must be 0 or 1, got {cells[i]!r}"
                )
        if mask in rows:
            raise TableFormatError(f"line {lineno}: duplicate configuration mask {mask}")
        values = []
        for j, cell in enumerate(cells[n:]):
            try:
                values.append(float(cell))
            except ValueError:
                raise TableFormatError(
                    f"line {lineno}: metric {metric_names[j]!r} cell {cell!r} is not a number"
                ) from None
        rows[mask] = tuple(values)
    return n, metric_names, rows


def format_table(
    n: int, metric_names: tuple[str, ...], rows: Mapping[int, tuple[float, ...]]
) -> str:
    """Serialize rows to the canonical CSV byte layout (mask order, repr floats)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"feat_{i + 1}" for i in range(n)] + list(metric_names))
    for mask in sorted(rows):
        bits = [(mask >> i) & 1 for i in range(n)]
        writer.writerow([str(b) for b in bits] + [repr(float(v)) for v in rows[mask]])
    return out.getvalue()
