"""Aligned-text and CSV tables for harness reports."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence


def aligned(columns: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """First column left-aligned, the rest right-aligned, a rule under the header."""
    table = [[str(c) for c in columns]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    lines = []
    for k, row in enumerate(table):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if k == 0:
            lines.append("-" * sum(widths) + "-" * 2 * (len(widths) - 1))
    return "\n".join(lines) + "\n"


def to_csv(columns: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def write_report(path: str | Path, columns: Sequence[str], text_rows, csv_rows) -> tuple[Path, Path]:
    """Write ``<path>.txt`` (aligned) and ``<path>.csv``; returns both paths."""
    base = Path(path)
    if base.suffix in (".txt", ".csv"):
        base = base.with_suffix("")
    txt, csv_path = base.with_name(base.name + ".txt"), base.with_name(base.name + ".csv")
    txt.parent.mkdir(parents=True, exist_ok=True)
    txt.write_text(aligned(columns, text_rows))
    csv_path.write_text(to_csv(columns, csv_rows))
    return txt, csv_path
