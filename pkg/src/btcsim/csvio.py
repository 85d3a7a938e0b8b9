"""Deterministic CSV emission and small parsing helpers for the CLI.

All floats are written with 17 significant digits so values round-trip
exactly; rows are written in input order, comma-separated, with a header
and no trailing whitespace.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["format_value", "write_csv", "parse_range", "parse_int_list", "parse_floats"]


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def parse_range(text: str) -> list[float]:
    """Parse ``start:stop:step`` into values: start, start+step, ...

    Inclusive of start; values are emitted while v < stop + step/2, so
    the grid 0.1:2.0:0.1 has exactly 20 points.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError(f"step must be positive in {text!r}")
    values = []
    k = 0
    while True:
        v = start + k * step
        if v >= stop + step / 2:
            break
        values.append(v)
        k += 1
    return values


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc


def parse_floats(text: str, n: int) -> list[float]:
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if len(vals) != n:
        raise ValueError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals
