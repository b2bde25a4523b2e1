"""Benchmark tables: CSV that round-trips exactly, and a fixed-width text rendering."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BenchCell:
    """One (track, behavior, planner) entry of a benchmark matrix.

    ``s_max`` is None when the planner already fails at the bottom of the
    search range. Plan times are wall clock and therefore not reproducible.
    """

    track: str
    behavior: str
    planner: str
    s_max: float | None
    r_otc: float
    plan_ms_mean: float
    plan_ms_std: float
    n_plans: int

    @property
    def key(self) -> tuple[str, str, str]:
        return self.track, self.behavior, self.planner


COLUMNS = [f.name for f in fields(BenchCell)]


def timing_stats(seconds) -> tuple[float, float]:
    """Mean and standard deviation in milliseconds (NaN for an empty list)."""
    a = np.asarray(seconds, dtype=float) * 1e3
    if a.size == 0:
        return math.nan, math.nan
    return float(a.mean()), float(a.std())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table_csv(cells, path: str | Path, header_comment: str = "") -> None:
    """Write cells sorted by key; floats use ``repr`` so re-reading is exact."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for cell in sorted(cells, key=lambda c: c.key):
            w.writerow([_fmt(v) for v in astuple(cell)])


def read_table_csv(path: str | Path) -> list[BenchCell]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or rows[0] != COLUMNS:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    out = []
    for r in rows[1:]:
        track, behavior, planner, s_max, r_otc, mean, std, n = r
        out.append(BenchCell(track, behavior, planner, float(s_max) if s_max else None, float(r_otc),
                             float(mean), float(std), int(n)))
    return out


def format_table(cells) -> str:
    """Fixed-width table: one row per planner, one column group per (track, behavior)."""
    cells = list(cells)
    groups = sorted({(c.track, c.behavior) for c in cells})
    planners = sorted({c.planner for c in cells})
    by_key = {c.key: c for c in cells}
    name_w = max([len("planner")] + [len(p) for p in planners])
    col_w = max([13] + [len(f"{t}/{b}") for t, b in groups])

    def smax_r(c: BenchCell | None) -> str:
        if c is None:
            return "-"
        s = "<0.30" if c.s_max is None else f"{c.s_max:.2f}"
        return f"{s} R={c.r_otc:.2f}"

    lines = []
    head = "planner".ljust(name_w) + "".join(f"  {f'{t}/{b}':>{col_w}}" for t, b in groups)
    lines.append(head + "  " + "plan ms mean+-std".rjust(20))
    lines.append("-" * len(lines[0]))
    for p in planners:
        row = p.ljust(name_w) + "".join(f"  {smax_r(by_key.get((t, b, p))):>{col_w}}" for t, b in groups)
        # pooled timing over every cell of this planner
        mine = [c for c in cells if c.planner == p and c.n_plans > 0]
        n = sum(c.n_plans for c in mine)
        if n:
            mean = sum(c.plan_ms_mean * c.n_plans for c in mine) / n
            var = sum(c.n_plans * (c.plan_ms_std**2 + (c.plan_ms_mean - mean) ** 2) for c in mine) / n
            timing = f"{mean:.2f} +- {math.sqrt(var):.2f}"
        else:
            timing = "n/a"
        lines.append(row + "  " + timing.rjust(20))
    return "\n".join(lines) + "\n"
