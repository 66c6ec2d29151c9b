"""Rectangular report tables rendered as CSV and aligned plain text."""

import csv
import io
import math
from dataclasses import dataclass, field

__all__ = ["Cell", "ReportTable", "format_number"]


def format_number(x, digits=5):
    """Fixed-point for moderate magnitudes, scientific otherwise; exact zeros print as ``0``."""
    if x == 0.0:
        return "0"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    ax = abs(x)
    if 1e-4 <= ax < 1e6:
        return f"{x:.{digits}f}"
    return f"{x:.{digits - 1}e}"


@dataclass(frozen=True)
class Cell:
    """A numeric estimate with an optional parenthetical statistic.

    ``stat`` may be infinite (e.g. a t-value over a zero bootstrap spread);
    it is rendered as ``inf`` and callers add a footnote.
    """

    value: float
    stat: float = None

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"cell value must be finite, got {self.value!r}")
        object.__setattr__(self, "value", v)
        if self.stat is not None:
            s = float(self.stat)
            if math.isnan(s):
                raise ValueError("cell statistic must not be NaN")
            object.__setattr__(self, "stat", s)

    def text(self, digits=5):
        main = format_number(self.value, digits)
        if self.stat is None:
            return main
        return f"{main} ({format_number(self.stat, 4)})"


def _check_cell(c):
    if isinstance(c, Cell) or isinstance(c, str):
        return c
    if isinstance(c, bool):
        return str(c)
    if isinstance(c, int):
        return c
    if isinstance(c, float):
        if not math.isfinite(c):
            raise ValueError(f"numeric cell must be finite, got {c!r}")
        return c
    raise TypeError(f"unsupported cell type {type(c).__name__}")


@dataclass
class ReportTable:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    footnotes: tuple = ()
    meta: dict = field(default_factory=dict)  # machine-readable extras, not rendered

    def __post_init__(self):
        self.columns = tuple(str(c) for c in self.columns)
        checked = []
        for i, row in enumerate(self.rows):
            row = tuple(row)
            if len(row) != len(self.columns):
                raise ValueError(
                    f"table {self.name!r}: row {i} has {len(row)} cells, expected {len(self.columns)}"
                )
            checked.append(tuple(_check_cell(c) for c in row))
        self.rows = checked
        self.footnotes = tuple(self.footnotes)

    def _stat_columns(self):
        return [any(isinstance(r[j], Cell) and r[j].stat is not None for r in self.rows) for j in range(len(self.columns))]

    def csv_text(self):
        """Machine-readable CSV; statistics get their own ``<column>_stat`` column."""
        has_stat = self._stat_columns()
        header = []
        for col, s in zip(self.columns, has_stat):
            header.append(col)
            if s:
                header.append(f"{col}_stat")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in self.rows:
            out = []
            for c, s in zip(row, has_stat):
                if isinstance(c, Cell):
                    out.append(repr(c.value))
                    if s:
                        out.append("" if c.stat is None else repr(c.stat))
                else:
                    out.append(repr(c) if isinstance(c, float) else str(c))
                    if s:
                        out.append("")
            w.writerow(out)
        return buf.getvalue()

    def text(self):
        """Aligned plain-text rendering with the name as a title and footnotes below."""
        cells = [list(self.columns)]
        for row in self.rows:
            cells.append(
                [c.text() if isinstance(c, Cell) else (format_number(c) if isinstance(c, float) else str(c)) for c in row]
            )
        widths = [max(len(r[j]) for r in cells) for j in range(len(self.columns))]
        lines = [self.name, ""]
        for i, r in enumerate(cells):
            parts = [r[0].ljust(widths[0])] + [r[j].rjust(widths[j]) for j in range(1, len(r))]
            lines.append("  ".join(parts).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        for note in self.footnotes:
            lines.append(note)
        return "\n".join(lines) + "\n"
