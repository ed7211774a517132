"""Aligned multi-series panel plus delimiter-separated text I/O.

A Panel is the common currency of the preprocessing and selection stages:
a strictly increasing daily date axis, named float columns, and NaN for
missing cells. Files are UTF-8 text with LF endings, one header row, a
leading ``date`` column in ISO-8601 form, and empty fields for missing
values. Lines starting with ``#`` before the header are metadata comments
and are skipped on read.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_EPOCH_MONDAY_OFFSET = 3  # 1970-01-01 was a Thursday; (days + 3) % 7 gives Monday=0

SATURDAY = 5
SUNDAY = 6


def weekday(dates: np.ndarray) -> np.ndarray:
    """Day of week for datetime64[D] values, Monday=0 .. Sunday=6."""
    days = dates.astype("datetime64[D]").view("int64")
    return (days + _EPOCH_MONDAY_OFFSET) % 7


def parse_date(text: str) -> np.datetime64:
    """Parse one ISO-8601 calendar date, rejecting anything else."""
    token = text.strip()
    try:
        value = np.datetime64(token, "D")
    except ValueError as exc:
        raise DataError(f"unparsable date {token!r}") from exc
    if str(value) != token:
        # np.datetime64 tolerates partial dates like '2020-01'; we do not.
        raise DataError(f"unparsable date {token!r} (expected YYYY-MM-DD)")
    return value


@dataclass(frozen=True)
class Panel:
    """Aligned panel of named daily series.

    Attributes
    ----------
    dates : (n,) datetime64[D], strictly increasing
    names : list of unique column names
    values : (n, m) float64, NaN marks a missing cell
    """

    dates: np.ndarray
    names: list[str]
    values: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("panel values must be a 2-d array")
        if len(dates) != values.shape[0]:
            raise DataError(
                f"{len(dates)} dates but {values.shape[0]} value rows"
            )
        if len(self.names) != values.shape[1]:
            raise DataError(
                f"{len(self.names)} names but {values.shape[1]} value columns"
            )
        if len(set(self.names)) != len(self.names):
            raise DataError("duplicate column names")
        if any(not n for n in self.names):
            raise DataError("empty column name")
        if len(dates) > 1 and not np.all(np.diff(dates).astype("int64") > 0):
            raise DataError("dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def mask(self) -> np.ndarray:
        """Boolean per-cell presence indicator (True = value present)."""
        return np.isfinite(self.values)

    def is_complete(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        """Copy of one named column."""
        return self.values[:, self.column_index(name)].copy()

    def select(self, names: list[str]) -> "Panel":
        """Sub-panel with the given columns, in the given order."""
        idx = [self.column_index(n) for n in names]
        return Panel(self.dates, list(names), self.values[:, idx].copy())

    def with_values(self, values: np.ndarray) -> "Panel":
        return Panel(self.dates, list(self.names), values, dict(self.meta))

    def has_daily_calendar(self) -> bool:
        """True when dates cover every calendar day without gaps."""
        if self.n_rows < 2:
            return True
        return bool(np.all(np.diff(self.dates).astype("int64") == 1))


def _format_cell(x: float) -> str:
    if not np.isfinite(x):
        return ""
    return repr(float(x))


def write_panel(path, panel: Panel, delimiter: str = ",",
                header_lines: list[str] | None = None) -> None:
    """Write a panel as delimiter-separated UTF-8 text with LF endings."""
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["date"] + list(panel.names))
    for i in range(panel.n_rows):
        row = [str(panel.dates[i])]
        row += [_format_cell(v) for v in panel.values[i]]
        writer.writerow(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_panel(path, delimiter: str = ",") -> Panel:
    """Read a panel written by write_panel (or by hand in the same shape)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    meta: dict[str, str] = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            text = ln.lstrip("#").strip()
            if "=" in text:
                key, _, val = text.partition("=")
                meta[key.strip()] = val.strip()
            continue
        body.append(ln)
    if not body:
        raise DataError(f"{path}: no header row")
    rows = list(csv.reader(body, delimiter=delimiter))
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "date":
        raise DataError(f"{path}: first column must be 'date', got {header[:1]}")
    names = header[1:]
    if not names:
        raise DataError(f"{path}: no value columns")
    n_cols = len(header)
    dates = []
    values = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n_cols:
            raise DataError(f"{path}: line {r}: {len(row)} fields, expected {n_cols}")
        dates.append(parse_date(row[0]))
        parsed = []
        for c, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                parsed.append(np.nan)
                continue
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: line {r}, column {names[c]!r}: bad number {cell!r}"
                ) from None
        values.append(parsed)
    dates_arr = np.array(dates, dtype="datetime64[D]")
    if len(np.unique(dates_arr)) != len(dates_arr):
        raise DataError(f"{path}: duplicate dates")
    return Panel(dates_arr, names, np.array(values, dtype=np.float64), meta)
