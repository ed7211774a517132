"""Append-only run journal: completed work units, flushed as they finish.

The journal makes long runs interruptible. Each finished grid cell and
each finished training run appends one tab-separated line carrying the
configuration fingerprint, the unit's identity, and its full-precision
results. On restart, lines whose fingerprint matches the current
configuration are loaded and their units skipped; everything else is
ignored (stale fingerprints are kept in the file but never reused, so
the journal stays safe to append across config edits).

Values round-trip exactly: floats are written with ``repr`` and parsed
with ``float``, so a resumed run reproduces the same bytes in every
report as an uninterrupted one.
"""

from __future__ import annotations

import math
import os

from .errors import DataError
from .metrics import METRIC_COLUMNS, MetricsReport
from .select import CellResult
from .textio import format_float

__all__ = ["LedgerState", "read_ledger", "append_cell", "append_run",
           "cell_line", "run_line"]

_HEADER = "# teflow run ledger (tab-separated; append-only)"
_NA = "na"


class LedgerState:
    """Completed units for one configuration fingerprint.

    ``cells`` maps driver name to {(k, l, K): CellResult}; ``runs`` maps
    (design, scenario, batch, lr, dropout, seed) to a (validation, test)
    MetricsReport pair.
    """

    def __init__(self):
        self.cells: dict = {}
        self.runs: dict = {}

    @property
    def n_cells(self) -> int:
        return sum(len(c) for c in self.cells.values())

    @property
    def n_runs(self) -> int:
        return len(self.runs)


def _format_value(x: float) -> str:
    return _NA if x is None or math.isnan(x) else format_float(x)


def _parse_value(text: str) -> float:
    return math.nan if text == _NA else float(text)


def _format_report(report: MetricsReport) -> list:
    return [_NA if getattr(report, name) is None
            else format_float(getattr(report, name))
            for name in METRIC_COLUMNS]


def _parse_report(fields: list) -> MetricsReport:
    values = {name: (None if text == _NA else float(text))
              for name, text in zip(METRIC_COLUMNS, fields)}
    return MetricsReport(**values)


def _check_name(name: str) -> str:
    if "\t" in name or "\n" in name:
        raise DataError(f"name {name!r} contains tab or newline and "
                        "cannot be journaled")
    return name


def cell_line(fingerprint: str, driver: str, key: tuple,
              cell: CellResult) -> str:
    k, l, K = key
    return "\t".join(["cell", fingerprint, _check_name(driver),
                      str(k), str(l), str(K),
                      _format_value(cell.global_te),
                      _format_value(cell.p_value),
                      "true" if cell.significant else "false",
                      "true" if cell.valid else "false"])


def run_line(fingerprint: str, key: tuple, val_report: MetricsReport,
             test_report: MetricsReport) -> str:
    design, scenario, batch, lr, dropout, seed = key
    return "\t".join(["run", fingerprint, design, scenario, str(batch),
                      format_float(lr), format_float(dropout), str(seed)]
                     + _format_report(val_report)
                     + _format_report(test_report))


def _append(path, line: str) -> None:
    new = not os.path.exists(path)
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        if new:
            fh.write(_HEADER + "\n")
        fh.write(line + "\n")
        fh.flush()


def append_cell(path, fingerprint: str, driver: str, key: tuple,
                cell: CellResult) -> None:
    _append(path, cell_line(fingerprint, driver, key, cell))


def append_run(path, fingerprint: str, key: tuple,
               val_report: MetricsReport,
               test_report: MetricsReport) -> None:
    _append(path, run_line(fingerprint, key, val_report, test_report))


def read_ledger(path, fingerprint: str) -> LedgerState:
    """Load the units journaled under ``fingerprint``.

    A missing file is an empty ledger. Later lines win over earlier
    duplicates of the same unit (a unit is only ever journaled with
    identical values, so this is cosmetic).
    """
    state = LedgerState()
    if not os.path.exists(path):
        return state
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    n_metrics = len(METRIC_COLUMNS)
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = raw.split("\t")
        kind = fields[0]
        try:
            if kind == "cell":
                if len(fields) != 10:
                    raise ValueError(f"expected 10 fields, "
                                     f"got {len(fields)}")
                if fields[1] != fingerprint:
                    continue
                _, _, driver, k, l, K, te, p, sig, valid = fields
                cell = CellResult(_parse_value(te), _parse_value(p),
                                  sig == "true", valid == "true")
                state.cells.setdefault(driver, {})[
                    (int(k), int(l), int(K))] = cell
            elif kind == "run":
                if len(fields) != 8 + 2 * n_metrics:
                    raise ValueError(f"expected {8 + 2 * n_metrics} "
                                     f"fields, got {len(fields)}")
                if fields[1] != fingerprint:
                    continue
                design, scenario = fields[2], fields[3]
                key = (design, scenario, int(fields[4]), float(fields[5]),
                       float(fields[6]), int(fields[7]))
                state.runs[key] = (
                    _parse_report(fields[8:8 + n_metrics]),
                    _parse_report(fields[8 + n_metrics:]))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except ValueError as exc:
            raise DataError(f"{path} line {lineno}: {exc}") from None
    return state
