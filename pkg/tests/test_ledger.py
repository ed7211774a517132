"""Tests for the append-only run journal."""

import math

import pytest

from teflow.errors import DataError
from teflow.ledger import (
    LedgerState,
    append_cell,
    append_run,
    cell_line,
    read_ledger,
    run_line,
)
from teflow.metrics import MetricsReport
from teflow.select import CellResult

FP = "abc123def456"


def report(acc):
    return MetricsReport(acc=acc, tpr=acc, tnr=None, ppv=acc,
                         for_rate=1 - acc, ba=acc, f1=acc, auc=0.5)


class TestLines:
    def test_cell_line_layout(self):
        cell = CellResult(0.25, 1.0 / 101.0, True, True)
        line = cell_line(FP, "oil", (2, 3, 4), cell)
        fields = line.split("\t")
        assert fields[:6] == ["cell", FP, "oil", "2", "3", "4"]
        assert float(fields[6]) == 0.25
        assert float(fields[7]) == 1.0 / 101.0
        assert fields[8:] == ["true", "true"]

    def test_invalid_cell_uses_na(self):
        cell = CellResult(math.nan, math.nan, False, False)
        line = cell_line(FP, "oil", (9, 9, 9), cell)
        fields = line.split("\t")
        assert fields[6] == "na" and fields[7] == "na"
        assert fields[8:] == ["false", "false"]

    def test_run_line_layout(self):
        key = ("D1", "S3", 64, 0.0001, 0.3, 7)
        line = run_line(FP, key, report(0.625), report(0.5))
        fields = line.split("\t")
        assert fields[:8] == ["run", FP, "D1", "S3", "64", "0.0001",
                              "0.3", "7"]
        assert float(fields[8]) == 0.625
        assert fields[10] == "na"  # tnr is undefined in both reports
        assert len(fields) == 8 + 16

    def test_tab_in_name_rejected(self):
        with pytest.raises(DataError):
            cell_line(FP, "bad\tname", (1, 1, 1),
                      CellResult(0.0, 1.0, False, True))


class TestRoundTrips:
    def test_cells_round_trip_exactly(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        cells = {
            ("oil", (1, 1, 4)): CellResult(0.1234567890123456, 0.0099,
                                           True, True),
            ("oil", (2, 1, 4)): CellResult(-0.03, 1.0, False, True),
            ("gas", (9, 9, 9)): CellResult(math.nan, math.nan, False,
                                           False),
        }
        for (driver, key), cell in cells.items():
            append_cell(path, FP, driver, key, cell)
        state = read_ledger(path, FP)
        assert state.n_cells == 3
        got = state.cells["oil"][(1, 1, 4)]
        assert got.global_te == 0.1234567890123456
        assert got.p_value == 0.0099
        assert got.significant is True and got.valid is True
        invalid = state.cells["gas"][(9, 9, 9)]
        assert math.isnan(invalid.global_te)
        assert math.isnan(invalid.p_value)
        assert invalid.valid is False

    def test_runs_round_trip_exactly(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        key = ("D2", "S1", 32, 0.001, 0.5, 0)
        val, test = report(2.0 / 3.0), report(0.123456789012345)
        append_run(path, FP, key, val, test)
        state = read_ledger(path, FP)
        assert state.n_runs == 1
        got_val, got_test = state.runs[key]
        assert got_val == val
        assert got_test == test
        assert got_val.tnr is None

    def test_mixed_kinds_in_one_file(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        append_cell(path, FP, "oil", (1, 1, 2),
                    CellResult(0.5, 0.01, True, True))
        append_run(path, FP, ("D1", "S1", 32, 0.001, 0.3, 0),
                   report(0.5), report(0.5))
        append_cell(path, FP, "oil", (1, 2, 2),
                    CellResult(0.4, 0.5, False, True))
        state = read_ledger(path, FP)
        assert state.n_cells == 2
        assert state.n_runs == 1

    def test_header_written_once(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        append_cell(path, FP, "a", (1, 1, 2),
                    CellResult(0.0, 1.0, False, True))
        append_cell(path, FP, "b", (1, 1, 2),
                    CellResult(0.0, 1.0, False, True))
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert sum(1 for l in lines if l.startswith("#")) == 1
        assert len(lines) == 3


class TestFiltering:
    def test_other_fingerprints_ignored_but_kept(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        append_cell(path, "older0fprint", "oil", (1, 1, 2),
                    CellResult(0.9, 0.01, True, True))
        append_cell(path, FP, "oil", (1, 1, 2),
                    CellResult(0.1, 0.5, False, True))
        state = read_ledger(path, FP)
        assert state.n_cells == 1
        assert state.cells["oil"][(1, 1, 2)].global_te == 0.1
        old = read_ledger(path, "older0fprint")
        assert old.cells["oil"][(1, 1, 2)].global_te == 0.9

    def test_later_duplicates_win(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        append_cell(path, FP, "oil", (1, 1, 2),
                    CellResult(0.1, 0.5, False, True))
        append_cell(path, FP, "oil", (1, 1, 2),
                    CellResult(0.2, 0.4, False, True))
        state = read_ledger(path, FP)
        assert state.n_cells == 1
        assert state.cells["oil"][(1, 1, 2)].global_te == 0.2

    def test_missing_file_is_empty(self, tmp_path):
        state = read_ledger(tmp_path / "absent.tsv", FP)
        assert isinstance(state, LedgerState)
        assert state.n_cells == 0 and state.n_runs == 0


class TestMalformed:
    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        path.write_text("cell\t" + FP + "\toil\t1\t1\n")
        with pytest.raises(DataError, match="line 1"):
            read_ledger(path, FP)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        path.write_text("# header\nblob\t" + FP + "\n")
        with pytest.raises(DataError, match="line 2"):
            read_ledger(path, FP)

    def test_bad_number(self, tmp_path):
        path = tmp_path / "ledger.tsv"
        good = cell_line(FP, "oil", (1, 1, 2),
                         CellResult(0.5, 0.01, True, True))
        path.write_text(good.replace("0.5", "half") + "\n")
        with pytest.raises(DataError):
            read_ledger(path, FP)
