"""Panel container and delimiter-separated text round trips."""

import numpy as np
import pytest

from teflow.errors import DataError
from teflow.panel import (Panel, parse_date, read_panel, weekday,
                          write_panel)

from conftest import daily_dates, make_panel


class TestParseDate:
    def test_iso_calendar_date(self):
        assert parse_date("2020-02-29") == np.datetime64("2020-02-29")

    def test_whitespace_tolerated(self):
        assert parse_date(" 2021-01-05 ") == np.datetime64("2021-01-05")

    @pytest.mark.parametrize("bad", ["2020", "2020-01", "01/02/2020",
                                     "2020-13-01", "not-a-date", ""])
    def test_rejects_non_dates(self, bad):
        with pytest.raises(DataError):
            parse_date(bad)


class TestWeekday:
    def test_known_anchors(self):
        # 1970-01-01 was a Thursday; 2020-01-06 a Monday.
        assert weekday(np.array(["1970-01-01"], dtype="datetime64[D]"))[0] == 3
        assert weekday(np.array(["2020-01-06"], dtype="datetime64[D]"))[0] == 0
        assert weekday(np.array(["2020-01-11"], dtype="datetime64[D]"))[0] == 5
        assert weekday(np.array(["2020-01-12"], dtype="datetime64[D]"))[0] == 6

    def test_cycles_over_a_fortnight(self):
        days = weekday(daily_dates("2021-03-01", 14))  # a Monday
        assert list(days) == [0, 1, 2, 3, 4, 5, 6] * 2


class TestPanelValidation:
    def test_basic_construction(self, tiny_panel):
        assert tiny_panel.n_rows == 40
        assert tiny_panel.names == ["a", "b", "c"]
        assert tiny_panel.values.dtype == np.float64

    def test_rejects_decreasing_dates(self):
        dates = daily_dates("2020-01-01", 3)[::-1].copy()
        with pytest.raises(DataError, match="strictly increasing"):
            Panel(dates, ["x"], np.zeros((3, 1)))

    def test_rejects_duplicate_dates(self):
        dates = np.array(["2020-01-01", "2020-01-01", "2020-01-02"],
                         dtype="datetime64[D]")
        with pytest.raises(DataError, match="strictly increasing"):
            Panel(dates, ["x"], np.zeros((3, 1)))

    def test_rejects_duplicate_names(self):
        with pytest.raises(DataError, match="duplicate"):
            make_panel(np.zeros((4, 2)), names=["x", "x"])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DataError):
            Panel(daily_dates("2020-01-01", 3), ["x"], np.zeros((4, 1)))
        with pytest.raises(DataError):
            Panel(daily_dates("2020-01-01", 3), ["x", "y"], np.zeros((3, 1)))

    def test_column_access(self, tiny_panel):
        np.testing.assert_array_equal(tiny_panel.column("b"),
                                      tiny_panel.values[:, 1])
        with pytest.raises(DataError, match="unknown column"):
            tiny_panel.column("nope")

    def test_select_preserves_order_given(self, tiny_panel):
        sub = tiny_panel.select(["c", "a"])
        assert sub.names == ["c", "a"]
        np.testing.assert_array_equal(sub.values[:, 0],
                                      tiny_panel.column("c"))

    def test_mask_and_completeness(self):
        values = np.array([[1.0, np.nan], [2.0, 3.0]])
        p = make_panel(values, names=["x", "y"])
        assert not p.is_complete()
        assert p.mask.sum() == 3
        assert make_panel(np.ones((3, 1))).is_complete()


class TestRoundTrip:
    def test_write_read_identity(self, tmp_path, tiny_panel):
        path = tmp_path / "panel.csv"
        write_panel(path, tiny_panel)
        back = read_panel(path)
        assert back.names == tiny_panel.names
        np.testing.assert_array_equal(back.dates, tiny_panel.dates)
        np.testing.assert_array_equal(back.values, tiny_panel.values)

    def test_missing_cells_round_trip_as_empty_fields(self, tmp_path):
        values = np.array([[1.5, np.nan], [np.nan, 2.5], [3.0, 4.0]])
        p = make_panel(values, names=["x", "y"])
        path = tmp_path / "holes.csv"
        write_panel(path, p)
        text = path.read_text()
        assert ",\n" in text or text.count(",,") >= 1
        back = read_panel(path)
        np.testing.assert_array_equal(np.isnan(back.values),
                                      np.isnan(values))
        np.testing.assert_array_equal(back.values[~np.isnan(values)],
                                      values[~np.isnan(values)])

    def test_float_repr_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        p = make_panel(rng.normal(size=(20, 2)) * 1e-7)
        path = tmp_path / "tiny.csv"
        write_panel(path, p)
        np.testing.assert_array_equal(read_panel(path).values, p.values)

    def test_header_comment_lines(self, tmp_path, tiny_panel):
        path = tmp_path / "commented.csv"
        write_panel(path, tiny_panel, header_lines=["made by a test",
                                                    "second line"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# made by a test"
        assert lines[1] == "# second line"
        back = read_panel(path)
        np.testing.assert_array_equal(back.values, tiny_panel.values)

    def test_keyed_comments_parse_into_meta(self, tmp_path):
        p = make_panel(np.ones((3, 1)))
        path = tmp_path / "meta.csv"
        write_panel(path, p, header_lines=["coupled = driver1",
                                           "generator_seed = 42",
                                           "free-text comment"])
        back = read_panel(path)
        assert back.meta["coupled"] == "driver1"
        assert back.meta["generator_seed"] == "42"
        assert "free-text comment" not in back.meta

    def test_alternate_delimiter(self, tmp_path, tiny_panel):
        path = tmp_path / "semi.csv"
        write_panel(path, tiny_panel, delimiter=";")
        back = read_panel(path, delimiter=";")
        np.testing.assert_array_equal(back.values, tiny_panel.values)

    def test_lf_line_endings(self, tmp_path, tiny_panel):
        path = tmp_path / "lf.csv"
        write_panel(path, tiny_panel)
        raw = path.read_bytes()
        assert b"\r" not in raw


class TestReadErrors:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="no header"):
            read_panel(path)

    def test_wrong_first_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,x\n2020-01-01,1\n")
        with pytest.raises(DataError, match="first column"):
            read_panel(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("date,x,y\n2020-01-01,1,2\n2020-01-02,3\n")
        with pytest.raises(DataError, match="fields"):
            read_panel(path)

    def test_duplicate_dates_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("date,x\n2020-01-01,1\n2020-01-01,2\n")
        with pytest.raises(DataError):
            read_panel(path)

    def test_unsorted_dates_rejected(self, tmp_path):
        path = tmp_path / "unsorted.csv"
        path.write_text("date,x\n2020-01-02,1\n2020-01-01,2\n")
        with pytest.raises(DataError):
            read_panel(path)

    def test_bad_number(self, tmp_path):
        path = tmp_path / "nonnum.csv"
        path.write_text("date,x\n2020-01-01,abc\n")
        with pytest.raises(DataError):
            read_panel(path)
