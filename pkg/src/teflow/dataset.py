"""Supervised direction-prediction datasets from a returns panel.

A sample is a sliding window of ``window`` consecutive panel rows across
the chosen feature columns; its binary label says whether the target
return ``horizon`` steps after the window's last row is positive (an
exactly-zero return counts as non-up). Splits are always chronological.

Two split modes exist. Date-based splitting is the primary mode: the
panel is partitioned into train/validation/test periods by calendar
date and each period is windowed independently, so no window straddles
a boundary. A return row spans two price days; a row whose date equals
a period's first day realizes across the boundary and belongs to
neither side, so it is dropped. Fraction-based splitting is the
fallback: one contiguous windowing pass whose sample index is cut at
rounded fractions, the remainder going to the test split.

Feature scaling uses training-range statistics only; see
:func:`scale_to_train`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, NumericError
from .panel import Panel, parse_date
from .textio import format_float, format_keyed

__all__ = [
    "Split", "SupervisedDataset", "ScenarioColumn", "ScenarioSpec",
    "SCENARIO_IDS", "make_windows", "chronological_split", "split_by_dates",
    "train_row_count", "scale_to_train", "resolve_scenario",
    "build_scenario", "local_te_feature_name", "format_dataset_manifest",
    "write_dataset_manifest",
]

SCENARIO_IDS = ("S1", "S2", "S3", "S4", "S5")


# ---------------------------------------------------------------------------
# dataset containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    """Chronological, disjoint sample-index ranges."""

    train: range
    val: range
    test: range

    def __post_init__(self):
        spans = (self.train, self.val, self.test)
        for name, r in zip(("train", "val", "test"), spans):
            if len(r) == 0:
                raise DataError(f"{name} split is empty")
            if r.step != 1:
                raise DataError(f"{name} split must be contiguous")
        if not (self.train.stop == self.val.start
                and self.val.stop == self.test.start):
            raise DataError("splits must be adjacent and ordered "
                            "train, val, test")

    @property
    def n_samples(self) -> int:
        return self.test.stop - self.train.start


@dataclass(frozen=True)
class SupervisedDataset:
    """Windowed samples, direction labels and an optional split.

    ``windows`` has shape (samples, window, features); ``labels`` holds
    0/1 with 1 meaning the target return after the window is positive.
    ``label_dates`` carries each sample's label timestamp so splits and
    manifests can speak in calendar terms.
    """

    windows: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    window: int
    horizon: int
    label_dates: np.ndarray
    split: Split | None = None

    def __post_init__(self):
        if self.windows.ndim != 3:
            raise DataError("windows must be (samples, window, features)")
        s, w, f = self.windows.shape
        if w != self.window or f != len(self.feature_names):
            raise DataError(f"window tensor {self.windows.shape} does not "
                            f"match window={self.window}, "
                            f"{len(self.feature_names)} features")
        if self.labels.shape != (s,) or self.label_dates.shape != (s,):
            raise DataError("labels and label_dates must align with samples")
        if self.split is not None and self.split.n_samples != s:
            raise DataError(f"split covers {self.split.n_samples} samples, "
                            f"dataset has {s}")

    @property
    def n_samples(self) -> int:
        return self.windows.shape[0]

    @property
    def n_features(self) -> int:
        return self.windows.shape[2]

    def label_balance(self, part: str | None = None) -> float:
        """Fraction of positive labels overall or in one split part."""
        labels = self.labels
        if part is not None:
            labels = labels[self._part_range(part)]
        return float(np.mean(labels)) if len(labels) else float("nan")

    def _part_range(self, part: str) -> range:
        if self.split is None:
            raise DataError("dataset has no split")
        try:
            return getattr(self.split, part)
        except AttributeError:
            raise DataError(f"unknown split part {part!r}; "
                            "use train, val or test") from None

    def part(self, part: str):
        """(windows, labels) arrays of one split part."""
        r = self._part_range(part)
        return self.windows[r.start:r.stop], self.labels[r.start:r.stop]


# ---------------------------------------------------------------------------
# windowing
# ---------------------------------------------------------------------------

def _window_dataset(values: np.ndarray, label_source: np.ndarray,
                    names, window: int, horizon: int,
                    dates: np.ndarray) -> SupervisedDataset:
    n = values.shape[0]
    if window < 1 or horizon < 1:
        raise DataError("window and horizon must be >= 1")
    n_samples = n - window - horizon + 1
    if n_samples < 1:
        raise DataError(f"window {window} + horizon {horizon} exceeds the "
                        f"{n} available rows")
    if not np.all(np.isfinite(values)):
        raise DataError("feature matrix contains missing values; "
                        "impute before windowing")
    # One strided view over the rows: sample i is rows [i, i+window-1].
    view = np.lib.stride_tricks.sliding_window_view(values, window, axis=0)
    windows = view.transpose(0, 2, 1)[:n_samples]
    label_rows = np.arange(n_samples) + window - 1 + horizon
    labels = (label_source[label_rows] > 0.0).astype(np.int64)
    return SupervisedDataset(windows, labels, tuple(names), window, horizon,
                             dates[label_rows])


def make_windows(panel: Panel, target: str, window: int = 74,
                 horizon: int = 1, feature_names=None) -> SupervisedDataset:
    """Window a complete panel into samples labelled by the target's sign.

    ``feature_names`` selects and orders the feature columns (default:
    every panel column). The label always comes from the target column,
    whether or not it is among the features.
    """
    label_source = panel.column(target)
    if feature_names is None:
        feature_names = panel.names
    sub = panel.select(feature_names)
    return _window_dataset(sub.values, label_source, sub.names, window,
                           horizon, panel.dates)


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def chronological_split(ds: SupervisedDataset,
                        fractions=(0.75, 0.13, 0.12)) -> SupervisedDataset:
    """Cut the sample index at rounded fractions of the sample count.

    Train and validation sizes are rounded to nearest; the remainder is
    absorbed by the test split. Any empty part is an error.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DataError("fractions must be three non-negative numbers")
    if sum(fractions) > 1.0 + 1e-9:
        raise DataError(f"fractions {fractions} sum to more than 1")
    s = ds.n_samples
    n_train = int(round(fractions[0] * s))
    n_val = int(round(fractions[1] * s))
    n_test = s - n_train - n_val
    split = Split(range(0, n_train), range(n_train, n_train + n_val),
                  range(n_train + n_val, s))
    return replace(ds, split=split)


def _as_date(value) -> np.datetime64:
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    return parse_date(str(value))


def split_by_dates(panel: Panel, target: str, val_start, test_start,
                   window: int = 74, horizon: int = 1,
                   feature_names=None) -> SupervisedDataset:
    """Partition the panel by calendar date and window each period alone.

    ``val_start`` and ``test_start`` are the first price days of the
    validation and test periods. Rows dated exactly at a boundary are
    return rows realizing across it and belong to neither period, so
    they are dropped. No window straddles a boundary.
    """
    val_start = _as_date(val_start)
    test_start = _as_date(test_start)
    if not val_start < test_start:
        raise DataError(f"val_start {val_start} must precede "
                        f"test_start {test_start}")
    masks = (panel.dates < val_start,
             (panel.dates > val_start) & (panel.dates < test_start),
             panel.dates > test_start)
    parts = []
    for name, mask in zip(("train", "val", "test"), masks):
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            raise DataError(f"no panel rows in the {name} period")
        sub = Panel(panel.dates[rows], panel.names,
                    panel.values[rows], dict(panel.meta))
        parts.append(make_windows(sub, target, window, horizon,
                                  feature_names))
    counts = [p.n_samples for p in parts]
    edges = np.cumsum([0] + counts)
    split = Split(range(edges[0], edges[1]), range(edges[1], edges[2]),
                  range(edges[2], edges[3]))
    return SupervisedDataset(
        np.concatenate([p.windows for p in parts]),
        np.concatenate([p.labels for p in parts]),
        parts[0].feature_names, window, horizon,
        np.concatenate([p.label_dates for p in parts]), split)


def train_row_count(n_train_samples: int, window: int) -> int:
    """Panel rows covered by the training samples of a contiguous split.

    Training samples 0..T-1 read rows 0..T+window-2, so statistics that
    must not see validation or test data use the first T+window-1 rows.
    """
    if n_train_samples < 1:
        raise DataError("need at least one training sample")
    return n_train_samples + window - 1


def scale_to_train(panel: Panel, train_mask) -> Panel:
    """Divide each column by its population std over the training rows.

    No demeaning. Validation and test rows reuse the training-range
    statistics so nothing about their scale leaks into the inputs.
    """
    train_mask = np.asarray(train_mask, dtype=bool)
    if train_mask.shape != (panel.n_rows,):
        raise DataError(f"train mask shape {train_mask.shape} does not "
                        f"match the panel's {panel.n_rows} rows")
    if not train_mask.any():
        raise DataError("train mask selects no rows")
    train = panel.values[train_mask]
    if not np.all(np.isfinite(train)):
        raise DataError("training rows contain missing values")
    stds = np.std(train, axis=0)
    zero = np.flatnonzero(stds == 0.0)
    if zero.size:
        names = [panel.names[i] for i in zero]
        raise NumericError(f"zero training-range std for column(s) {names}")
    return panel.with_values(panel.values / stds)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioColumn:
    """One resolved feature column: a panel series or a local-TE series."""

    name: str
    source: str  # "panel" or "local"
    base: str    # panel column name or driver name

    def __post_init__(self):
        if self.source not in ("panel", "local"):
            raise DataError(f"unknown column source {self.source!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario identifier with its fully resolved feature columns."""

    id: str
    columns: tuple

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise DataError(f"unknown scenario {self.id!r}; "
                            f"expected one of {SCENARIO_IDS}")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"scenario {self.id} resolves duplicate "
                            f"column names: {names}")

    @property
    def feature_names(self) -> tuple:
        return tuple(c.name for c in self.columns)


def local_te_feature_name(driver: str) -> str:
    """Feature-column name for a driver's local-TE series."""
    return f"te_{driver}"


def resolve_scenario(scenario_id: str, target: str, candidates,
                     features=None) -> ScenarioSpec:
    """Resolve a scenario identifier into ordered feature columns.

    S1: the target alone (self-driven). S2: target plus every candidate
    driver. S3: target plus the significant drivers. S4: the significant
    drivers' local-TE series alone. S5: S3's columns then S4's, in that
    order.
    """
    candidates = tuple(candidates)
    panel_col = lambda name: ScenarioColumn(name, "panel", name)
    local_col = lambda name: ScenarioColumn(local_te_feature_name(name),
                                            "local", name)
    if scenario_id in ("S3", "S4", "S5"):
        if features is None or not features.selected_drivers:
            raise DataError(f"scenario {scenario_id} needs a non-empty "
                            "feature selection")
        selected = features.selected_drivers
    if scenario_id == "S1":
        cols = [panel_col(target)]
    elif scenario_id == "S2":
        cols = [panel_col(target)] + [panel_col(c) for c in candidates]
    elif scenario_id == "S3":
        cols = [panel_col(target)] + [panel_col(c) for c in selected]
    elif scenario_id == "S4":
        cols = [local_col(c) for c in selected]
    elif scenario_id == "S5":
        cols = ([panel_col(target)] + [panel_col(c) for c in selected]
                + [local_col(c) for c in selected])
    else:
        raise DataError(f"unknown scenario {scenario_id!r}; "
                        f"expected one of {SCENARIO_IDS}")
    return ScenarioSpec(scenario_id, tuple(cols))


def scenario_matrix(spec: ScenarioSpec, panel: Panel,
                    features=None) -> np.ndarray:
    """Assemble the (rows, features) matrix for one scenario."""
    columns = []
    for col in spec.columns:
        if col.source == "panel":
            columns.append(panel.column(col.base))
        else:
            if features is None:
                raise DataError(f"column {col.name} needs a feature "
                                "selection")
            if col.base not in features.local_te_series:
                raise DataError(f"driver {col.base!r} has no local-TE "
                                "series in the feature selection")
            series = features.local_te_series[col.base]
            if series.shape != (panel.n_rows,):
                raise DataError(f"local-TE series for {col.base!r} has "
                                f"{series.shape[0]} rows, panel has "
                                f"{panel.n_rows}")
            columns.append(series)
    return np.column_stack(columns)


def build_scenario(spec: ScenarioSpec, panel: Panel, target: str,
                   features=None, window: int = 74,
                   horizon: int = 1) -> SupervisedDataset:
    """Window one scenario's feature matrix, labelled by the target."""
    matrix = scenario_matrix(spec, panel, features)
    return _window_dataset(matrix, panel.column(target),
                           spec.feature_names, window, horizon, panel.dates)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def format_dataset_manifest(ds: SupervisedDataset,
                            scenario: ScenarioSpec | None = None,
                            split_dates=None, extra=None,
                            extra_header: str | None = None) -> str:
    """Keyed-text manifest: shape, features, splits and label balance."""
    pairs = [
        ("format", "teflow-dataset/1"),
        ("window", ds.window),
        ("horizon", ds.horizon),
        ("n_samples", ds.n_samples),
        ("n_features", ds.n_features),
        ("features", ",".join(ds.feature_names)),
        ("label_balance", format_float(ds.label_balance())),
    ]
    if scenario is not None:
        pairs.insert(1, ("scenario", scenario.id))
    if split_dates is not None:
        val_start, test_start = split_dates
        pairs.append(("split_mode", "dates"))
        pairs.append(("val_start", str(_as_date(val_start))))
        pairs.append(("test_start", str(_as_date(test_start))))
    if ds.split is not None:
        for part in ("train", "val", "test"):
            r = ds._part_range(part)
            pairs.append((f"{part}.n_samples", len(r)))
            pairs.append((f"{part}.label_balance",
                          format_float(ds.label_balance(part))))
            pairs.append((f"{part}.first_label_date",
                          str(ds.label_dates[r.start])))
            pairs.append((f"{part}.last_label_date",
                          str(ds.label_dates[r.stop - 1])))
    for key, value in (extra or {}).items():
        pairs.append((key, value))
    header = "teflow dataset manifest"
    if extra_header:
        header = f"{extra_header}\n{header}"
    return format_keyed(pairs, header=header)


def write_dataset_manifest(ds: SupervisedDataset, path,
                           scenario: ScenarioSpec | None = None,
                           split_dates=None, extra=None,
                           extra_header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_dataset_manifest(ds, scenario, split_dates, extra,
                                         extra_header))
