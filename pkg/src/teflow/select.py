"""Driver selection by exhaustive grid search over embedding parameters.

For every candidate driver the full grid of embedding configurations
(target order k, source order l, neighbour count K) is estimated and
permutation-tested. A driver survives selection when at least one cell
is statistically significant; its optimal cell is the significant cell
with the largest global transfer entropy (ties broken toward the
lexicographically smallest (k, l, K), which wastes the fewest samples
on embedding). Drivers with no significant cell anywhere are excluded.

Every cell draws its seed by stable-hashing (master seed, driver name,
k, l, K), so any subset of the grid — a single re-run cell, a sliced
range, a different worker count or scheduling order — reproduces exactly
the values of the full run.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .ksg import EmbeddingConfig
from .sig import permutation_test
from .textio import format_float, format_keyed

__all__ = [
    "GridSpec", "DEFAULT_GRID", "CellResult", "GridResult", "FeatureSet",
    "cell_seed", "grid_search", "select_features",
    "export_heatmap", "read_heatmap", "write_features",
    "format_selection_summary", "write_selection_summary",
    "format_selection_console",
]


# ---------------------------------------------------------------------------
# grid geometry
# ---------------------------------------------------------------------------

def _as_axis(values, name: str) -> tuple:
    vals = tuple(int(v) for v in values)
    if not vals:
        raise DataError(f"{name} range is empty")
    if any(v < 1 for v in vals):
        raise DataError(f"{name} values must be >= 1, got {vals}")
    if len(set(vals)) != len(vals) or list(vals) != sorted(vals):
        raise DataError(f"{name} values must be strictly increasing")
    return vals


@dataclass(frozen=True)
class GridSpec:
    """Axis values for the (k, l, K) search grid, default 1..10 each."""

    k_values: tuple = tuple(range(1, 11))
    l_values: tuple = tuple(range(1, 11))
    K_values: tuple = tuple(range(1, 11))

    def __post_init__(self):
        object.__setattr__(self, "k_values", _as_axis(self.k_values, "k"))
        object.__setattr__(self, "l_values", _as_axis(self.l_values, "l"))
        object.__setattr__(self, "K_values", _as_axis(self.K_values, "K"))

    @property
    def n_cells(self) -> int:
        return len(self.k_values) * len(self.l_values) * len(self.K_values)

    def cells(self):
        """Yield (k, l, K) in lexicographic order."""
        for k in self.k_values:
            for l in self.l_values:
                for K in self.K_values:
                    yield (k, l, K)


DEFAULT_GRID = GridSpec()


# ---------------------------------------------------------------------------
# per-cell results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    """One grid cell: global TE, its permutation p-value, and the verdict.

    Cells whose embedding cannot be built from the available samples are
    kept in the map with ``valid=False`` (values NaN) rather than being
    silently dropped, so the cell count always matches the grid.
    """

    global_te: float
    p_value: float
    significant: bool
    valid: bool = True


@dataclass(frozen=True)
class GridResult:
    """Full grid for one driver plus the selected optimal cell (if any)."""

    driver: str
    cells: dict
    optimal: tuple | None

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def significant_cells(self) -> tuple:
        return tuple(key for key, c in self.cells.items()
                     if c.valid and c.significant)

    @property
    def invalid_cells(self) -> tuple:
        return tuple(key for key, c in self.cells.items() if not c.valid)


def _argmax_significant(cells: dict) -> tuple | None:
    """Significant cell with the largest TE; lexicographic tie-break."""
    best_key = None
    best_te = -math.inf
    for key in sorted(cells):
        cell = cells[key]
        if cell.valid and cell.significant and cell.global_te > best_te:
            best_te = cell.global_te
            best_key = key
    return best_key


# ---------------------------------------------------------------------------
# seeding and cell evaluation
# ---------------------------------------------------------------------------

def cell_seed(master_seed: int, driver: str, k: int, l: int, K: int) -> int:
    """Stable 64-bit seed for one grid cell.

    Hashing (master seed, driver name, k, l, K) decouples every cell from
    grid shape and evaluation order: re-running any subset reproduces the
    full run's values bit for bit.
    """
    token = f"teflow-grid|{master_seed}|{driver}|{k}|{l}|{K}"
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _cell_task(args):
    """Evaluate one grid cell; picklable for worker pools."""
    target, source, k, l, K, n_surrogates, alpha, seed, use_jitter = args
    try:
        res = permutation_test(target, source, EmbeddingConfig(k, l, K),
                               n_surrogates=n_surrogates, alpha=alpha,
                               seed=seed, use_jitter=use_jitter)
    except DataError:
        # Not enough embedded rows for this (k, l, K): keep the cell,
        # mark it invalid.
        return CellResult(math.nan, math.nan, False, valid=False)
    return CellResult(res.observed.global_te, res.p_value, res.significant)


def _check_sig_params(n_surrogates: int, alpha: float) -> None:
    if n_surrogates < 1:
        raise DataError("n_surrogates must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha {alpha} outside (0, 1)")


def grid_search(target, driver, grid: GridSpec = DEFAULT_GRID, *,
                driver_name: str = "driver", n_surrogates: int = 100,
                alpha: float = 0.05, master_seed: int = 0,
                use_jitter: bool = True, workers: int = 1,
                known_cells: dict | None = None,
                on_cell=None) -> GridResult:
    """Estimate and permutation-test every cell of the (k, l, K) grid.

    The driver name participates in every cell seed, so distinct drivers
    sharing one master seed still get independent surrogate draws.
    Workers only change how cells are scheduled, never their values.

    ``known_cells`` maps (k, l, K) to previously computed CellResult
    values; those cells are not recomputed, which is how an interrupted
    run resumes. ``on_cell(driver_name, cell, result)`` is called once
    per newly computed cell so a caller can journal partial progress.
    """
    _check_sig_params(n_surrogates, alpha)
    target = np.asarray(target, dtype=np.float64)
    driver = np.asarray(driver, dtype=np.float64)
    if target.shape != driver.shape or target.ndim != 1:
        raise DataError("target and driver must be 1-D series of equal "
                        f"length, got {target.shape} and {driver.shape}")
    known = known_cells or {}
    keys = [key for key in grid.cells() if key not in known]
    tasks = [(target, driver, k, l, K, n_surrogates, alpha,
              cell_seed(master_seed, driver_name, k, l, K), use_jitter)
             for (k, l, K) in keys]
    computed = {}

    def record(key, result):
        computed[key] = result
        if on_cell is not None:
            on_cell(driver_name, key, result)

    if workers > 1 and tasks:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_cell_task, task): key
                       for key, task in zip(keys, tasks)}
            try:
                for fut in as_completed(futures):
                    record(futures[fut], fut.result())
            except BaseException:
                pool.shutdown(wait=False, cancel_futures=True)
                raise
    else:
        for key, task in zip(keys, tasks):
            record(key, _cell_task(task))
    cells = {key: known[key] if key in known else computed[key]
             for key in grid.cells()}
    return GridResult(driver_name, cells, _argmax_significant(cells))


# ---------------------------------------------------------------------------
# feature selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSet:
    """Selected drivers and their local-TE series at the optimal cell.

    Local series are right-aligned to the input calendar: a cell with
    embedding orders (k, l) loses its first max(k, l) rows, so each
    series is front-padded with zeros (zero = no measured transfer) to
    the panel length, keeping all features on one shared time axis.
    """

    selected_drivers: tuple
    local_te_series: dict
    grid_results: tuple
    n_rows: int

    def __post_init__(self):
        for name in self.selected_drivers:
            series = self.local_te_series[name]
            if series.shape != (self.n_rows,):
                raise DataError(f"padded locals for {name!r} have shape "
                                f"{series.shape}, want ({self.n_rows},)")

    @property
    def excluded_drivers(self) -> tuple:
        return tuple(r.driver for r in self.grid_results
                     if r.driver not in self.selected_drivers)

    def locals_matrix(self) -> np.ndarray:
        """Padded local-TE series stacked as columns, selection order."""
        if not self.selected_drivers:
            return np.zeros((self.n_rows, 0))
        return np.column_stack(
            [self.local_te_series[n] for n in self.selected_drivers])

    def result_for(self, name: str) -> GridResult:
        for r in self.grid_results:
            if r.driver == name:
                return r
        raise DataError(f"no grid result for driver {name!r}")


def _padded_locals(local_te: np.ndarray, n_rows: int) -> np.ndarray:
    padded = np.zeros(n_rows, dtype=np.float64)
    padded[n_rows - len(local_te):] = local_te
    return padded


def select_features(target, drivers, grid: GridSpec = DEFAULT_GRID, *,
                    n_surrogates: int = 100, alpha: float = 0.05,
                    master_seed: int = 0, use_jitter: bool = True,
                    workers: int = 1, known_cells: dict | None = None,
                    on_cell=None) -> FeatureSet:
    """Run the grid over every driver column and keep the significant ones.

    ``drivers`` is a Panel aligned with ``target`` (one column per
    candidate). Each selected driver carries its local-TE series at the
    optimal cell, front-padded with zeros to the panel length.
    ``known_cells`` maps driver name to that driver's already computed
    cells and ``on_cell`` journals new ones, as in :func:`grid_search`.
    """
    if not drivers.names:
        raise DataError("driver panel has no columns")
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (drivers.n_rows,):
        raise DataError(f"target length {target.shape} does not match the "
                        f"driver panel's {drivers.n_rows} rows")
    known_cells = known_cells or {}
    results = []
    selected = []
    locals_by_name = {}
    for name in drivers.names:
        series = drivers.column(name)
        res = grid_search(target, series, grid, driver_name=name,
                          n_surrogates=n_surrogates, alpha=alpha,
                          master_seed=master_seed, use_jitter=use_jitter,
                          workers=workers,
                          known_cells=known_cells.get(name),
                          on_cell=on_cell)
        results.append(res)
        if res.optimal is None:
            continue
        k, l, K = res.optimal
        # Re-run the optimal cell with its own seed: identical values to
        # the grid pass, now keeping the local series.
        rerun = permutation_test(
            target, series, EmbeddingConfig(k, l, K),
            n_surrogates=n_surrogates, alpha=alpha,
            seed=cell_seed(master_seed, name, k, l, K),
            use_jitter=use_jitter)
        selected.append(name)
        locals_by_name[name] = _padded_locals(rerun.observed.local_te,
                                              drivers.n_rows)
    return FeatureSet(tuple(selected), locals_by_name, tuple(results),
                      drivers.n_rows)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

_HEATMAP_COLUMNS = ("driver", "k", "l", "K", "te_nats", "p_value",
                    "significant")


def export_heatmap(results, path, extra_header: str | None = None) -> None:
    """Write grid results as one long-format delimiter-separated table.

    One row per cell: driver, k, l, K, te_nats, p_value, significant.
    Invalid cells keep their row with empty value fields. Non-significant
    cells are flagged false so a renderer can grey them out.
    """
    results = list(results)
    if not results:
        raise DataError("no grid results to export")
    names = [r.driver for r in results]
    if len(set(names)) != len(names):
        raise DataError(f"duplicate driver names in export: {names}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if extra_header:
            fh.write(f"# {extra_header}\n")
        fh.write("# teflow grid heatmap table\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_HEATMAP_COLUMNS)
        for res in results:
            for (k, l, K), cell in res.cells.items():
                if cell.valid:
                    te = format_float(cell.global_te)
                    p = format_float(cell.p_value)
                else:
                    te = p = ""
                writer.writerow([res.driver, k, l, K, te, p,
                                 "true" if cell.significant else "false"])


def read_heatmap(path) -> list:
    """Parse a heatmap table back into GridResult values.

    The argmax over significant cells is recomputed, so a round trip
    reproduces the original optimal tuples exactly.
    """
    by_driver: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].lstrip().startswith("#")]
    if not rows or tuple(rows[0]) != _HEATMAP_COLUMNS:
        raise DataError(f"{path}: not a heatmap table (bad header)")
    for idx, row in enumerate(rows[1:], start=2):
        if len(row) != len(_HEATMAP_COLUMNS):
            raise DataError(f"{path} row {idx}: expected "
                            f"{len(_HEATMAP_COLUMNS)} fields, got {len(row)}")
        driver, k, l, K, te, p, flag = row
        valid = te != ""
        cell = CellResult(float(te) if valid else math.nan,
                          float(p) if valid else math.nan,
                          flag == "true", valid=valid)
        by_driver.setdefault(driver, {})[(int(k), int(l), int(K))] = cell
    return [GridResult(driver, cells, _argmax_significant(cells))
            for driver, cells in by_driver.items()]


def write_features(features: FeatureSet, path,
                   extra_header: str | None = None) -> None:
    """Write padded local-TE series, one column per selected driver."""
    if not features.selected_drivers:
        raise DataError("no significant drivers: nothing to write")
    matrix = features.locals_matrix()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if extra_header:
            fh.write(f"# {extra_header}\n")
        fh.write("# teflow local transfer entropy features\n")
        for name in features.selected_drivers:
            k, l, K = features.result_for(name).optimal
            fh.write(f"# optimal {name} = {k},{l},{K}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row"] + list(features.selected_drivers))
        for i in range(features.n_rows):
            writer.writerow([i] + [format_float(v) for v in matrix[i]])


def read_features(path, grid_results=None) -> FeatureSet:
    """Parse a local-TE feature table back into a FeatureSet.

    When ``grid_results`` (e.g. from :func:`read_heatmap`) is given, the
    set carries the full per-driver grids; otherwise it degrades to the
    selected drivers and their series alone, which is all the dataset
    builders need.
    """
    optima: dict = {}
    body = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh.read().splitlines():
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                text = text.lstrip("#").strip()
                if text.startswith("optimal ") and "=" in text:
                    name, _, cell = text[len("optimal "):].partition("=")
                    optima[name.strip()] = tuple(
                        int(v) for v in cell.strip().split(","))
                continue
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or not rows[0] or rows[0][0] != "row":
        raise DataError(f"{path}: not a local-TE feature table")
    names = tuple(rows[0][1:])
    if not names:
        raise DataError(f"{path}: feature table has no driver columns")
    matrix = np.array([[float(v) for v in row[1:]] for row in rows[1:]],
                      dtype=np.float64)
    if matrix.shape != (len(rows) - 1, len(names)):
        raise DataError(f"{path}: ragged feature table")
    missing = [n for n in names if n not in optima]
    if missing:
        raise DataError(f"{path}: no optimal cell recorded for {missing}")
    if grid_results is None:
        grid_results = tuple(
            GridResult(name, {optima[name]: CellResult(math.nan, math.nan,
                                                       True)},
                       optima[name])
            for name in names)
    else:
        grid_results = tuple(grid_results)
        by_name = {r.driver: r for r in grid_results}
        for name in names:
            if name not in by_name:
                raise DataError(f"{path}: driver {name!r} missing from the "
                                "grid results")
            if by_name[name].optimal != optima[name]:
                raise DataError(
                    f"{path}: optimal cell {optima[name]} for {name!r} "
                    f"disagrees with the grid results "
                    f"({by_name[name].optimal})")
    locals_by_name = {name: matrix[:, j] for j, name in enumerate(names)}
    return FeatureSet(names, locals_by_name, grid_results, matrix.shape[0])


def format_selection_summary(features: FeatureSet,
                             extra_header: str | None = None) -> str:
    """Keyed-text report: every driver's verdict, optimal cell, TE, p."""
    pairs = [
        ("format", "teflow-selection/1"),
        ("drivers_total", len(features.grid_results)),
        ("drivers_selected", len(features.selected_drivers)),
        ("no_significant_drivers",
         "true" if not features.selected_drivers else "false"),
        ("selected", ",".join(features.selected_drivers)),
    ]
    for i, res in enumerate(features.grid_results):
        prefix = f"driver.{i}"
        status = ("selected" if res.driver in features.selected_drivers
                  else "excluded")
        pairs.append((f"{prefix}.name", res.driver))
        pairs.append((f"{prefix}.status", status))
        pairs.append((f"{prefix}.cells_total", res.n_cells))
        pairs.append((f"{prefix}.cells_significant",
                      len(res.significant_cells)))
        pairs.append((f"{prefix}.cells_invalid", len(res.invalid_cells)))
        if res.optimal is not None:
            k, l, K = res.optimal
            cell = res.cells[res.optimal]
            pairs.append((f"{prefix}.optimal", f"{k},{l},{K}"))
            pairs.append((f"{prefix}.global_te_nats",
                          format_float(cell.global_te)))
            pairs.append((f"{prefix}.p_value", format_float(cell.p_value)))
    header = "teflow driver selection summary"
    if extra_header:
        header = f"{extra_header}\n{header}"
    return format_keyed(pairs, header=header)


def write_selection_summary(features: FeatureSet, path,
                            extra_header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_selection_summary(features, extra_header))


def format_selection_console(features: FeatureSet) -> str:
    """Short human-readable selection summary naming excluded drivers."""
    total = len(features.grid_results)
    lines = [f"{total} candidate driver{'s' if total != 1 else ''}: "
             f"{len(features.selected_drivers)} selected, "
             f"{len(features.excluded_drivers)} excluded"]
    for name in features.selected_drivers:
        res = features.result_for(name)
        k, l, K = res.optimal
        cell = res.cells[res.optimal]
        lines.append(f"  selected: {name} (k={k}, l={l}, K={K}, "
                     f"TE={cell.global_te:.4f} nats, "
                     f"p={cell.p_value:.4f})")
    if features.excluded_drivers:
        names = ", ".join(features.excluded_drivers)
        lines.append(f"  excluded: {names} "
                     f"(no statistically significant cells)")
    if not features.selected_drivers:
        lines.append("  no significant drivers")
    return "\n".join(lines)
