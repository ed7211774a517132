"""Hyperparameter-grid experiments over designs and feature scenarios.

For every (design, scenario) pair the full hyperparameter grid — batch
size x learning rate x dropout — is trained over several seeds. The
combination with the highest mean validation accuracy wins, and the
pair's reported metrics are that combination's per-seed validation and
test scores averaged over seeds. Within each design, the "#" column
counts, per scenario, how many metric columns that scenario wins
against the design's other scenarios (undefined entries never win).

Runs are independent given their seed, so worker processes only change
scheduling, never results.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..errors import ConfigError, DataError
from ..metrics import (METRIC_COLUMNS, MetricsReport, evaluate,
                       format_metric, tally_best)
from ..textio import format_float
from .model import PRESET_NAMES, preset
from .train import (BATCH_GRID, DROPOUT_GRID, LEARNING_RATE_GRID,
                    TrainConfig, train)

__all__ = ["ExperimentPlan", "ExperimentRow", "ExperimentResult",
           "run_experiment", "run_key", "write_experiment_tables",
           "TABLE_COLUMNS"]

TABLE_COLUMNS = ("Design", "Case", "Dropout", "LR", "Batch", "Acc", "AUC",
                 "TPR", "TNR", "PPV", "FOR", "BA", "F1", "#")

_METRIC_BY_COLUMN = {"Acc": "acc", "AUC": "auc", "TPR": "tpr", "TNR": "tnr",
                     "PPV": "ppv", "FOR": "for_rate", "BA": "ba", "F1": "f1"}


@dataclass(frozen=True)
class ExperimentPlan:
    """The grid to run; its size is designs x scenarios x combos x seeds."""

    designs: tuple = PRESET_NAMES
    batches: tuple = BATCH_GRID
    learning_rates: tuple = LEARNING_RATE_GRID
    dropouts: tuple = DROPOUT_GRID
    seeds: tuple = tuple(range(10))
    max_epochs: int = 100
    patience: int = 5

    def __post_init__(self):
        for name, values in (("designs", self.designs),
                             ("batches", self.batches),
                             ("learning_rates", self.learning_rates),
                             ("dropouts", self.dropouts),
                             ("seeds", self.seeds)):
            if not values:
                raise ConfigError(f"experiment plan has empty {name}")

    def n_runs(self, n_scenarios: int) -> int:
        return (len(self.designs) * n_scenarios * len(self.batches)
                * len(self.learning_rates) * len(self.dropouts)
                * len(self.seeds))

    def combos(self):
        """(batch, lr, dropout) in deterministic grid order."""
        return list(product(self.batches, self.learning_rates,
                            self.dropouts))


@dataclass(frozen=True)
class ExperimentRow:
    """Best-combination result for one (design, scenario) pair."""

    design: str
    scenario: str
    batch: int
    learning_rate: float
    dropout: float
    val_report: MetricsReport
    test_report: MetricsReport
    val_tally: int = 0
    test_tally: int = 0


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple
    n_runs: int
    runs: dict = field(default_factory=dict, repr=False, compare=False)

    def row(self, design: str, scenario: str) -> ExperimentRow:
        for r in self.rows:
            if r.design == design and r.scenario == scenario:
                return r
        raise DataError(f"no row for ({design}, {scenario})")


def _mean_report(reports) -> MetricsReport:
    """Metric-wise mean over seeds; a metric undefined in some seed is
    averaged over the seeds where it is defined, None if in none."""
    values = {}
    for name in METRIC_COLUMNS:
        defined = [getattr(r, name) for r in reports
                   if getattr(r, name) is not None]
        values[name] = float(np.mean(defined)) if defined else None
    return MetricsReport(**values)


def run_key(design: str, scenario: str, combo, seed: int) -> tuple:
    """Identity of one training run, stable across scheduling and resume."""
    batch, lr, dropout = combo
    return (design, scenario, int(batch), float(lr), float(dropout),
            int(seed))


# Worker processes receive the scenario datasets once, at pool start,
# instead of inside every task pickle.
_WORKER_DATASETS: dict = {}


def _worker_init(datasets):
    global _WORKER_DATASETS
    _WORKER_DATASETS = datasets


def _run_single(args):
    """Train and score one (design, scenario, combo, seed) run; picklable."""
    design, sid, ds, combo, seed, max_epochs, patience = args
    if ds is None:
        ds = _WORKER_DATASETS[sid]
    batch, lr, dropout = combo
    cfg = TrainConfig(batch=batch, learning_rate=lr, dropout=dropout,
                      max_epochs=max_epochs, patience=patience, seed=seed)
    trained = train(preset(design, dropout), ds, cfg)
    x_val, y_val = ds.part("val")
    x_test, y_test = ds.part("test")
    return (evaluate(trained.predict(x_val), y_val),
            evaluate(trained.predict(x_test), y_test))


def run_experiment(datasets: dict, plan: ExperimentPlan = ExperimentPlan(),
                   workers: int = 1, known_runs: dict | None = None,
                   on_run=None) -> ExperimentResult:
    """Run the full grid and keep each pair's best validation combo.

    ``datasets`` maps scenario id to a split SupervisedDataset. Ties on
    mean validation accuracy resolve to the earliest combination in grid
    order, so results never depend on scheduling.

    ``known_runs`` maps :func:`run_key` tuples to previously computed
    ``(val_report, test_report)`` pairs; those runs are not re-trained,
    which is how an interrupted sweep resumes. ``on_run(key, val, test)``
    is called once per newly computed run, as soon as it finishes, so a
    caller can journal partial progress. When every run is already
    known, dataset values may be None — only aggregation happens.
    """
    if not datasets:
        raise DataError("no scenario datasets given")
    scenario_ids = list(datasets)
    combos = plan.combos()
    runs = dict(known_runs) if known_runs else {}
    pending = [(design, sid, combo, seed)
               for design in plan.designs
               for sid in scenario_ids
               for combo in combos
               for seed in plan.seeds
               if run_key(design, sid, combo, seed) not in runs]

    def record(task, outcome):
        design, sid, combo, seed = task
        key = run_key(design, sid, combo, seed)
        runs[key] = outcome
        if on_run is not None:
            on_run(key, outcome[0], outcome[1])

    if workers > 1 and pending:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=_worker_init,
                                 initargs=(datasets,)) as pool:
            futures = {
                pool.submit(_run_single,
                            (design, sid, None, combo, seed,
                             plan.max_epochs, plan.patience)):
                (design, sid, combo, seed)
                for design, sid, combo, seed in pending}
            try:
                for fut in as_completed(futures):
                    record(futures[fut], fut.result())
            except BaseException:
                pool.shutdown(wait=False, cancel_futures=True)
                raise
    else:
        for design, sid, combo, seed in pending:
            outcome = _run_single((design, sid, datasets[sid], combo, seed,
                                   plan.max_epochs, plan.patience))
            record((design, sid, combo, seed), outcome)

    rows = []
    for design in plan.designs:
        design_rows = []
        for sid in scenario_ids:
            best = None
            for combo in combos:
                val_reports = [runs[run_key(design, sid, combo, seed)][0]
                               for seed in plan.seeds]
                test_reports = [runs[run_key(design, sid, combo, seed)][1]
                                for seed in plan.seeds]
                val_mean = _mean_report(val_reports)
                score = -np.inf if val_mean.acc is None else val_mean.acc
                if best is None or score > best[0]:
                    best = (score, combo, val_mean,
                            _mean_report(test_reports))
            _, combo, val_mean, test_mean = best
            design_rows.append(ExperimentRow(
                design, sid, combo[0], combo[1], combo[2],
                val_mean, test_mean))
        val_tallies = tally_best([r.val_report for r in design_rows])
        test_tallies = tally_best([r.test_report for r in design_rows])
        for row, vt, tt in zip(design_rows, val_tallies, test_tallies):
            rows.append(ExperimentRow(row.design, row.scenario, row.batch,
                                      row.learning_rate, row.dropout,
                                      row.val_report, row.test_report,
                                      val_tally=vt, test_tally=tt))
    return ExperimentResult(tuple(rows), plan.n_runs(len(scenario_ids)),
                            runs)


def _table_lines(result: ExperimentResult, which: str) -> list:
    lines = [",".join(TABLE_COLUMNS)]
    for row in result.rows:
        report = row.val_report if which == "val" else row.test_report
        tally = row.val_tally if which == "val" else row.test_tally
        cells = [row.design, row.scenario, format_float(row.dropout),
                 format_float(row.learning_rate), str(row.batch)]
        for column in ("Acc", "AUC", "TPR", "TNR", "PPV", "FOR", "BA", "F1"):
            cells.append(format_metric(_METRIC_BY_COLUMN[column],
                                       getattr(report,
                                               _METRIC_BY_COLUMN[column])))
        cells.append(str(tally))
        lines.append(",".join(cells))
    return lines


def write_experiment_tables(result: ExperimentResult, val_path,
                            test_path, extra_header: str | None = None
                            ) -> None:
    """Two delimiter-separated tables (validation and test), same
    columns: design, scenario, winning hyperparameters, metrics, '#'."""
    for path, which, label in ((val_path, "val", "validation"),
                               (test_path, "test", "test")):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if extra_header:
                fh.write(f"# {extra_header}\n")
            fh.write(f"# teflow experiment {label} table\n")
            fh.write("\n".join(_table_lines(result, which)) + "\n")
