"""Command-line pipeline around the library.

Subcommands cover the full workflow on one output directory:

- ``generate`` — synthetic coupled price panel (ground-truth test data)
- ``prep``     — levels to log returns, weekend fill, spline imputation,
  descriptive statistics and the correlation matrix
- ``stats``    — the statistics files alone, for any panel file
- ``select``   — the (k, l, K) significance grid over every candidate
  driver, the heatmap table, and the local-TE feature series
- ``train``    — scenario datasets, the hyperparameter sweep, metric
  tables and per-pair checkpoints
- ``evaluate`` — re-aggregate the journaled sweep into the tables
- ``report``   — plot-ready cumulative-return series

Every run is reproducible: outputs depend only on the configuration and
its master seed, never on worker count or scheduling. Heavy work (grid
cells, training runs) is journaled to an append-only ledger as it
finishes, so an interrupted command resumes where it stopped. Every
output file starts with a header naming the toolkit version, the master
seed, and the 12-digit configuration fingerprint.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from ._version import __version__
from .config import (RunConfig, config_hash, experiment_plan, grid_spec,
                     read_config, version_header, write_config)
from .dataset import (chronological_split, local_te_feature_name,
                      make_windows, resolve_scenario, scale_to_train,
                      split_by_dates, train_row_count,
                      write_dataset_manifest)
from .errors import ConfigError, DataError, ToolkitError
from .ledger import append_cell, append_run, read_ledger
from .metrics import format_metric
from .net.experiment import run_experiment, run_key, write_experiment_tables
from .net.model import preset, write_checkpoint
from .net.train import TrainConfig, train
from .oracle import synthetic_panel
from .panel import Panel, parse_date, read_panel, write_panel
from .prep import (corr_matrix, describe, fill_weekends, log_return,
                   spline_impute, write_corr_table, write_stats_table)
from .select import (export_heatmap, format_selection_console,
                     read_features, read_heatmap, select_features,
                     write_features, write_selection_summary)

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# output layout
# ---------------------------------------------------------------------------

class RunPaths:
    """Fixed file layout under one output directory."""

    def __init__(self, out_dir: str):
        self.out = out_dir
        join = lambda name: os.path.join(out_dir, name)
        self.synthetic = join("synthetic.csv")
        self.panel = join("panel.csv")
        self.stats = join("stats.csv")
        self.corr = join("corr.csv")
        self.heatmap = join("heatmap.csv")
        self.features = join("features.csv")
        self.selection = join("selection.txt")
        self.config_echo = join("config.txt")
        self.ledger = join("ledger.txt")
        self.val_table = join("val_report.csv")
        self.test_table = join("test_report.csv")
        self.cumulative = join("cumulative.csv")
        self.checkpoints = join("checkpoints")

    def manifest(self, scenario_id: str) -> str:
        return os.path.join(self.out, f"dataset_{scenario_id}.txt")

    def checkpoint(self, design: str, scenario_id: str) -> str:
        return os.path.join(self.checkpoints, f"{design}_{scenario_id}.txt")


def _prepare_out(config: RunConfig) -> RunPaths:
    """Create the output directory and echo the effective configuration."""
    paths = RunPaths(config.out_dir)
    os.makedirs(paths.out, exist_ok=True)
    write_config(config, paths.config_echo,
                 extra_header=version_header(config))
    return paths


def _read_panel_file(path, missing_hint: str | None = None) -> Panel:
    if not os.path.exists(path):
        hint = f"; {missing_hint}" if missing_hint else ""
        raise DataError(f"missing panel file {path}{hint}")
    try:
        return read_panel(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _resolve_columns(config: RunConfig, panel: Panel) -> tuple:
    """Target plus candidate names, checked against the panel."""
    target = config.target
    if target not in panel.names:
        raise ConfigError(f"target column {target!r} not in the panel "
                          f"(columns: {', '.join(panel.names)})")
    candidates = config.candidates or tuple(n for n in panel.names
                                            if n != target)
    missing = [c for c in candidates if c not in panel.names]
    if missing:
        raise ConfigError(f"candidate columns {missing} not in the panel")
    if target in candidates:
        raise ConfigError(f"target {target!r} cannot also be a candidate")
    if not candidates:
        raise ConfigError("no candidate driver columns")
    return target, candidates


def _subpanel(panel: Panel, names) -> Panel:
    values = np.column_stack([panel.column(n) for n in names])
    return Panel(panel.dates, tuple(names), values, dict(panel.meta))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(config: RunConfig, args) -> None:
    """Emit a synthetic coupled price panel in the standard input format."""
    paths = _prepare_out(config)
    panel = synthetic_panel(args.rows, args.drivers, args.coupled,
                            seed=config.master_seed,
                            target=config.target or "asset")
    header = [version_header(config)]
    header += [f"{k} = {v}" for k, v in panel.meta.items()]
    write_panel(paths.synthetic, panel, header_lines=header)
    print(f"wrote {paths.synthetic}: {panel.n_rows} price rows, "
          f"target {panel.names[0]!r}, {args.drivers} drivers "
          f"({args.coupled} coupled)")
    print(f"point the config's input key at {paths.synthetic} to run the "
          "pipeline on it")


def cmd_prep(config: RunConfig, args) -> None:
    """Levels to log returns, plus the statistics and correlation files."""
    config.require("input", "target")
    paths = _prepare_out(config)
    raw = _read_panel_file(config.input)
    target, candidates = _resolve_columns(config, raw)
    missing = [c for c in config.weekend_columns if c not in raw.names]
    if missing:
        raise ConfigError(f"weekend columns {missing} not in the panel")
    panel = _subpanel(raw, (target,) + candidates)
    if config.weekend_columns:
        panel = fill_weekends(panel, list(config.weekend_columns))
    levels = panel.values.copy()
    for j, name in enumerate(panel.names):
        column = levels[:, j]
        if config.impute and not np.all(np.isfinite(column)):
            try:
                column = spline_impute(column)
            except DataError as exc:
                raise DataError(f"column {name!r}: {exc}") from None
            levels[:, j] = column
    returns = np.empty((panel.n_rows - 1, len(panel.names)))
    for j, name in enumerate(panel.names):
        try:
            returns[:, j] = log_return(levels[:, j])
        except DataError as exc:
            raise DataError(f"column {name!r}: {exc}") from None
    prepared = Panel(panel.dates[1:], panel.names, returns)
    header = [version_header(config)]
    write_panel(paths.panel, prepared, header_lines=header)
    _write_stats(prepared, paths, header)
    print(f"prepared {prepared.n_rows} return rows x "
          f"{len(prepared.names)} columns from {panel.n_rows} price rows")
    print(f"wrote {paths.panel}, {paths.stats}, {paths.corr}")


def _write_stats(panel: Panel, paths: RunPaths, header: list) -> None:
    summaries = {name: describe(panel.column(name)) for name in panel.names}
    write_stats_table(paths.stats, summaries, header_lines=header)
    write_corr_table(paths.corr, panel.names, corr_matrix(panel),
                     header_lines=header)


def cmd_stats(config: RunConfig, args) -> None:
    """Statistics and correlation files for any panel file, as-is."""
    config.require("input")
    paths = _prepare_out(config)
    panel = _read_panel_file(config.input)
    _write_stats(panel, paths, [version_header(config)])
    print(f"wrote {paths.stats} and {paths.corr} "
          f"({len(panel.names)} columns, {panel.n_rows} rows)")


def cmd_select(config: RunConfig, args) -> None:
    """Significance grid over every candidate; exports and summary."""
    config.require("target")
    paths = _prepare_out(config)
    panel = _read_panel_file(paths.panel, "run `teflow prep` first")
    target, candidates = _resolve_columns(config, panel)
    fingerprint = config_hash(config)
    state = read_ledger(paths.ledger, fingerprint)
    loaded = state.n_cells
    computed = 0

    def journal(driver, key, cell):
        nonlocal computed
        computed += 1
        append_cell(paths.ledger, fingerprint, driver, key, cell)

    features = select_features(
        panel.column(target), _subpanel(panel, candidates),
        grid_spec(config), n_surrogates=config.n_surrogates,
        alpha=config.alpha, master_seed=config.master_seed,
        use_jitter=config.jitter, workers=config.workers,
        known_cells=state.cells, on_cell=journal)
    header = version_header(config)
    export_heatmap(features.grid_results, paths.heatmap,
                   extra_header=header)
    write_selection_summary(features, paths.selection, extra_header=header)
    if features.selected_drivers:
        write_features(features, paths.features, extra_header=header)
    if loaded or computed:
        print(f"grid cells: {loaded} from the ledger, {computed} computed")
    print(format_selection_console(features))
    written = [paths.heatmap, paths.selection]
    if features.selected_drivers:
        written.append(paths.features)
    print("wrote " + ", ".join(written))


def _load_features(paths: RunPaths):
    """Rebuild the driver selection from the select command's exports."""
    if not os.path.exists(paths.heatmap):
        raise DataError(f"missing {paths.heatmap}; run `teflow select` "
                        "first")
    grid_results = read_heatmap(paths.heatmap)
    if not os.path.exists(paths.features):
        if any(r.optimal is not None for r in grid_results):
            raise DataError(f"missing {paths.features}; run `teflow "
                            "select` first")
        raise DataError("no significant drivers were selected, so "
                        "scenarios S3-S5 cannot be built")
    return read_features(paths.features, grid_results)


def _needs_selection(config: RunConfig) -> bool:
    return any(sid in config.scenarios for sid in ("S3", "S4", "S5"))


def _augmented_panel(panel: Panel, features) -> Panel:
    """Panel columns plus one local-TE column per selected driver."""
    if features is None or not features.selected_drivers:
        return panel
    names = tuple(panel.names) + tuple(local_te_feature_name(d)
                                       for d in features.selected_drivers)
    values = np.column_stack([panel.values, features.locals_matrix()])
    return Panel(panel.dates, names, values, dict(panel.meta))


def _check_split_dates(config: RunConfig, panel: Panel) -> None:
    first, last = panel.dates[0], panel.dates[-1]
    for key, value in (("split.val_start", config.val_start),
                       ("split.test_start", config.test_start)):
        date = parse_date(value)
        if not first < date < last:
            raise ConfigError(f"{key} {value} falls outside the panel "
                              f"calendar {first}..{last}")


def _build_datasets(config: RunConfig, panel: Panel, features,
                    target: str, candidates) -> dict:
    """Scale to the training period and window every scenario."""
    aug = _augmented_panel(panel, features)
    if config.split_dates is not None:
        _check_split_dates(config, aug)
        train_mask = aug.dates < parse_date(config.val_start)
    else:
        probe = chronological_split(
            make_windows(aug, target, config.window, config.horizon),
            config.fractions)
        train_rows = train_row_count(len(probe.split.train), config.window)
        train_mask = np.arange(aug.n_rows) < train_rows
    scaled = scale_to_train(aug, train_mask)
    datasets = {}
    for sid in config.scenarios:
        spec = resolve_scenario(sid, target, candidates, features)
        feature_names = spec.feature_names
        if config.split_dates is not None:
            ds = split_by_dates(scaled, target, config.val_start,
                                config.test_start, config.window,
                                config.horizon, feature_names)
        else:
            ds = chronological_split(
                make_windows(scaled, target, config.window, config.horizon,
                             feature_names),
                config.fractions)
        datasets[sid] = (spec, ds)
    return datasets


def cmd_train(config: RunConfig, args) -> None:
    """Scenario datasets, the hyperparameter sweep, tables, checkpoints."""
    config.require("target")
    paths = _prepare_out(config)
    panel = _read_panel_file(paths.panel, "run `teflow prep` first")
    target, candidates = _resolve_columns(config, panel)
    features = _load_features(paths) if _needs_selection(config) else None
    built = _build_datasets(config, panel, features, target, candidates)
    header = version_header(config)
    for sid, (spec, ds) in built.items():
        write_dataset_manifest(ds, paths.manifest(sid), scenario=spec,
                               split_dates=config.split_dates,
                               extra_header=header)
    datasets = {sid: ds for sid, (spec, ds) in built.items()}

    plan = experiment_plan(config)
    fingerprint = config_hash(config)
    state = read_ledger(paths.ledger, fingerprint)
    known = state.runs
    scheduled = plan.n_runs(len(config.scenarios))
    loaded = sum(1 for design in plan.designs
                 for sid in config.scenarios
                 for combo in plan.combos()
                 for seed in plan.seeds
                 if run_key(design, sid, combo, seed) in known)
    print(f"{scheduled} runs scheduled "
          f"({loaded} already journaled, {scheduled - loaded} to train)")

    def journal(key, val_report, test_report):
        append_run(paths.ledger, fingerprint, key, val_report, test_report)

    result = run_experiment(datasets, plan, workers=config.workers,
                            known_runs=known, on_run=journal)
    write_experiment_tables(result, paths.val_table, paths.test_table,
                            extra_header=header)
    _write_checkpoints(config, paths, result, plan, datasets)
    for row in result.rows:
        print(f"  {row.design}/{row.scenario}: batch {row.batch}, "
              f"lr {row.learning_rate}, dropout {row.dropout}, "
              f"val acc {format_metric('acc', row.val_report.acc)}")
    print(f"wrote {paths.val_table} and {paths.test_table}")


def _write_checkpoints(config, paths, result, plan, datasets) -> None:
    """One checkpoint per (design, scenario): its best combo's best seed."""
    os.makedirs(paths.checkpoints, exist_ok=True)
    written = 0
    for row in result.rows:
        path = paths.checkpoint(row.design, row.scenario)
        if os.path.exists(path):
            continue
        combo = (row.batch, row.learning_rate, row.dropout)
        best_seed = None
        best_acc = -np.inf
        for seed in plan.seeds:
            val_report = result.runs[
                run_key(row.design, row.scenario, combo, seed)][0]
            acc = -np.inf if val_report.acc is None else val_report.acc
            if acc > best_acc:
                best_acc = acc
                best_seed = seed
        cfg = TrainConfig(batch=row.batch, learning_rate=row.learning_rate,
                          dropout=row.dropout, max_epochs=plan.max_epochs,
                          patience=plan.patience, seed=best_seed)
        trained = train(preset(row.design, row.dropout),
                        datasets[row.scenario], cfg)
        write_checkpoint(trained.model, path, extra={
            "design": row.design,
            "scenario": row.scenario,
            "batch": row.batch,
            "learning_rate": row.learning_rate,
            "dropout": row.dropout,
            "train_seed": best_seed,
            "provenance": version_header(config),
        })
        written += 1
    if written:
        print(f"wrote {written} checkpoints under {paths.checkpoints}/")


def cmd_evaluate(config: RunConfig, args) -> None:
    """Re-aggregate the journaled sweep into the two metric tables."""
    paths = _prepare_out(config)
    plan = experiment_plan(config)
    fingerprint = config_hash(config)
    state = read_ledger(paths.ledger, fingerprint)
    expected = [run_key(design, sid, combo, seed)
                for design in plan.designs
                for sid in config.scenarios
                for combo in plan.combos()
                for seed in plan.seeds]
    missing = sum(1 for key in expected if key not in state.runs)
    if missing:
        raise DataError(f"{missing} of {len(expected)} runs missing from "
                        f"the ledger for config {fingerprint}; "
                        "run `teflow train` first")
    result = run_experiment({sid: None for sid in config.scenarios}, plan,
                            known_runs=state.runs)
    write_experiment_tables(result, paths.val_table, paths.test_table,
                            extra_header=version_header(config))
    print(f"aggregated {len(expected)} journaled runs")
    print(f"wrote {paths.val_table} and {paths.test_table}")


def cmd_report(config: RunConfig, args) -> None:
    """Plot-ready tables: cumulative returns per column."""
    paths = _prepare_out(config)
    panel = _read_panel_file(paths.panel, "run `teflow prep` first")
    cumulative = Panel(panel.dates, panel.names,
                       np.cumsum(panel.values, axis=0))
    write_panel(paths.cumulative, cumulative,
                header_lines=[version_header(config),
                              "cumulative log returns by day"])
    tables = [paths.cumulative]
    for path in (paths.heatmap, paths.features):
        if os.path.exists(path):
            tables.append(path)
    print("plot-ready tables: " + ", ".join(tables))


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

_COMMANDS = {
    "generate": (cmd_generate, "emit a synthetic coupled price panel"),
    "prep": (cmd_prep, "preprocess levels into returns plus statistics"),
    "stats": (cmd_stats, "statistics and correlation files for a panel"),
    "select": (cmd_select, "run the significance grid over all drivers"),
    "train": (cmd_train, "train the design x scenario hyperparameter "
                         "sweep"),
    "evaluate": (cmd_evaluate, "rebuild metric tables from the ledger"),
    "report": (cmd_report, "emit plot-ready tables"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teflow",
        description="transfer-entropy driver selection and direction "
                    "classifiers")
    parser.add_argument("--version", action="version",
                        version=f"teflow {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="keyed-text configuration file")
    common.add_argument("--defaults", choices=("paper",),
                        help="named baseline configuration (also the "
                             "implicit default)")
    common.add_argument("--seed", type=int, metavar="INT",
                        help="master seed override")
    common.add_argument("--workers", type=int, metavar="INT",
                        help="worker process count override")
    common.add_argument("--out", metavar="DIR",
                        help="output directory override")
    subs = parser.add_subparsers(dest="command", required=True,
                                 metavar="command")
    for name, (handler, description) in _COMMANDS.items():
        sub = subs.add_parser(name, parents=[common], help=description,
                              description=description)
        sub.set_defaults(handler=handler)
        if name == "generate":
            sub.add_argument("--rows", type=int, default=400, metavar="N",
                             help="return rows to simulate (default 400)")
            sub.add_argument("--drivers", type=int, default=3, metavar="N",
                             help="candidate driver count (default 3)")
            sub.add_argument("--coupled", type=int, default=1, metavar="N",
                             help="how many drivers actually drive the "
                                  "target (default 1)")
    return parser


def _resolve_config(args) -> RunConfig:
    config = read_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["out_dir"] = args.out
    return replace(config, **overrides) if overrides else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        args.handler(config, args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("interrupted; journaled work is kept for resume",
              file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
