"""Run configuration: one keyed text file drives the whole pipeline.

A RunConfig carries every knob the command line needs — input panel,
target and candidate columns, preprocessing options, the (k, l, K)
search grid, significance settings, windowing and split choices, the
scenario and design lists, the hyperparameter grids, and the master
seed. Defaults pin the reference values used throughout the toolkit's
documentation (grid 1..10 per axis, 100 surrogates at alpha 0.05,
window 74, horizon 1, batch sizes 32..256, learning rates 1e-3/1e-4,
dropout 0.3/0.5/0.7, ten training seeds), so an empty file — or the
``--defaults paper`` shortcut — is already a complete configuration.

The effective configuration serializes to keyed text and hashes to a
12-hex-digit fingerprint. The fingerprint excludes the output directory
and the worker count: neither influences any computed value (results
are scheduling-independent by construction), so a run can resume with a
different worker count or be reproduced into a different directory
while still matching its journaled work.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ._version import __version__
from .dataset import SCENARIO_IDS
from .errors import ConfigError, DataError
from .net.model import PRESET_NAMES
from .panel import parse_date
from .select import GridSpec
from .textio import format_float, format_keyed, parse_keyed

__all__ = ["RunConfig", "config_hash", "version_header", "format_config",
           "parse_config", "read_config", "write_config", "grid_spec",
           "experiment_plan"]

_FORMAT = "teflow-config/1"


def _default_axis() -> tuple:
    return tuple(range(1, 11))


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs, with reference defaults."""

    input: str = ""
    target: str = ""
    candidates: tuple = ()
    weekend_columns: tuple = ()
    impute: bool = True
    k_values: tuple = _default_axis()
    l_values: tuple = _default_axis()
    K_values: tuple = _default_axis()
    n_surrogates: int = 100
    alpha: float = 0.05
    jitter: bool = True
    window: int = 74
    horizon: int = 1
    val_start: str = ""
    test_start: str = ""
    fractions: tuple = (0.75, 0.13, 0.12)
    scenarios: tuple = SCENARIO_IDS
    designs: tuple = PRESET_NAMES
    batch_sizes: tuple = (32, 64, 128, 256)
    learning_rates: tuple = (0.001, 0.0001)
    dropouts: tuple = (0.3, 0.5, 0.7)
    n_seeds: int = 10
    max_epochs: int = 100
    patience: int = 5
    master_seed: int = 0
    out_dir: str = "runs"
    workers: int = 1

    def __post_init__(self):
        GridSpec(self.k_values, self.l_values, self.K_values)
        _check_unique("candidates", self.candidates)
        _check_unique("prep.weekend_columns", self.weekend_columns)
        if self.n_surrogates < 1:
            raise ConfigError("significance.surrogates must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"significance.alpha {self.alpha} "
                              "outside (0, 1)")
        if self.window < 1:
            raise ConfigError(f"dataset.window must be >= 1, "
                              f"got {self.window}")
        if self.horizon < 1:
            raise ConfigError(f"dataset.horizon must be >= 1, "
                              f"got {self.horizon}")
        if bool(self.val_start) != bool(self.test_start):
            raise ConfigError("split.val_start and split.test_start must "
                              "be set together")
        if self.val_start:
            try:
                ordered = (parse_date(self.val_start)
                           < parse_date(self.test_start))
            except DataError as exc:
                raise ConfigError(f"split dates: {exc}") from None
            if not ordered:
                raise ConfigError(f"split.val_start {self.val_start} must "
                                  f"precede split.test_start "
                                  f"{self.test_start}")
        if len(self.fractions) != 3 or any(f <= 0 for f in self.fractions):
            raise ConfigError("split.fractions needs three positive values")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split.fractions sum to "
                              f"{sum(self.fractions)}, want 1")
        _check_subset("scenarios", self.scenarios, SCENARIO_IDS)
        _check_subset("designs", self.designs, PRESET_NAMES)
        _check_unique("train.batch_sizes", self.batch_sizes)
        _check_unique("train.learning_rates", self.learning_rates)
        _check_unique("train.dropouts", self.dropouts)
        if not self.batch_sizes or any(b < 1 for b in self.batch_sizes):
            raise ConfigError("train.batch_sizes must be positive")
        if not self.learning_rates or any(lr <= 0
                                          for lr in self.learning_rates):
            raise ConfigError("train.learning_rates must be positive")
        if not self.dropouts or any(not 0.0 < d < 1.0
                                    for d in self.dropouts):
            raise ConfigError("train.dropouts must lie in (0, 1)")
        for name, value in (("train.seeds", self.n_seeds),
                            ("train.max_epochs", self.max_epochs),
                            ("train.patience", self.patience),
                            ("workers", self.workers)):
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.master_seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.master_seed}")

    def require(self, *names: str) -> "RunConfig":
        """Raise unless the named keys are non-empty; returns self."""
        for name in names:
            if not getattr(self, name):
                raise ConfigError(f"config key {name!r} is required for "
                                  "this command")
        return self

    @property
    def split_dates(self) -> tuple | None:
        """(val_start, test_start) when date-splitting, else None."""
        if self.val_start:
            return (self.val_start, self.test_start)
        return None


def _check_unique(key: str, values) -> None:
    if len(set(values)) != len(values):
        raise ConfigError(f"{key} contains duplicates: {values}")


def _check_subset(key: str, values, allowed) -> None:
    if not values:
        raise ConfigError(f"{key} must not be empty")
    _check_unique(key, values)
    bad = [v for v in values if v not in allowed]
    if bad:
        raise ConfigError(f"{key}: unknown entries {bad}; "
                          f"expected a subset of {list(allowed)}")


# ---------------------------------------------------------------------------
# keyed-text serialization
# ---------------------------------------------------------------------------

def _format_axis(values) -> str:
    """Compress a contiguous integer run to 'a..b', else a comma list."""
    values = list(values)
    if len(values) > 1 and values == list(range(values[0], values[-1] + 1)):
        return f"{values[0]}..{values[-1]}"
    return ",".join(str(v) for v in values)


def _parse_axis(key: str, text: str) -> tuple:
    """Parse 'a..b' runs and comma lists of integers (mixable)."""
    out: list = []
    for token in _split_list(text):
        if ".." in token:
            lo, _, hi = token.partition("..")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"{key}: bad range {token!r}") from None
            if hi < lo:
                raise ConfigError(f"{key}: empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_parse_int(key, token))
    return tuple(out)


def _split_list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, "
                          f"got {text!r}") from None


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _parse_bool(key: str, text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}")


def _pairs(config: RunConfig, runtime: bool) -> list:
    """Canonical (key, value) pairs; runtime=False drops the keys that
    cannot change any computed value (output directory, worker count)."""
    pairs = [
        ("input", config.input),
        ("target", config.target),
        ("candidates", ",".join(config.candidates)),
        ("prep.weekend_columns", ",".join(config.weekend_columns)),
        ("prep.impute", "true" if config.impute else "false"),
        ("grid.k", _format_axis(config.k_values)),
        ("grid.l", _format_axis(config.l_values)),
        ("grid.K", _format_axis(config.K_values)),
        ("significance.surrogates", str(config.n_surrogates)),
        ("significance.alpha", format_float(config.alpha)),
        ("significance.jitter", "true" if config.jitter else "false"),
        ("dataset.window", str(config.window)),
        ("dataset.horizon", str(config.horizon)),
        ("split.val_start", config.val_start),
        ("split.test_start", config.test_start),
        ("split.fractions",
         ",".join(format_float(f) for f in config.fractions)),
        ("scenarios", ",".join(config.scenarios)),
        ("designs", ",".join(config.designs)),
        ("train.batch_sizes",
         ",".join(str(b) for b in config.batch_sizes)),
        ("train.learning_rates",
         ",".join(format_float(r) for r in config.learning_rates)),
        ("train.dropouts",
         ",".join(format_float(d) for d in config.dropouts)),
        ("train.seeds", str(config.n_seeds)),
        ("train.max_epochs", str(config.max_epochs)),
        ("train.patience", str(config.patience)),
        ("seed", str(config.master_seed)),
    ]
    if runtime:
        pairs.append(("out", config.out_dir))
        pairs.append(("workers", str(config.workers)))
    return pairs


_PARSERS = {
    "input": lambda k, v: ("input", v),
    "target": lambda k, v: ("target", v),
    "candidates": lambda k, v: ("candidates", tuple(_split_list(v))),
    "prep.weekend_columns":
        lambda k, v: ("weekend_columns", tuple(_split_list(v))),
    "prep.impute": lambda k, v: ("impute", _parse_bool(k, v)),
    "grid.k": lambda k, v: ("k_values", _parse_axis(k, v)),
    "grid.l": lambda k, v: ("l_values", _parse_axis(k, v)),
    "grid.K": lambda k, v: ("K_values", _parse_axis(k, v)),
    "significance.surrogates":
        lambda k, v: ("n_surrogates", _parse_int(k, v)),
    "significance.alpha": lambda k, v: ("alpha", _parse_float(k, v)),
    "significance.jitter": lambda k, v: ("jitter", _parse_bool(k, v)),
    "dataset.window": lambda k, v: ("window", _parse_int(k, v)),
    "dataset.horizon": lambda k, v: ("horizon", _parse_int(k, v)),
    "split.val_start": lambda k, v: ("val_start", v),
    "split.test_start": lambda k, v: ("test_start", v),
    "split.fractions":
        lambda k, v: ("fractions",
                      tuple(_parse_float(k, t) for t in _split_list(v))),
    "scenarios": lambda k, v: ("scenarios", tuple(_split_list(v))),
    "designs": lambda k, v: ("designs", tuple(_split_list(v))),
    "train.batch_sizes":
        lambda k, v: ("batch_sizes",
                      tuple(_parse_int(k, t) for t in _split_list(v))),
    "train.learning_rates":
        lambda k, v: ("learning_rates",
                      tuple(_parse_float(k, t) for t in _split_list(v))),
    "train.dropouts":
        lambda k, v: ("dropouts",
                      tuple(_parse_float(k, t) for t in _split_list(v))),
    "train.seeds": lambda k, v: ("n_seeds", _parse_int(k, v)),
    "train.max_epochs": lambda k, v: ("max_epochs", _parse_int(k, v)),
    "train.patience": lambda k, v: ("patience", _parse_int(k, v)),
    "seed": lambda k, v: ("master_seed", _parse_int(k, v)),
    "out": lambda k, v: ("out_dir", v),
    "workers": lambda k, v: ("workers", _parse_int(k, v)),
}


def format_config(config: RunConfig, extra_header: str | None = None) -> str:
    """Serialize the effective configuration as keyed text."""
    header = "teflow run configuration"
    if extra_header:
        header = f"{extra_header}\n{header}"
    pairs = [("format", _FORMAT)] + _pairs(config, runtime=True)
    return format_keyed(pairs, header=header)


def parse_config(text: str) -> RunConfig:
    """Parse keyed text into a RunConfig on top of the defaults.

    Unknown keys are errors. ``defaults = paper`` states the baseline
    explicitly and is accepted (it is also the implicit baseline);
    ``format`` must name the current config format when present.
    """
    values: dict = {}
    for key, raw in parse_keyed(text).items():
        if key == "format":
            if raw != _FORMAT:
                raise ConfigError(f"unsupported config format {raw!r}; "
                                  f"this build reads {_FORMAT}")
            continue
        if key == "defaults":
            if raw != "paper":
                raise ConfigError(f"unknown defaults baseline {raw!r}; "
                                  "only 'paper' is available")
            continue
        parser = _PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"unknown config key {key!r}")
        field_name, value = parser(key, raw)
        values[field_name] = value
    return RunConfig(**values)


def read_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def write_config(config: RunConfig, path,
                 extra_header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_config(config, extra_header))


def config_hash(config: RunConfig) -> str:
    """12-hex-digit fingerprint of every result-relevant setting."""
    text = "\n".join(f"{k} = {v}" for k, v in _pairs(config, runtime=False))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def version_header(config: RunConfig) -> str:
    """The provenance line stamped on every output file."""
    return (f"teflow {__version__} | seed {config.master_seed} "
            f"| config {config_hash(config)}")


# ---------------------------------------------------------------------------
# bridges to the library objects
# ---------------------------------------------------------------------------

def grid_spec(config: RunConfig) -> GridSpec:
    return GridSpec(config.k_values, config.l_values, config.K_values)


def experiment_plan(config: RunConfig):
    from .net.experiment import ExperimentPlan

    return ExperimentPlan(designs=config.designs,
                          batches=config.batch_sizes,
                          learning_rates=config.learning_rates,
                          dropouts=config.dropouts,
                          seeds=tuple(range(config.n_seeds)),
                          max_epochs=config.max_epochs,
                          patience=config.patience)
