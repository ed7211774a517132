"""teflow: transfer-entropy driver selection and direction classifiers.

The toolkit estimates how much knowing one financial series' past
improves next-step predictions of another (transfer entropy, estimated
with a nearest-neighbour method for continuous data), keeps the drivers
whose information flow survives a permutation test, and feeds both the
raw series and the per-day local transfer-entropy values into small
recurrent and convolutional classifiers of next-day price direction.

Layers, from data to results:

- :mod:`teflow.panel`, :mod:`teflow.prep` — dated panels, returns,
  imputation, descriptive statistics.
- :mod:`teflow.knn`, :mod:`teflow.ksg` — max-norm neighbour searches and
  the entropy / mutual-information / transfer-entropy estimators.
- :mod:`teflow.sig`, :mod:`teflow.select` — permutation significance and
  the (k, l, K) grid search that picks each driver's best embedding.
- :mod:`teflow.dataset`, :mod:`teflow.net`, :mod:`teflow.metrics` —
  windowed direction datasets, the network stack and the metric battery.
- :mod:`teflow.oracle` — synthetic coupled processes with closed-form
  transfer entropy, used as ground truth throughout the test suite.
- :mod:`teflow.config`, :mod:`teflow.cli` — keyed run configuration and
  the end-to-end command line.
"""

from ._version import __version__
from .errors import (ConfigError, DataError, DegenerateDataError,
                     NumericError, ToolkitError)
from .panel import Panel, parse_date, read_panel, write_panel
from .prep import (Significance, StatsSummary, corr_matrix,
                   cumulative_return, describe, difference, fill_weekends,
                   jarque_bera, log_return, scale_by_std, spline_impute,
                   write_corr_table, write_stats_table)
from .ksg import (EmbeddedPanel, EmbeddingConfig, KsgEstimate, TeEstimate,
                  TePlan, digamma, embed, jitter, ksg_conditional_mi,
                  ksg_entropy, ksg_mutual_info, prepared_embedding,
                  transfer_entropy, transfer_entropy_embedded)
from .sig import (SurrogateResult, add_one_p_value, permutation_test,
                  permute_source, surrogate_orders)
from .select import (CellResult, DEFAULT_GRID, FeatureSet, GridResult,
                     GridSpec, cell_seed, export_heatmap, grid_search,
                     read_features, read_heatmap, select_features,
                     write_features, write_selection_summary)
from .dataset import (SCENARIO_IDS, ScenarioColumn, ScenarioSpec, Split,
                      SupervisedDataset, build_scenario,
                      chronological_split, local_te_feature_name,
                      make_windows, resolve_scenario, scale_to_train,
                      split_by_dates, write_dataset_manifest)
from .metrics import (ConfusionMatrix, METRIC_COLUMNS, MetricsReport,
                      confusion, evaluate, format_metric, report, roc_auc,
                      tally_best)
from .oracle import Var1Spec, analytic_te, simulate, synthetic_panel
from .config import RunConfig, config_hash, read_config, write_config
from . import net

__all__ = [
    "__version__",
    "ToolkitError", "ConfigError", "DataError", "NumericError",
    "DegenerateDataError",
    "Panel", "parse_date", "read_panel", "write_panel",
    "Significance", "StatsSummary", "corr_matrix", "cumulative_return",
    "describe", "difference", "fill_weekends", "jarque_bera", "log_return",
    "scale_by_std", "spline_impute", "write_corr_table", "write_stats_table",
    "EmbeddedPanel", "EmbeddingConfig", "KsgEstimate", "TeEstimate",
    "TePlan", "digamma", "embed", "jitter", "ksg_conditional_mi",
    "ksg_entropy", "ksg_mutual_info", "prepared_embedding",
    "transfer_entropy", "transfer_entropy_embedded",
    "SurrogateResult", "add_one_p_value", "permutation_test",
    "permute_source", "surrogate_orders",
    "CellResult", "DEFAULT_GRID", "FeatureSet", "GridResult", "GridSpec",
    "cell_seed", "export_heatmap", "grid_search", "read_features",
    "read_heatmap", "select_features", "write_features",
    "write_selection_summary",
    "SCENARIO_IDS", "ScenarioColumn", "ScenarioSpec", "Split",
    "SupervisedDataset", "build_scenario", "chronological_split",
    "local_te_feature_name", "make_windows", "resolve_scenario",
    "scale_to_train", "split_by_dates", "write_dataset_manifest",
    "ConfusionMatrix", "METRIC_COLUMNS", "MetricsReport", "confusion",
    "evaluate", "format_metric", "report", "roc_auc", "tally_best",
    "Var1Spec", "analytic_te", "simulate", "synthetic_panel",
    "RunConfig", "config_hash", "read_config", "write_config",
    "net",
]
