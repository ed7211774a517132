"""Binary-classification metrics: confusion counts, rates and ROC-AUC.

Probabilities at or above the decision threshold (default 0.5, the
sigmoid midpoint) predict the positive class. Rates with a zero
denominator are reported as undefined (``None``) — never coerced to
zero — and best-score tallies skip them. ROC-AUC is the tie-aware rank
statistic: the probability that a random positive outscores a random
negative, ties counting one half, which equals the trapezoidal area
over every distinct-score threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError

__all__ = [
    "ConfusionMatrix", "MetricsReport", "confusion", "report", "roc_auc",
    "evaluate", "format_metric", "tally_best", "METRIC_COLUMNS",
    "LOWER_IS_BETTER",
]

METRIC_COLUMNS = ("acc", "tpr", "tnr", "ppv", "for_rate", "ba", "f1", "auc")

# Every metric rewards larger values except the false omission rate.
LOWER_IS_BETTER = frozenset({"for_rate"})


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of true/false positives/negatives at one threshold."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise DataError(f"{name} must be a non-negative integer, "
                                f"got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    """Rates in [0, 1] or ``None`` where the defining ratio is 0/0."""

    acc: float | None
    tpr: float | None
    tnr: float | None
    ppv: float | None
    for_rate: float | None
    ba: float | None
    f1: float | None
    auc: float | None = None

    def __post_init__(self):
        for name in METRIC_COLUMNS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DataError(f"{name} = {value!r} outside [0, 1]")

    def with_auc(self, auc: float) -> "MetricsReport":
        return replace(self, auc=float(auc))

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}


def confusion(probabilities, labels,
              threshold: float = 0.5) -> ConfusionMatrix:
    """Count the confusion matrix; p >= threshold predicts positive."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise DataError(f"probabilities {p.shape} and labels {y.shape} "
                        "must be equal-length 1-D arrays")
    if p.size and (np.min(p) < 0.0 or np.max(p) > 1.0):
        raise DataError("probabilities must lie in [0, 1]")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    pos = p >= threshold
    true = y == 1
    return ConfusionMatrix(tp=int(np.sum(pos & true)),
                           tn=int(np.sum(~pos & ~true)),
                           fp=int(np.sum(pos & ~true)),
                           fn=int(np.sum(~pos & true)))


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def report(cm: ConfusionMatrix) -> MetricsReport:
    """All confusion-matrix rates; AUC is attached separately."""
    tpr = _ratio(cm.tp, cm.tp + cm.fn)
    tnr = _ratio(cm.tn, cm.tn + cm.fp)
    ppv = _ratio(cm.tp, cm.tp + cm.fp)
    ba = (tpr + tnr) / 2.0 if tpr is not None and tnr is not None else None
    # Harmonic mean of precision and recall, 2·TP/(2·TP + FP + FN).
    f1 = _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)
    return MetricsReport(acc=_ratio(cm.tp + cm.tn, cm.total),
                         tpr=tpr, tnr=tnr, ppv=ppv,
                         for_rate=_ratio(cm.fn, cm.fn + cm.tn),
                         ba=ba, f1=f1)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing their group's average rank."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    new_group = np.r_[True, s[1:] != s[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    starts = np.cumsum(np.concatenate(([0], counts[:-1])))
    averages = starts + (counts - 1) / 2.0 + 1.0
    ranks = np.empty(len(s), dtype=np.float64)
    ranks[order] = averages[group]
    return ranks


def roc_auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative.

    Computed from average ranks (the Mann–Whitney statistic), so ties
    contribute exactly one half and the result equals the trapezoidal
    ROC area over all distinct-score thresholds.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(f"scores {s.shape} and labels {y.shape} must be "
                        "equal-length 1-D arrays")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC-AUC needs both classes present")
    ranks = _average_ranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def evaluate(probabilities, labels,
             threshold: float = 0.5) -> MetricsReport:
    """Confusion rates at the threshold plus ROC-AUC in one report."""
    rep = report(confusion(probabilities, labels, threshold))
    return rep.with_auc(roc_auc(probabilities, labels))


def format_metric(name: str, value: float | None) -> str:
    """Table cell: percentages to 2 decimals, AUC to 4, or 'undefined'."""
    if value is None:
        return "undefined"
    if name == "auc":
        return f"{value:.4f}"
    return f"{100.0 * value:.2f}"


def tally_best(reports) -> list:
    """Count, per report, how many metric columns it wins.

    For each column the best defined value wins (minimum for the false
    omission rate, maximum otherwise); every report attaining it scores
    one. Undefined entries never win and never block a column.
    """
    reports = list(reports)
    counts = [0] * len(reports)
    for name in METRIC_COLUMNS:
        values = [getattr(r, name) for r in reports]
        defined = [v for v in values if v is not None]
        if not defined:
            continue
        best = min(defined) if name in LOWER_IS_BETTER else max(defined)
        for i, v in enumerate(values):
            if v is not None and v == best:
                counts[i] += 1
    return counts
