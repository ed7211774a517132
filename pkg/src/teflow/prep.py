"""Stationarity transforms, gap filling, and descriptive statistics.

The preprocessing contract: raw level series come in on a contiguous daily
calendar, weekend gaps are filled with the preceding Friday value, interior
gaps are closed with a natural cubic spline, series are differenced into
log returns (or plain differences for signed scores), and every series is
scaled by its own standard deviation. Moments use the population (1/N)
convention and kurtosis is reported in excess form, so a normal series
scores near zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DataError, NumericError
from .panel import Panel, SATURDAY, SUNDAY, weekday

__all__ = [
    "log_return", "difference", "fill_weekends", "spline_impute",
    "scale_by_std", "describe", "corr_matrix", "cumulative_return",
    "StatsSummary", "Significance", "write_stats_table",
    "write_corr_table",
]


def log_return(series: np.ndarray) -> np.ndarray:
    """Log returns of a positive level series.

    output[t] = ln(series[t+1] / series[t]), so the result is one shorter
    than the input and output[t] is naturally stamped on the later day.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or len(s) < 2:
        raise DataError("log_return needs a 1-d series of length >= 2")
    bad = np.flatnonzero(~(s > 0.0))
    if bad.size:
        raise DataError(
            f"log_return needs strictly positive values; offending index {bad[0]}"
            f" (value {s[bad[0]]!r})"
        )
    return np.log(s[1:] / s[:-1])


def difference(series: np.ndarray) -> np.ndarray:
    """First difference, for signed score series that may cross zero."""
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or len(s) < 2:
        raise DataError("difference needs a 1-d series of length >= 2")
    return np.diff(s)


def cumulative_return(returns: np.ndarray) -> np.ndarray:
    """Running sum of a return series (log returns add)."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 1:
        raise DataError("cumulative_return needs a 1-d series")
    return np.cumsum(r)


def fill_weekends(panel: Panel, columns: list[str]) -> Panel:
    """Fill missing Saturday/Sunday cells with the preceding Friday value.

    Only missing weekend cells of the listed columns are touched; any cell
    that already holds a value is left alone. The panel must sit on a
    contiguous daily calendar so 'preceding Friday' is the row one or two
    steps back.
    """
    if not panel.has_daily_calendar():
        raise DataError("fill_weekends needs a contiguous daily calendar")
    values = panel.values.copy()
    wd = weekday(panel.dates)
    for name in columns:
        c = panel.column_index(name)
        col = values[:, c]
        for i in np.flatnonzero(~np.isfinite(col)):
            if wd[i] == SATURDAY:
                j = i - 1
            elif wd[i] == SUNDAY:
                j = i - 2
            else:
                continue
            if j < 0:
                raise DataError(
                    f"column {name!r}: weekend gap at {panel.dates[i]} has no"
                    " preceding Friday in range"
                )
            col[i] = col[j]
    return panel.with_values(values)


def spline_impute(series: np.ndarray) -> np.ndarray:
    """Close interior gaps with a natural cubic spline through the
    observed points (zero second derivative at both ends).

    Needs at least 4 observed points and observed endpoints; observed
    values pass through unchanged.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1:
        raise DataError("spline_impute needs a 1-d series")
    obs = np.isfinite(s)
    n_obs = int(obs.sum())
    if n_obs == len(s):
        return s.copy()
    if n_obs < 4:
        raise DataError(f"spline_impute needs >= 4 observed points, got {n_obs}")
    if not (obs[0] and obs[-1]):
        raise DataError("spline_impute does not extrapolate: endpoints must be observed")
    x = np.flatnonzero(obs).astype(np.float64)
    spline = CubicSpline(x, s[obs], bc_type="natural")
    out = s.copy()
    gaps = np.flatnonzero(~obs)
    out[gaps] = spline(gaps.astype(np.float64))
    return out


def _population_std(s: np.ndarray) -> float:
    return float(np.std(s, ddof=0))


def scale_by_std(series: np.ndarray) -> np.ndarray:
    """Divide a series by its population standard deviation (no demeaning,
    so signs and zeros survive scaling)."""
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or len(s) < 2:
        raise DataError("scale_by_std needs a 1-d series of length >= 2")
    if not np.isfinite(s).all():
        raise DataError("scale_by_std needs a complete series")
    std = _population_std(s)
    if std == 0.0:
        raise NumericError("scale_by_std: zero standard deviation")
    return s / std


class Significance(Enum):
    """Normality-rejection level of the Jarque-Bera statistic."""

    NONE = ""
    AT_10 = "*"
    AT_5 = "**"
    AT_1 = "***"


@dataclass(frozen=True)
class StatsSummary:
    """Descriptive statistics for one series (population moments)."""

    n: int
    mean: float
    std: float
    skewness: float
    kurtosis_excess: float
    jarque_bera: float
    jb_pvalue: float
    significance: Significance


def jarque_bera(n: int, skewness: float, kurtosis_excess: float) -> float:
    """Normality statistic from sample size, skewness, and excess kurtosis:
    (n / 6) * (S^2 + K_ex^2 / 4)."""
    return (n / 6.0) * (skewness ** 2 + kurtosis_excess ** 2 / 4.0)


def describe(series: np.ndarray) -> StatsSummary:
    """Population-moment summary with the Jarque-Bera normality test.

    The p-value is the chi-squared(2 dof) survival function exp(-JB / 2);
    stars mark rejection at 10% (*), 5% (**), and 1% (***).
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or len(s) < 8:
        raise DataError("describe needs a 1-d series of length >= 8")
    if not np.isfinite(s).all():
        raise DataError("describe needs a complete series")
    n = len(s)
    mean = float(np.mean(s))
    centered = s - mean
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        raise NumericError("describe: zero variance")
    m3 = float(np.mean(centered ** 3))
    m4 = float(np.mean(centered ** 4))
    skew = m3 / m2 ** 1.5
    kurt_ex = m4 / m2 ** 2 - 3.0
    jb = jarque_bera(n, skew, kurt_ex)
    pvalue = math.exp(-jb / 2.0)
    if pvalue <= 0.01:
        stars = Significance.AT_1
    elif pvalue <= 0.05:
        stars = Significance.AT_5
    elif pvalue <= 0.10:
        stars = Significance.AT_10
    else:
        stars = Significance.NONE
    return StatsSummary(n, mean, math.sqrt(m2), skew, kurt_ex, jb, pvalue, stars)


def corr_matrix(panel: Panel) -> np.ndarray:
    """Pearson correlation matrix of a complete panel, symmetrized with a
    unit diagonal."""
    if not panel.is_complete():
        raise DataError("corr_matrix needs a complete panel")
    if panel.n_rows < 2:
        raise DataError("corr_matrix needs at least 2 rows")
    stds = np.std(panel.values, axis=0, ddof=0)
    flat = np.flatnonzero(stds == 0.0)
    if flat.size:
        raise NumericError(
            f"corr_matrix: column {panel.names[flat[0]]!r} has zero variance"
        )
    corr = np.corrcoef(panel.values, rowvar=False)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def write_stats_table(path, summaries: dict[str, StatsSummary],
                      delimiter: str = ",",
                      header_lines: list[str] | None = None) -> None:
    """Write per-series summaries as a delimiter-separated table."""
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["variable", "n", "mean", "std_dev", "skewness",
                     "kurtosis", "jarque_bera", "jb_pvalue", "significance"])
    for name, s in summaries.items():
        writer.writerow([
            name, s.n,
            f"{s.mean:.6g}", f"{s.std:.6g}", f"{s.skewness:.6g}",
            f"{s.kurtosis_excess:.6g}", f"{s.jarque_bera:.6g}",
            f"{s.jb_pvalue:.6g}", s.significance.value,
        ])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_corr_table(path, names, corr: np.ndarray, delimiter: str = ",",
                     header_lines: list[str] | None = None) -> None:
    """Write a correlation matrix as a square delimiter-separated table.

    First column holds the variable names, mirroring the header row, so
    the file renders directly as a heatmap-ready grid.
    """
    names = list(names)
    corr = np.asarray(corr, dtype=np.float64)
    if corr.shape != (len(names), len(names)):
        raise DataError(f"correlation matrix shape {corr.shape} does not "
                        f"match {len(names)} names")
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["variable"] + names)
    for i, name in enumerate(names):
        writer.writerow([name] + [f"{v:.6f}" for v in corr[i]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
