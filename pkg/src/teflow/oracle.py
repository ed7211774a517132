"""Coupled linear pair generator with closed-form transfer entropy.

The process is a first-order vector autoregression driving a target x
from a source y:

    x[t+1] = a * x[t] + b * y[t] + sigma * eps[t+1]

with y either unit-variance white noise or a unit-variance AR(1) with
coefficient rho. For jointly Gaussian processes the transfer entropy at
history lengths k = l = 1 is half the log ratio of the conditional
variances of x[t+1] given x[t] alone versus given (x[t], y[t]), which is
available in closed form. That makes this module the ground truth the
estimators are judged against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DataError

__all__ = ["Var1Spec", "simulate", "analytic_te", "synthetic_panel"]

_BURN_IN = 1000


@dataclass(frozen=True)
class Var1Spec:
    """Parameters of the coupled pair.

    a: target persistence (|a| < 1), b: coupling strength, sigma: target
    innovation scale (> 0). source selects the driver process:
    "iid-normal" for white noise, "ar1" for an AR(1) with coefficient rho
    scaled to unit marginal variance.
    """

    a: float
    b: float
    sigma: float
    source: str = "iid-normal"
    rho: float = 0.0

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise DataError(f"need |a| < 1 for stationarity, got {self.a}")
        if not self.sigma > 0.0:
            raise DataError(f"need sigma > 0, got {self.sigma}")
        if self.source not in ("iid-normal", "ar1"):
            raise DataError(f"unknown source process {self.source!r}")
        if self.source == "ar1" and not abs(self.rho) < 1.0:
            raise DataError(f"need |rho| < 1, got {self.rho}")


def simulate(spec: Var1Spec, n: int, seed: int,
             burn_in: int = _BURN_IN) -> tuple[np.ndarray, np.ndarray]:
    """Draw n aligned samples of (x, y) after discarding a burn-in run.

    Deterministic in (spec, n, seed); the same seed always yields the
    same pair.
    """
    if n < 2:
        raise DataError("need n >= 2")
    if burn_in < 0:
        raise DataError("burn_in must be >= 0")
    total = n + burn_in
    rng = np.random.default_rng(seed)
    eta = rng.normal(size=total)
    eps = rng.normal(size=total)
    if spec.source == "ar1":
        y = lfilter([math.sqrt(1.0 - spec.rho ** 2)], [1.0, -spec.rho], eta)
    else:
        y = eta
    drive = spec.sigma * eps
    drive[1:] += spec.b * y[:-1]
    x = lfilter([1.0], [1.0, -spec.a], drive)
    return x[burn_in:], y[burn_in:]


def analytic_te(spec: Var1Spec) -> float:
    """Exact transfer entropy (nats) from y to x at k = l = 1.

    For white-noise y this is 0.5 * ln((b^2 * Var(y) + sigma^2) / sigma^2)
    with Var(y) = 1. For AR(1) y, knowing x[t] already reveals part of
    y[t] through the stationary cross-covariance, which shrinks the
    numerator accordingly.
    """
    b2 = spec.b ** 2
    s2 = spec.sigma ** 2
    if spec.source == "iid-normal" or spec.b == 0.0:
        return 0.5 * math.log((b2 + s2) / s2)
    # Stationary moments: c = Cov(x, y) and v = Var(x) solve the linear
    # fixed-point equations of the joint recursion.
    c = spec.rho * spec.b / (1.0 - spec.rho * spec.a)
    v = (b2 + 2.0 * spec.a * spec.b * c + s2) / (1.0 - spec.a ** 2)
    resid = 1.0 - c * c / v
    return 0.5 * math.log((b2 * resid + s2) / s2)


def synthetic_panel(n_rows: int, n_drivers: int = 3, n_coupled: int = 1, *,
                    seed: int = 0, target: str = "asset",
                    spec: Var1Spec = Var1Spec(0.5, 0.5, 0.5),
                    return_scale: float = 0.02,
                    start_date="2020-01-01", base_price: float = 100.0):
    """Price panel whose log returns follow the coupled recursion.

    The target's return is driven by the first ``n_coupled`` driver
    returns (coupling ``spec.b`` each, with the driver processes drawn
    per ``spec.source``); the remaining drivers are independent noise.
    Every return series is scaled by ``return_scale`` and exponentiated
    into a level series starting at ``base_price``, so running the level
    pipeline (log returns) recovers exactly the simulated returns up to
    that single multiplicative factor — which transfer entropy ignores.

    Returns a Panel with n_rows + 1 daily price rows: column ``target``
    first, then driver1..driverN. The coupled driver names are recorded
    in the panel metadata.
    """
    from .panel import Panel, parse_date

    if n_rows < 10:
        raise DataError(f"need at least 10 rows, got {n_rows}")
    if n_drivers < 1:
        raise DataError(f"need at least one driver, got {n_drivers}")
    if not 0 <= n_coupled <= n_drivers:
        raise DataError(f"n_coupled {n_coupled} outside 0..{n_drivers}")
    if not return_scale > 0.0:
        raise DataError(f"need return_scale > 0, got {return_scale}")
    rng = np.random.default_rng(seed)
    total = n_rows + _BURN_IN
    eta = rng.normal(size=(total, n_drivers))
    eps = rng.normal(size=total)
    if spec.source == "ar1":
        ys = lfilter([math.sqrt(1.0 - spec.rho ** 2)], [1.0, -spec.rho],
                     eta, axis=0)
    else:
        ys = eta
    drive = spec.sigma * eps
    if n_coupled:
        drive[1:] += spec.b * ys[:-1, :n_coupled].sum(axis=1)
    x = lfilter([1.0], [1.0, -spec.a], drive)
    returns = np.column_stack([x, ys])[_BURN_IN:] * return_scale
    names = (target,) + tuple(f"driver{i + 1}" for i in range(n_drivers))
    prices = np.empty((n_rows + 1, len(names)))
    prices[0] = base_price
    prices[1:] = base_price * np.exp(np.cumsum(returns, axis=0))
    first = parse_date(str(start_date))
    dates = first + np.arange(n_rows + 1)
    meta = {"coupled": ",".join(names[1:1 + n_coupled]),
            "generator_seed": str(seed)}
    return Panel(dates, names, prices, meta)
