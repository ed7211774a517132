"""Permutation-surrogate significance testing for transfer entropy.

A surrogate shuffles the embedded source rows as whole tuples, which
preserves the source's own tuple statistics and the target's dynamics
while destroying any alignment between the two series. The observed
estimate is ranked against the surrogate estimates with the add-one rule
p = (1 + #{surrogate >= observed}) / (S + 1), so p can never reach zero
and equals 1/(S+1) when the observed value beats every surrogate.

All randomness fans out from one seed through named SeedSequence children,
one per surrogate, so results are identical no matter how the work is
scheduled or how many workers run it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .ksg import EmbeddedPanel, EmbeddingConfig, TeEstimate, TePlan, \
    prepared_embedding

__all__ = ["SurrogateResult", "permute_source", "permutation_test"]


@dataclass(frozen=True)
class SurrogateResult:
    """Outcome of one permutation test."""

    observed: TeEstimate
    surrogate_values: np.ndarray = field(repr=False)
    p_value: float
    significant: bool
    alpha: float

    def __post_init__(self):
        values = np.asarray(self.surrogate_values, dtype=np.float64)
        object.__setattr__(self, "surrogate_values", values)
        s = len(values)
        if not (0.0 < self.p_value <= 1.0):
            raise DataError(f"p_value {self.p_value} outside (0, 1]")
        if self.p_value < 1.0 / (s + 1) - 1e-15:
            raise DataError("p_value below the add-one floor 1/(S+1)")

    @property
    def n_surrogates(self) -> int:
        return len(self.surrogate_values)


def permute_source(panel: EmbeddedPanel, seed) -> EmbeddedPanel:
    """One surrogate: the embedded source rows in seeded shuffled order.

    Rows move as whole tuples, so the multiset of source vectors is
    preserved exactly; only their pairing with the target rows changes.
    """
    order = np.random.default_rng(seed).permutation(panel.n_effective)
    return panel.with_source_rows(order)


def surrogate_orders(n_rows: int, seed, n_surrogates: int) -> np.ndarray:
    """The (S, n) row orders permutation_test evaluates for this seed.

    Order s comes from an independent SeedSequence child, so any subset
    of surrogates can be recomputed without generating the rest.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    children = seed.spawn(n_surrogates)
    return np.stack([
        np.random.default_rng(c).permutation(n_rows) for c in children
    ])


def add_one_p_value(observed: float, surrogate_values: np.ndarray) -> float:
    """p = (1 + #{surrogate >= observed}) / (S + 1)."""
    s = len(surrogate_values)
    if s < 1:
        raise DataError("need at least one surrogate")
    exceed = int((np.asarray(surrogate_values) >= observed).sum())
    return (1 + exceed) / (s + 1)


def permutation_test(target, source, config: EmbeddingConfig,
                     n_surrogates: int = 100, alpha: float = 0.05,
                     seed: int = 0, use_jitter: bool = True) -> SurrogateResult:
    """Test whether the source carries significant transfer entropy into
    the target at this embedding configuration.

    The seed drives everything: tie-breaking jitter on the standardized
    series (when use_jitter is set) and the S independent surrogate
    shuffles. Two calls with equal arguments produce identical results.
    """
    if n_surrogates < 1:
        raise ConfigError("n_surrogates must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha {alpha} outside (0, 1)")
    root = np.random.SeedSequence(seed)
    jitter_ss, surrogate_ss = root.spawn(2)
    panel = prepared_embedding(
        target, source, config,
        jitter_seed=jitter_ss if use_jitter else None)
    plan = TePlan(panel)
    observed = plan.observed()
    orders = surrogate_orders(panel.n_effective, surrogate_ss, n_surrogates)
    values = plan.permuted_globals(orders)
    p = add_one_p_value(observed.global_te, values)
    return SurrogateResult(observed, values, p, p <= alpha, alpha)
