"""Binary cross-entropy over predicted probabilities.

Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs so a
saturated sigmoid cannot produce infinities; the gradient is zero where
the clamp is active, matching the flat clamped value.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

__all__ = ["PROB_CLAMP", "bce_loss", "bce_grad"]

PROB_CLAMP = 1e-12


def _clamped(probabilities, labels):
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1:
        raise DataError(f"probabilities {p.shape} and labels {y.shape} "
                        "must be equal-length 1-D arrays")
    if p.size == 0:
        raise DataError("empty batch")
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP), y, p


def bce_loss(probabilities, labels) -> float:
    """Mean of -[y ln p + (1 - y) ln(1 - p)] over the batch."""
    p, y, _ = _clamped(probabilities, labels)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def bce_grad(probabilities, labels) -> np.ndarray:
    """Gradient of :func:`bce_loss` with respect to the probabilities."""
    p, y, raw = _clamped(probabilities, labels)
    grad = (-(y / p) + (1.0 - y) / (1.0 - p)) / p.size
    # Where the clamp bites, the loss is locally constant in p.
    active = (raw >= PROB_CLAMP) & (raw <= 1.0 - PROB_CLAMP)
    return grad * active
