"""AMSGrad: Adam with a running elementwise maximum of the corrected
second-moment estimate, so the effective step size never grows back
after a large gradient has been seen.

Per tensor, at step t with gradient g:

    m      <- beta1 * m + (1 - beta1) * g
    v      <- beta2 * v + (1 - beta2) * g * g
    m_hat   = m / (1 - beta1 ** t)
    v_corr  = v / (1 - beta2 ** t)
    v_max  <- max(v_max, v_corr)          (elementwise, never decreases)
    theta  <- theta - lr * m_hat / (sqrt(v_max) + eps)

Both moment estimates are bias-corrected; epsilon is added after the
square root. First step with g = 1 and lr = 0.001: m_hat = 1,
v_corr = 1, so the update is exactly -0.001 / (1 + 1e-8).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError

__all__ = ["AmsGradState", "adam_amsgrad_step", "AmsGrad"]


class AmsGradState:
    """Moment tensors (m, v, v_max) mirroring one parameter structure,
    plus the shared step counter."""

    def __init__(self, params):
        self.step_count = 0
        self.m = [{k: np.zeros_like(v) for k, v in layer.items()}
                  for layer in params]
        self.v = [{k: np.zeros_like(v) for k, v in layer.items()}
                  for layer in params]
        self.v_max = [{k: np.zeros_like(v) for k, v in layer.items()}
                      for layer in params]


def _update_tensor(theta, g, m, v, v_max, t, lr, beta1, beta2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1 ** t)
    v_corr = v / (1.0 - beta2 ** t)
    np.maximum(v_max, v_corr, out=v_max)
    theta -= lr * m_hat / (np.sqrt(v_max) + eps)


def adam_amsgrad_step(params, grads, state: AmsGradState,
                      lr: float = 0.001, beta1: float = 0.9,
                      beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Apply one AMSGrad step in place.

    ``params`` and ``grads`` are parallel lists of name->tensor dicts
    (one dict per layer); ``state`` was built from the same structure.
    """
    state.step_count += 1
    t = state.step_count
    for li, layer in enumerate(params):
        for key, theta in layer.items():
            _update_tensor(theta, grads[li][key], state.m[li][key],
                           state.v[li][key], state.v_max[li][key],
                           t, lr, beta1, beta2, eps)


class AmsGrad:
    """Stateful wrapper bound to one parameter structure."""

    def __init__(self, params, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError(f"betas must lie in [0, 1), got "
                              f"({beta1}, {beta2})")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AmsGradState(params)

    def step(self, params, grads) -> None:
        adam_amsgrad_step(params, grads, self.state, self.lr,
                          self.beta1, self.beta2, self.eps)
