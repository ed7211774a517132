"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written the slow, obvious way — direct
formulas, O(n^2) scans, scalar loops — and shares no code with the
package under test. When a library routine and its oracle agree on
randomized inputs, both would have to be wrong in the same way for a
test to pass.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "natural_spline_eval",
    "pairwise_auc",
    "finite_difference_grads",
    "max_relative_error",
    "amsgrad_scalar_steps",
    "one_sided_ks_above",
]


# ---------------------------------------------------------------------------
# Natural cubic spline (tridiagonal second-derivative solve)
# ---------------------------------------------------------------------------

def natural_spline_eval(t_obs, v_obs, t_query):
    """Evaluate the natural cubic interpolating spline at ``t_query``.

    Classic second-derivative formulation: solve the tridiagonal system
    for M_i = S''(t_i) with M_0 = M_{n-1} = 0, then evaluate the cubic
    on the segment containing each query point.
    """
    t = np.asarray(t_obs, dtype=np.float64)
    v = np.asarray(v_obs, dtype=np.float64)
    n = len(t)
    if n < 3:
        raise ValueError("need at least 3 points")
    h = np.diff(t)
    # Interior equations: (h[i-1]/6) M[i-1] + ((h[i-1]+h[i])/3) M[i]
    #                     + (h[i]/6) M[i+1] = dd[i]
    dd = (v[2:] - v[1:-1]) / h[1:] - (v[1:-1] - v[:-2]) / h[:-1]
    m = n - 2
    a = np.zeros((m, m))
    for i in range(m):
        a[i, i] = (h[i] + h[i + 1]) / 3.0
        if i > 0:
            a[i, i - 1] = h[i] / 6.0
        if i < m - 1:
            a[i, i + 1] = h[i + 1] / 6.0
    second = np.zeros(n)
    second[1:-1] = np.linalg.solve(a, dd)

    tq = np.atleast_1d(np.asarray(t_query, dtype=np.float64))
    out = np.empty_like(tq)
    for j, x in enumerate(tq):
        i = int(np.clip(np.searchsorted(t, x) - 1, 0, n - 2))
        dt = t[i + 1] - t[i]
        u = t[i + 1] - x
        w = x - t[i]
        out[j] = (second[i] * u**3 / (6 * dt)
                  + second[i + 1] * w**3 / (6 * dt)
                  + (v[i] / dt - second[i] * dt / 6) * u
                  + (v[i + 1] / dt - second[i + 1] * dt / 6) * w)
    if np.isscalar(t_query):
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# Mann-Whitney AUC by explicit pair counting (ties count one half)
# ---------------------------------------------------------------------------

def pairwise_auc(scores, labels) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need both classes")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# ---------------------------------------------------------------------------
# Central finite differences over a list-of-dicts parameter tree
# ---------------------------------------------------------------------------

def finite_difference_grads(loss_fn, params, step: float = 1e-6):
    """Numeric gradient of ``loss_fn()`` w.r.t. every entry of ``params``.

    ``params`` is the model's live parameter tree (list of dicts of
    float64 arrays); entries are perturbed in place and restored, and
    ``loss_fn`` is re-evaluated around each perturbation.
    """
    grads = []
    for layer in params:
        layer_grads = {}
        for key, tensor in layer.items():
            g = np.empty_like(tensor)
            flat = tensor.ravel()
            gflat = g.ravel()
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + step
                up = loss_fn()
                flat[i] = saved - step
                down = loss_fn()
                flat[i] = saved
                gflat[i] = (up - down) / (2.0 * step)
            layer_grads[key] = g
        grads.append(layer_grads)
    return grads


def max_relative_error(analytic, numeric) -> float:
    """Largest elementwise |a - n| / max(|a| + |n|, 1e-8) over the tree."""
    worst = 0.0
    for la, ln in zip(analytic, numeric):
        assert sorted(la.keys()) == sorted(ln.keys())
        for key in la:
            a = np.asarray(la[key], dtype=np.float64)
            n = np.asarray(ln[key], dtype=np.float64)
            denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


# ---------------------------------------------------------------------------
# AMSGrad reference: scalar loop, no vectorization
# ---------------------------------------------------------------------------

def amsgrad_scalar_steps(theta0: float, grads, lr=0.001, beta1=0.9,
                         beta2=0.999, eps=1e-8):
    """Apply AMSGrad steps to one scalar parameter; return its history.

    Both moment estimates are bias-corrected and the maximum is kept
    over the *corrected* second moment; epsilon enters after the square
    root.
    """
    theta = float(theta0)
    m = 0.0
    v = 0.0
    v_max = 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        v_max = max(v_max, v_hat)
        theta = theta - lr * m_hat / (np.sqrt(v_max) + eps)
        out.append(theta)
    return out


# ---------------------------------------------------------------------------
# One-sided Kolmogorov-Smirnov distance above the uniform CDF
# ---------------------------------------------------------------------------

def one_sided_ks_above(samples) -> float:
    """sup_x (F_empirical(x) - x) for samples that should be >= U(0,1).

    Positive excess means the samples are stochastically *smaller* than
    uniform (anti-conservative p-values); well-calibrated or
    conservative samples keep the excess near or below zero.
    """
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(s)
    # Empirical CDF immediately at each sample point is i/n.
    return float(np.max(np.arange(1, n + 1) / n - s))
