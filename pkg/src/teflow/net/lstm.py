"""Long short-term memory cells, forward and backward, plus the
bidirectional wrapper.

One step of the recurrence, with logistic gates and elementwise
products, starting from zero hidden and cell states:

    forget   g_t = sigmoid(U_g x_t + W_g h_{t-1} + b_f)
    input    i_t = sigmoid(U_i x_t + W_i h_{t-1} + b_i)
    update   u_t = tanh   (U_c x_t + W_c h_{t-1} + b_c)
    cell     c_t = g_t * c_{t-1} + i_t * u_t
    output   o_t = sigmoid(U_o x_t + W_o h_{t-1} + b_o)
    hidden   h_t = o_t * tanh(c_t)

The gate structure lets gradients flow through the cell state along the
whole sequence, which is the point of the architecture. The backward
pass is exact reverse-mode differentiation of the recurrence.

A bidirectional layer runs one cell over the sequence as given and an
independent cell over the time-reversed sequence, then re-reverses the
latter's states so index t of both halves refers to the same calendar
step; the two are concatenated feature-wise. When only the final state
is wanted, each half contributes the state that has consumed the whole
sequence: the forward cell's last step and the backward cell's last
step (which sits at index 0 after re-reversal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from .layers import glorot_uniform, sigmoid

__all__ = ["LstmParams", "lstm_forward", "Lstm", "BiLstm",
           "orthogonal_matrix"]

_GATES = ("g", "i", "c", "o")
_BIAS_KEYS = {"g": "b_f", "i": "b_i", "c": "b_c", "o": "b_o"}


@dataclass(frozen=True)
class LstmParams:
    """One cell's weights: input matrices U_* (H x F), recurrent
    matrices W_* (H x H) and gate biases (H,)."""

    U_g: np.ndarray
    U_i: np.ndarray
    U_c: np.ndarray
    U_o: np.ndarray
    W_g: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        h, f = self.U_g.shape
        for gate in _GATES:
            u = getattr(self, f"U_{gate}")
            w = getattr(self, f"W_{gate}")
            b = getattr(self, _BIAS_KEYS[gate])
            if u.shape != (h, f) or w.shape != (h, h) or b.shape != (h,):
                raise ConfigError(
                    f"inconsistent parameter shapes for gate {gate!r}: "
                    f"U {u.shape}, W {w.shape}, b {b.shape}; expected "
                    f"({h}, {f}), ({h}, {h}), ({h},)")
            for arr in (u, w, b):
                if not np.all(np.isfinite(arr)):
                    raise DataError(f"non-finite values in gate {gate!r} "
                                    "parameters")

    @property
    def hidden_size(self) -> int:
        return self.U_g.shape[0]

    @property
    def input_size(self) -> int:
        return self.U_g.shape[1]

    def as_dict(self) -> dict:
        return {name: getattr(self, name)
                for name in self.__dataclass_fields__}


def orthogonal_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """Orthogonal (n, n) matrix from a QR factorization, sign-fixed so
    the result is a deterministic function of the draws."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _init_cell(rng: np.random.Generator, in_dim: int, hidden: int) -> dict:
    """Glorot-uniform input weights, orthogonal recurrent weights,
    forget-gate bias one (remember by default), other biases zero."""
    params = {}
    for gate in _GATES:
        params[f"U_{gate}"] = glorot_uniform(rng, (hidden, in_dim),
                                             in_dim, hidden)
    for gate in _GATES:
        params[f"W_{gate}"] = orthogonal_matrix(rng, hidden)
    params["b_f"] = np.ones(hidden)
    for gate in ("i", "c", "o"):
        params[_BIAS_KEYS[gate]] = np.zeros(hidden)
    return params


def _cell_forward(params: dict, x: np.ndarray):
    """Run the recurrence over a batch: x (B, T, F) -> states (B, T, H).

    Returns the state sequence and the cache the backward pass needs.
    """
    # A contiguous buffer keeps the matrix products' summation order —
    # and therefore the results — independent of the caller's memory
    # layout (a time-reversed view would otherwise differ by an ulp).
    x = np.ascontiguousarray(x)
    b, t, _ = x.shape
    h_size = params["U_g"].shape[0]
    # Input contributions for all steps at once, one matrix per gate.
    xu = {gate: x @ params[f"U_{gate}"].T + params[_BIAS_KEYS[gate]]
          for gate in _GATES}
    h = np.zeros((b, h_size))
    c = np.zeros((b, h_size))
    states = np.empty((b, t, h_size))
    steps = []
    for step in range(t):
        g = sigmoid(xu["g"][:, step] + h @ params["W_g"].T)
        i = sigmoid(xu["i"][:, step] + h @ params["W_i"].T)
        u = np.tanh(xu["c"][:, step] + h @ params["W_c"].T)
        o = sigmoid(xu["o"][:, step] + h @ params["W_o"].T)
        c_new = g * c + i * u
        tc = np.tanh(c_new)
        h_new = o * tc
        steps.append((h, c, g, i, u, o, tc))
        h, c = h_new, c_new
        states[:, step] = h_new
    return states, (x, steps)


def _cell_backward(params: dict, cache, dstates: np.ndarray):
    """Reverse-mode pass. ``dstates`` holds the loss gradient with
    respect to every hidden state (B, T, H). Returns (dparams, dx)."""
    x, steps = cache
    b, t, _ = x.shape
    grads = {key: np.zeros_like(val) for key, val in params.items()}
    dx = np.zeros_like(x)
    h_size = params["U_g"].shape[0]
    dh_next = np.zeros((b, h_size))
    dc_next = np.zeros((b, h_size))
    for step in range(t - 1, -1, -1):
        h_prev, c_prev, g, i, u, o, tc = steps[step]
        dh = dstates[:, step] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dg = dc * c_prev
        di = dc * u
        du = dc * i
        da = {
            "g": dg * g * (1.0 - g),
            "i": di * i * (1.0 - i),
            "c": du * (1.0 - u * u),
            "o": do * o * (1.0 - o),
        }
        dh_prev = np.zeros((b, h_size))
        x_step = x[:, step]
        for gate in _GATES:
            d = da[gate]
            grads[f"U_{gate}"] += d.T @ x_step
            grads[f"W_{gate}"] += d.T @ h_prev
            grads[_BIAS_KEYS[gate]] += d.sum(axis=0)
            dx[:, step] += d @ params[f"U_{gate}"]
            dh_prev += d @ params[f"W_{gate}"]
        dh_next = dh_prev
        dc_next = dc * g
    return grads, dx


def lstm_forward(params: LstmParams, sequence: np.ndarray,
                 return_cache: bool = False):
    """State sequence (T, H) for one input sequence (T, F)."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise ConfigError(f"sequence must be (T, F), got shape {seq.shape}")
    if seq.shape[1] != params.input_size:
        raise ConfigError(f"sequence has {seq.shape[1]} features, "
                          f"parameters expect {params.input_size}")
    states, cache = _cell_forward(params.as_dict(), seq[None])
    if return_cache:
        return states[0], cache
    return states[0]


class Lstm:
    """Recurrent layer. With ``return_sequences`` the output is the full
    state sequence (B, T, H); otherwise only the final state (B, H)."""

    def __init__(self, hidden: int, return_sequences: bool = True):
        if hidden < 1:
            raise ConfigError(f"hidden size must be >= 1, got {hidden}")
        self.hidden = hidden
        self.return_sequences = return_sequences
        self.in_dim: int | None = None
        self.t_steps: int | None = None

    def build(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 2:
            raise ConfigError(f"lstm needs (time, features) input, got "
                              f"shape {in_shape}")
        self.t_steps, self.in_dim = in_shape
        if self.return_sequences:
            return (self.t_steps, self.hidden)
        return (self.hidden,)

    def init_params(self, rng: np.random.Generator) -> dict:
        return _init_cell(rng, self.in_dim, self.hidden)

    def forward(self, params, x, training=False, rng=None):
        states, cache = _cell_forward(params, x)
        if self.return_sequences:
            return states, cache
        return states[:, -1], cache

    def backward(self, params, cache, grad_out):
        x, _ = cache
        if self.return_sequences:
            dstates = grad_out
        else:
            dstates = np.zeros((x.shape[0], x.shape[1], self.hidden))
            dstates[:, -1] = grad_out
        return _cell_backward(params, cache, dstates)


class BiLstm:
    """Two independent cells, one per time direction, states concatenated.

    Parameter keys carry ``f.`` and ``b.`` prefixes for the forward and
    backward cells. With ``return_sequences`` the output is (B, T, 2H)
    with the backward half re-reversed onto the input's time axis;
    otherwise (B, 2H), each half's fully-informed final state.
    """

    def __init__(self, hidden: int, return_sequences: bool = True):
        if hidden < 1:
            raise ConfigError(f"hidden size must be >= 1, got {hidden}")
        self.hidden = hidden
        self.return_sequences = return_sequences
        self.in_dim: int | None = None
        self.t_steps: int | None = None

    def build(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 2:
            raise ConfigError(f"bilstm needs (time, features) input, got "
                              f"shape {in_shape}")
        self.t_steps, self.in_dim = in_shape
        if self.return_sequences:
            return (self.t_steps, 2 * self.hidden)
        return (2 * self.hidden,)

    def init_params(self, rng: np.random.Generator) -> dict:
        fwd = _init_cell(rng, self.in_dim, self.hidden)
        bwd = _init_cell(rng, self.in_dim, self.hidden)
        params = {f"f.{k}": v for k, v in fwd.items()}
        params.update({f"b.{k}": v for k, v in bwd.items()})
        return params

    @staticmethod
    def _split(params: dict):
        fwd = {k[2:]: v for k, v in params.items() if k.startswith("f.")}
        bwd = {k[2:]: v for k, v in params.items() if k.startswith("b.")}
        return fwd, bwd

    def forward(self, params, x, training=False, rng=None):
        fwd, bwd = self._split(params)
        states_f, cache_f = _cell_forward(fwd, x)
        states_b, cache_b = _cell_forward(bwd, x[:, ::-1])
        if self.return_sequences:
            out = np.concatenate([states_f, states_b[:, ::-1]], axis=2)
        else:
            out = np.concatenate([states_f[:, -1], states_b[:, -1]], axis=1)
        return out, (cache_f, cache_b)

    def backward(self, params, cache, grad_out):
        fwd, bwd = self._split(params)
        cache_f, cache_b = cache
        b, t = cache_f[0].shape[:2]
        h = self.hidden
        if self.return_sequences:
            d_f = grad_out[:, :, :h]
            d_b = grad_out[:, :, h:][:, ::-1]
        else:
            d_f = np.zeros((b, t, h))
            d_f[:, -1] = grad_out[:, :h]
            d_b = np.zeros((b, t, h))
            d_b[:, -1] = grad_out[:, h:]
        grads_f, dx_f = _cell_backward(fwd, cache_f, d_f)
        grads_b, dx_b = _cell_backward(bwd, cache_b, d_b)
        grads = {f"f.{k}": v for k, v in grads_f.items()}
        grads.update({f"b.{k}": v for k, v in grads_b.items()})
        return grads, dx_f + dx_b[:, ::-1]
