"""Feed-forward layers: dense, 1-D convolution, max-pooling, flatten,
dropout, and the activation functions they share.

Every layer follows one protocol. ``init_params(rng)`` draws the layer's
parameter dict (empty for parameter-free layers); ``forward(params, x,
training, rng)`` returns the output and a cache; ``backward(params,
cache, grad_out)`` returns the parameter-gradient dict and the gradient
with respect to the input. Layers are stateless: parameters live with
the model, so the same layer object can serve many parameter sets.

Shapes exclude the batch axis in ``out_shape``: sequence tensors are
(time, channels) and flat tensors are (features,). All arithmetic is
float64; gradients are exact enough for central finite-difference
checks at 1e-4 relative error.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError

__all__ = ["sigmoid", "relu", "glorot_uniform", "Dense", "Conv1D",
           "MaxPool1D", "Flatten", "Dropout"]


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function 1 / (1 + exp(-x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    """max(x, 0) elementwise."""
    return np.maximum(x, 0.0)


def glorot_uniform(rng: np.random.Generator, shape,
                   fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform init scaled by the layer's fan: U(-limit, limit) with
    limit = sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """Affine map plus activation on flat inputs: (B, D) -> (B, units)."""

    ACTIVATIONS = ("relu", "sigmoid", "linear")

    def __init__(self, units: int, activation: str = "linear"):
        if units < 1:
            raise ConfigError(f"dense units must be >= 1, got {units}")
        if activation not in self.ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}; "
                              f"expected one of {self.ACTIVATIONS}")
        self.units = units
        self.activation = activation
        self.in_dim: int | None = None

    def build(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 1:
            raise ConfigError(f"dense needs flat input, got shape "
                              f"{in_shape}; flatten or end the recurrent "
                              "stage first")
        self.in_dim = in_shape[0]
        return (self.units,)

    def init_params(self, rng: np.random.Generator) -> dict:
        return {
            "W": glorot_uniform(rng, (self.units, self.in_dim),
                                self.in_dim, self.units),
            "b": np.zeros(self.units),
        }

    def forward(self, params, x, training=False, rng=None):
        z = x @ params["W"].T + params["b"]
        if self.activation == "relu":
            out = relu(z)
        elif self.activation == "sigmoid":
            out = sigmoid(z)
        else:
            out = z
        return out, (x, out)

    def backward(self, params, cache, grad_out):
        x, out = cache
        if self.activation == "relu":
            dz = grad_out * (out > 0.0)
        elif self.activation == "sigmoid":
            dz = grad_out * out * (1.0 - out)
        else:
            dz = grad_out
        grads = {"W": dz.T @ x, "b": dz.sum(axis=0)}
        return grads, dz @ params["W"]


class Conv1D:
    """Valid 1-D convolution over time with ReLU:
    (B, T, C_in) -> (B, T - width + 1, channels)."""

    def __init__(self, channels: int, width: int):
        if channels < 1 or width < 1:
            raise ConfigError(f"conv1d needs positive channels and width, "
                              f"got ({channels}, {width})")
        self.channels = channels
        self.width = width
        self.in_channels: int | None = None

    def build(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 2:
            raise ConfigError(f"conv1d needs (time, channels) input, got "
                              f"shape {in_shape}")
        t, c = in_shape
        if t < self.width:
            raise ConfigError(f"conv1d width {self.width} exceeds the "
                              f"{t} available time steps")
        self.in_channels = c
        return (t - self.width + 1, self.channels)

    def init_params(self, rng: np.random.Generator) -> dict:
        fan_in = self.width * self.in_channels
        fan_out = self.width * self.channels
        return {
            "kernel": glorot_uniform(
                rng, (self.channels, self.width, self.in_channels),
                fan_in, fan_out),
            "b": np.zeros(self.channels),
        }

    def forward(self, params, x, training=False, rng=None):
        # windows[b, t, c, j] = x[b, t + j, c]
        windows = np.lib.stride_tricks.sliding_window_view(
            x, self.width, axis=1)
        z = np.einsum("btcj,ojc->bto", windows, params["kernel"],
                      optimize=True) + params["b"]
        out = relu(z)
        return out, (x, out)

    def backward(self, params, cache, grad_out):
        x, out = cache
        dz = grad_out * (out > 0.0)
        windows = np.lib.stride_tricks.sliding_window_view(
            x, self.width, axis=1)
        grads = {
            "kernel": np.einsum("bto,btcj->ojc", dz, windows,
                                optimize=True),
            "b": dz.sum(axis=(0, 1)),
        }
        dx = np.zeros_like(x)
        t_out = dz.shape[1]
        for j in range(self.width):
            # position j of every window reads input row t + j
            dx[:, j:j + t_out, :] += np.einsum(
                "bto,ojc->btc", dz, params["kernel"][:, j:j + 1, :],
                optimize=True)
        return grads, dx


class MaxPool1D:
    """Non-overlapping max over time: stride equals the pool width;
    a partial window at the tail is dropped."""

    def __init__(self, width: int):
        if width < 1:
            raise ConfigError(f"maxpool width must be >= 1, got {width}")
        self.width = width

    def build(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 2:
            raise ConfigError(f"maxpool needs (time, channels) input, got "
                              f"shape {in_shape}")
        t, c = in_shape
        if t < self.width:
            raise ConfigError(f"maxpool width {self.width} exceeds the "
                              f"{t} available time steps")
        return (t // self.width, c)

    def init_params(self, rng) -> dict:
        return {}

    def forward(self, params, x, training=False, rng=None):
        b, t, c = x.shape
        t_out = t // self.width
        blocks = x[:, :t_out * self.width].reshape(b, t_out, self.width, c)
        winners = blocks.argmax(axis=2)
        out = np.take_along_axis(blocks, winners[:, :, None, :],
                                 axis=2)[:, :, 0, :]
        return out, (x.shape, winners)

    def backward(self, params, cache, grad_out):
        (b, t, c), winners = cache
        t_out = t // self.width
        dblocks = np.zeros((b, t_out, self.width, c))
        np.put_along_axis(dblocks, winners[:, :, None, :],
                          grad_out[:, :, None, :], axis=2)
        dx = np.zeros((b, t, c))
        dx[:, :t_out * self.width] = dblocks.reshape(b, t_out * self.width, c)
        return {}, dx


class Flatten:
    """Collapse (B, T, C) to (B, T*C); flat input passes through."""

    def __init__(self):
        self.in_shape: tuple | None = None

    def build(self, in_shape: tuple) -> tuple:
        self.in_shape = in_shape
        return (int(np.prod(in_shape)),)

    def init_params(self, rng) -> dict:
        return {}

    def forward(self, params, x, training=False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, grad_out):
        return {}, grad_out.reshape(cache)


class Dropout:
    """Inverted dropout: in training, zero a fraction ``rate`` of the
    activations and scale the survivors by 1/(1-rate) so the expected
    activation is unchanged; in evaluation it is the identity."""

    def __init__(self, rate: float):
        if not 0.0 < rate < 1.0:
            raise ConfigError(f"dropout rate must be in (0, 1), got {rate}")
        self.rate = rate

    def build(self, in_shape: tuple) -> tuple:
        return in_shape

    def init_params(self, rng) -> dict:
        return {}

    def forward(self, params, x, training=False, rng=None):
        if not training:
            return x, None
        if rng is None:
            raise ConfigError("dropout in training mode needs an rng")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, params, cache, grad_out):
        if cache is None:
            return {}, grad_out
        return {}, grad_out * cache
