"""Network assembly: layer descriptors, preset architectures, parameter
initialization, whole-model forward/backward, and checkpoint files.

A :class:`NetworkSpec` is an ordered tuple of layer descriptors:

    ("lstm", hidden)            ("bilstm", hidden)
    ("conv1d", channels, width) ("maxpool", width)
    ("flatten",)                ("dense", units, activation)
    ("dropout", rate)

The final layer must be ``("dense", 1, "sigmoid")`` — one probability
per sample. A recurrent layer whose next shape-consuming layer is dense
emits only its final state (the dense stage reads one vector per
sample); otherwise it emits the full state sequence for the next
sequence layer. Dropout is shape-transparent and never affects that
inference.

Presets name the five studied designs: two unidirectional recurrent
networks (deep D1, wide D2), their bidirectional counterparts (D3, D4),
and a convolutional network (D5). Their dropout rate is a
hyperparameter filled in at construction.

Checkpoints are plain text: a keyed header followed by one block per
tensor holding base-10 float64 values in row-major order, so files diff
cleanly and round-trip bit-exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from ..textio import format_float
from .layers import Conv1D, Dense, Dropout, Flatten, MaxPool1D
from .lstm import BiLstm, Lstm

__all__ = ["NetworkSpec", "PRESET_NAMES", "preset", "Model",
           "spec_to_string", "spec_from_string", "write_checkpoint",
           "read_checkpoint"]

PRESET_NAMES = ("D1", "D2", "D3", "D4", "D5")

_SEQUENCE_KINDS = ("lstm", "bilstm", "conv1d", "maxpool")
_KINDS = _SEQUENCE_KINDS + ("flatten", "dense", "dropout")


def _normalize(descriptor) -> tuple:
    if isinstance(descriptor, str):
        descriptor = (descriptor,)
    descriptor = tuple(descriptor)
    if not descriptor or descriptor[0] not in _KINDS:
        raise ConfigError(f"unknown layer descriptor {descriptor!r}; "
                          f"kinds are {_KINDS}")
    kind = descriptor[0]
    args = descriptor[1:]
    expected = {"lstm": 1, "bilstm": 1, "conv1d": 2, "maxpool": 1,
                "flatten": 0, "dense": 2, "dropout": 1}[kind]
    if len(args) != expected:
        raise ConfigError(f"layer {kind!r} takes {expected} argument(s), "
                          f"got {descriptor!r}")
    if kind == "dropout":
        return (kind, float(args[0]))
    if kind == "dense":
        return (kind, int(args[0]), str(args[1]))
    return (kind,) + tuple(int(a) for a in args)


class NetworkSpec:
    """Validated, immutable stack of layer descriptors."""

    def __init__(self, layers, preset: str | None = None):
        self.layers = tuple(_normalize(d) for d in layers)
        self.preset = preset
        if not self.layers:
            raise ConfigError("network needs at least one layer")
        if self.layers[-1] != ("dense", 1, "sigmoid"):
            raise ConfigError("the last layer must be dense(1, sigmoid) "
                              f"for a probability output, got "
                              f"{self.layers[-1]!r}")
        for d in self.layers:
            if d[0] == "dropout" and not 0.0 < d[1] < 1.0:
                raise ConfigError(f"dropout rate must be in (0, 1), "
                                  f"got {d[1]}")
        if preset is not None and preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {preset!r}; "
                              f"expected one of {PRESET_NAMES}")

    def __eq__(self, other):
        return (isinstance(other, NetworkSpec)
                and self.layers == other.layers)

    def __repr__(self):
        return f"NetworkSpec({spec_to_string(self)!r})"


def preset(name: str, dropout: float = 0.5) -> NetworkSpec:
    """One of the five studied designs with the given dropout rate."""
    stacks = {
        # deep recurrent: two stacked cells
        "D1": [("lstm", 32), ("dropout", dropout), ("lstm", 32),
               ("dense", 1, "sigmoid")],
        # wide recurrent: one large cell
        "D2": [("lstm", 128), ("dropout", dropout),
               ("dense", 1, "sigmoid")],
        "D3": [("bilstm", 32), ("dropout", dropout), ("bilstm", 32),
               ("dense", 1, "sigmoid")],
        "D4": [("bilstm", 128), ("dropout", dropout),
               ("dense", 1, "sigmoid")],
        # convolutional: two conv/pool stages and a hidden dense layer
        "D5": [("conv1d", 64, 3), ("maxpool", 2), ("conv1d", 32, 3),
               ("maxpool", 2), ("flatten",), ("dense", 64, "relu"),
               ("dropout", dropout), ("dense", 1, "sigmoid")],
    }
    if name not in stacks:
        raise ConfigError(f"unknown preset {name!r}; "
                          f"expected one of {PRESET_NAMES}")
    return NetworkSpec(stacks[name], preset=name)


def spec_to_string(spec: NetworkSpec) -> str:
    """Compact one-line form, e.g. 'lstm(32)|dropout(0.5)|dense(1,sigmoid)'."""
    parts = []
    for d in spec.layers:
        if len(d) == 1:
            parts.append(d[0])
        else:
            args = ",".join(format_float(a) if isinstance(a, float)
                            else str(a) for a in d[1:])
            parts.append(f"{d[0]}({args})")
    return "|".join(parts)


def spec_from_string(text: str, preset_name: str | None = None) -> NetworkSpec:
    layers = []
    for part in text.strip().split("|"):
        part = part.strip()
        if "(" in part:
            if not part.endswith(")"):
                raise ConfigError(f"malformed layer {part!r}")
            kind, args = part[:-1].split("(", 1)
            toks = [a.strip() for a in args.split(",")] if args else []
            conv = []
            for tok in toks:
                if tok.isalpha():
                    conv.append(tok)
                    continue
                try:
                    conv.append(float(tok) if ("." in tok or "e" in tok
                                               or "E" in tok) else int(tok))
                except ValueError:
                    raise ConfigError(f"malformed layer argument {tok!r} "
                                      f"in {part!r}") from None
            layers.append((kind.strip(),) + tuple(conv))
        else:
            layers.append((part,))
    return NetworkSpec(layers, preset=preset_name)


def _needs_sequence(layers: tuple, index: int) -> bool:
    """Whether the recurrent layer at ``index`` must emit full sequences:
    true when the next shape-consuming layer is itself a sequence layer
    or a flatten; false when it is dense (which reads one vector)."""
    for d in layers[index + 1:]:
        if d[0] == "dropout":
            continue
        if d[0] == "dense":
            return False
        return True
    return False


class Model:
    """A spec bound to an input shape, with parameters and both passes."""

    def __init__(self, spec: NetworkSpec, input_shape: tuple,
                 init_seed: int | None = 0):
        if len(input_shape) != 2:
            raise ConfigError(f"input shape must be (window, features), "
                              f"got {input_shape}")
        self.spec = spec
        self.input_shape = (int(input_shape[0]), int(input_shape[1]))
        self.layers = []
        shape = self.input_shape
        for idx, d in enumerate(spec.layers):
            kind = d[0]
            if kind == "lstm":
                layer = Lstm(d[1], _needs_sequence(spec.layers, idx))
            elif kind == "bilstm":
                layer = BiLstm(d[1], _needs_sequence(spec.layers, idx))
            elif kind == "conv1d":
                layer = Conv1D(d[1], d[2])
            elif kind == "maxpool":
                layer = MaxPool1D(d[1])
            elif kind == "flatten":
                layer = Flatten()
            elif kind == "dense":
                layer = Dense(d[1], d[2])
            else:
                layer = Dropout(d[1])
            try:
                shape = layer.build(shape)
            except ConfigError as exc:
                raise ConfigError(f"layer {idx} ({kind}): {exc}") from None
            self.layers.append(layer)
        self.output_shape = shape
        rng = (np.random.default_rng(init_seed)
               if init_seed is not None else None)
        self.params = []
        for layer in self.layers:
            if rng is None:
                # Zero-filled placeholders, e.g. before a checkpoint load.
                built = layer.init_params(np.random.default_rng(0))
                self.params.append({k: np.zeros_like(v)
                                    for k, v in built.items()})
            else:
                self.params.append(layer.init_params(rng))

    @property
    def n_parameters(self) -> int:
        return sum(v.size for layer in self.params for v in layer.values())

    def forward(self, batch: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None):
        """Probabilities (B,) plus the caches backward needs."""
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 3 or x.shape[1:] != self.input_shape:
            raise DataError(f"batch shape {x.shape} does not match input "
                            f"shape (B, {self.input_shape[0]}, "
                            f"{self.input_shape[1]})")
        caches = []
        for idx, (layer, params) in enumerate(zip(self.layers, self.params)):
            x, cache = layer.forward(params, x, training=training, rng=rng)
            if not np.all(np.isfinite(x)):
                raise NumericError(
                    f"non-finite activations after layer {idx} "
                    f"({self.spec.layers[idx][0]})")
            caches.append(cache)
        return x[:, 0], caches

    def backward(self, caches, dprobs: np.ndarray):
        """Parameter gradients for a batch, given d(loss)/d(probability)."""
        grad = np.asarray(dprobs, dtype=np.float64)[:, None]
        grads = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            grads[idx], grad = layer.backward(self.params[idx],
                                              caches[idx], grad)
        return grads

    def predict(self, batch: np.ndarray) -> np.ndarray:
        """Deterministic evaluation-mode probabilities (B,)."""
        return self.forward(batch, training=False)[0]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def write_checkpoint(model: Model, path, extra: dict | None = None) -> None:
    """Keyed header plus named row-major float64 tensor blocks."""
    header = {
        "format": "teflow-checkpoint/1",
        "spec": spec_to_string(model.spec),
        "window": model.input_shape[0],
        "n_features": model.input_shape[1],
    }
    if model.spec.preset:
        header["preset"] = model.spec.preset
    for key, value in (extra or {}).items():
        if key in header:
            raise DataError(f"extra header key {key!r} collides")
        header[key] = value
    names = [(f"layer{i}.{key}", tensor)
             for i, layer in enumerate(model.params)
             for key, tensor in sorted(layer.items())]
    header["n_tensors"] = len(names)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# teflow model checkpoint\n")
        for key, value in header.items():
            fh.write(f"{key} = {value}\n")
        for name, tensor in names:
            dims = " ".join(str(d) for d in tensor.shape)
            fh.write(f"\ntensor {name} {dims}\n")
            rows = tensor.reshape(-1, tensor.shape[-1]) \
                if tensor.ndim > 1 else tensor[None]
            for row in rows:
                fh.write(" ".join(format_float(v) for v in row) + "\n")


def read_checkpoint(path):
    """Rebuild (model, header) from :func:`write_checkpoint` output."""
    header: dict = {}
    tensors: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line or line.startswith("#"):
            i += 1
            continue
        if line.startswith("tensor "):
            parts = line.split()
            name, dims = parts[1], tuple(int(d) for d in parts[2:])
            n_rows = int(np.prod(dims[:-1])) if len(dims) > 1 else 1
            block = lines[i + 1:i + 1 + n_rows]
            values = np.array([[float(v) for v in row.split()]
                               for row in block])
            if values.size != int(np.prod(dims)):
                raise DataError(f"{path}: tensor {name} block has "
                                f"{values.size} values, shape {dims} "
                                f"needs {int(np.prod(dims))}")
            tensors[name] = values.reshape(dims)
            i += 1 + n_rows
            continue
        if "=" not in line:
            raise DataError(f"{path}: unexpected line {line!r}")
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
        i += 1
    for key in ("format", "spec", "window", "n_features", "n_tensors"):
        if key not in header:
            raise DataError(f"{path}: checkpoint header misses {key!r}")
    if header["format"] != "teflow-checkpoint/1":
        raise DataError(f"{path}: unsupported format {header['format']!r}")
    if len(tensors) != int(header["n_tensors"]):
        raise DataError(f"{path}: expected {header['n_tensors']} tensors, "
                        f"found {len(tensors)}")
    spec = spec_from_string(header["spec"], header.get("preset"))
    model = Model(spec, (int(header["window"]), int(header["n_features"])),
                  init_seed=None)
    for i_layer, layer in enumerate(model.params):
        for key, tensor in layer.items():
            name = f"layer{i_layer}.{key}"
            if name not in tensors:
                raise DataError(f"{path}: missing tensor {name}")
            if tensors[name].shape != tensor.shape:
                raise DataError(f"{path}: tensor {name} has shape "
                                f"{tensors[name].shape}, model expects "
                                f"{tensor.shape}")
            tensor[...] = tensors[name]
    return model, header
