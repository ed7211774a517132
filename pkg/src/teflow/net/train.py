"""Mini-batch training with early stopping on validation accuracy.

Each epoch shuffles the training samples (seeded), steps the optimizer
once per batch, then scores train and validation sets in evaluation
mode. Training stops when the validation binary accuracy has not
improved for ``patience`` consecutive epochs; the parameters from the
best epoch are restored, so the returned model is the one that scored
highest on validation, not the last one visited.

All randomness — initialization, batch order, dropout masks — fans out
from the run seed through independent SeedSequence children, making a
run a pure function of (spec, dataset, config).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from .loss import bce_grad, bce_loss
from .model import Model, NetworkSpec
from .optim import AmsGrad

__all__ = ["BATCH_GRID", "LEARNING_RATE_GRID", "DROPOUT_GRID",
           "TrainConfig", "TrainedModel", "binary_accuracy", "train"]

# The studied hyperparameter grids.
BATCH_GRID = (32, 64, 128, 256)
LEARNING_RATE_GRID = (0.001, 0.0001)
DROPOUT_GRID = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class TrainConfig:
    """One run's hyperparameters."""

    batch: int = 32
    learning_rate: float = 0.001
    dropout: float = 0.5
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got "
                              f"{self.learning_rate}")
        if not 0.0 < self.dropout < 1.0:
            raise ConfigError(f"dropout must be in (0, 1), got "
                              f"{self.dropout}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got "
                              f"{self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")


@dataclass
class TrainedModel:
    """A trained network with its optimizer state and epoch history."""

    model: Model
    config: TrainConfig
    optimizer_state: object
    history: dict
    best_epoch: int

    @property
    def spec(self) -> NetworkSpec:
        return self.model.spec

    @property
    def params(self):
        return self.model.params

    @property
    def n_epochs(self) -> int:
        return len(self.history["val_accuracy"])

    def predict(self, batch: np.ndarray) -> np.ndarray:
        return self.model.predict(batch)


def binary_accuracy(probabilities, labels) -> float:
    """Fraction of samples on the right side of the 0.5 threshold."""
    p = np.asarray(probabilities)
    y = np.asarray(labels)
    return float(np.mean((p >= 0.5) == (y == 1)))


def _score(model: Model, x: np.ndarray, y: np.ndarray,
           eval_batch: int = 512):
    """Evaluation-mode loss and accuracy, streamed in chunks."""
    probs = np.concatenate([model.predict(x[i:i + eval_batch])
                            for i in range(0, len(x), eval_batch)])
    return bce_loss(probs, y), binary_accuracy(probs, y)


def train(spec: NetworkSpec, ds, cfg: TrainConfig) -> TrainedModel:
    """Fit the network on the dataset's train split, early-stopped on
    its validation split. Deterministic given the config seed."""
    if ds.split is None:
        raise DataError("dataset has no split; split it before training")
    x_train, y_train = ds.part("train")
    x_val, y_val = ds.part("val")
    root = np.random.SeedSequence(cfg.seed)
    init_ss, shuffle_ss, dropout_ss = root.spawn(3)
    model = Model(spec, ds.windows.shape[1:], init_seed=init_ss)
    optimizer = AmsGrad(model.params, lr=cfg.learning_rate)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)

    history = {"train_loss": [], "train_accuracy": [],
               "val_loss": [], "val_accuracy": []}
    best_accuracy = -np.inf
    best_epoch = 0
    best_params = None
    stale = 0
    n = len(x_train)
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, cfg.batch):
            rows = order[start:start + cfg.batch]
            try:
                probs, caches = model.forward(x_train[rows], training=True,
                                              rng=dropout_rng)
            except NumericError as exc:
                raise NumericError(f"training diverged at epoch {epoch}: "
                                   f"{exc}") from None
            grads = model.backward(caches, bce_grad(probs, y_train[rows]))
            optimizer.step(model.params, grads)
        train_loss, train_accuracy = _score(model, x_train, y_train)
        val_loss, val_accuracy = _score(model, x_val, y_val)
        if not np.isfinite(train_loss) or not np.isfinite(val_loss):
            raise NumericError(f"training diverged at epoch {epoch}: "
                               "non-finite loss")
        history["train_loss"].append(train_loss)
        history["train_accuracy"].append(train_accuracy)
        history["val_loss"].append(val_loss)
        history["val_accuracy"].append(val_accuracy)
        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best_epoch = epoch
            best_params = [{k: v.copy() for k, v in layer.items()}
                           for layer in model.params]
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    for layer, saved in zip(model.params, best_params):
        for key in layer:
            layer[key][...] = saved[key]
    return TrainedModel(model, cfg, optimizer.state, history, best_epoch)
