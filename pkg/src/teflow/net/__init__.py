"""From-scratch float64 neural stack for direction classification:
recurrent and convolutional layers, binary cross-entropy, AMSGrad,
early-stopped training, presets D1-D5, and the experiment grid runner.
"""

from .layers import (Conv1D, Dense, Dropout, Flatten, MaxPool1D,
                     glorot_uniform, relu, sigmoid)
from .lstm import BiLstm, Lstm, LstmParams, lstm_forward, orthogonal_matrix
from .loss import PROB_CLAMP, bce_grad, bce_loss
from .optim import AmsGrad, AmsGradState, adam_amsgrad_step
from .model import (Model, NetworkSpec, PRESET_NAMES, preset,
                    read_checkpoint, spec_from_string, spec_to_string,
                    write_checkpoint)
from .train import (BATCH_GRID, DROPOUT_GRID, LEARNING_RATE_GRID,
                    TrainConfig, TrainedModel, binary_accuracy, train)
from .experiment import (ExperimentPlan, ExperimentResult, ExperimentRow,
                         TABLE_COLUMNS, run_experiment, run_key,
                         write_experiment_tables)

__all__ = [
    "Conv1D", "Dense", "Dropout", "Flatten", "MaxPool1D",
    "glorot_uniform", "relu", "sigmoid",
    "BiLstm", "Lstm", "LstmParams", "lstm_forward", "orthogonal_matrix",
    "PROB_CLAMP", "bce_grad", "bce_loss",
    "AmsGrad", "AmsGradState", "adam_amsgrad_step",
    "Model", "NetworkSpec", "PRESET_NAMES", "preset", "read_checkpoint",
    "spec_from_string", "spec_to_string", "write_checkpoint",
    "BATCH_GRID", "DROPOUT_GRID", "LEARNING_RATE_GRID", "TrainConfig",
    "TrainedModel", "binary_accuracy", "train",
    "ExperimentPlan", "ExperimentResult", "ExperimentRow", "TABLE_COLUMNS",
    "run_experiment", "run_key", "write_experiment_tables",
]
