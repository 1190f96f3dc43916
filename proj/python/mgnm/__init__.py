"""Multi-grained sequential recommender: Python surface over the C++ core."""

from ._mgnm import (
    DatasetSplit,
    Hyperparameters,
    MetricsReport,
    ModelParameters,
    TrainResult,
    evaluate,
    generate_synthetic,
    grad_check_op,
    leaky_relu,
    load_checkpoint,
    load_split,
    matmul,
    mix_seed,
    save_checkpoint,
    save_split,
    sigmoid,
    softmax,
    squash,
    train,
    truncated_normal,
)

__all__ = [
    "DatasetSplit",
    "Hyperparameters",
    "MetricsReport",
    "ModelParameters",
    "TrainResult",
    "evaluate",
    "generate_synthetic",
    "grad_check_op",
    "leaky_relu",
    "load_checkpoint",
    "load_split",
    "matmul",
    "mix_seed",
    "save_checkpoint",
    "save_split",
    "sigmoid",
    "softmax",
    "squash",
    "train",
    "truncated_normal",
]
