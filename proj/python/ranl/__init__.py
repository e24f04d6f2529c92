"""Python bindings for the r-ANL video question answering core."""

from ._core import (
    Checkpoint,
    Dataset,
    ModelConfig,
    RanlError,
    TrainConfig,
    adagrad_update,
    gradcheck,
    load_checkpoint,
    load_dataset,
    positional_score,
    run,
    synth,
    train,
    write_dataset,
)

__all__ = [
    "Checkpoint",
    "Dataset",
    "ModelConfig",
    "RanlError",
    "TrainConfig",
    "adagrad_update",
    "gradcheck",
    "load_checkpoint",
    "load_dataset",
    "positional_score",
    "run",
    "synth",
    "train",
    "write_dataset",
]
