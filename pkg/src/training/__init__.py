"""Multi-task optimisation of the coding network."""

from src.training.losses import bce_loss, rdrop_loss, similarity_loss
from src.training.pipeline import PreparedData, TrainingArtifacts, prepare_data, train_run
from src.training.schedule import build_scheduler, lr_schedule
from src.training.trainer import (
    EpochResult,
    StepLosses,
    Trainer,
    TrainingBatch,
    TrainingError,
    TrainingResult,
    collate,
    compute_losses,
)

__all__ = [
    "bce_loss",
    "rdrop_loss",
    "similarity_loss",
    "PreparedData",
    "TrainingArtifacts",
    "prepare_data",
    "train_run",
    "build_scheduler",
    "lr_schedule",
    "EpochResult",
    "StepLosses",
    "Trainer",
    "TrainingBatch",
    "TrainingError",
    "TrainingResult",
    "collate",
    "compute_losses",
]
