from .checkpoint import checkpoint_hash, load_checkpoint, save_checkpoint
from .model import (
    Batch,
    ModelConfig,
    PotentialModel,
    cutoff_envelope,
    neighbor_pairs,
    predict_batch,
    rbf_expand,
    shifted_softplus,
)
from .scaler import SpeciesScaler, fit_species_scaler
from .training import TrainConfig, TrainResult, lr_for_epoch, train

__all__ = [
    "Batch",
    "ModelConfig",
    "PotentialModel",
    "SpeciesScaler",
    "TrainConfig",
    "TrainResult",
    "checkpoint_hash",
    "cutoff_envelope",
    "fit_species_scaler",
    "load_checkpoint",
    "lr_for_epoch",
    "neighbor_pairs",
    "predict_batch",
    "rbf_expand",
    "save_checkpoint",
    "shifted_softplus",
    "train",
]
