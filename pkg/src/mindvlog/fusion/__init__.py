"""Multimodal fusion transformer, losses and gradient verification."""

from .gradcheck import gradient_check
from .losses import BCE_EPS, bce_loss, contrastive_loss, masked_reconstruction_loss
from .model import (
    MODALITIES,
    FusedRepresentation,
    FusionConfig,
    FusionModel,
    classify,
    decision,
    sigmoid_prob,
)

__all__ = [
    "BCE_EPS",
    "MODALITIES",
    "FusedRepresentation",
    "FusionConfig",
    "FusionModel",
    "bce_loss",
    "classify",
    "contrastive_loss",
    "decision",
    "gradient_check",
    "masked_reconstruction_loss",
    "sigmoid_prob",
]
