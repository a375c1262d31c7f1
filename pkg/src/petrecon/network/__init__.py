"""
Network module.

This module provides the residual U-net, its training and the volume helpers that apply it
slice by slice.
"""

from petrecon.network.layers import BatchNorm2d, Conv2d, ConvTranspose2d, ReLU
from petrecon.network.optim import AdamState, adam_step
from petrecon.network.training import TrainConfig, TrainResult, augment_pair, train
from petrecon.network.unet import (
    NetworkConfig,
    NetworkWeights,
    ResidualUNet,
    backward_weights,
    forward,
    l2_loss,
    vjp_input,
)
from petrecon.network.volume import (
    apply_volume,
    denoise_volume,
    neighbour_indices,
    residual_gradient,
    stack_neighbours,
    vjp_volume,
)

__all__ = [
    "AdamState",
    "BatchNorm2d",
    "Conv2d",
    "ConvTranspose2d",
    "NetworkConfig",
    "NetworkWeights",
    "ReLU",
    "ResidualUNet",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "apply_volume",
    "augment_pair",
    "backward_weights",
    "denoise_volume",
    "forward",
    "l2_loss",
    "neighbour_indices",
    "residual_gradient",
    "stack_neighbours",
    "train",
    "vjp_input",
    "vjp_volume",
]
