"""
Network training.

Mini-batch Adam on the mean squared error, with random rotations, flips and translations of
every training pair.
"""

from typing import Callable, List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from petrecon.errors import ConfigurationError, DimensionError, NumericalError
from petrecon.network.optim import AdamState, adam_step
from petrecon.network.unet import NetworkWeights, ResidualUNet, backward_weights
from petrecon.profile import measure_time


class TrainConfig(BaseModel):
    """
    Training hyper-parameters.

    Attributes:
        epochs: Passes over the training set
        batch_size: Pairs per Adam step
        learning_rate: Initial Adam step size
        beta1: Adam first-moment decay
        beta2: Adam second-moment decay
        eps: Adam denominator offset
        lr_decay: Multiplicative learning-rate factor applied after every epoch
        augment: Randomly rotate, flip and translate each pair
        max_shift: Largest translation in voxels
        seed: Seed of the shuffling and augmentation
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(40, ge=1)
    batch_size: int = Field(8, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    lr_decay: float = Field(1.0, gt=0, le=1)
    augment: bool = True
    max_shift: int = Field(4, ge=0)
    seed: int = 0


class TrainResult(BaseModel):
    """Trained weights and the mean training loss of every epoch."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: NetworkWeights
    loss_history: List[float]


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate the last two axes by whole voxels, filling with the edge values."""
    if dy == 0 and dx == 0:
        return a
    h, w = a.shape[-2:]
    py, px = abs(dy), abs(dx)
    padded = np.pad(a, [(0, 0)] * (a.ndim - 2) + [(py, py), (px, px)], mode="edge")
    return padded[..., py - dy : py - dy + h, px - dx : px - dx + w]


def augment_pair(x: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_shift: int):
    """
    Apply one random rotation, flip and translation to an input stack and its label.

    Args:
        x: Input ``(channels, h, w)``
        y: Label ``(1, h, w)``
        rng: Random generator
        max_shift: Largest translation in voxels

    Returns:
        tuple: The transformed ``(x, y)``
    """
    square = x.shape[-1] == x.shape[-2]
    k = int(rng.integers(4)) if square else 2 * int(rng.integers(2))
    flip_v, flip_h = bool(rng.integers(2)), bool(rng.integers(2))
    dy, dx = (int(v) for v in rng.integers(-max_shift, max_shift + 1, size=2))

    def transform(a):
        a = np.rot90(a, k, axes=(-2, -1))
        if flip_v:
            a = a[..., ::-1, :]
        if flip_h:
            a = a[..., :, ::-1]
        return np.ascontiguousarray(_shift(a, dy, dx))

    return transform(x), transform(y)


@measure_time(logger_instance=logger)
def train(
    net: ResidualUNet,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    progress: Optional[Callable[[int, float], None]] = None,
) -> TrainResult:
    """
    Train a network on input/label pairs.

    Args:
        net: Network to train; its weights are updated in place
        inputs: Inputs ``(n, 5, h, w)``
        labels: Labels ``(n, 1, h, w)``
        cfg: Training settings
        progress: Optional callback receiving ``(epoch, loss)`` after every epoch

    Returns:
        TrainResult: Final weights and loss history

    Raises:
        ConfigurationError: If there are no training pairs
        NumericalError: If the loss becomes non-finite
    """
    if len(inputs) == 0:
        raise ConfigurationError("Training set is empty")
    if len(inputs) != len(labels) or labels.shape[1] != 1 or inputs.shape[2:] != labels.shape[2:]:
        raise DimensionError(f"Inputs {inputs.shape} and labels {labels.shape} do not pair up")

    rng = np.random.default_rng(cfg.seed)
    state = AdamState(learning_rate=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    history: List[float] = []
    n = len(inputs)

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = inputs[idx], labels[idx]
            if cfg.augment:
                pairs = [augment_pair(xi, yi, rng, cfg.max_shift) for xi, yi in zip(xb, yb)]
                xb = np.stack([p[0] for p in pairs])
                yb = np.stack([p[1] for p in pairs])
            loss, grads = backward_weights(net, xb, yb)
            if not np.isfinite(loss):
                raise NumericalError(f"Training loss became non-finite in epoch {epoch}", {"epoch": epoch})
            adam_step(state, net.weights, grads)
            batch_losses.append(loss)

        epoch_loss = float(np.mean(batch_losses))
        history.append(epoch_loss)
        logger.debug(f"Epoch {epoch + 1}/{cfg.epochs}: loss {epoch_loss:.6g}, lr {state.learning_rate:.3g}")
        if progress is not None:
            progress(epoch, epoch_loss)
        state.learning_rate *= cfg.lr_decay

    logger.info(f"Trained {cfg.epochs} epochs on {n} pairs, final loss {history[-1]:.6g}")
    return TrainResult(weights=net.weights, loss_history=history)
