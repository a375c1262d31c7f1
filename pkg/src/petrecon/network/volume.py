"""
Slice-stack helpers that apply the network to whole volumes.

Output slice ``k`` is computed from input slices ``k-2 .. k+2``; slices beyond the volume ends
repeat the first or last slice.
"""

import numpy as np

from petrecon.constants import CENTER_CHANNEL, NETWORK_IN_CHANNELS
from petrecon.errors import DimensionError
from petrecon.network.unet import ResidualUNet

DEFAULT_BATCH = 16


def neighbour_indices(n_slices: int) -> np.ndarray:
    """Slice index of every channel of every stack, shape ``(n_slices, 5)``."""
    offsets = np.arange(NETWORK_IN_CHANNELS) - CENTER_CHANNEL
    return np.clip(np.arange(n_slices)[:, None] + offsets[None, :], 0, n_slices - 1)


def stack_neighbours(volume: np.ndarray) -> np.ndarray:
    """
    Build the five-channel network input of every slice.

    Args:
        volume: Volume ``(nz, ny, nx)``

    Returns:
        np.ndarray: Stacks ``(nz, 5, ny, nx)``
    """
    if volume.ndim != 3 or volume.shape[0] < 1:
        raise DimensionError(f"Expected a volume (nz, ny, nx), got shape {volume.shape}")
    return np.ascontiguousarray(np.asarray(volume, dtype=np.float64)[neighbour_indices(volume.shape[0])])


def apply_volume(net: ResidualUNet, volume: np.ndarray, batch_size: int = DEFAULT_BATCH) -> np.ndarray:
    """Eval-mode network output for every slice of a volume, without clamping."""
    stacks = stack_neighbours(volume)
    out = np.empty(volume.shape, dtype=np.float64)
    for start in range(0, len(stacks), batch_size):
        out[start : start + batch_size] = net.forward(stacks[start : start + batch_size], "eval")[:, 0]
    return out


def denoise_volume(net: ResidualUNet, volume: np.ndarray, batch_size: int = DEFAULT_BATCH) -> np.ndarray:
    """Denoise a volume slice by slice; negative outputs are clamped to 0."""
    return np.maximum(apply_volume(net, volume, batch_size), 0.0)


def vjp_volume(
    net: ResidualUNet, volume: np.ndarray, cotangent: np.ndarray, batch_size: int = DEFAULT_BATCH
) -> np.ndarray:
    """
    Gradient of ``<apply_volume(net, volume), cotangent>`` with respect to ``volume``.

    The input gradient of each stack is scattered back to the slices its channels came from,
    channel by channel in a fixed order.

    Args:
        net: The network
        volume: Volume ``(nz, ny, nx)``
        cotangent: Output cotangent of the volume's shape

    Returns:
        np.ndarray: Volume-shaped gradient
    """
    if cotangent.shape != volume.shape:
        raise DimensionError(f"Cotangent shape {cotangent.shape} does not match volume {volume.shape}")
    stacks = stack_neighbours(volume)
    index = neighbour_indices(volume.shape[0])
    grad = np.zeros(volume.shape, dtype=np.float64)
    for start in range(0, len(stacks), batch_size):
        stop = start + batch_size
        net.forward(stacks[start:stop], "eval", update_stats=False)
        g = net.backward(np.asarray(cotangent[start:stop, None], dtype=np.float64))
        for c in range(NETWORK_IN_CHANNELS):
            np.add.at(grad, index[start:stop, c], g[:, c])
    return grad


def residual_gradient(
    net: ResidualUNet, volume: np.ndarray, target: np.ndarray, batch_size: int = DEFAULT_BATCH
) -> tuple:
    """
    Value and gradient of ``0.5 * ||apply_volume(net, volume) - target||^2``.

    Args:
        net: The network
        volume: Network input volume
        target: Target volume of the same shape

    Returns:
        tuple: ``(objective, gradient, output)``
    """
    if target.shape != volume.shape:
        raise DimensionError(f"Target shape {target.shape} does not match volume {volume.shape}")
    stacks = stack_neighbours(volume)
    index = neighbour_indices(volume.shape[0])
    out = np.empty(volume.shape, dtype=np.float64)
    grad = np.zeros(volume.shape, dtype=np.float64)
    for start in range(0, len(stacks), batch_size):
        stop = start + batch_size
        out[start:stop] = net.forward(stacks[start:stop], "eval", update_stats=False)[:, 0]
        g = net.backward((out[start:stop] - target[start:stop])[:, None])
        for c in range(NETWORK_IN_CHANNELS):
            np.add.at(grad, index[start:stop, c], g[:, c])
    objective = 0.5 * float(np.sum((out - target) ** 2))
    return objective, grad, out
