"""
Contrast recovery and background noise over a set of noise realizations.
"""

from typing import Sequence, Union

import numpy as np

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.evaluation.roi import RoiSpec

Realizations = Union[np.ndarray, Sequence[np.ndarray]]


def _as_stack(realizations: Realizations, shape) -> np.ndarray:
    stack = np.asarray(realizations, dtype=np.float64)
    if stack.ndim != 4 or stack.shape[1:] != shape:
        raise DimensionError(f"Expected realizations of shape (R, {shape}), got {stack.shape}")
    return stack


def lesion_means(realizations: Realizations, roi: RoiSpec) -> np.ndarray:
    """Mean over the lesion voxels of every realization."""
    if not roi.lesion_mask.any():
        raise ConfigurationError("Lesion mask is empty")
    stack = _as_stack(realizations, roi.lesion_mask.shape)
    return stack[:, roi.lesion_mask].mean(axis=1)


def contrast_recovery_per_realization(realizations: Realizations, roi: RoiSpec) -> np.ndarray:
    """Lesion mean divided by the true activity, one value per realization."""
    return lesion_means(realizations, roi) / roi.a_true


def contrast_recovery(realizations: Realizations, roi: RoiSpec) -> float:
    """
    Contrast recovery ``(1/R) sum_r a_r / a_true``.

    Args:
        realizations: Reconstructions ``(R, nz, ny, nx)``
        roi: Regions of interest

    Returns:
        float: The contrast recovery

    Raises:
        ConfigurationError: If the lesion mask is empty
    """
    return float(np.mean(contrast_recovery_per_realization(realizations, roi)))


def background_std(realizations: Realizations, roi: RoiSpec) -> float:
    """
    Background noise ``(1/K) sum_k std_r(b_rk) / mean_r(b_rk)`` with the ``R - 1`` denominator.

    Args:
        realizations: Reconstructions ``(R, nz, ny, nx)``
        roi: Regions of interest

    Returns:
        float: The normalised background standard deviation

    Raises:
        ConfigurationError: If there are fewer than two realizations or no background ROI
    """
    stack = _as_stack(realizations, roi.lesion_mask.shape)
    if stack.shape[0] < 2:
        raise ConfigurationError("Background STD needs at least two realizations")
    if roi.n_background == 0:
        raise ConfigurationError("No background ROIs")
    means = np.stack([stack[:, mask].mean(axis=1) for mask in roi.background_masks], axis=1)
    return float(np.mean(means.std(axis=0, ddof=1) / means.mean(axis=0)))
