"""
Lesion-difference evaluation: reconstructions with and without inserted lesions are subtracted.
"""

from typing import Sequence

import numpy as np

from petrecon.errors import DimensionError
from petrecon.evaluation.metrics import contrast_recovery
from petrecon.evaluation.roi import RoiSpec


def lesion_difference(recon_with: np.ndarray, recon_without: np.ndarray) -> np.ndarray:
    """Elementwise ``recon_with - recon_without``."""
    if recon_with.shape != recon_without.shape:
        raise DimensionError(f"Volumes differ in shape: {recon_with.shape} vs {recon_without.shape}")
    return np.asarray(recon_with, dtype=np.float64) - np.asarray(recon_without, dtype=np.float64)


def lesion_difference_cr(
    recons_with: Sequence[np.ndarray], recons_without: Sequence[np.ndarray], lesion_mask: np.ndarray, a_true: float
) -> float:
    """
    Contrast recovery of the lesion-only difference images against the inserted activity.

    Args:
        recons_with: Reconstructions of the data with lesions, one per realization
        recons_without: Reconstructions of the same realizations without lesions
        lesion_mask: Voxels of the inserted lesions
        a_true: Mean inserted activity over ``lesion_mask``
    """
    if len(recons_with) != len(recons_without):
        raise DimensionError("Need one lesion-free reconstruction per reconstruction with lesions")
    differences = np.stack([lesion_difference(w, wo) for w, wo in zip(recons_with, recons_without)])
    roi = RoiSpec(lesion_mask=lesion_mask, a_true=a_true, background_masks=[])
    return contrast_recovery(differences, roi)
