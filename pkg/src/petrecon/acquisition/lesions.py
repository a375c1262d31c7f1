"""
Lesion-only activity for data-domain lesion insertion.
"""

from typing import Sequence

import numpy as np
from scipy import stats

from petrecon.constants import DEFAULT_LESION_INTENSITY_CV
from petrecon.errors import ConfigurationError, DomainError
from petrecon.image.volume import LabelVolume


def lesion_intensity_factors(count: int, cv: float, seed: int) -> np.ndarray:
    """Per-lesion activity factors with mean 1 and the given coefficient of variation, truncated at 0."""
    if cv < 0:
        raise DomainError(f"Coefficient of variation must be non-negative, got {cv}")
    if cv == 0 or count == 0:
        return np.ones(count, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return stats.truncnorm(-1.0 / cv, np.inf, loc=1.0, scale=cv).rvs(size=count, random_state=rng)


def lesion_only_activity(
    labels: LabelVolume,
    lesion_labels: Sequence[int],
    with_lesions: np.ndarray,
    without_lesions: np.ndarray,
    cv: float = DEFAULT_LESION_INTENSITY_CV,
    seed: int = 0,
) -> np.ndarray:
    """
    Activity that lesions add on top of the lesion-free phantom.

    Each lesion's excess activity ``with - without`` is scaled by its own random intensity factor.

    Args:
        labels: Label volume of the phantom with lesions
        lesion_labels: Labels of the lesions
        with_lesions: Activity of the phantom with lesions
        without_lesions: Activity of the same phantom without lesions
        cv: Coefficient of variation of the lesion intensity
        seed: Seed of the intensity factors

    Returns:
        np.ndarray: Non-negative lesion-only activity, zero outside the lesions
    """
    if with_lesions.shape != labels.grid.shape or without_lesions.shape != labels.grid.shape:
        raise ConfigurationError("Activity volumes must match the label grid")

    excess = np.clip(with_lesions - without_lesions, 0.0, None)
    factors = lesion_intensity_factors(len(lesion_labels), cv, seed)
    out = np.zeros(labels.grid.shape, dtype=np.float64)
    for factor, label in zip(factors, lesion_labels):
        mask = labels.mask(label)
        out[mask] = excess[mask] * factor
    return out
