"""
Poisson log-likelihood and the EM update.
"""

import numpy as np

from petrecon.errors import DimensionError
from petrecon.scanner.projector import SystemMatrix


def expected_counts(system: SystemMatrix, x: np.ndarray, s: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Mean of the data ``P x + s + r``."""
    return system.forward(x) + s + r


def loglik_from_mean(y: np.ndarray, y_bar: np.ndarray) -> float:
    """
    ``sum(y log y_bar - y_bar)``, without the constant ``log y!``.

    Returns ``-inf`` when a bin with counts has zero mean.
    """
    if y.shape != y_bar.shape:
        raise DimensionError(f"Counts {y.shape} and means {y_bar.shape} differ in shape")
    positive = y > 0
    if np.any(y_bar[positive] <= 0):
        return float("-inf")
    return float(np.sum(y[positive] * np.log(y_bar[positive])) - np.sum(y_bar))


def poisson_loglik(y: np.ndarray, system: SystemMatrix, x: np.ndarray, s: np.ndarray, r: np.ndarray) -> float:
    """
    Poisson log-likelihood of an image.

    Args:
        y: Measured counts
        system: System matrix
        x: Non-negative image
        s: Expected scatters
        r: Expected randoms

    Returns:
        float: The log-likelihood, ``-inf`` if a bin with counts has zero mean
    """
    return loglik_from_mean(y, expected_counts(system, x, s, r))


def em_update(y: np.ndarray, system: SystemMatrix, x: np.ndarray, s: np.ndarray, r: np.ndarray) -> np.ndarray:
    """
    One EM update ``x_j / p_j * sum_i P_ij y_i / y_bar_i``.

    Bins with zero mean contribute nothing; voxels with zero sensitivity are set to 0.

    Args:
        y: Measured counts
        system: System matrix
        x: Current image, positive where the sensitivity is positive
        s: Expected scatters
        r: Expected randoms

    Returns:
        np.ndarray: The updated image
    """
    y_bar = expected_counts(system, x, s, r)
    ratio = np.divide(y, y_bar, out=np.zeros_like(y_bar), where=y_bar > 0)
    p = system.sensitivity
    return np.divide(x * system.back(ratio), p, out=np.zeros_like(x, dtype=np.float64), where=p > 0)


def initial_image(y: np.ndarray, system: SystemMatrix) -> np.ndarray:
    """Uniform image ``sum(y) / sum(p)`` on voxels with positive sensitivity."""
    p = system.sensitivity
    total = float(p.sum())
    value = float(np.sum(y)) / total if total > 0 else 0.0
    if value <= 0:
        value = 1.0
    return np.where(p > 0, value, 0.0)
