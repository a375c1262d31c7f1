"""
Acquisition simulation.

This module turns activity volumes into Poisson sinograms with a uniform scatter and randoms
background, and provides binomial count thinning and data-domain lesion insertion.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from petrecon.constants import DEFAULT_BACKGROUND_FRACTION, DEFAULT_TRUE_COUNTS
from petrecon.errors import ConfigurationError, DimensionError, DomainError
from petrecon.profile import measure_time
from petrecon.scanner.projector import SystemMatrix


class AcquisitionConfig(BaseModel):
    """
    Count level and background of a simulated acquisition.

    Attributes:
        target_true_counts: Expected true coincidences per slice
        background_fraction: Share of scatters plus randoms in the noise-free prompts
        seed: Seed of the Poisson draw
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    target_true_counts: int = Field(DEFAULT_TRUE_COUNTS, gt=0)
    background_fraction: float = Field(DEFAULT_BACKGROUND_FRACTION, ge=0, lt=1)
    seed: int = 0


class MeanComponents(BaseModel):
    """
    Expected values behind a simulated sinogram.

    Attributes:
        trues: Expected trues ``P x`` of the scaled activity
        scatters: Expected scatters ``s`` per bin
        randoms: Expected randoms ``r`` per bin
        activity_scale: Factor applied to the input activity to reach the target count level
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trues: np.ndarray
    scatters: np.ndarray
    randoms: np.ndarray
    activity_scale: float

    @property
    def background(self) -> np.ndarray:
        return self.scatters + self.randoms

    @property
    def prompts(self) -> np.ndarray:
        return self.trues + self.scatters + self.randoms

    def scaled(self, ratio: float) -> "MeanComponents":
        """Means of the data after thinning by ``ratio``."""
        return MeanComponents(
            trues=self.trues * ratio,
            scatters=self.scatters * ratio,
            randoms=self.randoms * ratio,
            activity_scale=self.activity_scale * ratio,
        )


def _per_slice(n_slices: int, draw: Callable[[int], np.ndarray], workers: Optional[int]) -> np.ndarray:
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slices = list(pool.map(draw, range(n_slices)))
    else:
        slices = [draw(k) for k in range(n_slices)]
    return np.stack(slices).astype(np.float64)


@measure_time(logger_instance=logger)
def simulate_counts(
    system: SystemMatrix, x: np.ndarray, cfg: AcquisitionConfig, workers: Optional[int] = None
) -> tuple:
    """
    Simulate a Poisson sinogram of an activity volume.

    The activity is scaled so that the expected trues of the whole volume equal
    ``target_true_counts`` per slice; the background is uniform over all bins and split evenly
    into scatters and randoms.

    Args:
        system: System matrix
        x: Non-negative activity volume
        cfg: Acquisition settings
        workers: Thread count for the per-slice draws

    Returns:
        tuple: ``(counts, MeanComponents)``; counts are float64 arrays holding integers

    Raises:
        DomainError: If the activity has negative values
        ConfigurationError: If the activity projects to zero counts
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("Activity must be non-negative")

    projected = system.forward(x)
    total = float(projected.sum())
    if not total > 0:
        raise ConfigurationError("Activity projects to zero counts; nothing to simulate")

    n_slices = system.grid.nz
    scale = cfg.target_true_counts * n_slices / total
    trues = projected * scale
    true_total = float(trues.sum())

    f = cfg.background_fraction
    per_bin = f / (1.0 - f) * true_total / trues.size
    half = np.full(trues.shape, per_bin / 2.0, dtype=np.float64)
    means = MeanComponents(trues=trues, scatters=half, randoms=half.copy(), activity_scale=scale)

    prompts = means.prompts

    def draw(k: int) -> np.ndarray:
        return np.random.default_rng([cfg.seed, k]).poisson(prompts[k])

    counts = _per_slice(n_slices, draw, workers)
    logger.debug(f"Simulated {counts.sum():.0f} prompts (scale {scale:.4g}, background per bin {per_bin:.4g})")
    return counts, means


def thin_counts(y: np.ndarray, ratio: float, seed: int, workers: Optional[int] = None) -> np.ndarray:
    """
    Keep each recorded event independently with probability ``ratio``.

    Args:
        y: Count sinogram
        ratio: Keep probability in (0, 1]
        seed: Seed of the binomial draws
        workers: Thread count for the per-slice draws

    Returns:
        np.ndarray: The thinned sinogram
    """
    if not 0 < ratio <= 1:
        raise DomainError(f"Thinning ratio must lie in (0, 1], got {ratio}")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise DomainError("Thinning needs non-negative integer counts")
    if ratio == 1:
        return y.copy()

    events = y.astype(np.int64)

    def draw(k: int) -> np.ndarray:
        return np.random.default_rng([seed, k]).binomial(events[k], ratio)

    return _per_slice(y.shape[0], draw, workers)


def insert_lesions(
    system: SystemMatrix,
    y: np.ndarray,
    lesion_activity: np.ndarray,
    activity_scale: float,
    seed: int,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Add the Poisson counts of a lesion-only activity volume to a measured sinogram.

    Args:
        system: System matrix
        y: Existing counts
        lesion_activity: Non-negative lesion-only activity in the units of the phantom
        activity_scale: Activity-to-counts scale of ``y`` (``MeanComponents.activity_scale``)
        seed: Seed of the lesion counts, independent of the background draw

    Returns:
        np.ndarray: ``y`` plus the lesion counts
    """
    if y.shape != system.sinogram_shape:
        raise DimensionError(f"Sinogram shape {y.shape} does not match geometry {system.sinogram_shape}")
    lesion_activity = np.asarray(lesion_activity, dtype=np.float64)
    if np.any(lesion_activity < 0):
        raise DomainError("Lesion activity must be non-negative")

    mean = system.forward(lesion_activity) * activity_scale

    def draw(k: int) -> np.ndarray:
        return np.random.default_rng([seed, k]).poisson(mean[k])

    return np.asarray(y, dtype=np.float64) + _per_slice(y.shape[0], draw, workers)
