"""
MLEM followed by a Gaussian post-filter.
"""

from typing import List, Sequence

import numpy as np

from petrecon.image.filter import gaussian_postfilter
from petrecon.recon.base import ReconConfig, Reconstructor
from petrecon.recon.mlem import mlem


class GaussianReconstructor(Reconstructor):
    """MLEM image smoothed by a Gaussian, swept over the FWHM in mm."""

    sweep_parameter = "fwhm"

    def __init__(self, system, scatters, randoms, iterations: int = 60, fwhm: float = 0.0):
        super().__init__(system, scatters, randoms)
        self.iterations = iterations
        self.fwhm = fwhm

    def _mlem(self, counts: np.ndarray) -> np.ndarray:
        self._check_counts(counts)
        cfg = ReconConfig(iterations=self.iterations, snapshots=())
        return mlem(counts, self.system, self.scatters, self.randoms, cfg).image

    def reconstruct(self, counts: np.ndarray) -> np.ndarray:
        return gaussian_postfilter(self._mlem(counts), self.fwhm, self.system.grid)

    def sweep(self, counts: np.ndarray, values: Sequence[float]) -> List[np.ndarray]:
        image = self._mlem(counts)
        return [gaussian_postfilter(image, fwhm, self.system.grid) for fwhm in values]
