"""
Network denoising of MLEM images.
"""

from typing import List, Sequence

import numpy as np

from petrecon.network.unet import ResidualUNet
from petrecon.network.volume import denoise_volume
from petrecon.recon.base import ReconConfig, Reconstructor
from petrecon.recon.mlem import mlem


class DenoiseReconstructor(Reconstructor):
    """MLEM image passed through the trained network, swept over the MLEM iteration."""

    sweep_parameter = "iterations"

    def __init__(self, system, scatters, randoms, network: ResidualUNet, iterations: int = 60):
        super().__init__(system, scatters, randoms)
        self.network = network
        self.iterations = iterations

    def reconstruct(self, counts: np.ndarray) -> np.ndarray:
        self._check_counts(counts)
        cfg = ReconConfig(iterations=self.iterations, snapshots=())
        image = mlem(counts, self.system, self.scatters, self.randoms, cfg).image
        return denoise_volume(self.network, image)

    def sweep(self, counts: np.ndarray, values: Sequence[float]) -> List[np.ndarray]:
        self._check_counts(counts)
        iterations = [int(v) for v in values]
        cfg = ReconConfig(iterations=max(iterations), snapshots=tuple(sorted(set(iterations))))
        result = mlem(counts, self.system, self.scatters, self.randoms, cfg)
        return [denoise_volume(self.network, result.snapshots[i]) for i in iterations]
