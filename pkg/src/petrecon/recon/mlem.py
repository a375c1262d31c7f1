"""
Maximum-likelihood expectation maximization.
"""

from typing import Callable, List, Optional, Sequence

import numpy as np
from loguru import logger

from petrecon.profile import measure_time
from petrecon.recon.base import ReconConfig, ReconResult, Reconstructor
from petrecon.recon.likelihood import em_update, initial_image, poisson_loglik
from petrecon.scanner.projector import SystemMatrix


@measure_time(logger_instance=logger)
def mlem(
    y: np.ndarray,
    system: SystemMatrix,
    s: np.ndarray,
    r: np.ndarray,
    cfg: ReconConfig,
    x0: Optional[np.ndarray] = None,
    track_objective: bool = False,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> ReconResult:
    """
    Run MLEM.

    Args:
        y: Measured counts
        system: System matrix
        s: Expected scatters
        r: Expected randoms
        cfg: Iterations, snapshots and start value
        x0: Start image, overrides ``cfg.initial_value``
        track_objective: Record the log-likelihood after every iteration
        callback: Called with ``(iteration, image)`` after every iteration

    Returns:
        ReconResult: Final image and snapshots
    """
    if x0 is not None:
        x = np.array(x0, dtype=np.float64)
    elif cfg.initial_value is not None:
        x = np.where(system.sensitivity > 0, cfg.initial_value, 0.0)
    else:
        x = initial_image(y, system)

    snapshots = {}
    objective = []
    for it in range(1, cfg.iterations + 1):
        x = em_update(y, system, x, s, r)
        if it in cfg.snapshots:
            snapshots[it] = x.copy()
        if track_objective:
            objective.append(poisson_loglik(y, system, x, s, r))
        if callback is not None:
            callback(it, x)
    logger.debug(f"MLEM finished {cfg.iterations} iterations")
    return ReconResult(image=x, snapshots=snapshots, objective=objective)


class MlemReconstructor(Reconstructor):
    """MLEM, swept over the iteration number."""

    sweep_parameter = "iterations"

    def __init__(self, system, scatters, randoms, iterations: int = 60):
        super().__init__(system, scatters, randoms)
        self.iterations = iterations

    def reconstruct(self, counts: np.ndarray) -> np.ndarray:
        self._check_counts(counts)
        cfg = ReconConfig(iterations=self.iterations, snapshots=())
        return mlem(counts, self.system, self.scatters, self.randoms, cfg).image

    def sweep(self, counts: np.ndarray, values: Sequence[float]) -> List[np.ndarray]:
        self._check_counts(counts)
        iterations = [int(v) for v in values]
        cfg = ReconConfig(iterations=max(iterations), snapshots=tuple(sorted(set(iterations))))
        result = mlem(counts, self.system, self.scatters, self.randoms, cfg)
        return [result.snapshots[i] for i in iterations]
