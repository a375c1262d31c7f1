"""
Base reconstructor module.

This module provides the abstract base class for reconstruction methods and the common
configuration and result types.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from petrecon.constants import DEFAULT_SNAPSHOTS
from petrecon.errors import DimensionError
from petrecon.scanner.projector import SystemMatrix


class ReconConfig(BaseModel):
    """
    Iteration control of the EM-type algorithms.

    Attributes:
        iterations: Number of iterations
        snapshots: Iterations at which the image is recorded
        initial_value: Value of the uniform start image, None for ``sum(y) / sum(p)``
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    iterations: int = Field(60, ge=1)
    snapshots: Tuple[int, ...] = DEFAULT_SNAPSHOTS
    initial_value: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_snapshots(self) -> "ReconConfig":
        bad = [s for s in self.snapshots if not 1 <= s <= self.iterations]
        if bad:
            raise ValueError(f"Snapshots {bad} lie outside [1, {self.iterations}]")
        return self


class ReconResult(BaseModel):
    """
    Output of an iterative reconstruction.

    Attributes:
        image: Final image
        snapshots: Images recorded at the configured iterations
        objective: Objective value after every iteration when tracked
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    image: np.ndarray
    snapshots: Dict[int, np.ndarray] = Field(default_factory=dict)
    objective: List[float] = Field(default_factory=list)


class Reconstructor(ABC):
    """
    Abstract base class for reconstruction methods.

    Args:
        system: System matrix
        scatters: Expected scatters
        randoms: Expected randoms
    """

    #: Name of the swept parameter of ``sweep``
    sweep_parameter = "iterations"

    def __init__(self, system: SystemMatrix, scatters: np.ndarray, randoms: np.ndarray):
        if scatters.shape != system.sinogram_shape or randoms.shape != system.sinogram_shape:
            raise DimensionError("Background means do not match the sinogram shape")
        self.system = system
        self.scatters = scatters
        self.randoms = randoms

    @abstractmethod
    def reconstruct(self, counts: np.ndarray) -> np.ndarray:
        """
        Reconstruct an image with the configured settings.

        Returns:
            np.ndarray: Non-negative image
        """
        pass

    @abstractmethod
    def sweep(self, counts: np.ndarray, values: Sequence[float]) -> List[np.ndarray]:
        """
        Reconstruct once per value of the swept parameter.

        Returns:
            List[np.ndarray]: One image per value, in the given order
        """
        pass

    def _check_counts(self, counts: np.ndarray) -> None:
        if counts.shape != self.system.sinogram_shape:
            raise DimensionError(f"Counts shape {counts.shape} does not match {self.system.sinogram_shape}")

    def __str__(self) -> str:
        return self.__class__.__name__
