"""
Acquisition module.

This module provides Poisson sinogram simulation, count thinning and lesion insertion.
"""

from petrecon.acquisition.lesions import lesion_intensity_factors, lesion_only_activity
from petrecon.acquisition.simulation import (
    AcquisitionConfig,
    MeanComponents,
    insert_lesions,
    simulate_counts,
    thin_counts,
)

__all__ = [
    "AcquisitionConfig",
    "MeanComponents",
    "insert_lesions",
    "lesion_intensity_factors",
    "lesion_only_activity",
    "simulate_counts",
    "thin_counts",
]
