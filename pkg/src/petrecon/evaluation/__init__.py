"""
Evaluation module.

This module provides regions of interest, the contrast recovery and background noise metrics,
CR-vs-STD sweeps and their plots, and lesion-difference evaluation.
"""

from petrecon.evaluation.lesion import lesion_difference, lesion_difference_cr
from petrecon.evaluation.metrics import (
    background_std,
    contrast_recovery,
    contrast_recovery_per_realization,
    lesion_means,
)
from petrecon.evaluation.plotting import plot_curves
from petrecon.evaluation.roi import RoiSpec, disk_footprint, lesion_roi, place_background_rois
from petrecon.evaluation.sweep import (
    CURVE_COLUMNS,
    MatchedComparison,
    SweepCurve,
    cr_std_sweep,
    curves_frame,
    interpolate_cr,
    matched_std_comparison,
)

__all__ = [
    "CURVE_COLUMNS",
    "MatchedComparison",
    "RoiSpec",
    "SweepCurve",
    "background_std",
    "contrast_recovery",
    "contrast_recovery_per_realization",
    "cr_std_sweep",
    "curves_frame",
    "disk_footprint",
    "interpolate_cr",
    "lesion_difference",
    "lesion_difference_cr",
    "lesion_means",
    "lesion_roi",
    "matched_std_comparison",
    "place_background_rois",
    "plot_curves",
]
