"""
CR-vs-STD curves and their comparison at a matched noise level.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict

from petrecon.errors import ConfigurationError
from petrecon.evaluation.metrics import background_std, contrast_recovery_per_realization
from petrecon.evaluation.roi import RoiSpec
from petrecon.profile import measure_time
from petrecon.recon.base import Reconstructor

CURVE_COLUMNS = ["method", "sweep_value", "std", "cr"]


class SweepCurve(BaseModel):
    """
    One method's CR-vs-STD curve.

    Attributes:
        method: Reconstruction method
        values: Swept parameter values in sweep order
        std: Background STD per value
        cr: Contrast recovery per value
        cr_per_realization: Contrast recovery per value and realization, shape ``(values, R)``
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    method: str
    values: List[float]
    std: List[float]
    cr: List[float]
    cr_per_realization: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"method": self.method, "sweep_value": self.values, "std": self.std, "cr": self.cr}, columns=CURVE_COLUMNS
        )


class MatchedComparison(BaseModel):
    """CR of two curves at a common STD and their paired per-realization margins."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    method_a: str
    method_b: str
    std: float
    cr_a: float
    cr_b: float
    margins: np.ndarray

    @property
    def mean_margin(self) -> float:
        return float(np.mean(self.margins))

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))


@measure_time(logger_instance=logger)
def cr_std_sweep(
    reconstructor: Reconstructor,
    method: str,
    values: Sequence[float],
    realizations: Sequence[np.ndarray],
    roi: RoiSpec,
    workers: Optional[int] = None,
) -> SweepCurve:
    """
    Reconstruct every realization at every sweep value and reduce to a CR-vs-STD curve.

    Args:
        reconstructor: Reconstruction method
        method: Method name written to the curve
        values: Sweep values (iterations, FWHM or penalty weight)
        realizations: Count sinograms of the independent noise realizations
        roi: Regions of interest
        workers: Threads reconstructing realizations concurrently; results keep realization order

    Returns:
        SweepCurve: One point per sweep value, in sweep order

    Raises:
        ConfigurationError: If fewer than two sweep values are given
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ConfigurationError(f"A sweep of '{method}' needs at least two values")

    def run(counts: np.ndarray) -> List[np.ndarray]:
        return reconstructor.sweep(counts, values)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(run, realizations))
    else:
        images = [run(counts) for counts in realizations]

    std, cr, per_realization = [], [], []
    for v in range(len(values)):
        stack = np.stack([images[r][v] for r in range(len(realizations))])
        std.append(background_std(stack, roi))
        crs = contrast_recovery_per_realization(stack, roi)
        per_realization.append(crs)
        cr.append(float(np.mean(crs)))
        logger.debug(f"{method} {reconstructor.sweep_parameter}={values[v]:g}: STD {std[-1]:.4f}, CR {cr[-1]:.4f}")

    return SweepCurve(method=method, values=values, std=std, cr=cr, cr_per_realization=np.array(per_realization))


def curves_frame(curves: Sequence[SweepCurve]) -> pd.DataFrame:
    """Concatenate curves into one ``method,sweep_value,std,cr`` table."""
    return pd.concat([c.to_frame() for c in curves], ignore_index=True)


def _sorted_by_std(curve: SweepCurve):
    order = np.argsort(curve.std, kind="stable")
    return np.asarray(curve.std)[order], np.asarray(curve.cr)[order], curve.cr_per_realization[order]


def interpolate_cr(curve: SweepCurve, std: float) -> float:
    """Linear interpolation of a curve's CR at the given STD."""
    s, c, _ = _sorted_by_std(curve)
    return float(np.interp(std, s, c))


def matched_std_comparison(a: SweepCurve, b: SweepCurve, std: Optional[float] = None) -> MatchedComparison:
    """
    Compare two curves at a common STD.

    Each curve, and each realization's CR along it, is interpolated linearly at ``std``; the margins
    are the paired per-realization differences ``CR_a - CR_b``.

    Args:
        a: First curve
        b: Second curve
        std: Common STD, the middle of the overlapping STD range when None

    Returns:
        MatchedComparison: Interpolated CRs and margins

    Raises:
        ConfigurationError: If the STD ranges do not overlap or ``std`` lies outside the overlap
    """
    sa, ca, ra = _sorted_by_std(a)
    sb, cb, rb = _sorted_by_std(b)
    if ra.shape[1] != rb.shape[1]:
        raise ConfigurationError("Curves were computed on different realization counts")
    low, high = max(sa[0], sb[0]), min(sa[-1], sb[-1])
    if low > high:
        raise ConfigurationError(f"STD ranges of '{a.method}' and '{b.method}' do not overlap")
    if std is None:
        std = 0.5 * (low + high)
    elif not low <= std <= high:
        raise ConfigurationError(f"STD {std} lies outside the common range [{low}, {high}]")

    per_a = np.array([np.interp(std, sa, ra[:, k]) for k in range(ra.shape[1])])
    per_b = np.array([np.interp(std, sb, rb[:, k]) for k in range(rb.shape[1])])
    return MatchedComparison(
        method_a=a.method,
        method_b=b.method,
        std=float(std),
        cr_a=float(np.interp(std, sa, ca)),
        cr_b=float(np.interp(std, sb, cb)),
        margins=per_a - per_b,
    )
