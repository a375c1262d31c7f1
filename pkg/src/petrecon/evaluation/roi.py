"""
Regions of interest for the contrast recovery and background noise metrics.
"""

from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import ndimage

from petrecon.constants import DEFAULT_BACKGROUND_ROIS, DEFAULT_ROI_RADIUS_VOXELS
from petrecon.errors import ConfigurationError
from petrecon.image.volume import LabelVolume


class RoiSpec(BaseModel):
    """
    Lesion and background regions.

    Attributes:
        lesion_mask: Boolean volume of all lesion voxels
        a_true: True mean activity over the lesion voxels
        background_masks: Boolean volumes of the background ROIs
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lesion_mask: np.ndarray
    a_true: float
    background_masks: List[np.ndarray]

    @model_validator(mode="after")
    def _check(self) -> "RoiSpec":
        if not self.a_true > 0:
            raise ValueError(f"True lesion activity must be positive, got {self.a_true}")
        for k, mask in enumerate(self.background_masks):
            if mask.shape != self.lesion_mask.shape:
                raise ValueError(f"Background ROI {k} does not match the lesion mask shape")
            if not mask.any():
                raise ValueError(f"Background ROI {k} is empty")
            if np.any(mask & self.lesion_mask):
                raise ValueError(f"Background ROI {k} overlaps a lesion")
        return self

    @property
    def n_background(self) -> int:
        return len(self.background_masks)


def disk_footprint(radius: int) -> np.ndarray:
    """In-plane disk of the given voxel radius as a ``(1, 2r+1, 2r+1)`` structuring element."""
    r = np.arange(-radius, radius + 1)
    return (r[None, :] ** 2 + r[:, None] ** 2 <= radius * radius)[None]


def place_background_rois(
    labels: LabelVolume,
    tissue: str,
    count: int = DEFAULT_BACKGROUND_ROIS,
    radius: int = DEFAULT_ROI_RADIUS_VOXELS,
    seed: int = 0,
    exclude: Optional[np.ndarray] = None,
) -> List[np.ndarray]:
    """
    Place circular background ROIs at random inside a tissue.

    Every ROI is a disk within one slice that lies entirely inside the tissue and outside
    ``exclude``.

    Args:
        labels: Label volume
        tissue: Background tissue name
        count: Number of ROIs
        radius: Disk radius in voxels
        seed: Seed of the placement
        exclude: Voxels no ROI may touch, typically the lesions

    Returns:
        List[np.ndarray]: Boolean masks in placement order

    Raises:
        ConfigurationError: If the tissue has no room for a single ROI
    """
    footprint = disk_footprint(radius)
    allowed = labels.tissue_mask(tissue)
    if exclude is not None:
        allowed &= ~exclude
    centres = np.argwhere(ndimage.binary_erosion(allowed, structure=footprint, border_value=0))
    if len(centres) == 0:
        raise ConfigurationError(f"No room for a {radius}-voxel ROI in tissue '{tissue}'")

    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(centres), size=count, replace=len(centres) < count)
    offsets = np.argwhere(footprint[0]) - radius
    masks = []
    for z, y, x in centres[chosen]:
        mask = np.zeros(labels.grid.shape, dtype=bool)
        mask[z, y + offsets[:, 0], x + offsets[:, 1]] = True
        masks.append(mask)
    return masks


def lesion_roi(
    labels: LabelVolume,
    truth: np.ndarray,
    lesion_labels: Sequence[int],
    background_tissue: str = "liver",
    count: int = DEFAULT_BACKGROUND_ROIS,
    radius: int = DEFAULT_ROI_RADIUS_VOXELS,
    seed: int = 0,
) -> RoiSpec:
    """
    ROIs of a phantom: all lesion voxels plus random background disks.

    Args:
        labels: Label volume with lesions
        truth: True activity used for ``a_true``
        lesion_labels: Labels of the lesions
        background_tissue: Tissue holding the background ROIs
        count: Number of background ROIs
        radius: Background ROI radius in voxels
        seed: Seed of the background placement

    Returns:
        RoiSpec: The regions
    """
    lesion_mask = np.isin(labels.data, list(lesion_labels))
    if not lesion_mask.any():
        raise ConfigurationError("The phantom has no lesion voxels")
    a_true = float(truth[lesion_mask].mean())
    background = place_background_rois(labels, background_tissue, count, radius, seed, exclude=lesion_mask)
    return RoiSpec(lesion_mask=lesion_mask, a_true=a_true, background_masks=background)
