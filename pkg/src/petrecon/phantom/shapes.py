"""
Phantom shapes and rasterization.

A phantom is an ordered list of ellipsoidal organs followed by spherical lesions. Later shapes
overwrite earlier ones, so lesions are always drawn on top.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from petrecon.errors import ConfigurationError
from petrecon.image.volume import LabelVolume
from petrecon.scanner.types import ImageGrid

LESION_TISSUE = "lung lesion"
BACKGROUND_TISSUE = "air"

Vector3 = Tuple[float, float, float]


class OrganShape(BaseModel):
    """
    An ellipsoidal organ, optionally hollow.

    Attributes:
        label: Integer label written into the volume (>= 1)
        name: Organ name
        center: Centre (x, y, z) in mm
        semi_axes: Semi-axes (x, y, z) in mm
        tissue: Tissue name used to look up kinetics
        inner_semi_axes: Semi-axes of the cavity of a hollow organ
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: int = Field(..., ge=1)
    name: str
    center: Vector3
    semi_axes: Vector3
    tissue: str
    inner_semi_axes: Optional[Vector3] = None

    @model_validator(mode="after")
    def _check_axes(self) -> "OrganShape":
        if min(self.semi_axes) <= 0:
            raise ValueError(f"Organ '{self.name}' needs positive semi-axes")
        if self.inner_semi_axes is not None and any(i >= o for i, o in zip(self.inner_semi_axes, self.semi_axes)):
            raise ValueError(f"Cavity of organ '{self.name}' must lie inside its outer surface")
        return self

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        inside = _ellipsoid(x, y, z, self.center, self.semi_axes) <= 1.0
        if self.inner_semi_axes is not None:
            inside &= _ellipsoid(x, y, z, self.center, self.inner_semi_axes) > 1.0
        return inside


class LesionShape(BaseModel):
    """A spherical lesion."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    center: Vector3
    diameter: float = Field(..., gt=0)
    tissue: str = LESION_TISSUE

    @model_validator(mode="after")
    def _check_tissue(self) -> "LesionShape":
        if self.tissue != LESION_TISSUE:
            raise ValueError(f"Lesions must use the '{LESION_TISSUE}' tissue, got '{self.tissue}'")
        return self

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        r = self.radius
        return _ellipsoid(x, y, z, self.center, (r, r, r)) <= 1.0


class PhantomSpec(BaseModel):
    """
    Geometric description of a phantom.

    Lesion ``i`` receives label ``lesion_label_base + i`` so each lesion can be addressed on its own.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    organs: List[OrganShape] = Field(default_factory=list)
    lesions: List[LesionShape] = Field(default_factory=list)
    seed: int = 0

    @model_validator(mode="after")
    def _check_labels(self) -> "PhantomSpec":
        labels = [o.label for o in self.organs]
        if len(labels) != len(set(labels)):
            raise ValueError("Organ labels must be unique")
        return self

    @property
    def lesion_label_base(self) -> int:
        return max((o.label for o in self.organs), default=0) + 1

    def lesion_labels(self) -> List[int]:
        return [self.lesion_label_base + i for i in range(len(self.lesions))]

    def tissues(self) -> Dict[int, str]:
        table = {0: BACKGROUND_TISSUE}
        table.update({o.label: o.tissue for o in self.organs})
        table.update({label: lesion.tissue for label, lesion in zip(self.lesion_labels(), self.lesions)})
        return table

    def translated(self, offset: Vector3) -> "PhantomSpec":
        """A copy with every shape moved by ``offset`` mm."""
        dx, dy, dz = offset

        def move(c):
            return c[0] + dx, c[1] + dy, c[2] + dz

        return PhantomSpec(
            organs=[o.model_copy(update={"center": move(o.center)}) for o in self.organs],
            lesions=[lesion.model_copy(update={"center": move(lesion.center)}) for lesion in self.lesions],
            seed=self.seed,
        )


def _ellipsoid(x, y, z, center, axes) -> np.ndarray:
    return ((x - center[0]) / axes[0]) ** 2 + ((y - center[1]) / axes[1]) ** 2 + ((z - center[2]) / axes[2]) ** 2


def _check_inside(name: str, center: Vector3, half_xy: Tuple[float, float], grid: ImageGrid) -> None:
    extent_x, extent_y, extent_z = grid.extent
    tol = 1e-9
    if (
        abs(center[0]) + half_xy[0] > extent_x / 2.0 + tol
        or abs(center[1]) + half_xy[1] > extent_y / 2.0 + tol
        or abs(center[2]) > extent_z / 2.0 + tol
    ):
        raise ConfigurationError(f"Shape '{name}' at {center} lies outside the image field of view")


def rasterize_phantom(spec: PhantomSpec, grid: ImageGrid) -> LabelVolume:
    """
    Rasterize a phantom by voxel-centre membership.

    Args:
        spec: The phantom description
        grid: Target grid

    Returns:
        LabelVolume: Labels with the phantom's label -> tissue map

    Raises:
        ConfigurationError: If a shape extends beyond the in-plane field of view or its centre
            lies outside the axial extent
    """
    for organ in spec.organs:
        _check_inside(organ.name, organ.center, organ.semi_axes[:2], grid)
    for i, lesion in enumerate(spec.lesions):
        _check_inside(f"lesion {i}", lesion.center, (lesion.radius, lesion.radius), grid)

    z, y, x = np.meshgrid(grid.z_centers(), grid.y_centers(), grid.x_centers(), indexing="ij")
    data = np.zeros(grid.shape, dtype=np.int32)
    for organ in spec.organs:
        data[organ.contains(x, y, z)] = organ.label
    for label, lesion in zip(spec.lesion_labels(), spec.lesions):
        data[lesion.contains(x, y, z)] = label

    return LabelVolume(grid, data, spec.tissues())
