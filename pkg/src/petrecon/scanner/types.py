"""
Grid and scanner geometry types.

Both are immutable pydantic models; arrays laid out on a grid use the ``(nz, ny, nx)`` order with x
varying fastest.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from petrecon.constants import (
    DEFAULT_ANGLES,
    DEFAULT_BINS,
    DEFAULT_BIN_SPACING_MM,
    DEFAULT_GRID_SIZE,
    DEFAULT_RAYS_PER_BIN,
    DEFAULT_SLICES,
    DEFAULT_VOXEL_SIZE_MM,
)


class ImageGrid(BaseModel):
    """
    A voxel grid centred on the scanner axis.

    Attributes:
        nx: Voxel count along x
        ny: Voxel count along y
        nz: Slice count
        voxel_size: In-plane voxel size in mm
        slice_thickness: Axial spacing in mm, defaults to the in-plane voxel size
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    nx: int = Field(DEFAULT_GRID_SIZE, ge=1)
    ny: int = Field(DEFAULT_GRID_SIZE, ge=1)
    nz: int = Field(DEFAULT_SLICES, ge=1)
    voxel_size: float = Field(DEFAULT_VOXEL_SIZE_MM, gt=0)
    slice_thickness: Optional[float] = Field(None, gt=0)

    @property
    def axial_spacing(self) -> float:
        return self.voxel_size if self.slice_thickness is None else self.slice_thickness

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.nz, self.ny, self.nx

    @property
    def slice_shape(self) -> Tuple[int, int]:
        return self.ny, self.nx

    @property
    def voxels_per_slice(self) -> int:
        return self.nx * self.ny

    @property
    def extent(self) -> Tuple[float, float, float]:
        """Full physical size (x, y, z) in mm."""
        return self.nx * self.voxel_size, self.ny * self.voxel_size, self.nz * self.axial_spacing

    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) - (self.nx - 1) / 2.0) * self.voxel_size

    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) - (self.ny - 1) / 2.0) * self.voxel_size

    def z_centers(self) -> np.ndarray:
        return (np.arange(self.nz) - (self.nz - 1) / 2.0) * self.axial_spacing

    def voxel_volume(self) -> float:
        return self.voxel_size * self.voxel_size * self.axial_spacing

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.float64)


class ScannerGeometry(BaseModel):
    """
    A 2D parallel-beam sinogram geometry applied slice by slice.

    Attributes:
        n_angles: Number of projection angles evenly covering [0, pi)
        n_bins: Radial bins per angle
        bin_spacing: Radial bin width in mm
        rays_per_bin: Sub-rays averaged per bin
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_angles: int = Field(DEFAULT_ANGLES, ge=1)
    n_bins: int = Field(DEFAULT_BINS, ge=1)
    bin_spacing: float = Field(DEFAULT_BIN_SPACING_MM, gt=0)
    rays_per_bin: int = Field(DEFAULT_RAYS_PER_BIN, ge=1)

    @property
    def n_rows(self) -> int:
        return self.n_angles * self.n_bins

    @property
    def fov_width(self) -> float:
        return self.n_bins * self.bin_spacing

    def angles(self) -> np.ndarray:
        return np.arange(self.n_angles) * (np.pi / self.n_angles)

    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) - (self.n_bins - 1) / 2.0) * self.bin_spacing

    def sub_ray_offsets(self) -> np.ndarray:
        """Offsets of the sub-rays relative to a bin centre."""
        k = np.arange(self.rays_per_bin)
        return ((k + 0.5) / self.rays_per_bin - 0.5) * self.bin_spacing

    def sinogram_shape(self, n_slices: int) -> Tuple[int, int, int]:
        return n_slices, self.n_angles, self.n_bins
