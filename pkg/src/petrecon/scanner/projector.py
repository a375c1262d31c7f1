"""
Sparse system matrix and the projection operators built on it.

The same 2D matrix is applied to every slice of a volume.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from loguru import logger
from scipy import sparse

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.profile import measure_time
from petrecon.scanner.siddon import trace_angle
from petrecon.scanner.types import ImageGrid, ScannerGeometry


class SystemMatrix:
    """
    Detection-probability operator of one slice, stored in compressed-row form.

    Attributes:
        geometry: The scanner geometry the rows belong to
        grid: The voxel grid the columns belong to
        matrix: ``(n_angles * n_bins, nx * ny)`` CSR matrix of intersection lengths in mm
        sensitivity_slice: Column sums ``p_j`` of one slice
    """

    def __init__(self, geometry: ScannerGeometry, grid: ImageGrid, matrix: sparse.csr_matrix):
        expected = (geometry.n_rows, grid.voxels_per_slice)
        if matrix.shape != expected:
            raise DimensionError(f"System matrix shape {matrix.shape} does not match geometry/grid {expected}")

        self.geometry = geometry
        self.grid = grid
        self.matrix = matrix.tocsr()
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()
        self._matrix_t = self.matrix.T.tocsr()
        self.sensitivity_slice = np.asarray(self.matrix.sum(axis=0), dtype=np.float64).ravel()

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def sensitivity(self) -> np.ndarray:
        """Per-voxel sensitivity ``p_j`` broadcast to the volume shape."""
        per_slice = self.sensitivity_slice.reshape(self.grid.slice_shape)
        return np.broadcast_to(per_slice, self.grid.shape).copy()

    @property
    def sinogram_shape(self):
        return self.geometry.sinogram_shape(self.grid.nz)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Return ``P x`` for every slice of ``x``."""
        if x.shape != self.grid.shape:
            raise DimensionError(f"Image shape {x.shape} does not match grid {self.grid.shape}")
        flat = np.asarray(x, dtype=np.float64).reshape(self.grid.nz, -1)
        projected = self.matrix @ flat.T
        return np.ascontiguousarray(projected.T).reshape(self.sinogram_shape)

    def back(self, g: np.ndarray) -> np.ndarray:
        """Return ``P^T g`` for every slice of ``g``."""
        if g.shape != self.sinogram_shape:
            raise DimensionError(f"Sinogram shape {g.shape} does not match geometry {self.sinogram_shape}")
        flat = np.asarray(g, dtype=np.float64).reshape(self.grid.nz, -1)
        back = self._matrix_t @ flat.T
        return np.ascontiguousarray(back.T).reshape(self.grid.shape)

    def column(self, j: int) -> np.ndarray:
        """Dense column ``j`` of the slice matrix."""
        return self.matrix[:, j].toarray().ravel()

    def __str__(self) -> str:
        return f"SystemMatrix({self.shape[0]}x{self.shape[1]}, nnz={self.matrix.nnz})"

    def __repr__(self) -> str:
        return self.__str__()


def _check_coverage(geometry: ScannerGeometry, grid: ImageGrid) -> None:
    extent_x, extent_y, _ = grid.extent
    if geometry.fov_width <= 0 or geometry.fov_width < max(extent_x, extent_y):
        raise ConfigurationError(
            f"Scanner field of view ({geometry.fov_width} mm) does not cover the image grid "
            f"({extent_x} x {extent_y} mm)"
        )
    diagonal = float(np.hypot(extent_x, extent_y))
    if geometry.fov_width < diagonal:
        logger.warning(f"Field of view {geometry.fov_width} mm is smaller than the grid diagonal {diagonal:.1f} mm")


@measure_time(logger_instance=logger)
def build_system_matrix(geometry: ScannerGeometry, grid: ImageGrid, workers: Optional[int] = None) -> SystemMatrix:
    """
    Build the system matrix by Siddon ray tracing.

    Angles are traced independently; with several workers the per-angle results are still
    concatenated in angle order, so the matrix does not depend on the worker count.

    Args:
        geometry: Scanner geometry
        grid: Image grid
        workers: Thread count for tracing, 1 or None for serial tracing

    Returns:
        SystemMatrix: The assembled operator with its sensitivity

    Raises:
        ConfigurationError: If the field of view does not cover the grid
    """
    _check_coverage(geometry, grid)

    def trace(a: int):
        return trace_angle(a, geometry, grid)

    angle_indices = range(geometry.n_angles)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(trace, angle_indices))
    else:
        parts = [trace(a) for a in angle_indices]

    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    matrix = sparse.coo_matrix((vals, (rows, cols)), shape=(geometry.n_rows, grid.voxels_per_slice)).tocsr()

    system = SystemMatrix(geometry, grid, matrix)
    logger.debug(f"Built {system} for {grid.nx}x{grid.ny} grid, {geometry.n_angles} angles")
    return system


def forward_project(system: SystemMatrix, x: np.ndarray) -> np.ndarray:
    """Forward project a volume; see ``SystemMatrix.forward``."""
    return system.forward(x)


def back_project(system: SystemMatrix, g: np.ndarray) -> np.ndarray:
    """Back project a sinogram; see ``SystemMatrix.back``."""
    return system.back(g)
