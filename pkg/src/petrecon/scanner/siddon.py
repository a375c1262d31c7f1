"""
Siddon ray traversal through a 2D voxel grid.

A ray is given in parametric form ``p(t) = origin + t * direction`` with a unit direction, so the
parameter differences are intersection lengths in mm.
"""

from typing import Tuple

import numpy as np

from petrecon.scanner.types import ImageGrid, ScannerGeometry

# Directions with a smaller component are treated as parallel to that axis
_PARALLEL_EPS = 1e-15
# Segments shorter than this (mm) come from coincident plane crossings and are dropped
_MIN_SEGMENT = 1e-12

_EMPTY = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64))


def trace_ray(
    origin: Tuple[float, float], direction: Tuple[float, float], grid: ImageGrid
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Compute the exact intersection lengths of a ray with the in-plane voxels of a grid.

    Args:
        origin: A point (x, y) on the ray in mm
        direction: Unit direction (dx, dy)
        grid: The voxel grid, centred on the origin

    Returns:
        Tuple of flat voxel indices ``iy * nx + ix`` and intersection lengths in mm, ordered along
        the ray
    """
    v = grid.voxel_size
    lower = (-0.5 * grid.nx * v, -0.5 * grid.ny * v)
    upper = (0.5 * grid.nx * v, 0.5 * grid.ny * v)

    t_lo, t_hi = -np.inf, np.inf
    for p, d, lo, hi in zip(origin, direction, lower, upper):
        if abs(d) < _PARALLEL_EPS:
            if not lo < p < hi:
                return _EMPTY
            continue
        t1 = (lo - p) / d
        t2 = (hi - p) / d
        t_lo = max(t_lo, min(t1, t2))
        t_hi = min(t_hi, max(t1, t2))
    if not t_hi > t_lo:
        return _EMPTY

    crossings = [np.array([t_lo, t_hi])]
    for p, d, lo, n in zip(origin, direction, lower, (grid.nx, grid.ny)):
        if abs(d) < _PARALLEL_EPS:
            continue
        t_planes = (lo + np.arange(n + 1) * v - p) / d
        crossings.append(t_planes[(t_planes > t_lo) & (t_planes < t_hi)])

    t = np.unique(np.concatenate(crossings))
    lengths = np.diff(t)
    mid = 0.5 * (t[:-1] + t[1:])
    keep = lengths > _MIN_SEGMENT
    lengths, mid = lengths[keep], mid[keep]

    ix = np.floor((origin[0] + mid * direction[0] - lower[0]) / v).astype(np.int64)
    iy = np.floor((origin[1] + mid * direction[1] - lower[1]) / v).astype(np.int64)
    np.clip(ix, 0, grid.nx - 1, out=ix)
    np.clip(iy, 0, grid.ny - 1, out=iy)
    return iy * grid.nx + ix, lengths


def trace_angle(
    angle_index: int, geometry: ScannerGeometry, grid: ImageGrid
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Trace every bin of one projection angle, averaging the sub-rays of each bin.

    Args:
        angle_index: Index of the angle in ``geometry.angles()``
        geometry: Scanner geometry
        grid: Voxel grid

    Returns:
        COO triplets (row, column, value) for the rows of this angle; duplicates are not merged
    """
    theta = geometry.angles()[angle_index]
    normal = (np.cos(theta), np.sin(theta))
    direction = (-np.sin(theta), np.cos(theta))
    weight = 1.0 / geometry.rays_per_bin
    offsets = geometry.sub_ray_offsets()

    rows, cols, vals = [], [], []
    for b, center in enumerate(geometry.bin_centers()):
        row = angle_index * geometry.n_bins + b
        for offset in offsets:
            u = center + offset
            idx, lengths = trace_ray((u * normal[0], u * normal[1]), direction, grid)
            if idx.size == 0:
                continue
            rows.append(np.full(idx.size, row, dtype=np.int64))
            cols.append(idx)
            vals.append(lengths * weight)

    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
