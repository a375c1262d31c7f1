"""
Test module for the system matrix and the projection operators.
"""

import numpy as np
import pytest

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.scanner import ImageGrid, ScannerGeometry, back_project, build_system_matrix, forward_project


class TestSystemMatrix:
    def test_zero_image_projects_to_zero(self, small_system):
        sino = forward_project(small_system, small_system.grid.zeros())
        assert sino.shape == small_system.sinogram_shape
        assert not sino.any()

    def test_zero_sinogram_backprojects_to_zero(self, small_system):
        image = back_project(small_system, np.zeros(small_system.sinogram_shape))
        assert image.shape == small_system.grid.shape
        assert not image.any()

    def test_linearity(self, small_system, rng):
        a = rng.random(small_system.grid.shape)
        b = rng.random(small_system.grid.shape)
        np.testing.assert_allclose(
            small_system.forward(a + b), small_system.forward(a) + small_system.forward(b), rtol=1e-12, atol=1e-12
        )

    def test_adjoint_identity(self, small_system, rng):
        for _ in range(100):
            x = rng.standard_normal(small_system.grid.shape)
            g = rng.standard_normal(small_system.sinogram_shape)
            lhs = float(np.vdot(small_system.forward(x), g))
            rhs = float(np.vdot(x, small_system.back(g)))
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)

    def test_delta_image_gives_matrix_column(self, small_system):
        j = 27
        x = small_system.grid.zeros()
        x[0].flat[j] = 1.0
        sino = small_system.forward(x)
        np.testing.assert_array_equal(sino[0].ravel(), small_system.column(j))
        assert not sino[1].any()

    def test_backprojected_ones_equal_sensitivity(self, small_system):
        image = small_system.back(np.ones(small_system.sinogram_shape))
        np.testing.assert_allclose(image, small_system.sensitivity, rtol=1e-12)
        assert np.all(small_system.sensitivity > 0)

    def test_matrix_does_not_depend_on_worker_count(self, small_grid, small_geometry, small_system):
        threaded = build_system_matrix(small_geometry, small_grid, workers=3)
        assert (threaded.matrix != small_system.matrix).nnz == 0

    def test_field_of_view_must_cover_grid(self):
        grid = ImageGrid(nx=16, ny=16, nz=1, voxel_size=4.0)
        with pytest.raises(ConfigurationError):
            build_system_matrix(ScannerGeometry(n_angles=4, n_bins=8, bin_spacing=4.0), grid)

    def test_shape_mismatch_is_rejected(self, small_system):
        with pytest.raises(DimensionError):
            small_system.forward(np.zeros((1, 8, 8)))
        with pytest.raises(DimensionError):
            small_system.back(np.zeros((2, 3, 3)))
