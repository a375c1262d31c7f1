import numpy as np
import pytest
from scipy import sparse

from petrecon.errors import DimensionError
from petrecon.recon import em_update, initial_image, loglik_from_mean, poisson_loglik
from petrecon.scanner import ImageGrid, ScannerGeometry
from petrecon.scanner.projector import SystemMatrix


@pytest.fixture
def one_voxel():
    geometry = ScannerGeometry(n_angles=1, n_bins=1, bin_spacing=4.0, rays_per_bin=1)
    grid = ImageGrid(nx=1, ny=1, nz=1, voxel_size=4.0)
    return SystemMatrix(geometry, grid, sparse.csr_matrix(np.array([[1.0]])))


class TestLoglik:
    def test_hand_value(self):
        assert loglik_from_mean(np.array([1.0]), np.array([1.0])) == pytest.approx(-1.0)

    def test_no_counts(self):
        y_bar = np.array([0.5, 2.0, 0.0])
        assert loglik_from_mean(np.zeros(3), y_bar) == pytest.approx(-2.5)

    def test_counts_on_zero_mean(self):
        assert loglik_from_mean(np.array([1.0, 2.0]), np.array([1.0, 0.0])) == float("-inf")

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            loglik_from_mean(np.zeros(2), np.zeros(3))

    def test_includes_background(self, one_voxel):
        y = np.array([[[2.0]]])
        value = poisson_loglik(y, one_voxel, np.array([[[1.0]]]), np.full((1, 1, 1), 0.5), np.full((1, 1, 1), 0.5))
        assert value == pytest.approx(2.0 * np.log(2.0) - 2.0)


class TestEmUpdate:
    def test_single_voxel(self, one_voxel):
        zero = np.zeros((1, 1, 1))
        x1 = em_update(np.array([[[2.0]]]), one_voxel, np.ones((1, 1, 1)), zero, zero)
        assert x1[0, 0, 0] == pytest.approx(2.0)

    def test_zero_mean_bins_are_skipped(self, one_voxel):
        zero = np.zeros((1, 1, 1))
        x1 = em_update(np.array([[[2.0]]]), one_voxel, zero, zero, zero)
        assert x1[0, 0, 0] == 0.0

    def test_uniform_truth_is_reached_in_one_step(self, small_system):
        x_true = np.full(small_system.grid.shape, 3.0)
        zero = np.zeros(small_system.sinogram_shape)
        y = small_system.forward(x_true)
        x1 = em_update(y, small_system, np.ones(small_system.grid.shape), zero, zero)
        np.testing.assert_allclose(x1, x_true, rtol=1e-12)


class TestInitialImage:
    def test_mean_count_per_sensitivity(self, small_system):
        y = np.full(small_system.sinogram_shape, 2.0)
        x0 = initial_image(y, small_system)
        expected = y.sum() / small_system.sensitivity.sum()
        np.testing.assert_allclose(x0, expected)

    def test_empty_data(self, small_system):
        np.testing.assert_array_equal(initial_image(np.zeros(small_system.sinogram_shape), small_system), 1.0)


class TestEmSurrogate:
    """The EM image defines a separable minorizer of the log-likelihood that touches it at the current image."""

    @pytest.fixture
    def problem(self, small_system, rng):
        shape, sino = small_system.grid.shape, small_system.sinogram_shape
        s = np.full(sino, 0.2)
        r = np.full(sino, 0.1)
        y = rng.poisson(small_system.forward(rng.uniform(0.5, 3.0, shape)) + s + r).astype(np.float64)
        x_n = rng.uniform(0.5, 2.0, shape)
        return y, s, r, x_n

    def test_minorizes_the_loglik(self, small_system, rng, problem):
        y, s, r, x_n = problem
        p = small_system.sensitivity
        x_em = em_update(y, small_system, x_n, s, r)

        def surrogate(x):
            return float(np.sum(p * (x_em * np.log(x) - x)))

        base = poisson_loglik(y, small_system, x_n, s, r)
        for _ in range(1000):
            x = rng.uniform(0.05, 4.0, small_system.grid.shape)
            bound = base + surrogate(x) - surrogate(x_n)
            assert poisson_loglik(y, small_system, x, s, r) >= bound - 1e-9 * abs(base)

    def test_gradient_matches_at_the_current_image(self, small_system, problem):
        y, s, r, x_n = problem
        p = small_system.sensitivity
        x_em = em_update(y, small_system, x_n, s, r)
        surrogate_gradient = p * (x_em / x_n - 1.0)

        h = 1e-5
        for index in [(0, 3, 4), (1, 0, 7), (1, 5, 2)]:
            step = np.zeros_like(x_n)
            step[index] = h
            fd = (poisson_loglik(y, small_system, x_n + step, s, r) - poisson_loglik(y, small_system, x_n - step, s, r))
            fd /= 2.0 * h
            assert fd == pytest.approx(surrogate_gradient[index], rel=1e-6, abs=1e-6)
