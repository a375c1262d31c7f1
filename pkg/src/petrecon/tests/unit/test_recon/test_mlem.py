import numpy as np
import pytest

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.recon import (
    GaussianReconstructor,
    MlemReconstructor,
    ReconConfig,
    ReconstructorFactory,
    mlem,
)


class TestMlem:
    def test_likelihood_never_decreases(self, small_system, measurement):
        counts, means = measurement
        cfg = ReconConfig(iterations=40, snapshots=())
        result = mlem(counts, small_system, means.scatters, means.randoms, cfg, track_objective=True)
        objective = np.array(result.objective)
        assert len(objective) == 40
        assert np.all(np.diff(objective) >= -1e-9 * np.abs(objective[1:]))
        assert np.all(result.image >= 0)

    def test_snapshots(self, small_system, measurement):
        counts, means = measurement
        result = mlem(counts, small_system, means.scatters, means.randoms, ReconConfig(iterations=6, snapshots=(2, 6)))
        assert sorted(result.snapshots) == [2, 6]
        np.testing.assert_array_equal(result.snapshots[6], result.image)
        short = mlem(counts, small_system, means.scatters, means.randoms, ReconConfig(iterations=2, snapshots=()))
        np.testing.assert_array_equal(result.snapshots[2], short.image)

    def test_noise_free_data_converge(self, small_system, truth):
        zero = np.zeros(small_system.sinogram_shape)
        y = small_system.forward(truth)
        early = mlem(y, small_system, zero, zero, ReconConfig(iterations=5, snapshots=())).image
        late = mlem(y, small_system, zero, zero, ReconConfig(iterations=200, snapshots=())).image
        assert np.linalg.norm(late - truth) < np.linalg.norm(early - truth)
        assert np.linalg.norm(late - truth) / np.linalg.norm(truth) < 0.1

    def test_preserves_counts_without_background(self, small_system, truth, rng):
        zero = np.zeros(small_system.sinogram_shape)
        y = rng.poisson(small_system.forward(truth) * 50.0).astype(np.float64)
        p = small_system.sensitivity
        result = mlem(y, small_system, zero, zero, ReconConfig(iterations=12, snapshots=(1, 5, 12)))
        for image in result.snapshots.values():
            assert float(np.sum(p * image)) == pytest.approx(float(y.sum()), rel=1e-10)

    def test_callback_and_start_value(self, small_system, measurement):
        counts, means = measurement
        seen = []
        cfg = ReconConfig(iterations=3, snapshots=(), initial_value=2.0)
        mlem(counts, small_system, means.scatters, means.randoms, cfg, callback=lambda it, x: seen.append(it))
        assert seen == [1, 2, 3]

    def test_snapshot_outside_range(self):
        with pytest.raises(ValueError):
            ReconConfig(iterations=5, snapshots=(6,))


class TestReconstructors:
    def test_sweep_matches_single_runs(self, small_system, measurement):
        counts, means = measurement
        sweep = MlemReconstructor(small_system, means.scatters, means.randoms).sweep(counts, [5, 2])
        for value, image in zip([5, 2], sweep):
            single = MlemReconstructor(small_system, means.scatters, means.randoms, iterations=value)
            np.testing.assert_array_equal(image, single.reconstruct(counts))

    def test_unfiltered_gauss_equals_mlem(self, small_system, measurement):
        counts, means = measurement
        gauss = GaussianReconstructor(small_system, means.scatters, means.randoms, iterations=10, fwhm=0.0)
        plain = MlemReconstructor(small_system, means.scatters, means.randoms, iterations=10)
        np.testing.assert_array_equal(gauss.reconstruct(counts), plain.reconstruct(counts))

    def test_gauss_sweep_smooths(self, small_system, measurement):
        counts, means = measurement
        gauss = GaussianReconstructor(small_system, means.scatters, means.randoms, iterations=10)
        sharp, smooth = gauss.sweep(counts, [0.0, 8.0])
        assert smooth.std() < sharp.std()

    def test_count_shape_is_checked(self, small_system, measurement):
        _, means = measurement
        with pytest.raises(DimensionError):
            MlemReconstructor(small_system, means.scatters, means.randoms).reconstruct(np.zeros((1, 2, 3)))

    def test_background_shape_is_checked(self, small_system):
        with pytest.raises(DimensionError):
            MlemReconstructor(small_system, np.zeros((1, 2, 3)), np.zeros((1, 2, 3)))

    def test_factory(self, small_system, measurement):
        _, means = measurement
        recon = ReconstructorFactory.create("mlem", system=small_system, scatters=means.scatters, randoms=means.randoms)
        assert isinstance(recon, MlemReconstructor)
        assert recon.sweep_parameter == "iterations"
        with pytest.raises(ConfigurationError):
            ReconstructorFactory.create("osem", system=small_system, scatters=means.scatters, randoms=means.randoms)
