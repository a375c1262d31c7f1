"""
Test module for the blood input, the compartment model and kinetic sampling.
"""

import unittest

import numpy as np
from scipy import integrate

from petrecon.errors import ConfigurationError, DomainError
from petrecon.image.volume import LabelVolume
from petrecon.phantom import (
    DEFAULT_KINETICS,
    CompartmentSolver,
    KineticParams,
    TimeFrame,
    blood_input,
    frame_activity,
    input_peak_time,
    sample_kinetics,
    sample_kinetics_table,
    two_tissue_tac,
)
from petrecon.scanner import ImageGrid

TIMES = np.array([0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 60.0])


def _quad(f, t):
    points = [p for p in (0.25, 1.0, 5.0) if p < t]
    value, _ = integrate.quad(f, 0.0, t, points=points or None, limit=500, epsabs=1e-14, epsrel=1e-12)
    return value


class TestBloodInput(unittest.TestCase):
    def test_zero_at_injection(self):
        self.assertAlmostEqual(blood_input(0.0), 0.0, places=12)

    def test_decays_to_zero(self):
        self.assertLess(blood_input(1e4), 1e-40)

    def test_negative_time_is_rejected(self):
        with self.assertRaises(DomainError):
            blood_input(-0.1)

    def test_vector_input(self):
        values = blood_input(TIMES)
        self.assertEqual(values.shape, TIMES.shape)
        self.assertTrue(np.all(values > 0))

    def test_peak_matches_dense_search(self):
        grid = np.linspace(0.0, 2.0, 2_000_001)
        values = blood_input(grid)
        peak = input_peak_time()
        self.assertAlmostEqual(peak, float(grid[np.argmax(values)]), delta=1e-5)
        self.assertGreaterEqual(blood_input(peak), float(values.max()) - 1e-9)


class TestTwoTissueTac(unittest.TestCase):
    def test_no_uptake_gives_zero(self):
        tac = two_tissue_tac(KineticParams(K1=0.0, k2=0.5, k3=0.1, k4=0.0, V=0.0), None, TIMES)
        np.testing.assert_array_equal(tac, np.zeros_like(TIMES))

    def test_pure_blood_voxel_follows_input(self):
        tac = two_tissue_tac(KineticParams(K1=0.0, k2=0.0, k3=0.0, k4=0.0, V=1.0), None, TIMES)
        np.testing.assert_array_equal(tac, blood_input(TIMES))

    def test_pure_uptake_integrates_input(self):
        K1 = 0.4
        tac = two_tissue_tac(KineticParams(K1=K1, k2=0.0, k3=0.0, k4=0.0, V=0.0), None, TIMES)
        expected = np.array([K1 * _quad(blood_input, t) for t in TIMES])
        np.testing.assert_allclose(tac, expected, rtol=1e-6)

    def test_irreversible_model_matches_convolution(self):
        K1, k2, k3 = 0.6, 1.2, 0.1
        kappa = k2 + k3
        tac = two_tissue_tac(KineticParams(K1=K1, k2=k2, k3=k3, k4=0.0, V=0.0), None, TIMES)

        expected = []
        for t in TIMES:
            free = K1 * _quad(lambda s: blood_input(s) * np.exp(-kappa * (t - s)), t)
            bound = K1 * k3 * _quad(lambda s: blood_input(s) * (1.0 - np.exp(-kappa * (t - s))) / kappa, t)
            expected.append(free + bound)
        np.testing.assert_allclose(tac, expected, rtol=1e-6)

    def test_time_grid_must_increase(self):
        params = DEFAULT_KINETICS["liver"]
        with self.assertRaises(DomainError):
            two_tissue_tac(params, None, [0.0, 2.0, 1.0])
        with self.assertRaises(DomainError):
            two_tissue_tac(params, None, [-1.0, 2.0])

    def test_query_times_do_not_change_results(self):
        solver = CompartmentSolver([DEFAULT_KINETICS["myocardium"]])
        alone = solver.tissue_curves([37.123])
        together = solver.tissue_curves([1.0, 20.0, 37.123, 50.0])
        self.assertEqual(alone[0, 0], together[2, 0])


class TestSampleKinetics(unittest.TestCase):
    def test_zero_cv_returns_mean(self):
        mean = DEFAULT_KINETICS["lung lesion"]
        self.assertEqual(sample_kinetics(mean, 0.0, seed=3), mean)

    def test_deterministic_per_seed(self):
        mean = DEFAULT_KINETICS["liver"]
        self.assertEqual(sample_kinetics(mean, 0.1, seed=[5, 1]), sample_kinetics(mean, 0.1, seed=[5, 1]))
        self.assertNotEqual(sample_kinetics(mean, 0.1, seed=[5, 1]), sample_kinetics(mean, 0.1, seed=[5, 2]))

    def test_sample_mean_matches_lung_lesion_table(self):
        mean = DEFAULT_KINETICS["lung lesion"]
        draws = [sample_kinetics(mean, 0.1, seed=[11, i]) for i in range(4000)]
        for name in ("K1", "k2", "k3", "k4", "V"):
            sample_mean = np.mean([getattr(d, name) for d in draws])
            self.assertAlmostEqual(sample_mean / getattr(mean, name), 1.0, delta=0.02)
        self.assertTrue(all(0.0 <= d.V <= 1.0 for d in draws))

    def test_negative_cv_is_rejected(self):
        with self.assertRaises(DomainError):
            sample_kinetics(DEFAULT_KINETICS["liver"], -0.1, seed=0)

    def test_table_keeps_zero_parameters(self):
        table = sample_kinetics_table(DEFAULT_KINETICS, 0.1, seed=4)
        self.assertEqual(set(table), set(DEFAULT_KINETICS))
        self.assertEqual(table["air"], DEFAULT_KINETICS["air"])
        self.assertEqual(table["kidney"].k3, 0.0)


class TestFrameActivity(unittest.TestCase):
    def setUp(self):
        self.grid = ImageGrid(nx=2, ny=2, nz=1, voxel_size=4.0)
        data = np.array([[[1, 1], [2, 0]]], dtype=np.int32)
        self.labels = LabelVolume(self.grid, data, {0: "air", 1: "myocardium", 2: "lung"})

    def test_same_tissue_same_activity(self):
        activity = frame_activity(self.labels, DEFAULT_KINETICS).data
        self.assertEqual(activity[0, 0, 0], activity[0, 0, 1])
        self.assertEqual(activity[0, 1, 1], 0.0)
        self.assertTrue(np.all(activity >= 0))

    def test_myocardium_is_hotter_than_lung(self):
        activity = frame_activity(self.labels, DEFAULT_KINETICS, TimeFrame(t_start=20.0, t_end=60.0)).data
        self.assertGreater(activity[0, 0, 0] / activity[0, 1, 0], 1.0)

    def test_zero_kinetics_give_zero_activity(self):
        zero = KineticParams(K1=0.0, k2=0.0, k3=0.0, k4=0.0, V=0.0)
        table = {name: zero for name in DEFAULT_KINETICS}
        self.assertFalse(frame_activity(self.labels, table).data.any())

    def test_missing_tissue_is_rejected(self):
        table = {k: v for k, v in DEFAULT_KINETICS.items() if k != "lung"}
        with self.assertRaises(ConfigurationError):
            frame_activity(self.labels, table)

    def test_frame_integral_is_additive(self):
        whole = frame_activity(self.labels, DEFAULT_KINETICS, TimeFrame(t_start=20.0, t_end=60.0)).data
        early = frame_activity(self.labels, DEFAULT_KINETICS, TimeFrame(t_start=20.0, t_end=35.0)).data
        late = frame_activity(self.labels, DEFAULT_KINETICS, TimeFrame(t_start=35.0, t_end=60.0)).data
        np.testing.assert_allclose(whole, (15.0 * early + 25.0 * late) / 40.0, rtol=1e-12, atol=1e-15)

    def test_frame_order_is_validated(self):
        with self.assertRaises(ValueError):
            TimeFrame(t_start=60.0, t_end=20.0)


if __name__ == "__main__":
    unittest.main()
