"""
Test module for contrast recovery and background noise.
"""

import unittest

import numpy as np

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.evaluation import (
    RoiSpec,
    background_std,
    contrast_recovery,
    contrast_recovery_per_realization,
    lesion_difference,
    lesion_difference_cr,
    lesion_means,
)


class TestContrastRecovery(unittest.TestCase):
    def setUp(self):
        self.lesion = np.zeros((1, 4, 4), dtype=bool)
        self.lesion[0, 1:3, 1:3] = True
        self.background = np.zeros((1, 4, 4), dtype=bool)
        self.background[0, 3, :] = True
        self.roi = RoiSpec(lesion_mask=self.lesion, a_true=2.0, background_masks=[self.background])
        self.truth = np.where(self.lesion, 2.0, 1.0)

    def test_truth_gives_full_recovery(self):
        self.assertAlmostEqual(contrast_recovery([self.truth, self.truth], self.roi), 1.0, places=14)

    def test_halved_images(self):
        self.assertAlmostEqual(contrast_recovery([0.5 * self.truth] * 3, self.roi), 0.5, places=14)

    def test_mean_over_realizations(self):
        images = [np.where(self.lesion, 1.6, 1.0), np.where(self.lesion, 2.0, 1.0)]
        self.assertAlmostEqual(contrast_recovery(images, self.roi), 0.9, places=14)
        np.testing.assert_allclose(contrast_recovery_per_realization(images, self.roi), [0.8, 1.0])
        np.testing.assert_allclose(lesion_means(images, self.roi), [1.6, 2.0])

    def test_empty_lesion_mask(self):
        roi = RoiSpec(lesion_mask=np.zeros((1, 4, 4), dtype=bool), a_true=1.0, background_masks=[])
        with self.assertRaises(ConfigurationError):
            contrast_recovery([self.truth], roi)

    def test_realization_shape(self):
        with self.assertRaises(DimensionError):
            contrast_recovery([np.zeros((1, 3, 3))], self.roi)


class TestBackgroundStd(unittest.TestCase):
    def setUp(self):
        lesion = np.zeros((1, 4, 4), dtype=bool)
        lesion[0, 0, 0] = True
        self.background = np.zeros((1, 4, 4), dtype=bool)
        self.background[0, 2:4, 2:4] = True
        self.roi = RoiSpec(lesion_mask=lesion, a_true=1.0, background_masks=[self.background])

    def test_two_realizations(self):
        images = [np.full((1, 4, 4), 0.5), np.full((1, 4, 4), 1.5)]
        self.assertAlmostEqual(background_std(images, self.roi), np.sqrt(2.0) / 2.0, places=14)

    def test_identical_realizations_have_no_noise(self):
        images = [np.full((1, 4, 4), 3.0)] * 4
        self.assertEqual(background_std(images, self.roi), 0.0)

    def test_average_over_rois(self):
        second = np.zeros((1, 4, 4), dtype=bool)
        second[0, 0, 2:4] = True
        roi = RoiSpec(lesion_mask=self.roi.lesion_mask, a_true=1.0, background_masks=[self.background, second])
        first = np.full((1, 4, 4), 1.0)
        other = first.copy()
        other[self.background] = 3.0
        # the first ROI sees means (1, 3), the second sees (1, 1)
        self.assertAlmostEqual(background_std([first, other], roi), 0.5 * np.sqrt(2.0) / 2.0, places=14)

    def test_needs_two_realizations(self):
        with self.assertRaises(ConfigurationError):
            background_std([np.ones((1, 4, 4))], self.roi)

    def test_needs_background_rois(self):
        roi = RoiSpec(lesion_mask=self.roi.lesion_mask, a_true=1.0, background_masks=[])
        with self.assertRaises(ConfigurationError):
            background_std([np.ones((1, 4, 4))] * 2, roi)


class TestRoiSpec(unittest.TestCase):
    def test_positive_activity(self):
        with self.assertRaises(ValueError):
            RoiSpec(lesion_mask=np.ones((1, 2, 2), dtype=bool), a_true=0.0, background_masks=[])

    def test_background_may_not_overlap_lesion(self):
        mask = np.ones((1, 2, 2), dtype=bool)
        with self.assertRaises(ValueError):
            RoiSpec(lesion_mask=mask, a_true=1.0, background_masks=[mask])


class TestLesionDifference(unittest.TestCase):
    def test_difference_recovers_half_contrast(self):
        lesion = np.zeros((1, 4, 4), dtype=bool)
        lesion[0, 1:3, 1:3] = True
        without = [np.full((1, 4, 4), 5.0), np.full((1, 4, 4), 7.0)]
        with_lesions = [w + np.where(lesion, 1.0, 0.0) for w in without]
        np.testing.assert_allclose(lesion_difference(with_lesions[0], without[0]), np.where(lesion, 1.0, 0.0))
        self.assertAlmostEqual(lesion_difference_cr(with_lesions, without, lesion, a_true=2.0), 0.5, places=14)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            lesion_difference(np.zeros((1, 2, 2)), np.zeros((1, 3, 3)))
        with self.assertRaises(DimensionError):
            lesion_difference_cr([np.zeros((1, 2, 2))], [], np.ones((1, 2, 2), dtype=bool), 1.0)


if __name__ == "__main__":
    unittest.main()
