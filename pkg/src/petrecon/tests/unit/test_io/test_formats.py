"""
Test module for the binary artifact formats.
"""

import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from petrecon.errors import FormatError
from petrecon.io import read_sinogram, read_volume, read_weights, write_sinogram, write_volume, write_weights
from petrecon.network import NetworkConfig, ResidualUNet
from petrecon.scanner import ImageGrid


class TestVolumeFormat(unittest.TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.grid = ImageGrid(nx=2, ny=2, nz=1, voxel_size=4.0)

    def tearDown(self):
        self.tmp.cleanup()

    def test_layout(self):
        data = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        path = write_volume(self.dir / "v.piv", data, self.grid)
        raw = path.read_bytes()
        header = b"PIV1 2 2 1 4.0\n"
        self.assertTrue(raw.startswith(header))
        self.assertEqual(len(raw), len(header) + 4 * 8)
        np.testing.assert_array_equal(np.frombuffer(raw[len(header) :], dtype="<f8"), [1.0, 2.0, 3.0, 4.0])

    def test_read(self):
        data = np.arange(4.0).reshape(1, 2, 2)
        write_volume(self.dir / "v.piv", data, self.grid)
        values, grid = read_volume(self.dir / "v.piv")
        self.assertEqual(grid, self.grid)
        np.testing.assert_array_equal(values, data)

    def test_slice_thickness_in_header(self):
        grid = ImageGrid(nx=2, ny=2, nz=1, voxel_size=4.0, slice_thickness=3.0)
        path = write_volume(self.dir / "v.piv", grid.zeros(), grid)
        self.assertTrue(path.read_bytes().startswith(b"PIV1 2 2 1 4.0 3.0\n"))
        self.assertEqual(read_volume(path)[1], grid)

    def test_truncated_file(self):
        path = write_volume(self.dir / "v.piv", self.grid.zeros(), self.grid)
        path.write_bytes(path.read_bytes()[:-3])
        with self.assertRaises(FormatError):
            read_volume(path)

    def test_wrong_magic(self):
        path = write_sinogram(self.dir / "s.psg", np.zeros((1, 2, 2)))
        with self.assertRaises(FormatError):
            read_volume(path)

    def test_malformed_header(self):
        path = self.dir / "bad.piv"
        path.write_bytes(b"PIV1 2 two 1 4.0\n" + bytes(32))
        with self.assertRaises(FormatError):
            read_volume(path)

    def test_shape_must_match_grid(self):
        with self.assertRaises(FormatError):
            write_volume(self.dir / "v.piv", np.zeros((2, 2, 2)), self.grid)


class TestSinogramFormat(unittest.TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_layout(self):
        data = np.arange(6.0).reshape(1, 2, 3)
        path = write_sinogram(self.dir / "s.psg", data)
        self.assertTrue(path.read_bytes().startswith(b"PSG1 1 2 3\n"))
        np.testing.assert_array_equal(read_sinogram(path), data)

    def test_must_be_3d(self):
        with self.assertRaises(FormatError):
            write_sinogram(self.dir / "s.psg", np.zeros((2, 3)))

    def test_extra_data(self):
        path = write_sinogram(self.dir / "s.psg", np.zeros((1, 2, 3)))
        path.write_bytes(path.read_bytes() + bytes(8))
        with self.assertRaises(FormatError):
            read_sinogram(path)


class TestWeightsFormat(unittest.TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.path = Path(self.tmp.name) / "weights.pnw"
        self.config = NetworkConfig(scales=2, channels=(4, 8))
        self.net = ResidualUNet.create(self.config, seed=3)

    def tearDown(self):
        self.tmp.cleanup()

    def test_restores_parameters_and_buffers(self):
        self.net.weights["enc0.in.bn.running_mean"] = np.arange(4.0)
        write_weights(self.path, self.net)
        restored = read_weights(self.path, self.config)
        self.assertEqual(list(restored.weights), list(self.net.weights))
        self.assertEqual(restored.weights.parameter_names, self.net.weights.parameter_names)
        for name in self.net.weights:
            np.testing.assert_array_equal(restored.weights[name], self.net.weights[name])

    def test_manifest_lists_every_array(self):
        write_weights(self.path, self.net)
        text = self.path.read_bytes().split(b"\nend\n")[0].decode("ascii").splitlines()
        self.assertEqual(text[0], f"PNW1 {len(self.net.weights)}")
        self.assertTrue(text[1].startswith("config "))
        self.assertIn("param head.weight 1 4 3 3", text)
        self.assertIn("buffer enc0.in.bn.running_var 4", text)

    def test_architecture_mismatch(self):
        write_weights(self.path, self.net)
        with self.assertRaises(FormatError):
            read_weights(self.path, NetworkConfig(scales=2, channels=(4, 16)))

    def test_truncated_weights(self):
        write_weights(self.path, self.net)
        self.path.write_bytes(self.path.read_bytes()[:-8])
        with self.assertRaises(FormatError):
            read_weights(self.path)


if __name__ == "__main__":
    unittest.main()
