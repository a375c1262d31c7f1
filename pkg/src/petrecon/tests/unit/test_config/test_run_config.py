"""
Test module for the run configuration.
"""

import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from petrecon.config import RunConfig, config_hash, load_config, parse_config, serialize_config
from petrecon.errors import ConfigurationError

DESK_CONFIG = Path(__file__).resolve().parents[5] / "configs" / "desk.toml"


class TestParseConfig(unittest.TestCase):
    def test_empty_document_gives_defaults(self):
        self.assertEqual(parse_config(""), RunConfig())

    def test_partial_sections(self):
        cfg = parse_config("seed = 4\n[acquisition]\nthinning_ratio = 0.25\n")
        self.assertEqual(cfg.seed, 4)
        self.assertEqual(cfg.acquisition.thinning_ratio, 0.25)
        self.assertEqual(cfg.acquisition.background_fraction, 0.6)

    def test_out_of_range_value_names_the_key(self):
        with self.assertRaises(ConfigurationError) as ctx:
            parse_config("[acquisition]\nbackground_fraction = 1.5\n")
        self.assertIn("acquisition.background_fraction", str(ctx.exception))

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError) as ctx:
            parse_config("[recon.mlem]\nsubsets = 4\n")
        self.assertIn("recon.mlem.subsets", str(ctx.exception))

    def test_malformed_toml(self):
        with self.assertRaises(ConfigurationError):
            parse_config("[grid\nnx = 4")

    def test_grid_must_suit_the_network(self):
        with self.assertRaises(ConfigurationError):
            parse_config("[grid]\nnx = 30\n")

    def test_unknown_method(self):
        with self.assertRaises(ConfigurationError):
            parse_config('[eval]\nmethods = ["mlem", "fbp"]\n')

    def test_lesion_realizations_bounded(self):
        with self.assertRaises(ConfigurationError):
            parse_config("[eval]\nrealizations = 3\nlesion_realizations = 4\n")

    def test_bundled_desk_config(self):
        cfg, base = load_config(DESK_CONFIG)
        self.assertEqual(base, DESK_CONFIG.parent)
        self.assertEqual(cfg.grid.nx, 64)
        self.assertEqual(cfg.training.lr_decay, 0.97)


class TestSerializeConfig(unittest.TestCase):
    def setUp(self):
        self.cfg = parse_config(
            "seed = 11\n[eval]\ncompare_std = 0.2\n[recon.admm]\nrho = 0.5\n[phantom.input]\na1 = 800.0\n"
        )

    def test_reparses_to_the_same_config(self):
        self.assertEqual(parse_config(serialize_config(self.cfg)), self.cfg)
        self.assertEqual(parse_config(serialize_config(RunConfig())), RunConfig())

    def test_nested_tables_and_omitted_none(self):
        text = serialize_config(RunConfig())
        self.assertIn("[recon.admm]", text)
        self.assertIn("[phantom.input]", text)
        self.assertNotIn("compare_std", text)
        self.assertNotIn("rho =", text)

    def test_hash(self):
        self.assertEqual(config_hash(self.cfg), config_hash(parse_config(serialize_config(self.cfg))))
        self.assertNotEqual(config_hash(self.cfg), config_hash(self.cfg.model_copy(update={"seed": 12})))
        self.assertEqual(len(config_hash(self.cfg)), 64)


class TestLoadConfig(unittest.TestCase):
    def test_defaults_without_a_file(self):
        cfg, base = load_config(None)
        self.assertEqual(cfg, RunConfig())
        self.assertEqual(base, Path.cwd())

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_config("/nonexistent/petrecon.toml")

    def test_base_directory_is_the_file_directory(self):
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.toml"
            path.write_text("seed = 2\n")
            cfg, base = load_config(path)
            self.assertEqual(cfg.seed, 2)
            self.assertEqual(base, path.resolve().parent)


class TestSections(unittest.TestCase):
    def setUp(self):
        self.cfg = RunConfig()

    def test_acquisition(self):
        acq = self.cfg.acquisition.acquisition(seed=5)
        self.assertEqual(acq.seed, 5)
        self.assertEqual(acq.target_true_counts, self.cfg.acquisition.target_true_counts)

    def test_training(self):
        train = self.cfg.training.train_config(seed=3)
        self.assertEqual(train.seed, 3)
        self.assertEqual(train.epochs, self.cfg.training.epochs)

    def test_admm_and_penalty(self):
        self.assertEqual(self.cfg.recon.admm.admm(max_iterations=3).max_iterations, 3)
        self.assertIsNone(self.cfg.recon.admm.admm().rho)
        self.assertEqual(self.cfg.recon.mapem.penalty(beta=2.0).beta, 2.0)
        self.assertEqual(self.cfg.recon.mapem.penalty().beta, self.cfg.recon.mapem.beta)

    def test_phantom_frame(self):
        frame = self.cfg.phantom.frame
        self.assertEqual((frame.t_start, frame.t_end), (20.0, 60.0))
        with self.assertRaises(ConfigurationError):
            parse_config("[phantom]\nframe_start = 70.0\n")


if __name__ == "__main__":
    unittest.main()
