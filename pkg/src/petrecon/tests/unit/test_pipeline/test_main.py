"""
Test module for the command-line interface.
"""

import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from loguru import logger
from typer.testing import CliRunner

from petrecon.config import RunConfig, config_hash, load_config, parse_config
from petrecon.io import Manifest
from petrecon.main import EXIT_ARTIFACT, EXIT_CONFIG, app
from petrecon.tests.configs import TINY_CONFIG


class TestCli(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.tmp = TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.config = self.dir / "run.toml"
        self.config.write_text(TINY_CONFIG)

    def tearDown(self):
        logger.remove()
        self.tmp.cleanup()

    def invoke(self, *args):
        return self.runner.invoke(app, list(args))

    def test_print_defaults(self):
        result = self.invoke("--print-defaults")
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(parse_config(result.stdout), RunConfig())

    def test_print_defaults_on_a_subcommand(self):
        result = self.invoke("simulate", "--print-defaults")
        self.assertEqual(result.exit_code, 0)
        self.assertIn("[recon.admm]", result.stdout)

    def test_missing_artifact(self):
        result = self.invoke("simulate", "-c", str(self.config))
        self.assertEqual(result.exit_code, EXIT_ARTIFACT)

    def test_missing_config_file(self):
        result = self.invoke("phantom", "-c", str(self.dir / "absent.toml"))
        self.assertEqual(result.exit_code, EXIT_CONFIG)

    def test_invalid_config(self):
        self.config.write_text("[acquisition]\nbackground_fraction = 1.5\n")
        result = self.invoke("phantom", "-c", str(self.config))
        self.assertEqual(result.exit_code, EXIT_CONFIG)

    def test_unknown_method(self):
        result = self.invoke("reconstruct", "-c", str(self.config), "--method", "fbp")
        self.assertEqual(result.exit_code, EXIT_CONFIG)

    def test_phantom_writes_manifest_under_seed_override(self):
        result = self.invoke("phantom", "-c", str(self.config), "--seed", "5")
        self.assertEqual(result.exit_code, 0)
        cfg, _ = load_config(self.config)
        expected = config_hash(cfg.model_copy(update={"seed": 5}))
        manifest = Manifest.load(self.dir / "out")
        self.assertEqual(len(manifest), 7)
        self.assertTrue(all(e.config_hash == expected and e.command == "phantom" for e in manifest.entries()))


if __name__ == "__main__":
    unittest.main()
