import json

import pytest

from petrecon.errors import FormatError
from petrecon.io import MANIFEST_NAME, Manifest


class TestManifest:
    def test_paths_are_relative_and_sorted(self, tmp_path):
        manifest = Manifest(tmp_path)
        manifest.record("image", tmp_path / "recon" / "mlem_r00.piv", "reconstruct", "abc")
        manifest.record("sinogram", tmp_path / "data" / "test_low_r00.psg", "simulate", "abc")
        assert [e.path for e in manifest.entries()] == ["data/test_low_r00.psg", "recon/mlem_r00.piv"]
        assert "recon/mlem_r00.piv" in manifest

    def test_recording_again_replaces(self, tmp_path):
        manifest = Manifest(tmp_path)
        manifest.record("csv", tmp_path / "eval" / "curves.csv", "evaluate", "old")
        manifest.record("csv", tmp_path / "eval" / "curves.csv", "evaluate", "new")
        assert len(manifest) == 1
        assert manifest.entries()[0].config_hash == "new"

    def test_save_and_load(self, tmp_path):
        manifest = Manifest(tmp_path)
        manifest.record("weights", tmp_path / "network" / "weights.pnw", "train", "h")
        path = manifest.save()
        assert path == tmp_path / MANIFEST_NAME
        document = json.loads(path.read_text())
        assert document["entries"][0] == {
            "kind": "weights",
            "path": "network/weights.pnw",
            "command": "train",
            "config_hash": "h",
        }
        assert Manifest.load(tmp_path).entries() == manifest.entries()

    def test_missing_file_is_empty(self, tmp_path):
        assert len(Manifest.load(tmp_path)) == 0

    def test_malformed_file(self, tmp_path):
        (tmp_path / MANIFEST_NAME).write_text("{not json")
        with pytest.raises(FormatError):
            Manifest.load(tmp_path)

    def test_path_outside_root(self, tmp_path):
        with pytest.raises(ValueError):
            Manifest(tmp_path / "out").record("csv", tmp_path / "elsewhere.csv", "evaluate", "h")
