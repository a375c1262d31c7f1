import numpy as np
import pytest

from petrecon.scanner import ImageGrid, ScannerGeometry, build_system_matrix
from petrecon.tests.configs import TINY_CONFIG

pytest.mark.unit = pytest.mark.define("Unit tests")
pytest.mark.integration = pytest.mark.define("Integration tests")


@pytest.fixture
def small_grid():
    """An 8 x 8 x 2 grid of 4 mm voxels."""
    return ImageGrid(nx=8, ny=8, nz=2, voxel_size=4.0)


@pytest.fixture
def small_geometry():
    """A sinogram geometry covering the small grid."""
    return ScannerGeometry(n_angles=12, n_bins=14, bin_spacing=4.0, rays_per_bin=3)


@pytest.fixture
def small_system(small_grid, small_geometry):
    return build_system_matrix(small_geometry, small_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config_file(tmp_path):
    """A configuration small enough to run every pipeline step in seconds; artifacts go to ``out``."""
    path = tmp_path / "run.toml"
    path.write_text(TINY_CONFIG)
    return path
