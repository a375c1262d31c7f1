"""
Input/output module.

This module provides the binary artifact formats and the artifact manifest.
"""

from petrecon.io.formats import (
    read_sinogram,
    read_volume,
    read_weights,
    write_sinogram,
    write_volume,
    write_weights,
)
from petrecon.io.manifest import MANIFEST_NAME, Manifest, ManifestEntry

__all__ = [
    "MANIFEST_NAME",
    "Manifest",
    "ManifestEntry",
    "read_sinogram",
    "read_volume",
    "read_weights",
    "write_sinogram",
    "write_volume",
    "write_weights",
]
