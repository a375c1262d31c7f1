"""
Image package: volume containers and image filters.
"""

from petrecon.image.volume import ImageVolume, LabelVolume
from petrecon.image.filter import gaussian_postfilter, fwhm_to_sigma_voxels

__all__ = ["ImageVolume", "LabelVolume", "gaussian_postfilter", "fwhm_to_sigma_voxels"]
