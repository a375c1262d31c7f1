"""
Volume containers.

This module provides the ImageVolume class, which pairs an image array with the grid it lives on,
and the LabelVolume class, which pairs an integer label array with the grid it lives on and the
tissue of every label.
"""

from typing import Dict

import numpy as np

from petrecon.errors import ConfigurationError, DimensionError
from petrecon.scanner.types import ImageGrid


class ImageVolume:
    """
    An image array together with the grid it lives on.

    Args:
        grid: The image grid
        data: Image array of shape ``grid.shape``
    """

    def __init__(self, grid: ImageGrid, data: np.ndarray):
        self.grid = grid
        self.data = data


class LabelVolume:
    """
    An integer label volume together with the tissue each label stands for.

    Args:
        grid: The image grid
        data: Integer array of shape ``grid.shape``
        tissues: Mapping label -> tissue name; label 0 is the surrounding air
    """

    def __init__(self, grid: ImageGrid, data: np.ndarray, tissues: Dict[int, str]):
        array = np.asarray(data)
        if array.shape != grid.shape:
            raise DimensionError(f"Label data shape {array.shape} does not match grid {grid.shape}")
        if not np.issubdtype(array.dtype, np.integer):
            raise ConfigurationError("Label volume must hold integer labels")
        self.grid = grid
        self.data = array.astype(np.int32, copy=False)
        self.tissues = dict(tissues)

    def mask(self, label: int) -> np.ndarray:
        return self.data == label

    def tissue_mask(self, tissue: str) -> np.ndarray:
        labels = [label for label, name in self.tissues.items() if name == tissue]
        return np.isin(self.data, labels)

    def labels_of(self, tissue: str):
        return sorted(label for label, name in self.tissues.items() if name == tissue)

    def __str__(self) -> str:
        return f"LabelVolume({self.grid.nx}x{self.grid.ny}x{self.grid.nz}, {len(self.tissues)} labels)"

    def __repr__(self) -> str:
        return self.__str__()
