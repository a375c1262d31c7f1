"""
Phantom generators.

This module provides the abstract phantom generator and the thorax phantoms used for training
and testing.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from petrecon.constants import (
    DEFAULT_KINETIC_CV,
    TEST_LESION_COUNT,
    TEST_LESION_DIAMETER_MM,
    TRAIN_LESION_DIAMETERS_MM,
)
from petrecon.errors import ConfigurationError
from petrecon.phantom.kinetics import DEFAULT_KINETICS, KineticParams, sample_kinetics_table
from petrecon.phantom.shapes import LesionShape, OrganShape, PhantomSpec
from petrecon.scanner.types import ImageGrid

# Axial semi-axis of organs, long enough to span any desk-scale volume
ORGAN_LENGTH_MM = 1000.0

# (label, name, centre x/y mm, semi-axes x/y mm, tissue, cavity semi-axes x/y mm)
THORAX_ORGANS = (
    (1, "body", (0.0, 0.0), (110.0, 80.0), "soft tissue", None),
    (2, "left lung", (-55.0, 20.0), (28.0, 40.0), "lung", None),
    (3, "right lung", (55.0, 20.0), (28.0, 40.0), "lung", None),
    (4, "liver", (-35.0, -40.0), (45.0, 22.0), "liver", None),
    (5, "myocardium", (0.0, -10.0), (25.0, 22.0), "myocardium", (15.0, 12.0)),
    (6, "spine", (0.0, 60.0), (12.0, 12.0), "marrow", None),
)

LUNG_LABELS = (2, 3)

# Lesion centres (x, y) of the test phantom, all in the central slice
TEST_LESION_CENTERS = (
    (-55.0, 42.0),
    (-55.0, 0.0),
    (55.0, 42.0),
    (55.0, 0.0),
    (60.0, 21.0),
)

SIZE_JITTER = 0.1
CENTER_JITTER_MM = 4.0
LESION_PLACEMENT_ATTEMPTS = 1000


def thorax_organs(scale: Sequence[float] = None, shift: Sequence[Tuple[float, float]] = None) -> List[OrganShape]:
    """The thorax organ list, optionally with per-organ size factors and centre shifts."""
    organs = []
    for i, (label, name, center, axes, tissue, inner) in enumerate(THORAX_ORGANS):
        f = 1.0 if scale is None else scale[i]
        dx, dy = (0.0, 0.0) if shift is None else shift[i]
        organs.append(
            OrganShape(
                label=label,
                name=name,
                center=(center[0] + dx, center[1] + dy, 0.0),
                semi_axes=(axes[0] * f, axes[1] * f, ORGAN_LENGTH_MM),
                tissue=tissue,
                inner_semi_axes=None if inner is None else (inner[0] * f, inner[1] * f, ORGAN_LENGTH_MM / 2.0),
            )
        )
    return organs


class PhantomGenerator(ABC):
    """
    Abstract base class for phantom generators.

    Args:
        grid: Grid the phantoms are meant for
        seed: Seed of the population
    """

    def __init__(self, grid: ImageGrid, seed: int = 0):
        self.grid = grid
        self.seed = seed
        extent_x, extent_y, _ = grid.extent
        if extent_x < 2 * 125.0 or extent_y < 2 * 90.0:
            raise ConfigurationError(
                f"Grid extent {extent_x} x {extent_y} mm is too small for the thorax phantom (needs 250 x 180 mm)"
            )

    @abstractmethod
    def generate(self, index: int = 0) -> PhantomSpec:
        """Return phantom ``index`` of the population."""

    @abstractmethod
    def kinetics(self, index: int = 0) -> Dict[str, KineticParams]:
        """Return the kinetic table of phantom ``index``."""


class TrainingPhantomGenerator(PhantomGenerator):
    """
    Randomly perturbed thorax phantoms with one to three lung lesions each.

    Args:
        grid: Grid the phantoms are meant for
        seed: Seed of the population
        lesion_diameters: Range of lesion diameters in mm
        max_lesions: Upper bound of the lesion count per phantom
        kinetic_cv: Coefficient of variation of the kinetic parameters
    """

    def __init__(
        self,
        grid: ImageGrid,
        seed: int = 0,
        lesion_diameters: Tuple[float, float] = TRAIN_LESION_DIAMETERS_MM,
        max_lesions: int = 3,
        kinetic_cv: float = DEFAULT_KINETIC_CV,
    ):
        super().__init__(grid, seed)
        self.lesion_diameters = lesion_diameters
        self.max_lesions = max_lesions
        self.kinetic_cv = kinetic_cv

    def generate(self, index: int = 0) -> PhantomSpec:
        rng = np.random.default_rng([self.seed, index])
        n = len(THORAX_ORGANS)
        scale = rng.uniform(1.0 - SIZE_JITTER, 1.0 + SIZE_JITTER, size=n)
        shift = rng.uniform(-CENTER_JITTER_MM, CENTER_JITTER_MM, size=(n, 2))
        # The body outline stays centred so perturbed organs remain in the field of view
        scale[0] = min(scale[0], 1.0)
        shift[0] = 0.0
        organs = thorax_organs(scale, [tuple(s) for s in shift])

        lungs = [o for o in organs if o.label in LUNG_LABELS]
        lesions: List[LesionShape] = []
        for _ in range(int(rng.integers(1, self.max_lesions + 1))):
            diameter = float(rng.uniform(*self.lesion_diameters))
            lesion = self._place_lesion(rng, lungs, lesions, diameter)
            if lesion is not None:
                lesions.append(lesion)

        logger.debug(f"Training phantom {index}: {len(lesions)} lesions")
        return PhantomSpec(organs=organs, lesions=lesions, seed=self.seed)

    def _place_lesion(self, rng, lungs, placed, diameter) -> Optional[LesionShape]:
        radius = diameter / 2.0
        half_z = max(self.grid.extent[2] / 2.0 - radius, 0.0)
        for _ in range(LESION_PLACEMENT_ATTEMPTS):
            lung = lungs[int(rng.integers(len(lungs)))]
            ax, ay = lung.semi_axes[0] - radius, lung.semi_axes[1] - radius
            if ax <= 0 or ay <= 0:
                continue
            # Uniform point in the lung shrunk by the lesion radius
            r = np.sqrt(rng.uniform())
            phi = rng.uniform(0.0, 2.0 * np.pi)
            center = (
                lung.center[0] + ax * r * np.cos(phi),
                lung.center[1] + ay * r * np.sin(phi),
                float(rng.uniform(-half_z, half_z)) if half_z > 0 else 0.0,
            )
            if all(np.linalg.norm(np.subtract(center, p.center)) > radius + p.radius for p in placed):
                return LesionShape(center=center, diameter=diameter)
        logger.warning(f"Could not place a {diameter:.1f} mm lesion")
        return None

    def kinetics(self, index: int = 0) -> Dict[str, KineticParams]:
        return sample_kinetics_table(DEFAULT_KINETICS, self.kinetic_cv, [self.seed, index])


class TestPhantomGenerator(PhantomGenerator):
    """The unperturbed thorax phantom with five equal lung lesions and mean kinetics."""

    __test__ = False

    def __init__(self, grid: ImageGrid, seed: int = 0, lesion_diameter: float = TEST_LESION_DIAMETER_MM):
        super().__init__(grid, seed)
        self.lesion_diameter = lesion_diameter

    def generate(self, index: int = 0) -> PhantomSpec:
        lesions = [
            LesionShape(center=(x, y, 0.0), diameter=self.lesion_diameter)
            for x, y in TEST_LESION_CENTERS[:TEST_LESION_COUNT]
        ]
        return PhantomSpec(organs=thorax_organs(), lesions=lesions, seed=self.seed)

    def kinetics(self, index: int = 0) -> Dict[str, KineticParams]:
        return dict(DEFAULT_KINETICS)
