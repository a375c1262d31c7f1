"""
Phantom module.

This module provides labelled phantoms and the tracer kinetics that turn them into activity.
"""

from petrecon.errors import ConfigurationError
from petrecon.phantom.generator import PhantomGenerator, TestPhantomGenerator, TrainingPhantomGenerator
from petrecon.phantom.kinetics import (
    DEFAULT_KINETICS,
    CompartmentSolver,
    InputFunctionParams,
    KineticParams,
    TimeFrame,
    blood_input,
    frame_activity,
    input_peak_time,
    sample_kinetics,
    sample_kinetics_table,
    two_tissue_tac,
)
from petrecon.phantom.shapes import LesionShape, OrganShape, PhantomSpec, rasterize_phantom


class PhantomGeneratorFactory:
    """Factory class for creating phantom generator instances."""

    @staticmethod
    def create(generator_type: str, **kwargs) -> PhantomGenerator:
        """Create a phantom generator instance based on the generator type.

        Args:
            generator_type: Name of the generator class to instantiate.

        Returns:
            An instance of the specified phantom generator.

        Raises:
            ConfigurationError: If the generator type is not recognized.
        """
        generators = {
            "TrainingPhantomGenerator": TrainingPhantomGenerator,
            "TestPhantomGenerator": TestPhantomGenerator,
        }

        if generator_type not in generators:
            raise ConfigurationError(f"Unknown generator type: {generator_type}")

        return generators[generator_type](**kwargs)


__all__ = [
    "DEFAULT_KINETICS",
    "CompartmentSolver",
    "InputFunctionParams",
    "KineticParams",
    "LesionShape",
    "OrganShape",
    "PhantomGenerator",
    "PhantomGeneratorFactory",
    "PhantomSpec",
    "TestPhantomGenerator",
    "TimeFrame",
    "TrainingPhantomGenerator",
    "blood_input",
    "frame_activity",
    "input_peak_time",
    "rasterize_phantom",
    "sample_kinetics",
    "sample_kinetics_table",
    "two_tissue_tac",
]
