"""
Exception hierarchy for petrecon.

Validation problems derive from ValueError so callers that only know about the standard
exception keep working.
"""

from typing import Any, Mapping, Optional


class PetReconError(Exception):
    """Base class for all petrecon errors."""


class ConfigurationError(PetReconError, ValueError):
    """Invalid configuration or geometry."""


class DimensionError(PetReconError, ValueError):
    """Array shapes or grids do not match."""


class DomainError(PetReconError, ValueError):
    """An argument lies outside the domain of the operation."""


class FormatError(PetReconError, ValueError):
    """A file does not follow the expected binary layout."""


class MissingArtifactError(PetReconError, FileNotFoundError):
    """An upstream artifact is missing.

    Args:
        path: The missing file
        producer: The subcommand that writes the artifact
    """

    def __init__(self, path: str, producer: str):
        self.path = path
        self.producer = producer
        super().__init__(f"Missing artifact '{path}'; run 'petrecon {producer}' first")


class NumericalError(PetReconError, ArithmeticError):
    """A computation produced non-finite values.

    Args:
        message: Description of the failure
        state: Arrays describing the solver state at the time of failure
    """

    def __init__(self, message: str, state: Optional[Mapping[str, Any]] = None):
        super().__init__(message)
        self.state = dict(state or {})
