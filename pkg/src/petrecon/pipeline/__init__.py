"""
Pipeline module.

This module provides the subcommands of the command-line interface as methods of one pipeline object.
"""

from petrecon.pipeline.commands import (
    COMPARISONS,
    NETWORK_METHODS,
    EvaluationSummary,
    Pipeline,
    ReconOverrides,
    derive_seed,
)

__all__ = ["COMPARISONS", "NETWORK_METHODS", "EvaluationSummary", "Pipeline", "ReconOverrides", "derive_seed"]
