"""
Configuration module.
"""

from petrecon.config.run_config import (
    AcquisitionSection,
    AdmmSection,
    DenoiseSection,
    EvalSection,
    GaussSection,
    MapemSection,
    MlemSection,
    PhantomSection,
    ReconSection,
    RunConfig,
    TrainingSection,
    config_hash,
    load_config,
    parse_config,
    serialize_config,
    validate_config,
)

__all__ = [
    "AcquisitionSection",
    "AdmmSection",
    "DenoiseSection",
    "EvalSection",
    "GaussSection",
    "MapemSection",
    "MlemSection",
    "PhantomSection",
    "ReconSection",
    "RunConfig",
    "TrainingSection",
    "config_hash",
    "load_config",
    "parse_config",
    "serialize_config",
    "validate_config",
]
