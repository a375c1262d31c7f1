"""
Run configuration.

The configuration is a TOML document validated by pydantic models, one per section. Unknown keys
are rejected and every validation problem is reported with the dotted key that caused it.
"""

import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from petrecon.acquisition.simulation import AcquisitionConfig
from petrecon.constants import (
    DEFAULT_BACKGROUND_FRACTION,
    DEFAULT_BACKGROUND_ROIS,
    DEFAULT_FRAME_END,
    DEFAULT_FRAME_START,
    DEFAULT_KINETIC_CV,
    DEFAULT_LESION_INTENSITY_CV,
    DEFAULT_ODE_STEP,
    DEFAULT_REALIZATIONS,
    DEFAULT_ROI_RADIUS_VOXELS,
    DEFAULT_SNAPSHOTS,
    DEFAULT_THINNING_RATIO,
    DEFAULT_TRAINING_PHANTOMS,
    DEFAULT_TRUE_COUNTS,
    TEST_LESION_DIAMETER_MM,
    TRAIN_LESION_DIAMETERS_MM,
)
from petrecon.errors import ConfigurationError
from petrecon.network.training import TrainConfig
from petrecon.network.unet import NetworkConfig
from petrecon.phantom.kinetics import InputFunctionParams, TimeFrame
from petrecon.recon.admm import AdmmConfig
from petrecon.recon import METHODS
from petrecon.recon.mapem import PenaltyConfig
from petrecon.scanner.types import ImageGrid, ScannerGeometry


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PhantomSection(Section):
    """Phantom population and kinetics."""

    training_phantoms: int = Field(DEFAULT_TRAINING_PHANTOMS, ge=1)
    max_lesions: int = Field(3, ge=1)
    lesion_diameters: Tuple[float, float] = TRAIN_LESION_DIAMETERS_MM
    test_lesion_diameter: float = Field(TEST_LESION_DIAMETER_MM, gt=0)
    kinetic_cv: float = Field(DEFAULT_KINETIC_CV, ge=0)
    frame_start: float = Field(DEFAULT_FRAME_START, ge=0)
    frame_end: float = Field(DEFAULT_FRAME_END, gt=0)
    ode_step: float = Field(DEFAULT_ODE_STEP, gt=0)
    input: InputFunctionParams = Field(default_factory=InputFunctionParams)

    @model_validator(mode="after")
    def _check(self) -> "PhantomSection":
        low, high = self.lesion_diameters
        if not 0 < low <= high:
            raise ValueError("lesion_diameters must be an increasing pair of positive values")
        TimeFrame(t_start=self.frame_start, t_end=self.frame_end)
        return self

    @property
    def frame(self) -> TimeFrame:
        return TimeFrame(t_start=self.frame_start, t_end=self.frame_end)


class AcquisitionSection(Section):
    """Count levels of the simulated scans."""

    target_true_counts: int = Field(DEFAULT_TRUE_COUNTS, gt=0)
    background_fraction: float = Field(DEFAULT_BACKGROUND_FRACTION, ge=0, lt=1)
    thinning_ratio: float = Field(DEFAULT_THINNING_RATIO, gt=0, le=1)
    lesion_intensity_cv: float = Field(DEFAULT_LESION_INTENSITY_CV, ge=0)

    def acquisition(self, seed: int) -> AcquisitionConfig:
        return AcquisitionConfig(
            target_true_counts=self.target_true_counts, background_fraction=self.background_fraction, seed=seed
        )


class TrainingSection(Section):
    """Training-set construction and optimizer settings."""

    label_iterations: int = Field(60, ge=1)
    snapshots: Tuple[int, ...] = DEFAULT_SNAPSHOTS
    low_count_realizations: int = Field(1, ge=1)
    augmented_copies: int = Field(1, ge=0)
    epochs: int = Field(40, ge=1)
    batch_size: int = Field(8, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    lr_decay: float = Field(1.0, gt=0, le=1)
    augment: bool = True
    max_shift: int = Field(4, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "TrainingSection":
        if not self.snapshots or min(self.snapshots) < 1:
            raise ValueError("snapshots must be positive iteration numbers")
        return self

    def train_config(self, seed: int) -> TrainConfig:
        fields = self.model_dump(
            exclude={"label_iterations", "snapshots", "low_count_realizations", "augmented_copies"}
        )
        return TrainConfig(seed=seed, **fields)


class MlemSection(Section):
    iterations: int = Field(60, ge=1)
    sweep: Tuple[int, ...] = (5, 10, 20, 30, 40, 60)


class MapemSection(Section):
    iterations: int = Field(60, ge=1)
    beta: float = Field(1.0, ge=0)
    sigma_scale: float = Field(1e-5, gt=0)
    warmup_iterations: int = Field(10, ge=0)
    sweep: Tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

    def penalty(self, beta: Optional[float] = None) -> PenaltyConfig:
        return PenaltyConfig(
            beta=self.beta if beta is None else beta,
            sigma_scale=self.sigma_scale,
            warmup_iterations=self.warmup_iterations,
        )


class GaussSection(Section):
    iterations: int = Field(60, ge=1)
    fwhm: float = Field(0.0, ge=0)
    sweep: Tuple[float, ...] = (0.0, 4.0, 6.0, 8.0, 10.0, 12.0)


class DenoiseSection(Section):
    iterations: int = Field(60, ge=1)
    sweep: Tuple[int, ...] = (20, 30, 40, 60)


class AdmmSection(Section):
    rho: Optional[float] = Field(None, gt=0)
    max_iterations: int = Field(20, ge=1)
    sub_iterations: int = Field(5, ge=1)
    step: float = Field(1.0, gt=0)
    shrink: float = Field(0.5, gt=0, lt=1)
    max_backtracks: int = Field(30, ge=0)
    init_iterations: int = Field(30, ge=1)
    alpha_init: Literal["network_output", "em_image"] = "network_output"
    sweep: Tuple[int, ...] = (2, 5, 10, 15, 20)

    def admm(self, max_iterations: Optional[int] = None) -> AdmmConfig:
        fields = self.model_dump(exclude={"sweep"})
        if max_iterations is not None:
            fields["max_iterations"] = max_iterations
        return AdmmConfig(**fields)


class ReconSection(Section):
    mlem: MlemSection = Field(default_factory=MlemSection)
    mapem: MapemSection = Field(default_factory=MapemSection)
    gauss: GaussSection = Field(default_factory=GaussSection)
    denoise: DenoiseSection = Field(default_factory=DenoiseSection)
    admm: AdmmSection = Field(default_factory=AdmmSection)


class EvalSection(Section):
    realizations: int = Field(DEFAULT_REALIZATIONS, ge=2)
    background_rois: int = Field(DEFAULT_BACKGROUND_ROIS, ge=1)
    roi_radius: int = Field(DEFAULT_ROI_RADIUS_VOXELS, ge=1)
    background_tissue: str = "liver"
    methods: Tuple[str, ...] = ("mlem", "mapem", "gauss", "cnn-denoise", "cnn-admm")
    compare_std: Optional[float] = Field(None, gt=0)
    lesion_difference: bool = True
    lesion_realizations: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "EvalSection":
        if self.lesion_realizations > self.realizations:
            raise ValueError("lesion_realizations cannot exceed realizations")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"Unknown methods {unknown}")
        return self


class RunConfig(Section):
    """
    Complete configuration of a pipeline run.

    Attributes:
        seed: Global seed; every random stream is derived from it
        output_dir: Artifact directory, relative to the configuration file
    """

    seed: int = 0
    output_dir: str = "petrecon-out"
    grid: ImageGrid = Field(default_factory=ImageGrid)
    scanner: ScannerGeometry = Field(default_factory=ScannerGeometry)
    phantom: PhantomSection = Field(default_factory=PhantomSection)
    acquisition: AcquisitionSection = Field(default_factory=AcquisitionSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    recon: ReconSection = Field(default_factory=ReconSection)
    eval: EvalSection = Field(default_factory=EvalSection)

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        m = self.network.size_multiple
        if self.grid.nx % m or self.grid.ny % m:
            raise ValueError(f"grid size must be divisible by {m} for {self.network.scales} network scales")
        return self


def _dotted(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc if not isinstance(part, int)) or "<root>"


def validate_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a parsed document, turning pydantic errors into ``ConfigurationError``."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        raise ConfigurationError(f"Invalid configuration key '{_dotted(first['loc'])}': {first['msg']}") from err


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate TOML configuration text; missing keys take their defaults.

    Raises:
        ConfigurationError: On malformed TOML, unknown keys, type or range errors
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigurationError(f"Malformed configuration: {err}") from err
    return validate_config(data)


def load_config(path: Optional[Union[str, Path]]) -> Tuple[RunConfig, Path]:
    """
    Read a configuration file.

    Returns:
        tuple: ``(config, base directory)``; without a path the defaults and the working directory
    """
    if path is None:
        return RunConfig(), Path.cwd()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Configuration file '{path}' does not exist")
    return parse_config(path.read_text(encoding="utf-8")), path.resolve().parent


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigurationError(f"Cannot write {type(value).__name__} values to TOML")


def _write_table(lines: List[str], name: str, table: Dict[str, Any]) -> None:
    scalars = {k: v for k, v in table.items() if not isinstance(v, dict) and v is not None}
    nested = {k: v for k, v in table.items() if isinstance(v, dict)}
    if name:
        lines.append(f"[{name}]")
    for key, value in scalars.items():
        lines.append(f"{key} = {_toml_value(value)}")
    if scalars or name:
        lines.append("")
    for key, value in nested.items():
        _write_table(lines, f"{name}.{key}" if name else key, value)


def serialize_config(cfg: RunConfig) -> str:
    """TOML text of a configuration; keys whose value is None are omitted."""
    lines: List[str] = []
    _write_table(lines, "", cfg.model_dump())
    return "\n".join(lines).rstrip() + "\n"


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the serialized configuration."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
