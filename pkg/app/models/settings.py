"""
Pipeline configuration models.

One JSON document with a section per processing stage. Each section is a
pydantic model so that bad values are reported with their field path.
"""
import json
import logging
import os
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.error_handler import ConfigurationError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FilterConfig(_Section):
    """Median filter and optional moving-average smoothing."""

    median_window: int = 31
    smoothing: Literal["none", "moving_average"] = "moving_average"
    smoothing_window: int = Field(default=5, ge=1)

    @field_validator("median_window")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value < 3 or value % 2 == 0:
            raise ValueError("median_window must be odd and >= 3")
        return value


class EdgeConfig(_Section):
    """Edge detection, edge pairing and sliding-window parameters."""

    ma_window: int = Field(default=5, ge=1)
    edge_threshold: float = Field(default=30.0, gt=0)
    pair_tolerance_w: float = Field(default=20.0, ge=0)
    pair_tolerance_fraction: float = Field(default=0.10, ge=0, le=1)
    window_length: int = Field(default=86400, ge=3600)
    window_step: Optional[int] = Field(default=None, ge=1)
    min_partial_window: int = Field(default=3600, ge=1)

    @model_validator(mode="after")
    def _step_within_window(self):
        if self.window_step is not None and self.window_step > self.window_length:
            raise ValueError("window_step must not exceed window_length")
        return self

    @property
    def step(self) -> int:
        return self.window_step or self.window_length

    def pair_tolerance(self, magnitude: float) -> float:
        return max(self.pair_tolerance_w, self.pair_tolerance_fraction * magnitude)


class ClusterConfig(_Section):
    """Histogram layout and empty-gap segmentation."""

    bin_width: float = Field(default=5.0, gt=0)
    max_power: float = Field(default=3000.0, gt=0)
    min_support: int = Field(default=2, ge=1)
    gap_bins: int = Field(default=2, ge=1)


class DbConfig(_Section):
    """Appliance database update rules."""

    merge_threshold: float = Field(default=50.0, gt=0)
    prune_min_total_appearances: int = Field(default=3, ge=0)
    prune_stale_days: int = Field(default=7, ge=0)
    ema_weight: float = Field(default=0.3, gt=0, le=1)
    stay_probability: float = Field(default=0.99, gt=0, lt=1)


class PfConfig(_Section):
    """Particle filter and decision maker."""

    particle_count: int = Field(default=1000, ge=1)
    observation_noise_stddev: float = Field(default=25.0, gt=0)
    resample_threshold: float = Field(default=0.5, ge=0, le=1)
    decision_threshold: float = Field(default=0.5, gt=0, lt=1)
    rng_seed: int = 0


class EvaluationConfig(_Section):
    """State mapping and virtual appliance grouping."""

    distance_threshold: float = Field(default=75.0, gt=0)
    virtual_merge_threshold: float = Field(default=50.0, gt=0)
    skip_days: int = Field(default=1, ge=0)


class ReddConfig(_Section):
    """Channel selection for REDD-style house directories."""

    channels: List[int] = Field(default_factory=list)
    labels: List[str] = Field(default_factory=list)
    max_fill_gap: int = Field(default=20, ge=1)

    @model_validator(mode="after")
    def _labels_match(self):
        if self.labels and len(self.labels) != len(self.channels):
            raise ValueError("labels must be empty or match channels one-to-one")
        return self


class PipelineConfig(_Section):
    """All stage sections of one pipeline run."""

    filter: FilterConfig = Field(default_factory=FilterConfig)
    edges: EdgeConfig = Field(default_factory=EdgeConfig)
    cluster: ClusterConfig = Field(default_factory=ClusterConfig)
    db: DbConfig = Field(default_factory=DbConfig)
    pf: PfConfig = Field(default_factory=PfConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    redd: ReddConfig = Field(default_factory=ReddConfig)

    def with_seed(self, seed: Optional[int]) -> "PipelineConfig":
        """Return a copy whose particle filter uses `seed` (no-op for None)."""
        if seed is None:
            return self
        return self.model_copy(update={"pf": self.pf.model_copy(update={"rng_seed": seed})})


def format_validation_error(error: ValidationError) -> str:
    """Render pydantic errors as `field.path: message` lines."""
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def load_pipeline_config(path: Optional[str] = None) -> PipelineConfig:
    """
    Load and validate a pipeline config document.

    Args:
        path (str, optional): JSON config path. None yields all defaults.

    Returns:
        PipelineConfig: Validated configuration

    Raises:
        FileNotFoundError: If the path does not exist
        ConfigurationError: If the document is not valid JSON or fails validation
    """
    if path is None:
        return PipelineConfig()

    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")

    try:
        with open(path, 'r', encoding='utf-8') as config_file:
            document = json.load(config_file)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON ({e})")

    # Keys starting with '_' are provenance notes in the shipped config
    document = _strip_comments(document)

    try:
        config = PipelineConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(f"{path}: {format_validation_error(e)}")

    logger.info(f"Loaded pipeline config from {path}")
    return config


def _strip_comments(document):
    if isinstance(document, dict):
        return {k: _strip_comments(v) for k, v in document.items() if not k.startswith("_")}
    return document
