"""
Trace models: power samples, loader gap reports, ground-truth traces and the
synthetic appliance specification.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


@dataclass(frozen=True)
class PowerSample:
    """One timestamped active-power reading."""
    timestamp: int
    power: float


@dataclass(frozen=True)
class GapReport:
    """A run of missing readings longer than the forward-fill limit."""
    channel: str
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start

    def to_dict(self):
        return {"channel": self.channel, "start": self.start, "end": self.end, "duration": self.duration}


@dataclass
class GroundTruthTrace:
    """
    Aggregate power on a 1 Hz grid plus per-appliance power on the same grid.

    Arrays are stored columnar; `samples()` yields PowerSample views.
    """
    timestamps: np.ndarray
    aggregate: np.ndarray
    per_appliance: Dict[str, np.ndarray] = field(default_factory=dict)
    noise_bound: float = 0.0
    gaps: List[GapReport] = field(default_factory=list)
    clamped_count: int = 0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.aggregate = np.asarray(self.aggregate, dtype=np.float64)
        self.per_appliance = {
            label: np.asarray(series, dtype=np.float64) for label, series in self.per_appliance.items()
        }

    def __len__(self):
        return len(self.timestamps)

    @property
    def labels(self) -> List[str]:
        return list(self.per_appliance)

    @property
    def start(self) -> int:
        return int(self.timestamps[0]) if len(self.timestamps) else 0

    @property
    def gap_intervals(self) -> List[Tuple[int, int]]:
        """Distinct (start, end) gap intervals across channels."""
        return sorted({(gap.start, gap.end) for gap in self.gaps})

    def samples(self) -> Iterator[PowerSample]:
        for timestamp, power in zip(self.timestamps.tolist(), self.aggregate.tolist()):
            yield PowerSample(timestamp=timestamp, power=power)

    def to_dict(self):
        return {
            "samples": len(self),
            "start": self.start,
            "appliances": self.labels,
            "noise_bound": self.noise_bound,
            "gaps": [gap.to_dict() for gap in self.gaps],
            "clamped_count": self.clamped_count
        }


class ApplianceSpec(BaseModel):
    """Input to the synthetic trace generator."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str = Field(min_length=1)
    on_power: float = Field(gt=0)
    mean_on_duration: float = Field(ge=1)
    activations_per_day: float = Field(ge=0)
    noise_stddev: float = Field(default=0.0, ge=0)
