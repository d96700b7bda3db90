"""
Estimate models: per-sample posterior summaries and their columnar blocks.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np

from app.models.appliance import ApplianceState


@dataclass(frozen=True)
class ApplianceEstimate:
    """Posterior summary for one appliance at one sample."""
    on_probability: float
    decided_state: ApplianceState
    estimated_power: float
    on_power: float = 0.0


@dataclass
class DisaggregationEstimate:
    """Posterior summary for all appliances at one sample."""
    timestamp: int
    per_appliance: Dict[str, ApplianceEstimate] = field(default_factory=dict)
    total_estimated_power: float = 0.0


@dataclass
class EstimateBlock:
    """
    Estimates for a run of consecutive samples under one fixed appliance set.

    Row t, column i belongs to timestamps[t] and appliance_ids[i].
    """
    timestamps: np.ndarray
    appliance_ids: Tuple[str, ...]
    on_powers: np.ndarray
    on_probability: np.ndarray
    decided: np.ndarray
    estimated_power: np.ndarray

    def __len__(self):
        return len(self.timestamps)

    @property
    def total_power(self) -> np.ndarray:
        return self.estimated_power.sum(axis=1)

    def estimate_at(self, row: int) -> DisaggregationEstimate:
        per_appliance = {
            appliance_id: ApplianceEstimate(
                on_probability=float(self.on_probability[row, i]),
                decided_state=ApplianceState.ON if self.decided[row, i] else ApplianceState.OFF,
                estimated_power=float(self.estimated_power[row, i]),
                on_power=float(self.on_powers[i])
            )
            for i, appliance_id in enumerate(self.appliance_ids)
        }
        return DisaggregationEstimate(
            timestamp=int(self.timestamps[row]),
            per_appliance=per_appliance,
            total_estimated_power=float(self.estimated_power[row].sum())
        )

    def estimates(self) -> Iterator[DisaggregationEstimate]:
        for row in range(len(self)):
            yield self.estimate_at(row)


@dataclass
class EstimateStream:
    """Chronological sequence of estimate blocks."""
    blocks: List[EstimateBlock] = field(default_factory=list)

    def append(self, block: EstimateBlock):
        if len(block):
            self.blocks.append(block)

    def __len__(self):
        return sum(len(block) for block in self.blocks)

    @property
    def timestamps(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([block.timestamps for block in self.blocks])

    @property
    def total_power(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=np.float64)
        return np.concatenate([block.total_power for block in self.blocks])

    @property
    def appliance_ids(self) -> List[str]:
        seen = {}
        for block in self.blocks:
            for appliance_id in block.appliance_ids:
                seen.setdefault(appliance_id, None)
        return list(seen)

    def on_powers(self) -> Dict[str, float]:
        """Latest on-power seen for every appliance id."""
        powers = {}
        for block in self.blocks:
            for appliance_id, power in zip(block.appliance_ids, block.on_powers.tolist()):
                powers[appliance_id] = power
        return powers

    def power_by_appliance(self) -> Dict[str, np.ndarray]:
        """Full-length estimated power per appliance id (0 W where the model did not exist)."""
        total = len(self)
        series = {appliance_id: np.zeros(total) for appliance_id in self.appliance_ids}
        offset = 0
        for block in self.blocks:
            for i, appliance_id in enumerate(block.appliance_ids):
                series[appliance_id][offset:offset + len(block)] = block.estimated_power[:, i]
            offset += len(block)
        return series

    def estimates(self) -> Iterator[DisaggregationEstimate]:
        for block in self.blocks:
            yield from block.estimates()
