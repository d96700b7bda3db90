"""
Appliance models: two-state HMMs (off = 0 W, on = P W) with usage metadata,
and the report produced by a database update.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np


class ApplianceState(Enum):
    """Hidden state of a two-state appliance."""
    OFF = "off"
    ON = "on"


@dataclass
class ApplianceMetadata:
    """Per-day usage bookkeeping for one appliance model."""
    first_seen_day: int
    last_seen_day: int
    appearances_per_day: Dict[int, int] = field(default_factory=dict)
    energy_estimate_per_day: Dict[int, float] = field(default_factory=dict)
    operational_seconds_per_day: Dict[int, float] = field(default_factory=dict)

    @property
    def total_appearances(self) -> int:
        return sum(self.appearances_per_day.values())

    def record(self, day: int, appearances: int, seconds: float, on_power: float):
        """Add one day's observations of this appliance."""
        self.last_seen_day = max(self.last_seen_day, day)
        self.first_seen_day = min(self.first_seen_day, day)
        self.appearances_per_day[day] = self.appearances_per_day.get(day, 0) + appearances
        self.operational_seconds_per_day[day] = self.operational_seconds_per_day.get(day, 0.0) + seconds
        self.energy_estimate_per_day[day] = (
            self.energy_estimate_per_day.get(day, 0.0) + on_power * seconds / 3.6e6
        )

    def absorb(self, other: "ApplianceMetadata"):
        """Fold another model's history into this one (used when two models merge)."""
        self.first_seen_day = min(self.first_seen_day, other.first_seen_day)
        self.last_seen_day = max(self.last_seen_day, other.last_seen_day)
        for target, source in (
            (self.appearances_per_day, other.appearances_per_day),
            (self.energy_estimate_per_day, other.energy_estimate_per_day),
            (self.operational_seconds_per_day, other.operational_seconds_per_day),
        ):
            for day, value in source.items():
                target[day] = target.get(day, 0) + value

    def to_dict(self):
        # JSON object keys are strings; load() converts them back
        return {
            "first_seen_day": self.first_seen_day,
            "last_seen_day": self.last_seen_day,
            "appearances_per_day": {str(d): v for d, v in sorted(self.appearances_per_day.items())},
            "energy_estimate_per_day": {str(d): v for d, v in sorted(self.energy_estimate_per_day.items())},
            "operational_seconds_per_day": {
                str(d): v for d, v in sorted(self.operational_seconds_per_day.items())
            }
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            first_seen_day=int(data["first_seen_day"]),
            last_seen_day=int(data["last_seen_day"]),
            appearances_per_day={int(d): int(v) for d, v in data.get("appearances_per_day", {}).items()},
            energy_estimate_per_day={
                int(d): float(v) for d, v in data.get("energy_estimate_per_day", {}).items()
            },
            operational_seconds_per_day={
                int(d): float(v) for d, v in data.get("operational_seconds_per_day", {}).items()
            }
        )


@dataclass
class ApplianceModel:
    """
    Two-state HMM for one appliance.

    `transition[i][j]` is P(next = j | current = i) with index 0 = OFF, 1 = ON.
    The chain always starts OFF.
    """
    id: str
    on_power: float
    transition: Tuple[Tuple[float, float], Tuple[float, float]]
    metadata: ApplianceMetadata
    initial: Tuple[float, float] = (1.0, 0.0)

    @property
    def observations(self) -> Dict[ApplianceState, float]:
        return {ApplianceState.OFF: 0.0, ApplianceState.ON: self.on_power}

    @property
    def p_switch_on(self) -> float:
        return self.transition[0][1]

    @property
    def p_switch_off(self) -> float:
        return self.transition[1][0]

    def to_dict(self):
        return {
            "id": self.id,
            "on_power": self.on_power,
            "transition": [list(row) for row in self.transition],
            "initial": list(self.initial),
            "metadata": self.metadata.to_dict()
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            id=str(data["id"]),
            on_power=float(data["on_power"]),
            transition=tuple(tuple(float(v) for v in row) for row in data["transition"]),
            initial=tuple(float(v) for v in data.get("initial", (1.0, 0.0))),
            metadata=ApplianceMetadata.from_dict(data["metadata"])
        )

    def __str__(self):
        return f"Appliance({self.id}, {self.on_power:.1f} W)"


@dataclass
class UpdateReport:
    """What one database update changed."""
    day: int
    created: List[str] = field(default_factory=list)
    merged: List[str] = field(default_factory=list)
    absorbed: List[str] = field(default_factory=list)
    pruned: List[str] = field(default_factory=list)
    model_count: int = 0

    def to_dict(self):
        return {
            "day": self.day,
            "created": list(self.created),
            "merged": list(self.merged),
            "absorbed": list(self.absorbed),
            "pruned": list(self.pruned),
            "model_count": self.model_count
        }


@dataclass(frozen=True)
class FHMM:
    """
    Factorial HMM over an ordered, immutable set of appliance models.

    Joint state code c has appliance i ON iff bit i of c is set; its predicted
    aggregate is the sum of the ON appliances' on-powers.
    """
    models: Tuple[ApplianceModel, ...] = ()

    def __len__(self):
        return len(self.models)

    @property
    def appliance_ids(self) -> Tuple[str, ...]:
        return tuple(model.id for model in self.models)

    @property
    def on_powers(self) -> np.ndarray:
        return np.array([model.on_power for model in self.models], dtype=np.float64)

    @property
    def transitions(self) -> np.ndarray:
        """Stacked (N, 2, 2) transition matrices."""
        return np.array([model.transition for model in self.models], dtype=np.float64).reshape(-1, 2, 2)

    @property
    def joint_states(self) -> np.ndarray:
        """(2^N, N) 0/1 matrix; row c is the joint state with code c."""
        n = len(self.models)
        codes = np.arange(2 ** n)[:, None]
        return ((codes >> np.arange(n)) & 1).astype(np.float64)

    @property
    def joint_observations(self) -> np.ndarray:
        """Predicted aggregate power of every joint state (a single 0 W state when empty)."""
        return self.joint_states @ self.on_powers
