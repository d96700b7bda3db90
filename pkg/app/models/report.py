"""
Evaluation models: detected-to-reference state mapping, virtual appliance
groups and the evaluation report.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

UNKNOWN = "unknown"


@dataclass
class StateMapping:
    """
    Detected power (W) -> assigned reference power (W), or None for UNKNOWN.
    """
    assignments: Dict[float, Optional[float]] = field(default_factory=dict)
    distance_threshold: float = 75.0

    @property
    def assignable_count(self) -> int:
        return sum(1 for ref in self.assignments.values() if ref is not None)

    @property
    def unassignable_count(self) -> int:
        return sum(1 for ref in self.assignments.values() if ref is None)

    def reference_for(self, detected: float) -> Optional[float]:
        return self.assignments.get(detected)

    def to_rows(self):
        return [
            {"detected_w": detected, "reference_w": "" if ref is None else ref}
            for detected, ref in sorted(self.assignments.items())
        ]


@dataclass
class VirtualAppliances:
    """Ground-truth appliances grouped by indistinguishable on-power."""
    series: Dict[str, np.ndarray] = field(default_factory=dict)
    dominant_power: Dict[str, float] = field(default_factory=dict)
    members: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def labels(self) -> List[str]:
        return list(self.series)

    def label_for_power(self, power: float) -> Optional[str]:
        for label, value in self.dominant_power.items():
            if value == power:
                return label
        return None


@dataclass
class EvaluationReport:
    """Scores of one disaggregation run against ground truth."""
    per_appliance_rmse: Dict[str, float] = field(default_factory=dict)
    total_energy_estimated: float = 0.0
    total_energy_actual: float = 0.0
    energy_error_fraction: float = 0.0
    energy_shares: Dict[str, float] = field(default_factory=dict)
    actual_energy_shares: Dict[str, float] = field(default_factory=dict)
    energy_per_label: Dict[str, float] = field(default_factory=dict)
    actual_energy_per_label: Dict[str, float] = field(default_factory=dict)
    states_assignable_per_day: Dict[int, int] = field(default_factory=dict)
    states_unassignable_per_day: Dict[int, int] = field(default_factory=dict)
    samples: int = 0

    @property
    def unknown_share(self) -> float:
        return self.energy_shares.get(UNKNOWN, 0.0)

    def to_dict(self):
        return {
            "samples": self.samples,
            "per_appliance_rmse_w": dict(self.per_appliance_rmse),
            "total_energy_estimated_kwh": self.total_energy_estimated,
            "total_energy_actual_kwh": self.total_energy_actual,
            "energy_error_fraction": self.energy_error_fraction,
            "energy_shares": dict(self.energy_shares),
            "actual_energy_shares": dict(self.actual_energy_shares),
            "energy_per_label_kwh": dict(self.energy_per_label),
            "actual_energy_per_label_kwh": dict(self.actual_energy_per_label),
            "states_assignable_per_day": {str(d): c for d, c in sorted(self.states_assignable_per_day.items())},
            "states_unassignable_per_day": {
                str(d): c for d, c in sorted(self.states_unassignable_per_day.items())
            }
        }

    def share_rows(self):
        labels = list(self.actual_energy_shares) + [
            label for label in self.energy_shares if label not in self.actual_energy_shares
        ]
        return [
            {
                "label": label,
                "estimated_kwh": self.energy_per_label.get(label, 0.0),
                "estimated_share": self.energy_shares.get(label, 0.0),
                "actual_kwh": self.actual_energy_per_label.get(label, 0.0),
                "actual_share": self.actual_energy_shares.get(label, 0.0)
            }
            for label in labels
        ]

    def per_day_rows(self):
        days = sorted(set(self.states_assignable_per_day) | set(self.states_unassignable_per_day))
        return [
            {
                "day": day,
                "assignable": self.states_assignable_per_day.get(day, 0),
                "unassignable": self.states_unassignable_per_day.get(day, 0)
            }
            for day in days
        ]
