"""
State models: the fixed-bin edge-pair histogram and clustered power states.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np


@dataclass
class StateHistogram:
    """
    Counts of edge-pair magnitudes in fixed-width bins over [0, max_power).

    `duration_sums` accumulates the on-durations of the pairs in each bin.
    """
    bin_width: float = 5.0
    max_power: float = 3000.0
    counts: np.ndarray = None
    duration_sums: np.ndarray = None
    overflow_count: int = 0

    def __post_init__(self):
        n_bins = self.n_bins
        if self.counts is None:
            self.counts = np.zeros(n_bins, dtype=np.int64)
        if self.duration_sums is None:
            self.duration_sums = np.zeros(n_bins, dtype=np.float64)

    @property
    def n_bins(self) -> int:
        return int(round(self.max_power / self.bin_width))

    @property
    def total(self) -> int:
        """Number of pairs accumulated, overflow included."""
        return int(self.counts.sum()) + self.overflow_count

    @property
    def bin_lows(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width

    @property
    def bin_centers(self) -> np.ndarray:
        return self.bin_lows + self.bin_width / 2.0

    def bin_index(self, magnitude: float) -> int:
        return int(np.floor(magnitude / self.bin_width))

    def merge(self, other: "StateHistogram") -> "StateHistogram":
        """Sum of two histograms with the same layout."""
        return StateHistogram(
            bin_width=self.bin_width,
            max_power=self.max_power,
            counts=self.counts + other.counts,
            duration_sums=self.duration_sums + other.duration_sums,
            overflow_count=self.overflow_count + other.overflow_count
        )

    def to_rows(self):
        return [
            {"bin_low_w": float(low), "count": int(count)}
            for low, count in zip(self.bin_lows, self.counts)
        ]


@dataclass(frozen=True)
class PowerState:
    """A clustered nominal power level with its support."""
    nominal_power: float
    support: int
    bin_span: Tuple[int, int]
    total_duration: float = field(default=0.0, compare=False)

    def to_dict(self):
        return {
            "nominal_power": self.nominal_power,
            "support": self.support,
            "bin_low": self.bin_span[0],
            "bin_high": self.bin_span[1],
            "total_duration": self.total_duration
        }
