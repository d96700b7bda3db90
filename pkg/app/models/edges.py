"""
Edge models: detected power changes and matched on/off pairs.
"""
from dataclasses import dataclass
from enum import Enum


class EdgeDirection(Enum):
    """Direction of a power change."""
    RISING = "rising"
    FALLING = "falling"


@dataclass(frozen=True)
class EdgeEvent:
    """An abrupt power change; `time` is the timestamp where the change completes."""
    time: int
    direction: EdgeDirection
    magnitude: float
    pre_level: float
    post_level: float

    @property
    def is_rising(self) -> bool:
        return self.direction == EdgeDirection.RISING

    def to_dict(self):
        return {
            "time": self.time,
            "direction": self.direction.value,
            "magnitude": self.magnitude,
            "pre_level": self.pre_level,
            "post_level": self.post_level
        }


@dataclass(frozen=True)
class EdgePair:
    """A rising edge matched with a later falling edge: one candidate activation."""
    on_time: int
    off_time: int
    magnitude: float

    @property
    def duration(self) -> int:
        return self.off_time - self.on_time

    @classmethod
    def from_edges(cls, rising: EdgeEvent, falling: EdgeEvent) -> "EdgePair":
        return cls(
            on_time=rising.time,
            off_time=falling.time,
            magnitude=(rising.magnitude + falling.magnitude) / 2.0
        )

    def to_dict(self):
        return {
            "on_time": self.on_time,
            "off_time": self.off_time,
            "magnitude": self.magnitude,
            "duration": self.duration
        }
