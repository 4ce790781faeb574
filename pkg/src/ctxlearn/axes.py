"""The four intertwined subject axes and the weight vectors over them."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class SubjectAxis(Enum):
    HISTORICAL = "h"
    GEOGRAPHICAL = "g"
    NATURAL_SCIENCES = "ns"
    CULTURE = "c"


AXIS_ORDER = (
    SubjectAxis.HISTORICAL,
    SubjectAxis.GEOGRAPHICAL,
    SubjectAxis.NATURAL_SCIENCES,
    SubjectAxis.CULTURE,
)


@dataclass(frozen=True)
class _AxisVector:
    h: float
    g: float
    ns: float
    c: float

    def __post_init__(self) -> None:
        for axis, v in zip(AXIS_ORDER, self.as_tuple()):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"axis weight {axis.value}={v} out of [0, 1]")
            # ints coerce to float so serialized forms stay uniform
            object.__setattr__(self, axis.value, float(v))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.h, self.g, self.ns, self.c)


class InterestVector(_AxisVector):
    """Per-axis user interest weights in [0, 1]; normalized at ranking time."""

    def is_zero(self) -> bool:
        return max(self.as_tuple()) == 0.0


class AxisMembership(_AxisVector):
    """Per-axis membership of a POI; a point may sit on several axes."""
