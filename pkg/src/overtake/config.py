"""Vehicle parameters shared by line generation, planning and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class VehicleLimits:
    """Limits of a 1:10 scale race car.

    None of these are measured values; they are plausible defaults for the
    platform class and every one of them can be overridden from a config file.
    """

    v_max: float = 7.0
    a_lat_max: float = 6.0
    a_lon_max: float = 4.0
    length: float = 0.50
    width: float = 0.30
    wheelbase: float = 0.33
    steering_max: float = 0.40
    steering_rate_max: float = 3.0

    @property
    def min_turning_radius(self) -> float:
        return self.wheelbase / math.tan(self.steering_max)

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)

    @classmethod
    def from_dict(cls, data: dict) -> "VehicleLimits":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown vehicle limit keys: {sorted(unknown)}")
        return cls(**data)
