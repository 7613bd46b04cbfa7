from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientScales


@dataclass(frozen=True)
class ScalingFit:
    """A fitted log-log exponent plus the table it was fitted on."""

    exponent: float
    table: list = field(default_factory=list)
    columns: tuple = ()

    def __float__(self) -> float:
        return float(self.exponent)


def loglog_slope(x, y, min_points: int = 3) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < min_points:
        raise InsufficientScales(f"need at least {min_points} scales, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
