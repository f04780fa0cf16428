"""The uniform tolerance rule used by every numeric comparison."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerance:
    """Absolute plus relative slack.

    A quantity ``q`` passes "q >= 0" when ``q >= -(abs + rel * scale)`` with
    ``scale = max(1, largest magnitude among the compared quantities)``.
    """

    abs: float = 1e-12
    rel: float = 1e-9

    def __post_init__(self):
        if not (self.abs >= 0 and self.rel >= 0):
            raise ValueError(f"tolerances must be non-negative, got abs={self.abs}, rel={self.rel}")

    def bound(self, scale: float) -> float:
        return self.abs + self.rel * max(1.0, float(scale))

    def bound_for(self, *quantities) -> float:
        return self.bound(magnitude(*quantities))


DEFAULT_TOL = Tolerance()


def magnitude(*quantities) -> float:
    """Largest absolute value found among scalars and arrays (at least 1)."""
    scale = 1.0
    for q in quantities:
        if q is None:
            continue
        if isinstance(q, np.ndarray):
            if q.size:
                scale = max(scale, float(np.abs(q).max()))
        else:
            scale = max(scale, abs(q))
    return scale
