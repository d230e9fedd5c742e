"""Scale groups and scale elements.

A scale group is realized through its valuations only: a continuous group
(all positive reals) or the dyadic group (exact powers of two). Every
formula in the package consumes the valuation, so nothing else about the
abstract group is modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScaleGroup:
    """A commutative scale group identified by its valuation image."""

    kind: str  # "continuous" or "dyadic"

    def __post_init__(self):
        if self.kind not in ("continuous", "dyadic"):
            raise ValueError("scale group kind must be 'continuous' or 'dyadic'")

    def contains(self, value: float) -> bool:
        if not (value > 0.0 and math.isfinite(value)):
            return False
        if self.kind == "dyadic":
            mantissa, _ = math.frexp(value)
            return mantissa == 0.5
        return True

    def scale(self, value: float) -> "Scale":
        return Scale(float(value), self)


CONTINUOUS = ScaleGroup("continuous")
DYADIC = ScaleGroup("dyadic")


@dataclass(frozen=True)
class Scale:
    """An element of a scale group, carried as its valuation."""

    value: float
    group: ScaleGroup = CONTINUOUS

    def __post_init__(self):
        if not self.group.contains(self.value):
            raise ValueError(
                f"{self.value!r} is not a valid valuation for the "
                f"{self.group.kind} scale group"
            )

    def __mul__(self, other: "Scale") -> "Scale":
        if isinstance(other, Scale):
            if other.group != self.group:
                raise ValueError("cannot combine scales from different groups")
            return Scale(self.value * other.value, self.group)
        return NotImplemented

    def inverse(self) -> "Scale":
        # Dyadic valuations are exact powers of two, so 1/value is exact.
        return Scale(1.0 / self.value, self.group)

    @property
    def contracting(self) -> bool:
        return self.value <= 1.0


def as_scale(eps, group: ScaleGroup = CONTINUOUS) -> Scale:
    """Coerce a float (or Scale) to a Scale of the given group."""
    if isinstance(eps, Scale):
        if eps.group != group:
            raise ValueError("scale belongs to a different group")
        return eps
    return Scale(float(eps), group)


def geometric_grid(start: float = 0.5, ratio: float = 0.5, count: int = 16) -> tuple[float, ...]:
    """Strictly decreasing geometric grid of valuations in (0, 1)."""
    if not (0.0 < ratio < 1.0):
        raise ValueError("grid ratio must lie in (0, 1)")
    if not (0.0 < start < 1.0):
        raise ValueError("grid start must lie in (0, 1)")
    if count < 1:
        raise ValueError("grid needs at least one scale")
    return tuple(start * ratio**k for k in range(count))


def dyadic_grid(k_start: int = 1, k_stop: int = 16) -> tuple[float, ...]:
    """Grid 2^-k for k = k_start .. k_stop inclusive; valid in any scale group."""
    if k_start < 1 or k_stop < k_start:
        raise ValueError("need 1 <= k_start <= k_stop")
    return tuple(2.0 ** (-k) for k in range(k_start, k_stop + 1))
