"""Domain-knowledge rules on the previous silicon reading.

A rule marks the region where a positive sample is especially costly to
miss: the previous silicon value was already at or beyond a band edge.
Rules carry geometry only; the cost multiplier lives in
:class:`kisvm.wsvm.PenaltyScheme`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple

import numpy as np

from .errors import ShapeError, ValidationError


@dataclass(frozen=True)
class SiliconBands:
    """Band edges on the normalised silicon scale.

    Low is ``[0, z_inf)``, proper ``[z_inf, z_sup]``, high ``(z_sup, 1]``.
    """

    z_inf: float
    z_sup: float

    def __post_init__(self):
        if not (0.0 < self.z_inf < self.z_sup < 1.0):
            raise ValidationError(
                f"need 0 < z_inf < z_sup < 1, got ({self.z_inf}, {self.z_sup})"
            )

    def to_dict(self):
        return {"z_inf": self.z_inf, "z_sup": self.z_sup}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["z_inf"]), float(d["z_sup"]))


FURNACE_A = SiliconBands(0.4132, 0.8251)
FURNACE_B = SiliconBands(0.3736, 0.8059)


class Direction(str, Enum):
    AT_OR_BELOW = "at_or_below"
    AT_OR_ABOVE = "at_or_above"


@dataclass(frozen=True)
class KnowledgeRule:
    threshold: float
    direction: Direction
    description: str = ""

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise ValidationError(f"rule threshold must lie in (0, 1), got {self.threshold}")
        object.__setattr__(self, "direction", Direction(self.direction))

    @classmethod
    def low(cls, bands: SiliconBands) -> KnowledgeRule:
        return cls(bands.z_inf, Direction.AT_OR_BELOW, "previous silicon at or below z_inf")

    @classmethod
    def high(cls, bands: SiliconBands) -> KnowledgeRule:
        return cls(bands.z_sup, Direction.AT_OR_ABOVE, "previous silicon at or above z_sup")

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "direction": self.direction.value,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["threshold"]), Direction(d["direction"]), d.get("description", ""))


def in_region(previous_silicon, rule: KnowledgeRule):
    """Whether the rule fires. Both edges are inclusive.

    Accepts a scalar (returns ``bool``) or an array (returns a boolean array).
    """
    prev = np.asarray(previous_silicon, dtype=float)
    if rule.direction is Direction.AT_OR_BELOW:
        hit = prev <= rule.threshold
    else:
        hit = prev >= rule.threshold
    return bool(hit) if hit.ndim == 0 else hit


class RegionTag(IntEnum):
    """R1: positive inside the rule region, R2: other positive, R3: negative."""

    R1 = 1
    R2 = 2
    R3 = 3


def tag_regions(previous_silicon, labels, rule: KnowledgeRule) -> np.ndarray:
    prev = np.atleast_1d(np.asarray(previous_silicon, dtype=float))
    labels = np.atleast_1d(np.asarray(labels))
    if prev.shape != labels.shape:
        raise ShapeError(f"{prev.size} silicon values for {labels.size} labels")
    if not np.all(np.abs(labels) == 1):
        raise ValidationError("labels must be +1 or -1")
    tags = np.full(labels.shape, int(RegionTag.R3))
    pos = labels > 0
    hit = in_region(prev, rule)
    tags[pos & hit] = RegionTag.R1
    tags[pos & ~hit] = RegionTag.R2
    return tags


class Persistence(NamedTuple):
    """Band persistence ratios; a ratio is NaN when its denominator is zero."""

    low_persistence: float
    high_persistence: float
    low_count: int
    high_count: int

    @property
    def low_defined(self) -> bool:
        return self.low_count > 0

    @property
    def high_defined(self) -> bool:
        return self.high_count > 0


def reliability_ratios(silicon_series, bands: SiliconBands) -> Persistence:
    """Fraction of low (high) readings followed by another low (high) reading.

    Bands are strict here: a reading is low when ``z < z_inf`` and high when
    ``z > z_sup``.
    """
    z = np.asarray(silicon_series, dtype=float).ravel()
    if z.size < 2:
        raise ShapeError("need at least two readings")
    prev, cur = z[:-1], z[1:]
    low_prev = prev < bands.z_inf
    high_prev = prev > bands.z_sup
    n_low = int(low_prev.sum())
    n_high = int(high_prev.sum())
    low = np.sum(low_prev & (cur < bands.z_inf)) / n_low if n_low else np.nan
    high = np.sum(high_prev & (cur > bands.z_sup)) / n_high if n_high else np.nan
    return Persistence(float(low), float(high), n_low, n_high)
