"""Measurements over groups and run logs: effective-prompt ratio, reward
dispersion, and the variance bound that bounded rewards must satisfy.

A group is "effective" when its rewards are not unanimous -- only then does
the group-mean baseline leave a nonzero advantage and a nonzero gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import ZERO_VARIANCE_EPS
from .errors import InputContractError


@dataclass(frozen=True)
class EffectiveStats:
    groups_total: int
    groups_effective: int

    @property
    def ratio(self) -> float:
        if self.groups_total == 0:
            return 0.0
        return self.groups_effective / self.groups_total


@dataclass(frozen=True)
class DispersionStats:
    step: int
    reward_min: float
    reward_max: float
    reward_range: float
    population_variance: float


def population_variance(values: Sequence[float]) -> float:
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def effective_ratio(groups: Iterable[Sequence[float]]) -> EffectiveStats:
    """Count groups whose reward variance exceeds 1e-12. The tolerance keeps
    real-valued shaped rewards from flipping on rounding noise while exactly
    matching the mixed/unanimous split for binary rewards."""
    total = 0
    effective = 0
    for rewards in groups:
        if len(rewards) < 2:
            raise InputContractError("effective-ratio groups need >= 2 rewards")
        total += 1
        if population_variance(rewards) > ZERO_VARIANCE_EPS:
            effective += 1
    return EffectiveStats(groups_total=total, groups_effective=effective)


def popoviciu_check(rewards: Sequence[float], lower: float, upper: float) -> bool:
    """True iff the population variance respects the (upper-lower)^2/4 bound
    for [lower, upper]-supported variables (plus 1e-12 slack for rounding).
    The bound always holds mathematically; a False return means a bug."""
    if lower > upper:
        raise InputContractError(f"need lower <= upper, got {lower}, {upper}")
    for r in rewards:
        if not (lower <= r <= upper):
            raise InputContractError(
                f"reward {r} outside the stated support [{lower}, {upper}]"
            )
    bound = (upper - lower) ** 2 / 4.0
    return population_variance(rewards) <= bound + 1e-12


def dispersion_series(records: Sequence, source: str = "shaped") -> list[DispersionStats]:
    """Per-logged-step dispersion stats from run-log records.

    ``source="shaped"`` reads the shaped-reward stats every record carries;
    ``source="raw"`` reads the raw scalar-ranker score stats, present only
    for runs whose ranker emits scores (records without them are skipped).
    Variance is only available for the shaped series (the log stores the
    shaped std); raw entries report NaN there.
    """
    if source not in ("shaped", "raw"):
        raise InputContractError(f"source must be 'shaped' or 'raw', got {source!r}")
    out: list[DispersionStats] = []
    for rec in records:
        if source == "shaped":
            lo, hi = rec.reward_min, rec.reward_max
            var = rec.reward_std**2
        else:
            lo, hi = rec.raw_score_min, rec.raw_score_max
            if lo is None or hi is None:
                continue
            var = math.nan
        out.append(
            DispersionStats(
                step=rec.step,
                reward_min=lo,
                reward_max=hi,
                reward_range=hi - lo,
                population_variance=var,
            )
        )
    return out
