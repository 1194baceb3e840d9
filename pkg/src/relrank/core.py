"""Reward shaping on intra-group ranks.

Everything in this module is a pure function of its inputs: given a group of
responses and a rank assignment, compute shaped rewards, group-relative
advantages, and correctness-aware clipped advantages. No RNG, no I/O, no
shared state, so every function here is trivially thread-safe.

The shaping modes:

* ``RULE_ONLY`` -- rewards are the binary correctness signal, untouched.
* ``HRR``       -- binary reward plus a bounded tanh correction that favors
                   better-ranked responses without ever outweighing
                   correctness (the correction is strictly below ``tau``).
* ``PRR``       -- rank mapped linearly onto [0, 1]; correctness only enters
                   through the re-ranking step, never the reward magnitude.

Ranks are global within a group: rank 1 is best, rank ``r_max`` (= group
size) is worst, and the assignment is always a bijection.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

from .errors import ConfigurationError, DegenerateGroupError, InputContractError

# Bin index assigned to incorrect responses: compares above every finite bin
# without putting a float infinity inside an integer sort key.
SENTINEL_MAX = sys.maxsize

# Bin width value meaning "no length binning" (all correct responses share bin 0).
INFINITE = math.inf

# Groups whose reward spread is below this are treated as zero-variance.
ZERO_VARIANCE_EPS = 1e-12


class NormMode(Enum):
    """Normalization factor for group advantages: population std or 1."""

    STD = "STD"
    UNIT = "UNIT"


class ShapingMode(Enum):
    RULE_ONLY = "RULE_ONLY"
    HRR = "HRR"
    PRR = "PRR"


@dataclass(frozen=True)
class Response:
    """One sampled completion, reduced to the attributes rewards depend on."""

    id: int
    prompt_id: int | str
    correct: bool
    length: int
    latent_quality: float = 0.0
    scalar_score: float | None = None

    def __post_init__(self):
        if self.length < 0:
            raise InputContractError(f"length must be >= 0, got {self.length}")


@dataclass(frozen=True)
class Group:
    """Ordered collection of G responses for one prompt; the unit of
    advantage estimation. Response ids must be 0..G-1 in order."""

    prompt_id: int | str
    responses: tuple[Response, ...]

    def __post_init__(self):
        if len(self.responses) < 2:
            raise DegenerateGroupError(
                f"group needs at least 2 responses, got {len(self.responses)}"
            )
        for i, r in enumerate(self.responses):
            if r.id != i:
                raise InputContractError(
                    f"response ids must be 0..G-1 in order; index {i} has id {r.id}"
                )

    @property
    def size(self) -> int:
        return len(self.responses)

    def rule_rewards(self) -> list[float]:
        return [1.0 if r.correct else 0.0 for r in self.responses]


@dataclass(frozen=True)
class RankVector:
    """Global ranks over a group: ``ranks[i]`` is the rank of response i,
    a bijection onto {1..r_max} with r_max equal to the group size."""

    ranks: tuple[int, ...]
    r_max: int

    def __post_init__(self):
        if self.r_max != len(self.ranks):
            raise InputContractError(
                f"r_max ({self.r_max}) must equal the number of ranks ({len(self.ranks)})"
            )
        if sorted(self.ranks) != list(range(1, self.r_max + 1)):
            raise InputContractError(
                f"ranks must be a bijection onto 1..{self.r_max}, got {list(self.ranks)}"
            )


@dataclass(frozen=True)
class ShapingConfig:
    """Hyperparameters of the shaping pipeline.

    ``lam`` is the length-bin width in tokens (INFINITE disables binning);
    ``xi_minus``/``xi_plus`` are the advantage safety margins for correct and
    incorrect responses respectively.
    """

    mode: ShapingMode = ShapingMode.HRR
    tau: float = 0.1
    lam: float = 2048
    xi_minus: float = -1e-3
    xi_plus: float = 1e-3
    norm_mode: NormMode = NormMode.STD

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigurationError(f"tau must be >= 0, got {self.tau}")
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be > 0 or infinite, got {self.lam}")
        if not (self.xi_minus <= 0 <= self.xi_plus):
            raise ConfigurationError(
                f"need xi_minus <= 0 <= xi_plus, got {self.xi_minus}, {self.xi_plus}"
            )

    def reward_bounds(self) -> tuple[float, float]:
        """Interval that shaped rewards are confined to under this mode."""
        if self.mode is ShapingMode.HRR:
            return (0.0, 1.0 + self.tau)
        return (0.0, 1.0)


@dataclass(frozen=True)
class ShapedGroup:
    """A group after the full shaping pipeline: rule rewards, global ranks,
    shaped rewards, advantages, and clipped advantages, all of length G."""

    group: Group
    rule_rewards: tuple[float, ...]
    ranks: RankVector
    shaped_rewards: tuple[float, ...]
    advantages: tuple[float, ...]
    clipped_advantages: tuple[float, ...]

    def __post_init__(self):
        g = self.group.size
        for name in ("rule_rewards", "shaped_rewards", "advantages", "clipped_advantages"):
            if len(getattr(self, name)) != g:
                raise InputContractError(f"{name} must have length {g}")
        if self.ranks.r_max != g:
            raise InputContractError("ranks must cover the whole group")


def length_bin(length: int, lam: float, correct: bool) -> int:
    """Coarse length bin: floor(length / lam) for correct responses,
    SENTINEL_MAX for incorrect ones. Total function; INFINITE lam puts every
    correct response in bin 0."""
    if not correct:
        return SENTINEL_MAX
    if math.isinf(lam):
        return 0
    return int(length // lam)


def hierarchical_rerank(group: Group, raw_ranks: Sequence[int], lam: float) -> RankVector:
    """Merge per-subgroup raw ranks into global ranks by ascending
    (incorrect-flag, length bin, raw rank, response id).

    Correct responses therefore strictly outrank incorrect ones; among
    correct responses shorter length bins win; within a bin the ranker's
    preference decides; the response id breaks any remaining tie, so the
    result is always a strict total order.
    """
    if len(raw_ranks) != group.size:
        raise InputContractError(
            f"raw_ranks has length {len(raw_ranks)}, group has {group.size} responses"
        )
    keys = [
        (0 if r.correct else 1, length_bin(r.length, lam, r.correct), raw_ranks[i], r.id)
        for i, r in enumerate(group.responses)
    ]
    order = sorted(range(group.size), key=keys.__getitem__)
    ranks = [0] * group.size
    for rank_minus_one, idx in enumerate(order):
        ranks[idx] = rank_minus_one + 1
    return RankVector(ranks=tuple(ranks), r_max=group.size)


def shape_hrr(rule_rewards: Sequence[float], ranks: RankVector, tau: float) -> list[float]:
    """Binary reward plus tau * tanh(r_max/r - 1): a correction in [0, tau)
    that is zero at the worst rank and approaches tau at rank 1."""
    if len(rule_rewards) != ranks.r_max:
        raise InputContractError("rule_rewards and ranks must have the same length")
    if tau < 0:
        raise InputContractError(f"tau must be >= 0, got {tau}")
    return [
        s + tau * math.tanh(ranks.r_max / r - 1.0)
        for s, r in zip(rule_rewards, ranks.ranks)
    ]


def shape_prr(ranks: RankVector) -> list[float]:
    """Map rank r onto (r_max - r)/(r_max - 1): evenly spaced values spanning
    [0, 1], best rank first."""
    if ranks.r_max < 2:
        raise DegenerateGroupError("pure relative reward needs r_max >= 2")
    denom = ranks.r_max - 1
    return [(ranks.r_max - r) / denom for r in ranks.ranks]


def group_advantage(rewards: Sequence[float], norm_mode: NormMode) -> list[float]:
    """Center rewards on the group mean and optionally divide by the
    population standard deviation. A zero-variance group (std below 1e-12)
    yields exactly-zero advantages under both modes: unanimous groups carry
    no gradient."""
    g = len(rewards)
    if g < 2:
        raise DegenerateGroupError("advantage estimation needs a group of >= 2 rewards")
    mean = sum(rewards) / g
    var = sum((s - mean) ** 2 for s in rewards) / g
    std = math.sqrt(var)
    if std <= ZERO_VARIANCE_EPS:
        return [0.0] * g
    norm = std if norm_mode is NormMode.STD else 1.0
    return [(s - mean) / norm for s in rewards]


def clip_advantages(
    advantages: Sequence[float],
    correct: Sequence[bool],
    xi_minus: float,
    xi_plus: float,
) -> list[float]:
    """Floor correct responses' advantages at xi_minus and cap incorrect
    ones' at xi_plus, so quality nuances never drown the correctness signal."""
    if len(advantages) != len(correct):
        raise InputContractError("advantages and correctness flags must align")
    if not (xi_minus <= 0 <= xi_plus):
        raise InputContractError(
            f"need xi_minus <= 0 <= xi_plus, got {xi_minus}, {xi_plus}"
        )
    return [
        max(a, xi_minus) if c else min(a, xi_plus)
        for a, c in zip(advantages, correct)
    ]


def partition_subgroups(group: Group, n: int) -> list[tuple[Response, ...]]:
    """Split a group into G/n contiguous subgroups of size n, preserving
    response order. n must divide G exactly."""
    if n < 2:
        raise ConfigurationError(f"subgroup size must be >= 2, got {n}")
    if group.size % n != 0:
        raise ConfigurationError(
            f"subgroup size {n} must divide group size {group.size}"
        )
    return [group.responses[i : i + n] for i in range(0, group.size, n)]


AdvantageFn = Callable[[Sequence[float]], Sequence[float]]
LocalRanker = Callable[[Sequence[Response]], Sequence[int]]


def shape_group(
    group: Group,
    raw_ranks: Sequence[int],
    cfg: ShapingConfig,
    advantage_fn: AdvantageFn | None = None,
) -> ShapedGroup:
    """Run the shaping pipeline on a group whose raw ranks are already known:
    hierarchical re-ranking, mode-specific reward shaping, advantage
    estimation, and (for rank-based modes) correctness-aware clipping.

    ``advantage_fn`` overrides the default group-mean advantage, e.g. with a
    leave-one-out baseline; it still receives the shaped rewards.
    """
    rule = group.rule_rewards()
    ranks = hierarchical_rerank(group, raw_ranks, cfg.lam)

    if cfg.mode is ShapingMode.RULE_ONLY:
        shaped = list(rule)
    elif cfg.mode is ShapingMode.HRR:
        shaped = shape_hrr(rule, ranks, cfg.tau)
    else:
        shaped = shape_prr(ranks)

    if advantage_fn is None:
        advantages = list(group_advantage(shaped, cfg.norm_mode))
    else:
        advantages = list(advantage_fn(shaped))

    if cfg.mode is ShapingMode.RULE_ONLY:
        # Plain binary rewards need no safety margins; clipping exists to
        # bound rank-induced penalties.
        clipped = list(advantages)
    else:
        correct = [r.correct for r in group.responses]
        clipped = clip_advantages(advantages, correct, cfg.xi_minus, cfg.xi_plus)

    return ShapedGroup(
        group=group,
        rule_rewards=tuple(rule),
        ranks=ranks,
        shaped_rewards=tuple(shaped),
        advantages=tuple(advantages),
        clipped_advantages=tuple(clipped),
    )


def rank_pipeline(
    group: Group,
    ranker: LocalRanker,
    cfg: ShapingConfig,
    n: int | None = None,
    advantage_fn: AdvantageFn | None = None,
) -> ShapedGroup:
    """Full pipeline from a group and a local ranker to a ShapedGroup.

    The group is partitioned into G/n subgroups, the ranker produces local
    ranks per subgroup (rank 1 best within the subgroup), and the local ranks
    are concatenated and merged globally by ``hierarchical_rerank``. Local
    ranks from different subgroups compare directly; the id tie-break keeps
    the order strict. ``n=None`` ranks the whole group in one call.
    """
    if n is None:
        n = group.size
    raw_ranks: list[int] = []
    for sub in partition_subgroups(group, n):
        local = list(ranker(sub))
        if sorted(local) != list(range(1, len(sub) + 1)):
            raise InputContractError(
                f"ranker returned non-bijective local ranks {local} for subgroup of {len(sub)}"
            )
        raw_ranks.extend(local)
    return shape_group(group, raw_ranks, cfg, advantage_fn=advantage_fn)


def with_mode(cfg: ShapingConfig, mode: ShapingMode) -> ShapingConfig:
    """Copy of cfg with a different shaping mode."""
    return replace(cfg, mode=mode)
