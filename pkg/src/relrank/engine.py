"""Desk-scale verifiable environment and group-based policy-gradient
trainers.

The environment replaces text generation with a fixed pool of K candidates
per prompt, each carrying a correctness flag, a token length, and a latent
quality. The policy is a per-prompt softmax over candidates, so an episode
is a single action: sampling a candidate IS generating a response. That
degenerate setting keeps every quantity exactly controllable while leaving
the reward-shaping pipeline, the clipped surrogate objective, and the
training dynamics fully intact.

Determinism: every random draw comes from a stream derived from
(run seed, prompt index, step), so results are independent of the order in
which prompts are processed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .core import Group, Response, ShapedGroup, ShapingConfig, rank_pipeline
from .errors import ConfigurationError, NumericsError
from .metrics import effective_ratio, popoviciu_check
from .rankers import Ranker, rank_by_scores


class Difficulty(Enum):
    """Per-candidate correctness probability at task-generation time."""

    EASY = 0.5
    MEDIUM = 0.25
    HARD = 0.0625


LENGTH_LOG_MEAN = 7.0
LENGTH_LOG_STD = 0.6
LENGTH_MIN = 32
LENGTH_MAX = 8192
CORRECT_QUALITY_BONUS = 1.0


@dataclass(frozen=True)
class SyntheticTask:
    """Fixed candidate pools: row p of each array describes prompt p's K
    candidates."""

    difficulty: Difficulty
    seed: int
    correct: np.ndarray  # (P, K) bool
    lengths: np.ndarray  # (P, K) int
    qualities: np.ndarray  # (P, K) float

    @property
    def num_prompts(self) -> int:
        return self.correct.shape[0]

    @property
    def pool_size(self) -> int:
        return self.correct.shape[1]


def make_task(difficulty: Difficulty, prompts: int, pool_size: int, seed: int) -> SyntheticTask:
    """Generate a task: correctness ~ Bernoulli(p(difficulty)), lengths
    log-normal (median ~1100 tokens) clamped to [32, 8192], latent quality
    standard normal plus a +1 bonus for correct candidates."""
    if prompts < 1 or pool_size < 4:
        raise ConfigurationError(
            f"need prompts >= 1 and pool size >= 4, got {prompts}, {pool_size}"
        )
    rng = np.random.default_rng(seed)
    shape = (prompts, pool_size)
    correct = rng.random(shape) < difficulty.value
    lengths = np.rint(np.exp(rng.normal(LENGTH_LOG_MEAN, LENGTH_LOG_STD, shape)))
    lengths = np.clip(lengths, LENGTH_MIN, LENGTH_MAX).astype(np.int64)
    qualities = rng.normal(0.0, 1.0, shape) + CORRECT_QUALITY_BONUS * correct
    return SyntheticTask(
        difficulty=difficulty, seed=seed, correct=correct, lengths=lengths, qualities=qualities
    )


@dataclass
class TabularPolicy:
    """Per-prompt softmax over the candidate pool."""

    logits: np.ndarray  # (P, K)
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")
        self.logits = np.asarray(self.logits, dtype=np.float64)

    @classmethod
    def uniform(cls, prompts: int, pool_size: int, temperature: float = 1.0) -> "TabularPolicy":
        return cls(logits=np.zeros((prompts, pool_size)), temperature=temperature)

    def probabilities(self, prompt: int) -> np.ndarray:
        return _softmax(self.logits[prompt] / self.temperature)

    def greedy(self) -> np.ndarray:
        """Argmax candidate per prompt; ties resolve to the lowest id."""
        return np.argmax(self.logits, axis=1)

    def copy(self) -> "TabularPolicy":
        return TabularPolicy(logits=self.logits.copy(), temperature=self.temperature)


def _softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


class Algorithm(Enum):
    GRPO = "GRPO"
    RLOO = "RLOO"


@dataclass(frozen=True)
class TrainerConfig:
    algorithm: Algorithm = Algorithm.GRPO
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    group_size: int = 8
    subgroup_size: int = 4
    epsilon: float = 0.2
    learning_rate: float = 0.1
    mini_epochs: int = 2
    steps: int = 300
    batch_size: int = 32
    seed: int = 0
    eval_every: int = 1
    temperature: float = 1.0

    def __post_init__(self):
        if self.group_size < 2:
            raise ConfigurationError(f"G must be >= 2, got {self.group_size}")
        if self.subgroup_size < 2 or self.group_size % self.subgroup_size != 0:
            raise ConfigurationError(
                f"n must divide G (got n={self.subgroup_size}, G={self.group_size})"
            )
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigurationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("mini_epochs", "steps", "batch_size", "eval_every"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")
        if self.temperature <= 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class Rollout:
    """A sampled group plus what the importance ratio needs: which candidate
    each response came from and its probability under the behavior policy."""

    prompt_index: int
    group: Group
    candidate_ids: tuple[int, ...]
    behavior_probs: tuple[float, ...]


def sample_group(
    policy: TabularPolicy,
    task: SyntheticTask,
    prompt: int,
    group_size: int,
    rng: np.random.Generator,
) -> Rollout:
    """Draw G candidates with replacement from the policy's softmax and wrap
    them as a Group, recording each draw's behavior probability."""
    if group_size < 2:
        raise ConfigurationError(f"G must be >= 2, got {group_size}")
    probs = policy.probabilities(prompt)
    draws = rng.choice(task.pool_size, size=group_size, p=probs)
    responses = tuple(
        Response(
            id=k,
            prompt_id=prompt,
            correct=bool(task.correct[prompt, c]),
            length=int(task.lengths[prompt, c]),
            latent_quality=float(task.qualities[prompt, c]),
        )
        for k, c in enumerate(draws)
    )
    return Rollout(
        prompt_index=prompt,
        group=Group(prompt_id=prompt, responses=responses),
        candidate_ids=tuple(int(c) for c in draws),
        behavior_probs=tuple(float(probs[c]) for c in draws),
    )


# ---------------------------------------------------------------------------
# Clipped surrogate objective (single-action form) and its gradient
# ---------------------------------------------------------------------------


def surrogate_objective(
    logits_row: np.ndarray,
    temperature: float,
    candidate_ids: Sequence[int],
    behavior_probs: Sequence[float],
    advantages: Sequence[float],
    epsilon: float,
) -> float:
    """(1/G) sum_k min(rho_k A_k, clip(rho_k, 1-eps, 1+eps) A_k) with
    rho_k = pi(c_k)/pi_old(c_k). Episodes are single-action, so the per-token
    sum collapses to one term."""
    probs = _softmax(np.asarray(logits_row, dtype=np.float64) / temperature)
    total = 0.0
    for c, q, a in zip(candidate_ids, behavior_probs, advantages):
        rho = probs[c] / q
        clipped_rho = min(max(rho, 1.0 - epsilon), 1.0 + epsilon)
        total += min(rho * a, clipped_rho * a)
    return total / len(candidate_ids)


def surrogate_gradient(
    logits_row: np.ndarray,
    temperature: float,
    candidate_ids: Sequence[int],
    behavior_probs: Sequence[float],
    advantages: Sequence[float],
    epsilon: float,
) -> np.ndarray:
    """Analytic gradient of ``surrogate_objective`` w.r.t. the logits.

    Per response, d(min)/d(rho) is A on the unclipped branch and 0 where the
    clipped branch is active and saturated; the chain rule through
    rho = softmax(z/T)[c]/q contributes pi(c) * (onehot(c) - pi) / (T q).
    Responses accumulate in id order.
    """
    logits_row = np.asarray(logits_row, dtype=np.float64)
    probs = _softmax(logits_row / temperature)
    grad = np.zeros_like(logits_row)
    g = len(candidate_ids)
    for c, q, a in zip(candidate_ids, behavior_probs, advantages):
        rho = probs[c] / q
        clipped_rho = min(max(rho, 1.0 - epsilon), 1.0 + epsilon)
        if rho * a <= clipped_rho * a:
            dmin_drho = a
        elif (1.0 - epsilon) < rho < (1.0 + epsilon):
            dmin_drho = a
        else:
            dmin_drho = 0.0  # clipped branch active and flat
        if dmin_drho == 0.0:
            continue
        coef = dmin_drho * probs[c] / (q * temperature * g)
        grad -= coef * probs
        grad[c] += coef
    return grad


def grpo_update(
    policy: TabularPolicy,
    rollouts: Sequence[Rollout],
    shaped: Sequence[ShapedGroup],
    epsilon: float,
    learning_rate: float,
    mini_epochs: int,
) -> TabularPolicy:
    """Ascend the clipped surrogate objective for every prompt in the batch.

    Behavior probabilities were frozen when the batch was sampled, so
    mini-epochs after the first really are off-policy and exercise the clip.
    Gradients accumulate in (prompt index, response id) order and are applied
    once per mini-epoch.
    """
    if not np.all(np.isfinite(policy.logits)):
        raise NumericsError("policy logits are non-finite; aborting the update")
    order = sorted(range(len(rollouts)), key=lambda i: rollouts[i].prompt_index)
    for _ in range(mini_epochs):
        updates: list[tuple[int, np.ndarray]] = []
        for i in order:
            r = rollouts[i]
            grad = surrogate_gradient(
                policy.logits[r.prompt_index],
                policy.temperature,
                r.candidate_ids,
                r.behavior_probs,
                shaped[i].clipped_advantages,
                epsilon,
            )
            updates.append((r.prompt_index, grad))
        for prompt_index, grad in updates:
            policy.logits[prompt_index] += learning_rate * grad
    if not np.all(np.isfinite(policy.logits)):
        raise NumericsError("policy logits became non-finite during the update")
    return policy


def rloo_advantage(rewards: Sequence[float]) -> list[float]:
    """Leave-one-out baseline: each reward minus the mean of the other G-1.
    Algebraically equal to G/(G-1) times the mean-centered rewards."""
    g = len(rewards)
    if g < 2:
        raise ConfigurationError("leave-one-out baseline needs >= 2 rewards")
    total = sum(rewards)
    return [s - (total - s) / (g - 1) for s in rewards]


def evaluate(policy: TabularPolicy, task: SyntheticTask) -> tuple[float, float]:
    """Greedy accuracy and mean length of correct greedy picks (0 if none)."""
    picks = policy.greedy()
    rows = np.arange(task.num_prompts)
    hit = task.correct[rows, picks]
    accuracy = float(np.mean(hit))
    if not np.any(hit):
        return accuracy, 0.0
    mean_len = float(np.mean(task.lengths[rows, picks][hit]))
    return accuracy, mean_len


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunLogRecord:
    step: int
    effective_ratio: float
    reward_mean: float
    reward_std: float
    reward_min: float
    reward_max: float
    reward_range: float
    greedy_accuracy: float
    mean_correct_length: float
    popoviciu_ok: bool
    raw_score_min: float | None = None
    raw_score_max: float | None = None


@dataclass(frozen=True)
class RunLog:
    initial_accuracy: float
    initial_mean_correct_length: float
    records: tuple[RunLogRecord, ...]


StepHook = Callable[[int, Sequence[ShapedGroup]], None]


def _prompt_rng(seed: int, prompt: int, step: int) -> np.random.Generator:
    # Stream identity depends only on (seed, prompt, step), never on
    # scheduling, so any parallel rollout order reproduces the same draws.
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, prompt, step)))


def run_training(
    task: SyntheticTask,
    cfg: TrainerConfig,
    ranker: Ranker,
    step_hook: StepHook | None = None,
    policy: TabularPolicy | None = None,
) -> RunLog:
    """Train for cfg.steps steps of: sample a prompt batch, roll out G
    responses per prompt, shape rewards through the ranking pipeline, and
    ascend the clipped surrogate. Appends a record at every step where
    (step - 1) is a multiple of eval_every, so step 1 is always logged and a
    run of M steps yields M/eval_every records.

    ``step_hook(step, shaped_groups)`` fires every step, for instrumentation.
    ``policy`` defaults to a fresh uniform policy; passing one in lets the
    caller inspect it after training (it is updated in place).
    """
    if policy is None:
        policy = TabularPolicy.uniform(task.num_prompts, task.pool_size, cfg.temperature)
    initial_accuracy, initial_mean_len = evaluate(policy, task)

    emits_scores = getattr(ranker, "emits_scores", False)
    advantage_fn = rloo_advantage if cfg.algorithm is Algorithm.RLOO else None
    bounds = cfg.shaping.reward_bounds()

    records: list[RunLogRecord] = []
    for step in range(1, cfg.steps + 1):
        batch_rng = np.random.default_rng(np.random.SeedSequence(entropy=(cfg.seed, step)))
        if cfg.batch_size >= task.num_prompts:
            batch = np.arange(task.num_prompts)
        else:
            batch = np.sort(batch_rng.choice(task.num_prompts, size=cfg.batch_size, replace=False))

        rollouts: list[Rollout] = []
        shaped_groups: list[ShapedGroup] = []
        raw_scores: list[float] = []
        for prompt in batch.tolist():
            rng = _prompt_rng(cfg.seed, prompt, step)
            rollout = sample_group(policy, task, prompt, cfg.group_size, rng)

            if emits_scores:
                def local_ranker(responses, _rng=rng, _step=step):
                    scores = ranker.scores(responses, step=_step, rng=_rng)
                    raw_scores.extend(scores)
                    return rank_by_scores(scores)
            else:
                def local_ranker(responses, _rng=rng, _step=step):
                    return ranker.rank(responses, step=_step, rng=_rng)

            shaped = rank_pipeline(
                rollout.group,
                local_ranker,
                cfg.shaping,
                n=cfg.subgroup_size,
                advantage_fn=advantage_fn,
            )
            rollouts.append(rollout)
            shaped_groups.append(shaped)

        grpo_update(
            policy, rollouts, shaped_groups, cfg.epsilon, cfg.learning_rate, cfg.mini_epochs
        )

        if step_hook is not None:
            step_hook(step, shaped_groups)

        if (step - 1) % cfg.eval_every == 0:
            reward_vectors = [sg.shaped_rewards for sg in shaped_groups]
            flat = [s for vec in reward_vectors for s in vec]
            mean = sum(flat) / len(flat)
            std = math.sqrt(sum((s - mean) ** 2 for s in flat) / len(flat))
            accuracy, mean_len = evaluate(policy, task)
            records.append(
                RunLogRecord(
                    step=step,
                    effective_ratio=effective_ratio(reward_vectors).ratio,
                    reward_mean=mean,
                    reward_std=std,
                    reward_min=min(flat),
                    reward_max=max(flat),
                    reward_range=max(flat) - min(flat),
                    greedy_accuracy=accuracy,
                    mean_correct_length=mean_len,
                    popoviciu_ok=all(
                        popoviciu_check(vec, bounds[0], bounds[1]) for vec in reward_vectors
                    ),
                    raw_score_min=min(raw_scores) if raw_scores else None,
                    raw_score_max=max(raw_scores) if raw_scores else None,
                )
            )

    return RunLog(
        initial_accuracy=initial_accuracy,
        initial_mean_correct_length=initial_mean_len,
        records=tuple(records),
    )
