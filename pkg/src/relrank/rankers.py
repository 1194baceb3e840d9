"""Ranking sources for the shaping pipeline.

A ranker turns a list of responses into local ranks (1 = best, bijective).
Four kinds are provided:

* ``OracleRanker``       -- sorts by latent quality; ground truth for tests.
* ``NoisyScalarRanker``  -- a drifting, noisy scalar scorer whose score scale
                            grows over training steps; ranks by score.
* ``FixedRanker``        -- a constant permutation, for deterministic tests.
* ``ExternalRanker``     -- a child process speaking a line-delimited JSON
                            protocol; the contract point for a real listwise
                            reward model.

This module also hosts the scalar-preference-model demonstrator (pairwise
logistic fit whose scores diverge on separable data), the ranking-label
construction pipeline, and best-of-N tournament selection.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .core import Response
from .errors import ConfigurationError, ExternalRankerError, InputContractError


class Ranker(Protocol):
    def rank(
        self,
        responses: Sequence[Response],
        *,
        step: int = 0,
        rng: np.random.Generator | None = None,
    ) -> list[int]:
        """Local ranks over ``responses``: a bijection on 1..n, rank 1 best."""
        ...


def rank_by_scores(scores: Sequence[float]) -> list[int]:
    """Ranks by descending score, position index breaking ties. Any strictly
    increasing transform of the scores yields identical ranks."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranks = [0] * len(scores)
    for pos, idx in enumerate(order):
        ranks[idx] = pos + 1
    return ranks


def oracle_rank(responses: Sequence[Response]) -> list[int]:
    """Rank by descending latent quality, id breaking ties."""
    if len(responses) < 2:
        raise InputContractError("ranking needs at least 2 responses")
    return rank_by_scores([r.latent_quality for r in responses])


class OracleRanker:
    """Ground-truth ranker: best latent quality gets rank 1."""

    def rank(self, responses, *, step=0, rng=None) -> list[int]:
        return oracle_rank(responses)


@dataclass(frozen=True)
class NoisyScalarRanker:
    """Scalar scorer with the instabilities absolute reward models exhibit:
    an exponentially growing score scale, an additive drift of the baseline,
    and per-call Gaussian noise.

    score_i = exp(scale_growth_rate * step) * quality_i
              + shift_drift_rate * step + Normal(0, noise_std)

    With noise_std=0 the map from step to ranks is constant, because scale
    growth and drift are strictly increasing transforms of the scores.
    """

    scale_growth_rate: float = 0.0
    shift_drift_rate: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.scale_growth_rate) and math.isfinite(self.shift_drift_rate)):
            raise ConfigurationError("scalar ranker rates must be finite")
        if self.noise_std < 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")

    @property
    def emits_scores(self) -> bool:
        return True

    def scores(self, responses, *, step=0, rng=None) -> list[float]:
        scale = math.exp(self.scale_growth_rate * step)
        shift = self.shift_drift_rate * step
        out = [scale * r.latent_quality + shift for r in responses]
        if self.noise_std > 0:
            if rng is None:
                raise InputContractError("noisy scalar ranker needs an explicit rng")
            noise = rng.normal(0.0, self.noise_std, size=len(out))
            out = [s + float(e) for s, e in zip(out, noise)]
        return out

    def rank(self, responses, *, step=0, rng=None) -> list[int]:
        return rank_by_scores(self.scores(responses, step=step, rng=rng))


@dataclass(frozen=True)
class FixedRanker:
    """Returns the same permutation for every call; positional, so the i-th
    response always gets ``permutation[i]``."""

    permutation: tuple[int, ...]

    def rank(self, responses, *, step=0, rng=None) -> list[int]:
        if len(responses) != len(self.permutation):
            raise InputContractError(
                f"fixed ranker holds {len(self.permutation)} ranks, got {len(responses)} responses"
            )
        return list(self.permutation)


class ExternalRanker:
    """Child-process ranker speaking one JSON object per line over
    stdin/stdout.

    Request:  {"prompt_id": str, "responses": [{"id": int, "length": int,
               "features": [float, ...]}, ...]}
    Reply:    {"ranks": [int, ...]}  -- a bijection on 1..n.

    Any malformed reply, non-permutation, or timeout raises
    ExternalRankerError and aborts the run: silently falling back to another
    ranker would corrupt experiments comparing rankers. Access to the child
    is serialized with a lock; treat each instance as single-consumer.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = 10.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._timeout = timeout
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalRankerError(f"could not start ranker process: {exc}") from exc

    def close(self):
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _read_reply(self) -> str:
        result: list[str] = []
        reader = threading.Thread(
            target=lambda: result.append(self._proc.stdout.readline()), daemon=True
        )
        reader.start()
        reader.join(self._timeout)
        if not result or not result[0]:
            raise ExternalRankerError(
                f"no reply from ranker process within {self._timeout}s"
            )
        return result[0]

    def rank(self, responses, *, step=0, rng=None) -> list[int]:
        request = {
            "prompt_id": str(responses[0].prompt_id),
            "responses": [
                {"id": r.id, "length": r.length, "features": [r.latent_quality]}
                for r in responses
            ],
        }
        with self._lock:
            if self._proc.poll() is not None:
                raise ExternalRankerError("ranker process has exited")
            try:
                self._proc.stdin.write(json.dumps(request) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ExternalRankerError(f"could not write to ranker process: {exc}") from exc
            line = self._read_reply()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ExternalRankerError(f"malformed ranker reply: {line!r}") from exc
        ranks = reply.get("ranks") if isinstance(reply, dict) else None
        if not isinstance(ranks, list) or sorted(ranks) != list(range(1, len(responses) + 1)):
            raise ExternalRankerError(f"ranker reply is not a bijection on 1..n: {ranks!r}")
        return [int(r) for r in ranks]


# ---------------------------------------------------------------------------
# Scalar preference model (pairwise logistic fit) demonstrator
# ---------------------------------------------------------------------------


@dataclass
class BTModel:
    """Per-item scalar scores fit from pairwise preferences."""

    scores: np.ndarray
    learning_rate: float
    steps_taken: int = 0


@dataclass(frozen=True)
class BTTrajectoryPoint:
    step: int
    max_abs_score: float
    loss: float


def bt_gradient(delta: float) -> float:
    """d/d(delta) of log(1 + exp(-delta)): equals sigmoid(delta) - 1,
    strictly inside (-1, 0) for finite delta. Computed as -sigmoid(-delta)
    to stay accurate for large positive delta."""
    if not math.isfinite(delta):
        raise InputContractError(f"delta must be finite, got {delta}")
    if delta > 700.0:
        # exp(delta) would overflow; -1/(1+e^d) equals -e^-d to double precision
        return -math.exp(-delta)
    return -1.0 / (1.0 + math.exp(delta))


def _bt_loss(scores: np.ndarray, winners: np.ndarray, losers: np.ndarray) -> float:
    delta = scores[winners] - scores[losers]
    # log(1 + exp(-d)) via logaddexp for stability
    return float(np.mean(np.logaddexp(0.0, -delta)))


def bt_fit(
    pairs: Sequence[tuple[int, int]],
    items: int,
    lr: float,
    steps: int,
    record_every: int = 1,
    init_scores: Sequence[float] | None = None,
) -> tuple[BTModel, list[BTTrajectoryPoint]]:
    """Full-batch gradient descent on the mean pairwise logistic loss.

    Scores start at zero (or ``init_scores``). The trajectory records
    (step, max|score|, mean loss) at step 0, every ``record_every`` steps,
    and at the final step. On separable preferences the score gap grows
    without bound -- the loss gradient is strictly negative in the gap for
    every finite gap -- which is exactly the divergence this demonstrates.
    """
    if not pairs:
        raise ConfigurationError("preference fit needs at least one pair")
    if lr <= 0:
        raise ConfigurationError(f"learning rate must be > 0, got {lr}")
    winners = np.array([w for w, _ in pairs], dtype=np.intp)
    losers = np.array([l for _, l in pairs], dtype=np.intp)
    if winners.min(initial=0) < 0 or losers.min(initial=0) < 0 or \
            winners.max(initial=-1) >= items or losers.max(initial=-1) >= items:
        raise ConfigurationError("pair references an item id outside 0..items-1")

    scores = np.zeros(items) if init_scores is None else np.array(init_scores, dtype=float)
    trajectory = [
        BTTrajectoryPoint(0, float(np.max(np.abs(scores))), _bt_loss(scores, winners, losers))
    ]
    n_pairs = len(pairs)
    for step in range(1, steps + 1):
        delta = scores[winners] - scores[losers]
        g = -1.0 / (1.0 + np.exp(np.minimum(delta, 700.0)))  # sigmoid(delta) - 1
        grad = np.zeros(items)
        np.add.at(grad, winners, g)
        np.add.at(grad, losers, -g)
        grad /= n_pairs
        scores -= lr * grad
        if step % record_every == 0 or step == steps:
            trajectory.append(
                BTTrajectoryPoint(
                    step, float(np.max(np.abs(scores))), _bt_loss(scores, winners, losers)
                )
            )
    return BTModel(scores=scores, learning_rate=lr, steps_taken=steps), trajectory


# ---------------------------------------------------------------------------
# Ranking-label construction
# ---------------------------------------------------------------------------


class LabelSource(Enum):
    RULE_SRM = "RULE_SRM"
    RULE_FALLBACK = "RULE_FALLBACK"


@dataclass(frozen=True)
class RankLabel:
    """A training label for a listwise ranker: a permutation over n
    candidates in which correct candidates occupy the best positions."""

    permutation: tuple[int, ...]
    source: LabelSource

    def __post_init__(self):
        n = len(self.permutation)
        if sorted(self.permutation) != list(range(1, n + 1)):
            raise InputContractError(
                f"label permutation must be a bijection on 1..{n}, got {self.permutation}"
            )


def build_ranking_labels(
    correct: Sequence[bool],
    srm_scores: Sequence[float],
    fallback_ranks: Sequence[int],
) -> RankLabel:
    """Construct a ranking label: correct candidates strictly outrank
    incorrect ones; within each correctness class the scalar scores decide --
    unless the scorer contradicts the ground truth by putting any incorrect
    candidate above any correct one, in which case its signal is discarded
    for the whole group and ``fallback_ranks`` orders the classes instead.
    """
    n = len(correct)
    if not (len(srm_scores) == len(fallback_ranks) == n):
        raise InputContractError("correct, srm_scores, and fallback_ranks must align")
    if sorted(fallback_ranks) != list(range(1, n + 1)):
        raise InputContractError(f"fallback_ranks must be a bijection on 1..{n}")

    correct_idx = [i for i in range(n) if correct[i]]
    incorrect_idx = [i for i in range(n) if not correct[i]]

    contradiction = bool(correct_idx) and bool(incorrect_idx) and (
        max(srm_scores[i] for i in incorrect_idx) > min(srm_scores[i] for i in correct_idx)
    )

    if contradiction:
        source = LabelSource.RULE_FALLBACK
        key = lambda i: (fallback_ranks[i], i)
    else:
        source = LabelSource.RULE_SRM
        key = lambda i: (-srm_scores[i], i)

    ordered = sorted(correct_idx, key=key) + sorted(incorrect_idx, key=key)
    permutation = [0] * n
    for pos, idx in enumerate(ordered):
        permutation[idx] = pos + 1
    return RankLabel(permutation=tuple(permutation), source=source)


# ---------------------------------------------------------------------------
# Best-of-N tournament selection
# ---------------------------------------------------------------------------


def tournament_select(
    responses: Sequence[Response],
    ranker: Ranker,
    n: int = 4,
    *,
    step: int = 0,
    rng: np.random.Generator | None = None,
) -> int:
    """Pick the best of k responses with a ranker that compares at most n at
    a time: rank blocks of up to n, advance each block's winner, repeat until
    one remains. A leftover block of one advances on a bye. Returns the index
    of the winner in ``responses``; a single candidate wins without any
    ranker call."""
    if not responses:
        raise InputContractError("tournament needs at least one response")
    if n < 2:
        raise ConfigurationError(f"tournament block size must be >= 2, got {n}")

    indices = list(range(len(responses)))
    while len(indices) > 1:
        winners: list[int] = []
        for start in range(0, len(indices), n):
            block = indices[start : start + n]
            if len(block) == 1:
                winners.append(block[0])
                continue
            local = ranker.rank([responses[i] for i in block], step=step, rng=rng)
            winners.append(block[local.index(1)])
        indices = winners
    return indices[0]


def make_ranker(kind: str, **params) -> Ranker:
    """Build a ranker from a config-style kind string and parameters."""
    kind_norm = kind.strip().upper()
    if kind_norm == "ORACLE":
        if params:
            raise ConfigurationError(f"oracle ranker takes no parameters, got {sorted(params)}")
        return OracleRanker()
    if kind_norm == "NOISY_SCALAR":
        try:
            return NoisyScalarRanker(**params)
        except TypeError as exc:
            raise ConfigurationError(f"bad noisy_scalar parameters: {exc}") from exc
    if kind_norm == "FIXED":
        try:
            return FixedRanker(permutation=tuple(params.pop("permutation")))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError("fixed ranker needs a 'permutation' list") from exc
    if kind_norm == "EXTERNAL":
        command = params.pop("command", None)
        if not command:
            raise ConfigurationError("external ranker needs a 'command'")
        return ExternalRanker(command, timeout=float(params.pop("timeout", 10.0)))
    raise ConfigurationError(f"unknown ranker kind: {kind!r}")
