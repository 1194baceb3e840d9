"""Run configuration: a JSON file with task / trainer / ranker / shaping /
output blocks, every knob defaulted, unknown keys rejected.

The resolved form (``RunConfig.to_dict``) is written verbatim into run
outputs; parsing it back yields an identical configuration, which is what
makes logged runs reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .core import NormMode, ShapingConfig, ShapingMode
from .engine import Algorithm, Difficulty, TrainerConfig
from .errors import ConfigurationError
from .rankers import Ranker, make_ranker

_TASK_KEYS = {"difficulty", "prompts", "K", "seed"}
_TRAINER_KEYS = {
    "algorithm",
    "G",
    "n",
    "epsilon",
    "learning_rate",
    "mini_epochs",
    "steps",
    "batch_size",
    "seed",
    "temperature",
}
_SHAPING_KEYS = {"mode", "tau", "lambda", "xi_minus", "xi_plus", "norm_mode"}
_OUTPUT_KEYS = {"dir", "log_interval"}
_TOP_KEYS = {"task", "trainer", "ranker", "shaping", "output"}
_RANKER_KINDS = {"ORACLE", "NOISY_SCALAR", "FIXED", "EXTERNAL"}


@dataclass(frozen=True)
class TaskConfig:
    difficulty: Difficulty = Difficulty.MEDIUM
    prompts: int = 200
    pool_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.prompts < 1:
            raise ConfigurationError(f"task.prompts must be >= 1, got {self.prompts}")
        if self.pool_size < 4:
            raise ConfigurationError(f"task.K must be >= 4, got {self.pool_size}")
        if self.seed < 0:
            raise ConfigurationError(f"task.seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class RankerSpec:
    kind: str = "ORACLE"
    params: dict = field(default_factory=dict)

    def build(self) -> Ranker:
        return make_ranker(self.kind, **self.params)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    log_interval: int = 1

    def __post_init__(self):
        if self.log_interval < 1:
            raise ConfigurationError(
                f"output.log_interval must be >= 1, got {self.log_interval}"
            )


@dataclass(frozen=True)
class RunConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    ranker: RankerSpec = field(default_factory=RankerSpec)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def shaping(self) -> ShapingConfig:
        return self.trainer.shaping

    def to_dict(self) -> dict:
        """Fully resolved, JSON-serializable form; parseable by from_dict."""
        lam = self.shaping.lam
        return {
            "task": {
                "difficulty": self.task.difficulty.name,
                "prompts": self.task.prompts,
                "K": self.task.pool_size,
                "seed": self.task.seed,
            },
            "trainer": {
                "algorithm": self.trainer.algorithm.value,
                "G": self.trainer.group_size,
                "n": self.trainer.subgroup_size,
                "epsilon": self.trainer.epsilon,
                "learning_rate": self.trainer.learning_rate,
                "mini_epochs": self.trainer.mini_epochs,
                "steps": self.trainer.steps,
                "batch_size": self.trainer.batch_size,
                "seed": self.trainer.seed,
                "temperature": self.trainer.temperature,
            },
            "ranker": {"kind": self.ranker.kind, **self.ranker.params},
            "shaping": {
                "mode": self.shaping.mode.value,
                "tau": self.shaping.tau,
                "lambda": "inf" if math.isinf(lam) else lam,
                "xi_minus": self.shaping.xi_minus,
                "xi_plus": self.shaping.xi_plus,
                "norm_mode": self.shaping.norm_mode.value,
            },
            "output": {"dir": self.output.dir, "log_interval": self.output.log_interval},
        }


def _reject_unknown(block: dict, allowed: set[str], prefix: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {prefix}{key}")


def _parse_enum(enum_cls, raw: Any, key: str):
    if isinstance(raw, enum_cls):
        return raw
    name = str(raw).strip().upper()
    for member in enum_cls:
        if member.name == name or str(member.value).upper() == name:
            return member
    choices = ", ".join(m.name for m in enum_cls)
    raise ConfigurationError(f"{key} must be one of {choices}, got {raw!r}")


def _parse_lambda(raw: Any) -> float:
    if isinstance(raw, str):
        if raw.strip().lower() in ("inf", "infinite", "infinity"):
            return math.inf
        raise ConfigurationError(f"shaping.lambda must be a number or 'inf', got {raw!r}")
    value = float(raw)
    if math.isinf(value):
        return math.inf
    if value <= 0 or value != int(value):
        raise ConfigurationError(
            f"shaping.lambda must be a positive integer or 'inf', got {raw!r}"
        )
    return value


def from_dict(raw: dict) -> RunConfig:
    """Validate a plain config dict and apply defaults. Raises
    ConfigurationError naming the offending key on any violation."""
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be an object")
    _reject_unknown(raw, _TOP_KEYS, "")

    task_raw = dict(raw.get("task", {}))
    _reject_unknown(task_raw, _TASK_KEYS, "task.")
    task = TaskConfig(
        difficulty=_parse_enum(Difficulty, task_raw.get("difficulty", "MEDIUM"), "task.difficulty"),
        prompts=int(task_raw.get("prompts", 200)),
        pool_size=int(task_raw.get("K", 16)),
        seed=int(task_raw.get("seed", 0)),
    )

    shaping_raw = dict(raw.get("shaping", {}))
    _reject_unknown(shaping_raw, _SHAPING_KEYS, "shaping.")
    shaping = ShapingConfig(
        mode=_parse_enum(ShapingMode, shaping_raw.get("mode", "HRR"), "shaping.mode"),
        tau=float(shaping_raw.get("tau", 0.1)),
        lam=_parse_lambda(shaping_raw.get("lambda", 2048)),
        xi_minus=float(shaping_raw.get("xi_minus", -1e-3)),
        xi_plus=float(shaping_raw.get("xi_plus", 1e-3)),
        norm_mode=_parse_enum(NormMode, shaping_raw.get("norm_mode", "STD"), "shaping.norm_mode"),
    )

    output_raw = dict(raw.get("output", {}))
    _reject_unknown(output_raw, _OUTPUT_KEYS, "output.")
    output = OutputConfig(
        dir=str(output_raw.get("dir", "run")),
        log_interval=int(output_raw.get("log_interval", 1)),
    )

    trainer_raw = dict(raw.get("trainer", {}))
    _reject_unknown(trainer_raw, _TRAINER_KEYS, "trainer.")
    trainer = TrainerConfig(
        algorithm=_parse_enum(Algorithm, trainer_raw.get("algorithm", "GRPO"), "trainer.algorithm"),
        shaping=shaping,
        group_size=int(trainer_raw.get("G", 8)),
        subgroup_size=int(trainer_raw.get("n", 4)),
        epsilon=float(trainer_raw.get("epsilon", 0.2)),
        learning_rate=float(trainer_raw.get("learning_rate", 0.1)),
        mini_epochs=int(trainer_raw.get("mini_epochs", 2)),
        steps=int(trainer_raw.get("steps", 300)),
        batch_size=int(trainer_raw.get("batch_size", 32)),
        seed=int(trainer_raw.get("seed", 0)),
        eval_every=output.log_interval,
        temperature=float(trainer_raw.get("temperature", 1.0)),
    )

    ranker_raw = dict(raw.get("ranker", {}))
    kind = str(ranker_raw.pop("kind", "ORACLE")).strip().upper()
    if kind not in _RANKER_KINDS:
        raise ConfigurationError(
            f"ranker.kind must be one of {sorted(_RANKER_KINDS)}, got {kind!r}"
        )
    ranker = RankerSpec(kind=kind, params=ranker_raw)
    # Validate ranker params eagerly so bad configs fail before any output
    # is written (EXTERNAL is excluded: building it spawns the process).
    if kind != "EXTERNAL":
        ranker.build()
    elif not ranker_raw.get("command"):
        raise ConfigurationError("ranker.command is required for an EXTERNAL ranker")

    return RunConfig(task=task, trainer=trainer, ranker=ranker, output=output)


def parse_config(path: str | Path) -> RunConfig:
    """Load and validate a config file. An empty object is a valid config:
    every field has a default."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    return from_dict(raw)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply repeated KEY=VALUE flags (dotted keys) onto a plain config dict.
    Values parse as JSON scalars when possible, else stay strings."""
    out = json.loads(json.dumps(raw))  # deep copy, JSON types only
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override must look like KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = parsed
    return out
