"""File formats: line-delimited JSON records for run logs, shaped groups,
preference-fit trajectories and ranking labels, plus the comma-separated
summary tables.

Floats serialize through ``json`` using Python's shortest round-trip repr,
so re-parsing a file reconstructs bit-identical values.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterator, Sequence

from .core import Group, RankVector, Response, ShapedGroup
from .engine import RunLog, RunLogRecord
from .errors import SchemaError
from .rankers import BTTrajectoryPoint, RankLabel, rank_by_scores


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(", ", ": "))


# ---------------------------------------------------------------------------
# Run logs
# ---------------------------------------------------------------------------


def write_run_log(path: Path, resolved_config: dict, run_log: RunLog) -> None:
    """Header line (resolved config + step-0 metrics) followed by one record
    per line."""
    with path.open("w") as fh:
        fh.write(
            _dump(
                {
                    "config": resolved_config,
                    "initial_accuracy": run_log.initial_accuracy,
                    "initial_mean_correct_length": run_log.initial_mean_correct_length,
                }
            )
            + "\n"
        )
        for rec in run_log.records:
            fh.write(_dump(asdict(rec)) + "\n")


def read_run_log(path: Path) -> tuple[dict, RunLog]:
    """Inverse of write_run_log; returns (resolved config, RunLog)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"run log {path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"run log {path} header is not valid JSON: {exc}", 1) from exc
    if "config" not in header:
        raise SchemaError(f"run log {path} first line is not a header record", 1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            records.append(RunLogRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError) as exc:
            raise SchemaError(f"bad run-log record: {exc}", lineno) from exc
    return header["config"], RunLog(
        initial_accuracy=header.get("initial_accuracy", 0.0),
        initial_mean_correct_length=header.get("initial_mean_correct_length", 0.0),
        records=tuple(records),
    )


def write_summary(path: Path, resolved_config: dict, run_log: RunLog) -> None:
    records = run_log.records
    final = records[-1] if records else None
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "mode",
            "algorithm",
            "steps",
            "initial_accuracy",
            "final_accuracy",
            "final_mean_correct_length",
            "final_effective_ratio",
            "mean_effective_ratio",
        ]
    )
    ratios = [r.effective_ratio for r in records]
    writer.writerow(
        [
            resolved_config["shaping"]["mode"],
            resolved_config["trainer"]["algorithm"],
            resolved_config["trainer"]["steps"],
            run_log.initial_accuracy,
            final.greedy_accuracy if final else "",
            final.mean_correct_length if final else "",
            final.effective_ratio if final else "",
            sum(ratios) / len(ratios) if ratios else "",
        ]
    )
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# Group records (shape subcommand input) and shaped-group records (output)
# ---------------------------------------------------------------------------


def _require(record: dict, key: str, lineno: int):
    if key not in record:
        raise SchemaError(f"missing required field {key!r}", lineno)
    return record[key]


def parse_group_record(record: dict, lineno: int) -> tuple[Group, list[int]]:
    """One input group: responses plus raw ranks. Raw ranks default to the
    scalar-score ordering when scores are present, else to id order."""
    if not isinstance(record, dict):
        raise SchemaError("group record must be an object", lineno)
    prompt_id = _require(record, "prompt_id", lineno)
    raw_responses = _require(record, "responses", lineno)
    if not isinstance(raw_responses, list) or len(raw_responses) < 2:
        raise SchemaError("responses must be a list of at least 2 objects", lineno)

    responses = []
    raw_ranks: list[int | None] = []
    scores: list[float | None] = []
    for entry in raw_responses:
        if not isinstance(entry, dict):
            raise SchemaError("each response must be an object", lineno)
        try:
            responses.append(
                Response(
                    id=int(_require(entry, "id", lineno)),
                    prompt_id=prompt_id,
                    correct=bool(_require(entry, "correct", lineno)),
                    length=int(_require(entry, "length", lineno)),
                    latent_quality=float(entry.get("latent_quality", 0.0)),
                    scalar_score=(
                        float(entry["scalar_score"]) if entry.get("scalar_score") is not None else None
                    ),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad response field: {exc}", lineno) from exc
        raw_ranks.append(int(entry["raw_rank"]) if entry.get("raw_rank") is not None else None)
        scores.append(responses[-1].scalar_score)

    try:
        group = Group(prompt_id=prompt_id, responses=tuple(responses))
    except ValueError as exc:
        raise SchemaError(str(exc), lineno) from exc

    if all(r is not None for r in raw_ranks):
        ranks = [int(r) for r in raw_ranks]
    elif any(r is not None for r in raw_ranks):
        raise SchemaError("raw_rank must be present on all responses or none", lineno)
    elif all(s is not None for s in scores):
        ranks = rank_by_scores([float(s) for s in scores])
    else:
        ranks = [r.id + 1 for r in responses]
    return group, ranks


def read_group_records(path: Path) -> Iterator[tuple[int, Group, list[int]]]:
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not valid JSON: {exc.msg}", lineno) from exc
            group, raw_ranks = parse_group_record(record, lineno)
            yield lineno, group, raw_ranks


def shaped_group_to_dict(shaped: ShapedGroup) -> dict:
    return {
        "prompt_id": shaped.group.prompt_id,
        "responses": [
            {
                "id": r.id,
                "correct": r.correct,
                "length": r.length,
                "latent_quality": r.latent_quality,
                "scalar_score": r.scalar_score,
            }
            for r in shaped.group.responses
        ],
        "rule_rewards": list(shaped.rule_rewards),
        "ranks": list(shaped.ranks.ranks),
        "r_max": shaped.ranks.r_max,
        "shaped_rewards": list(shaped.shaped_rewards),
        "advantages": list(shaped.advantages),
        "clipped_advantages": list(shaped.clipped_advantages),
    }


def shaped_group_from_dict(record: dict, lineno: int = 0) -> ShapedGroup:
    try:
        responses = tuple(
            Response(
                id=int(r["id"]),
                prompt_id=record["prompt_id"],
                correct=bool(r["correct"]),
                length=int(r["length"]),
                latent_quality=float(r["latent_quality"]),
                scalar_score=None if r["scalar_score"] is None else float(r["scalar_score"]),
            )
            for r in record["responses"]
        )
        return ShapedGroup(
            group=Group(prompt_id=record["prompt_id"], responses=responses),
            rule_rewards=tuple(record["rule_rewards"]),
            ranks=RankVector(ranks=tuple(record["ranks"]), r_max=int(record["r_max"])),
            shaped_rewards=tuple(record["shaped_rewards"]),
            advantages=tuple(record["advantages"]),
            clipped_advantages=tuple(record["clipped_advantages"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad shaped-group record: {exc}", lineno) from exc


# ---------------------------------------------------------------------------
# Trajectories and ranking labels
# ---------------------------------------------------------------------------


def write_trajectory(path: Path, trajectory: Sequence[BTTrajectoryPoint]) -> None:
    with Path(path).open("w") as fh:
        for point in trajectory:
            fh.write(
                _dump(
                    {"step": point.step, "max_abs_score": point.max_abs_score, "loss": point.loss}
                )
                + "\n"
            )


def rank_label_to_dict(prompt_id, label: RankLabel) -> dict:
    return {
        "prompt_id": prompt_id,
        "permutation": list(label.permutation),
        "source": label.source.value,
    }
