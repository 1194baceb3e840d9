"""Command-line surface.

Subcommands:

* ``simulate``        -- run a training simulation from a config file and
                         write config.resolved / runlog / summary into the
                         output directory.
* ``shape``           -- batch reward shaping: group records in, shaped-group
                         records out.
* ``bt-demo``         -- fit per-item scores from pairwise preferences and
                         emit the (step, max|score|, loss) trajectory.
* ``build-rank-data`` -- turn candidate groups into ranking-label records.
* ``report``          -- tabulate one or more run logs side by side.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import config as config_mod
from . import runio
from .core import shape_group
from .engine import make_task, run_training
from .errors import ConfigurationError, RelrankError
from .rankers import bt_fit, build_ranking_labels, rank_by_scores

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(args) -> config_mod.RunConfig:
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    else:
        raw = {}
    raw = config_mod.apply_overrides(raw, args.override or [])
    if getattr(args, "seed", None) is not None:
        raw.setdefault("task", {})["seed"] = args.seed
        raw.setdefault("trainer", {})["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        raw.setdefault("output", {})["dir"] = str(args.out)
    return config_mod.from_dict(raw)


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    task = make_task(cfg.task.difficulty, cfg.task.prompts, cfg.task.pool_size, cfg.task.seed)
    ranker = cfg.ranker.build()
    run_log = run_training(task, cfg.trainer, ranker)

    # All output is written only after the run finished, so a failed run
    # leaves no partial files behind.
    out_dir = Path(cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = cfg.to_dict()
    (out_dir / "config.resolved").write_text(json.dumps(resolved, indent=2) + "\n")
    runio.write_run_log(out_dir / "runlog", resolved, run_log)
    runio.write_summary(out_dir / "summary", resolved, run_log)
    print(f"wrote {out_dir}/config.resolved, runlog ({len(run_log.records)} records), summary")
    return EXIT_OK


def cmd_shape(args) -> int:
    cfg = _load_config(args)
    lines = []
    for _, group, raw_ranks in runio.read_group_records(Path(args.input)):
        shaped = shape_group(group, raw_ranks, cfg.shaping)
        lines.append(json.dumps(runio.shaped_group_to_dict(shaped)))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out is not None:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_pairs(spec: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ">" not in chunk:
            raise ConfigurationError(f"pair must look like WINNER>LOSER, got {chunk!r}")
        w, _, l = chunk.partition(">")
        try:
            pairs.append((int(w), int(l)))
        except ValueError as exc:
            raise ConfigurationError(f"pair ids must be integers, got {chunk!r}") from exc
    return pairs


def cmd_bt_demo(args) -> int:
    pairs = _parse_pairs(args.pairs)
    _, trajectory = bt_fit(
        pairs, items=args.items, lr=args.lr, steps=args.steps, record_every=args.record_every
    )
    runio.write_trajectory(Path(args.out), trajectory)
    print(f"wrote {args.out} ({len(trajectory)} records)")
    return EXIT_OK


def cmd_build_rank_data(args) -> int:
    lines = []
    for lineno, group, raw_ranks in runio.read_group_records(Path(args.input)):
        correct = [r.correct for r in group.responses]
        scores = [r.scalar_score if r.scalar_score is not None else 0.0 for r in group.responses]
        # The raw ranks double as the fallback permutation; when they came
        # from scores or id order they are bijective by construction.
        if sorted(raw_ranks) != list(range(1, group.size + 1)):
            fallback = rank_by_scores([-r for r in raw_ranks])
        else:
            fallback = raw_ranks
        label = build_ranking_labels(correct, scores, fallback)
        lines.append(json.dumps(runio.rank_label_to_dict(group.prompt_id, label)))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out is not None:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["runlog", "mode", "final_accuracy", "final_mean_correct_length", "mean_effective_ratio"]
    )
    for path in args.runlogs:
        resolved, run_log = runio.read_run_log(Path(path))
        records = run_log.records
        ratios = [r.effective_ratio for r in records]
        writer.writerow(
            [
                path,
                resolved["shaping"]["mode"],
                records[-1].greedy_accuracy if records else "",
                records[-1].mean_correct_length if records else "",
                sum(ratios) / len(ratios) if ratios else "",
            ]
        )
    if args.out is not None:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; omit for all defaults")
    p.add_argument(
        "--override",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (dotted path), repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relrank",
        description="Rank-based relative reward shaping and a desk-scale training simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a seeded training simulation")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, help="override both task and trainer seeds")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("shape", help="shape a file of group records")
    _add_config_flags(p)
    p.add_argument("--input", required=True, help="line-delimited group records")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("bt-demo", help="pairwise-preference score fit demo")
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--pairs", required=True, help='e.g. "0>1,1>2" (winner>loser)')
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--out", required=True, help="trajectory output file")
    p.set_defaults(func=cmd_bt_demo)

    p = sub.add_parser("build-rank-data", help="construct ranking labels from candidate groups")
    p.add_argument("--input", required=True, help="line-delimited group records")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_build_rank_data)

    p = sub.add_parser("report", help="tabulate run logs")
    p.add_argument("runlogs", nargs="+", help="run log files, rows appear in this order")
    p.add_argument("--out", help="output CSV file (default stdout)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RelrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
