"""Command-line front end: ``gsdfront <subcommand> [flags]``.

Exit codes: 0 on success, 2 on usage errors, 1 on data errors. Diagnostics go
to standard error; results go to files under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .data_model import DataError
from .inference import DEFAULT_ALPHA, DEFAULT_RESAMPLES
from .report import (
    RunConfig,
    Session,
    build_report,
    load_test,
    stage_agreement,
    stage_front,
    stage_ingest,
    stage_metrics,
    stage_robust,
    stage_test,
    write_json,
)
from .simulation import Shift, SyntheticConfig, calibration_study

COMMANDS = ("ingest", "metrics", "front", "test", "robust", "agreement", "simulate", "report")


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file with defaults for any flag (flags win)")
    g.add_argument("--table", type=Path, help="evaluation table CSV (default: bundled benchmark)")
    g.add_argument("--scale", type=Path, help="scale JSON for the table")
    g.add_argument("--ratings", type=Path, help="two-rater CSV: prompt_id,strategy,rater_a,rater_b")
    g.add_argument("--tokens", type=Path, help="token records JSONL")
    g.add_argument("--params", type=Path, help="Q*Text parameter JSON")
    g.add_argument("--out", type=Path, help="output directory (default: gsd_out)")
    g.add_argument("--alpha", type=float, help=f"significance level (default {DEFAULT_ALPHA})")
    g.add_argument("--resamples", type=int, help=f"permutation resamples R (default {DEFAULT_RESAMPLES})")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--r2-budget", type=int, dest="r2_budget",
                   help="cap on enumerated R2 quadruples; 0 disables the cap")
    g.add_argument("--kmax", type=int, help="largest contamination size (default 5)")
    g.add_argument("--candidate", help="strategy tested for front membership (default: human)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="gsdfront",
        description="GSD-front analysis of multi-metric evaluation tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("ingest", parents=[common], help="validate a table and summarize its order structure") \
        .add_argument("--dump-relations", action="store_true", help="also write r1.txt and r2.txt")
    metrics = sub.add_parser("metrics", parents=[common], help="diversity, perplexity, coherence, Q*Text")
    metrics.add_argument("--fit", action="store_true", help="fit Q*Text parameters to --ratings")
    sub.add_parser("front", parents=[common], help="pairwise D statistics and the empirical front")
    sub.add_parser("test", parents=[common], help="front-membership permutation test")
    sub.add_parser("robust", parents=[common], help="contamination curves from a previous test run")
    sub.add_parser("agreement", parents=[common], help="inter-rater agreement statistics")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo rejection rate of the pairwise test")
    sim.add_argument("--runs", type=int, default=100)
    sim.add_argument("--prompts", type=int, default=20)
    sim.add_argument("--strategies", type=int, default=2)
    sim.add_argument("--cardinal", type=int, default=1, help="number of cardinal metrics")
    sim.add_argument("--ordinal", type=int, default=2, help="number of ordinal metrics")
    sim.add_argument("--levels", type=int, default=5, help="levels per ordinal metric")
    sim.add_argument("--delta", type=float, default=None, help="shift size; omit for the null")
    sim.add_argument("--bump-prob", type=float, default=1.0, dest="bump_prob")
    sub.add_parser("report", parents=[common], help="run the whole pipeline into one report")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional JSON config file and explicit flags (in that order)."""
    known = {f.name for f in fields(RunConfig)} - {"command"}
    merged: dict = {}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(loaded)
    for name in known:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    if merged.get("r2_budget") == 0:
        merged["r2_budget"] = None
    try:
        return RunConfig(command=args.command, **merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _dispatch(args: argparse.Namespace, cfg: RunConfig) -> dict:
    if args.command == "agreement":
        return stage_agreement(cfg)
    if args.command == "metrics":
        return stage_metrics(cfg, fit=args.fit)
    if args.command == "simulate":
        effect = None if args.delta is None else Shift(args.delta, args.bump_prob)
        sim_cfg = SyntheticConfig(
            strategy_count=args.strategies, prompt_count=args.prompts,
            cardinal_count=args.cardinal, ordinal_count=args.ordinal,
            ordinal_levels=args.levels, effect=effect, seed=cfg.seed,
        )
        study = calibration_study(sim_cfg, args.runs, cfg.resamples, cfg.alpha, cfg.r2_budget)
        study.pop("mean_runtime")  # keep the artifact reproducible
        study["config"] = {
            "strategies": args.strategies, "prompts": args.prompts,
            "cardinal": args.cardinal, "ordinal": args.ordinal, "levels": args.levels,
            "delta": args.delta, "bump_prob": args.bump_prob, "seed": cfg.seed,
        }
        cfg.out.mkdir(parents=True, exist_ok=True)
        write_json(study, cfg.out / "simulation.json")
        return {k: study[k] for k in ("runs", "rejections", "rejection_rate")}
    if args.command == "report":
        report = build_report(cfg)
        return {
            "front": report["dominance"]["front"],
            "reject_h0": report["front_test"]["reject_h0"],
            "front_breakdown": report["robustness"]["front_breakdown"],
        }
    session = Session(cfg)
    if args.command == "ingest":
        return stage_ingest(session, dump=args.dump_relations)["order_structure"]
    if args.command == "front":
        return {"front": stage_front(session)["front"]}
    if args.command == "test":
        result = stage_test(session)
        return {"candidate": result.candidate, "reject_h0": result.reject_h0,
                "p_values": {t.opponent: t.p_value for t in result.pairwise}}
    if args.command == "robust":
        block = stage_robust(session, load_test(session))
        return {"front_breakdown": block["front_breakdown"]}
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"gsdfront: usage error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = _dispatch(args, cfg)
    except UsageError as exc:
        print(f"gsdfront: usage error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, KeyError, ValueError, RuntimeError) as exc:
        print(f"gsdfront: error: {exc}", file=sys.stderr)
        return 1
    print(f"gsdfront {args.command}: {json.dumps(summary)} -> {cfg.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
