"""Pipeline stages shared by the CLI subcommands, and the bundled report.

Every stage writes its own artifacts into an output directory and returns a
JSON-ready block. ``build_report`` runs the stages in order and writes the
same per-stage files plus ``report.json``, so the report is the union of the
individually produced artifacts. Anything that varies between identical runs
(timestamps, wall-clock durations) goes to ``report.meta.json`` instead.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import plots
from .agreement import agreement_report, load_ratings
from .data_model import (
    EvaluationTable,
    DataError,
    load_evaluation_table,
    load_token_records,
    validate,
)
from .gsd import DEFAULT_TOL, gsd_front
from .inference import (
    DEFAULT_ALPHA,
    DEFAULT_RESAMPLES,
    FrontTestResult,
    front_membership_test,
    write_resampled_csv,
)
from .linear_program import FEAS_TOL
from .order_structure import DEFAULT_R2_BUDGET, PreferenceSystem, build_preference_system, dump_relations
from .robustness import contamination_curve, front_breakdown, write_curve_csv
from .text_metrics import (
    FitTrace,
    QTextParams,
    SearchConfig,
    compute_text_metrics,
    fit_qtext_params,
    normalized_inputs,
    write_metrics_csv,
)

REPORT_SCHEMA = "gsdfront.report/1"
P_VALUE_CONVENTION = "(1 + #{resampled >= observed - tol}) / (R + 1)"


def bundled(name: str) -> Path:
    """Path of a file shipped in the package data directory."""
    return Path(str(resources.files("gsdfront") / "data" / name))


@dataclass
class RunConfig:
    command: str
    table: Path = field(default_factory=lambda: bundled("benchmark.csv"))
    scale: Path = field(default_factory=lambda: bundled("benchmark_scale.json"))
    ratings: Path | None = None
    tokens: Path | None = None
    params: Path | None = None
    out: Path = Path("gsd_out")
    alpha: float = DEFAULT_ALPHA
    resamples: int = DEFAULT_RESAMPLES
    seed: int = 0
    r2_budget: int | None = DEFAULT_R2_BUDGET
    kmax: int = 5
    candidate: str | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.resamples < 1:
            raise ValueError("resamples must be >= 1")
        if self.kmax < 0:
            raise ValueError("kmax must be >= 0")
        if self.r2_budget is not None and self.r2_budget < 1:
            raise ValueError("r2 budget must be >= 1 (or omitted for no limit)")
        for name in ("table", "scale", "ratings", "tokens", "params", "out"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))


def write_json(data, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, allow_nan=False)
        f.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


class Session:
    """Loaded inputs and lazily built order structure for one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.table: EvaluationTable = load_evaluation_table(cfg.table, cfg.scale)
        problems = validate(self.table)
        if problems:
            raise DataError("invalid evaluation table: " + "; ".join(problems.violations[:5]))
        self._system: PreferenceSystem | None = None
        cfg.out.mkdir(parents=True, exist_ok=True)

    @property
    def system(self) -> PreferenceSystem:
        if self._system is None:
            self._system = build_preference_system(self.table, self.cfg.r2_budget)
        return self._system

    def candidate(self) -> str:
        name = self.cfg.candidate
        if name is None:
            name = "human" if "human" in self.table.strategies else self.table.strategies[0]
        if name not in self.table.strategies:
            raise DataError(f"candidate {name!r} is not a strategy in the table")
        return name

    def path(self, name: str) -> Path:
        return self.cfg.out / name


def stage_ingest(s: Session, dump: bool = False) -> dict:
    t = s.table
    block = {
        "strategies": list(t.strategies),
        "prompts": t.m,
        "datasets": sorted(set(t.datasets)),
        "metrics": [m.to_dict() for m in t.scale.metrics],
        "normalization_anchors": t.anchors,
        "order_structure": s.system.summary(),
    }
    write_json(block, s.path("ingest.json"))
    if dump:
        dump_relations(s.system, s.path("r1.txt"), s.path("r2.txt"))
    return block


def stage_front(s: Session) -> dict:
    block = gsd_front(s.table, s.system).to_dict()
    write_json(block, s.path("front.json"))
    return block


def stage_test(s: Session) -> FrontTestResult:
    cfg = s.cfg
    result = front_membership_test(
        s.table, s.candidate(), resamples=cfg.resamples, seed=cfg.seed,
        alpha=cfg.alpha, system=s.system,
    )
    data = result.to_dict()
    data["r2_budget"] = cfg.r2_budget
    write_json(data, s.path("test.json"))
    series = {}
    for t in result.pairwise:
        write_resampled_csv(t, s.path(f"resampled_{_safe(t.opponent)}.csv"))
        series[t.opponent] = (t.resampled, t.observed.value, t.threshold)
    (s.path("density.svg")).write_text(plots.density_svg(series), encoding="utf-8")
    return result


def load_test(s: Session) -> FrontTestResult:
    path = s.path("test.json")
    if not path.exists():
        raise DataError(f"{path} not found; run the test subcommand first")
    with open(path, encoding="utf-8") as f:
        result = FrontTestResult.from_dict(json.load(f))
    names = set(s.table.strategies)
    for t in result.pairwise:
        if t.candidate not in names or t.opponent not in names:
            raise DataError(f"{path} refers to strategies missing from the table")
        if len(t.observed.witness) != len(s.system.vectors):
            raise DataError(f"{path} was produced from a different table")
    return result


def stage_robust(s: Session, result: FrontTestResult) -> dict:
    m = s.table.m
    kmax = min(s.cfg.kmax, m)
    curves = [contamination_curve(t, s.table, s.system, kmax) for t in result.pairwise]
    for c in curves:
        write_curve_csv(c, s.path(f"pcurve_{_safe(c.opponent)}.csv"))
    s.path("pcurve.svg").write_text(
        plots.pcurve_svg({c.opponent: (c.ks, c.p_values) for c in curves}, result.alpha),
        encoding="utf-8",
    )
    block = {
        "candidate": result.candidate,
        "alpha": result.alpha,
        "kmax": kmax,
        "front_breakdown": front_breakdown(curves),
        "curves": [c.to_dict() for c in curves],
    }
    write_json(block, s.path("robust.json"))
    return block


def stage_agreement(cfg: RunConfig, scale_levels=None) -> dict:
    path = cfg.ratings or bundled("benchmark_ratings.csv")
    levels = tuple(scale_levels) if scale_levels else (1, 2, 3, 4, 5)
    _, pairs = load_ratings(path, levels)
    block = agreement_report(pairs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(block, cfg.out / "agreement.json")
    return block


def stage_metrics(cfg: RunConfig, fit: bool = False) -> dict:
    if cfg.tokens is None:
        raise DataError("metrics needs --tokens (JSONL token records)")
    records = load_token_records(cfg.tokens)
    params = QTextParams()
    if cfg.params is not None:
        with open(cfg.params, encoding="utf-8") as f:
            params = QTextParams.from_dict(json.load(f))
    block = {}
    if fit:
        if cfg.ratings is None:
            raise DataError("fitting Q*Text needs --ratings")
        keys, pairs = load_ratings(cfg.ratings)
        human = {k: (a + b) / 2 for k, a, b in zip(keys, pairs.rater_a, pairs.rater_b)}
        rows, _ = compute_text_metrics(records, params)
        matched = [(r, human[(r.prompt_id, r.strategy)]) for r in rows
                   if (r.prompt_id, r.strategy) in human]
        if len(matched) < 3:
            raise DataError("fewer than three texts have human ratings")
        M = normalized_inputs([r.perplexity for r, _ in matched],
                              [r.coherence for r, _ in matched],
                              [r.diversity for r, _ in matched])
        trace = FitTrace()
        params, rho = fit_qtext_params(M, [h for _, h in matched],
                                       SearchConfig(seed=cfg.seed), trace)
        block["fit"] = {"spearman_rho": rho, "evaluated_candidates": len(trace.rhos)}
    rows, anchors = compute_text_metrics(records, params)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(rows, cfg.out / "metrics.csv")
    block.update({"texts": len(rows), "params": params.to_dict(),
                  "normalization_anchors": anchors})
    write_json(block, cfg.out / "metrics.json")
    return block


def _ordinal_levels(table: EvaluationTable):
    for m in table.scale.metrics:
        if m.ordinal_levels:
            return m.ordinal_levels
    return None


def build_report(cfg: RunConfig) -> dict:
    """Run ingest, front, test, robust and agreement; write report.json and its sidecar."""
    started = time.time()
    clock = time.perf_counter()
    s = Session(cfg)
    timings = {}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        timings[name] = time.perf_counter() - t0
        return out

    ingest = timed("ingest", stage_ingest, s)
    front = timed("front", stage_front, s)
    test = timed("test", stage_test, s)
    robust = timed("robust", stage_robust, s, test)
    agreement = None
    if cfg.ratings is None and cfg.table == bundled("benchmark.csv"):
        cfg.ratings = bundled("benchmark_ratings.csv")
    if cfg.ratings is not None:
        agreement = timed("agreement", stage_agreement, cfg, _ordinal_levels(s.table))
    metrics = timed("metrics", stage_metrics, cfg) if cfg.tokens is not None else None

    opponents = [t.opponent for t in test.pairwise]
    report = {
        "schema": REPORT_SCHEMA,
        "dominance": front,
        "front_test": {
            "candidate": test.candidate,
            "alpha": test.alpha,
            "reject_h0": test.reject_h0,
            "pairwise": [t.to_dict(include_resampled=False) for t in test.pairwise],
            "resampled_csv": {o: f"resampled_{_safe(o)}.csv" for o in opponents},
            "density_svg": "density.svg",
        },
        "robustness": {
            **robust,
            "curve_csv": {o: f"pcurve_{_safe(o)}.csv" for o in opponents},
            "pcurve_svg": "pcurve.svg",
        },
        "agreement": agreement,
        "text_metrics": metrics,
        "provenance": {
            "inputs": {
                name: {"file": p.name, "sha256": _sha256(p)}
                for name, p in (("table", cfg.table), ("scale", cfg.scale),
                                ("ratings", cfg.ratings), ("tokens", cfg.tokens))
                if p is not None
            },
            "seeds": {
                "master": cfg.seed,
                "pairwise": {t.opponent: t.seed for t in test.pairwise},
                "resample_stream": "default_rng([pairwise_seed, resample_index])",
            },
            "resamples": cfg.resamples,
            "kmax": robust["kmax"],
            "tolerances": {
                "dominance": DEFAULT_TOL,
                "p_value_tie": test.pairwise[0].tol if test.pairwise else DEFAULT_TOL,
                "lp_feasibility": FEAS_TOL,
            },
            "p_value_convention": P_VALUE_CONVENTION,
            "order_structure": ingest["order_structure"],
            "r2_truncated": ingest["order_structure"]["r2_truncated"],
            "normalization_anchors": s.table.anchors,
        },
    }
    write_json(report, s.path("report.json"))
    timings["total"] = time.perf_counter() - clock
    write_json({
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "seconds": timings,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }, s.path("report.meta.json"))
    return report

