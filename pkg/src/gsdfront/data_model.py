"""Evaluation tables: scale declarations, ingestion, validation, normalization.

An evaluation table holds one quality vector per (strategy, prompt) cell.
Cardinal metrics come first in every vector, ordinal metrics after them, and
every entry lives in [0, 1] once normalized.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CARDINAL = "cardinal"
ORDINAL = "ordinal"
NORMALIZATIONS = ("minmax", "inverse_minmax", "none")
FIXED_COLUMNS = ("prompt_id", "dataset", "strategy")


class DataError(ValueError):
    """Raised when input files cannot be turned into a valid evaluation table."""


@dataclass(frozen=True)
class MetricSpec:
    name: str
    scale: str
    normalization: str = "none"
    ordinal_levels: tuple | None = None

    def __post_init__(self):
        if not self.name or not self.name.isidentifier():
            raise DataError(f"metric name {self.name!r} is not an identifier")
        if self.scale not in (CARDINAL, ORDINAL):
            raise DataError(f"metric {self.name}: unknown scale {self.scale!r}")
        if self.normalization not in NORMALIZATIONS:
            raise DataError(
                f"metric {self.name}: unknown normalization {self.normalization!r}"
            )
        if self.scale == ORDINAL:
            levels = self.ordinal_levels
            if not levels:
                raise DataError(f"ordinal metric {self.name} declares no levels")
            if len({_level_key(v) for v in levels}) != len(levels):
                raise DataError(f"ordinal metric {self.name} has repeated levels")
            object.__setattr__(self, "ordinal_levels", tuple(levels))

    @property
    def level_count(self) -> int:
        return len(self.ordinal_levels) if self.ordinal_levels else 0

    def level_value(self, rank: int) -> float:
        """Map a 0-based level rank to its equally spaced point in [0, 1]."""
        c = self.level_count
        return 0.5 if c == 1 else rank / (c - 1)

    def level_rank(self, raw) -> int:
        """Return the 0-based rank of a raw ordinal label.

        Labels match either as strings or, when both sides are numeric, by
        numeric equality (so ``"5.0"`` matches a declared level ``5``).
        """
        key = _level_key(raw)
        for i, level in enumerate(self.ordinal_levels):
            if _level_key(level) == key:
                return i
        raise DataError(
            f"level out of range: {raw!r} is not a declared level of {self.name} "
            f"{list(self.ordinal_levels)}"
        )

    def to_dict(self) -> dict:
        d = {"name": self.name, "scale": self.scale, "normalization": self.normalization}
        if self.ordinal_levels is not None:
            d["ordinal_levels"] = list(self.ordinal_levels)
        return d


def _level_key(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class ScaleSpec:
    """Ordered metric declarations; cardinal metrics always precede ordinal ones."""

    metrics: tuple[MetricSpec, ...]

    def __post_init__(self):
        metrics = tuple(self.metrics)
        if not metrics:
            raise DataError("scale declares no metrics")
        names = [m.name for m in metrics]
        if len(set(names)) != len(names):
            raise DataError("duplicate metric names in scale")
        seen_ordinal = False
        for m in metrics:
            if m.scale == ORDINAL:
                seen_ordinal = True
            elif seen_ordinal:
                raise DataError(
                    f"cardinal metric {m.name} follows an ordinal metric; "
                    "cardinal metrics must come first"
                )
        object.__setattr__(self, "metrics", metrics)

    @property
    def n(self) -> int:
        return len(self.metrics)

    @property
    def z(self) -> int:
        return sum(m.scale == CARDINAL for m in self.metrics)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.metrics)

    @classmethod
    def from_dict(cls, data: dict) -> "ScaleSpec":
        try:
            entries = data["metrics"]
        except (KeyError, TypeError):
            raise DataError("scale file must contain a 'metrics' list") from None
        metrics = []
        for entry in entries:
            levels = entry.get("ordinal_levels")
            metrics.append(
                MetricSpec(
                    name=entry["name"],
                    scale=entry["scale"],
                    normalization=entry.get("normalization", "none"),
                    ordinal_levels=tuple(levels) if levels is not None else None,
                )
            )
        # stable reorder: cardinal block first
        metrics.sort(key=lambda m: m.scale == ORDINAL)
        return cls(tuple(metrics))

    def to_dict(self) -> dict:
        return {"metrics": [m.to_dict() for m in self.metrics]}


def load_scale(path: str | Path) -> ScaleSpec:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read scale file {path}: {exc}") from exc
    return ScaleSpec.from_dict(data)


def normalize_column(raw: Sequence[float], method: str) -> np.ndarray:
    """Min-max normalize a column into [0, 1].

    ``inverse_minmax`` flips the direction (lower raw is better). A constant
    column maps to 0.5 everywhere.
    """
    x = np.asarray(raw, dtype=float)
    if x.size == 0:
        raise ValueError("cannot normalize an empty column")
    if method == "none":
        return x.copy()
    if method not in ("minmax", "inverse_minmax"):
        raise ValueError(f"unknown normalization {method!r}")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.full_like(x, 0.5)
    if method == "minmax":
        return (x - lo) / (hi - lo)
    return (hi - x) / (hi - lo)


@dataclass(frozen=True)
class EvaluationTable:
    """Quality vectors for every (strategy, prompt) cell.

    ``values`` has shape (strategies, prompts, metrics) and holds normalized
    entries. ``raw`` keeps the pre-normalization numbers (ordinal entries as
    0-based level ranks) so a table can be written back out unchanged.
    Missing cells are NaN and reported by :func:`validate`.
    """

    strategies: tuple[str, ...]
    prompts: tuple[str, ...]
    values: np.ndarray
    scale: ScaleSpec
    datasets: tuple[str, ...] = ()
    raw: np.ndarray | None = None
    anchors: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "prompts", tuple(self.prompts))
        if not self.datasets:
            object.__setattr__(self, "datasets", ("",) * len(self.prompts))
        else:
            object.__setattr__(self, "datasets", tuple(self.datasets))
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.raw is not None:
            raw = np.array(self.raw, dtype=float)
            raw.setflags(write=False)
            object.__setattr__(self, "raw", raw)
        expected = (len(self.strategies), len(self.prompts), self.scale.n)
        if values.shape != expected:
            raise DataError(f"values have shape {values.shape}, expected {expected}")

    @property
    def m(self) -> int:
        return len(self.prompts)

    @property
    def weights(self) -> np.ndarray:
        """Uniform empirical prompt weights 1/m."""
        return np.full(self.m, 1.0 / self.m)

    def strategy_index(self, strategy: str) -> int:
        try:
            return self.strategies.index(strategy)
        except ValueError:
            raise KeyError(f"unknown strategy {strategy!r}") from None

    def cell(self, strategy: str, prompt: str) -> np.ndarray:
        return self.values[self.strategy_index(strategy), self.prompts.index(prompt)]

    def column(self, strategy: str) -> np.ndarray:
        """All quality vectors of one strategy, shape (prompts, metrics)."""
        return self.values[self.strategy_index(strategy)]

    def subset(self, strategies: Iterable[str]) -> "EvaluationTable":
        idx = [self.strategy_index(s) for s in strategies]
        return EvaluationTable(
            strategies=tuple(self.strategies[i] for i in idx),
            prompts=self.prompts,
            values=self.values[idx],
            scale=self.scale,
            datasets=self.datasets,
            raw=None if self.raw is None else self.raw[idx],
            anchors=dict(self.anchors),
        )


def from_raw(
    strategies: Sequence[str],
    prompts: Sequence[str],
    raw: np.ndarray,
    scale: ScaleSpec,
    datasets: Sequence[str] = (),
) -> EvaluationTable:
    """Build a normalized table from raw values.

    Cardinal entries of ``raw`` are metric values; ordinal entries are 0-based
    level ranks. Min/max anchors are taken over the whole batch.
    """
    raw = np.asarray(raw, dtype=float)
    values = np.empty_like(raw)
    anchors = {}
    for k, metric in enumerate(scale.metrics):
        col = raw[:, :, k]
        if metric.scale == ORDINAL:
            c = metric.level_count
            values[:, :, k] = 0.5 if c == 1 else col / (c - 1)
            continue
        flat = col.ravel()
        finite = flat[np.isfinite(flat)]
        if finite.size:
            values[:, :, k] = np.nan
            mask = np.isfinite(col)
            values[:, :, k][mask] = normalize_column(col[mask], metric.normalization)
            anchors[metric.name] = {
                "min": float(finite.min()),
                "max": float(finite.max()),
                "method": metric.normalization,
            }
        else:
            values[:, :, k] = np.nan
    return EvaluationTable(
        strategies=tuple(strategies),
        prompts=tuple(prompts),
        values=values,
        scale=scale,
        datasets=tuple(datasets),
        raw=raw,
        anchors=anchors,
    )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:  # truthy when there is something to report
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def validate(table: EvaluationTable) -> ValidationReport:
    """List every invariant violation of ``table``; empty means valid."""
    report = ValidationReport()
    out = report.violations
    for kind, ids in (("prompt", table.prompts), ("strategy", table.strategies)):
        seen = set()
        for i in ids:
            if i in seen:
                out.append(f"duplicate {kind} id {i!r}")
            seen.add(i)
    if table.m == 0:
        out.append("table has no prompts")
    if not table.strategies:
        out.append("table has no strategies")
    allowed = {}
    for k, metric in enumerate(table.scale.metrics):
        if metric.scale == ORDINAL:
            allowed[k] = np.array(
                [metric.level_value(r) for r in range(metric.level_count)]
            )
    for si, s in enumerate(table.strategies):
        for pi, p in enumerate(table.prompts):
            vec = table.values[si, pi]
            if np.isnan(vec).all():
                out.append(f"missing cell ({s}, {p})")
                continue
            for k, metric in enumerate(table.scale.metrics):
                x = vec[k]
                if not math.isfinite(x):
                    out.append(f"non-finite {metric.name} in cell ({s}, {p})")
                elif not 0.0 <= x <= 1.0:
                    out.append(f"{metric.name}={x!r} outside [0, 1] in cell ({s}, {p})")
                elif k in allowed and not np.any(allowed[k] == x):
                    out.append(f"{metric.name}={x!r} is not a mapped level in ({s}, {p})")
    return report


def load_evaluation_table(table_path: str | Path, scale_path: str | Path) -> EvaluationTable:
    """Read an evaluation CSV plus its scale file into a validated table."""
    scale = load_scale(scale_path)
    try:
        f = open(table_path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read table {table_path}: {exc}") from exc
    with f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing_fixed = [c for c in FIXED_COLUMNS if c not in header]
        if missing_fixed:
            raise DataError(f"table header lacks columns {missing_fixed}")
        metric_cols = [c for c in header if c not in FIXED_COLUMNS]
        unknown = [c for c in metric_cols if c not in scale.names]
        if unknown:
            raise DataError(f"unknown metric column(s) {unknown}")
        absent = [c for c in scale.names if c not in metric_cols]
        if absent:
            raise DataError(f"metric column(s) {absent} missing from table")
        rows = list(reader)

    prompts: list[str] = []
    datasets: dict[str, str] = {}
    strategies: list[str] = []
    cells: dict[tuple[str, str], dict] = {}
    for lineno, row in enumerate(rows, start=2):
        p, s = row["prompt_id"], row["strategy"]
        if p is None or s is None:
            raise DataError(f"line {lineno}: truncated row")
        if p not in datasets:
            prompts.append(p)
            datasets[p] = row["dataset"] or ""
        if s not in strategies:
            strategies.append(s)
        if (s, p) in cells:
            raise DataError(f"line {lineno}: duplicate row for ({s}, {p})")
        cells[(s, p)] = row

    raw = np.empty((len(strategies), len(prompts), scale.n))
    for si, s in enumerate(strategies):
        for pi, p in enumerate(prompts):
            row = cells.get((s, p))
            if row is None:
                raise DataError(f"missing cell ({s}, {p})")
            for k, metric in enumerate(scale.metrics):
                text = row[metric.name]
                if metric.scale == ORDINAL:
                    raw[si, pi, k] = metric.level_rank(text)
                    continue
                try:
                    x = float(text)
                except (TypeError, ValueError):
                    raise DataError(
                        f"cannot parse {metric.name}={text!r} in ({s}, {p})"
                    ) from None
                if not math.isfinite(x):
                    raise DataError(f"cardinal value non-finite: {metric.name} in ({s}, {p})")
                raw[si, pi, k] = x

    table = from_raw(strategies, prompts, raw, scale, [datasets[p] for p in prompts])
    report = validate(table)
    if report:
        raise DataError("; ".join(report.violations))
    return table


def write_evaluation_table(table: EvaluationTable, path: str | Path) -> None:
    """Write the raw (pre-normalization) table so reloading reproduces it."""
    if table.raw is None:
        raise ValueError("table carries no raw values to write")
    scale = table.scale
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(FIXED_COLUMNS) + list(scale.names))
        for pi, p in enumerate(table.prompts):
            for si, s in enumerate(table.strategies):
                row = [p, table.datasets[pi], s]
                for k, metric in enumerate(scale.metrics):
                    x = table.raw[si, pi, k]
                    if metric.scale == ORDINAL:
                        row.append(metric.ordinal_levels[int(x)])
                    else:
                        row.append(repr(float(x)))
                writer.writerow(row)


def write_scale(scale: ScaleSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scale.to_dict(), f, indent=2)
        f.write("\n")


@dataclass(frozen=True)
class TokenRecord:
    prompt_id: str
    strategy: str
    tokens: tuple[str, ...]
    uncond_logprob: tuple[float, ...]
    cond_logprob: tuple[float, ...]

    def __post_init__(self):
        n = len(self.tokens)
        for name in ("uncond_logprob", "cond_logprob"):
            logs = getattr(self, name)
            if len(logs) != n:
                raise DataError(
                    f"{self.prompt_id}/{self.strategy}: {name} has {len(logs)} "
                    f"entries for {n} tokens"
                )
            if any(not math.isfinite(v) or v > 0 for v in logs):
                raise DataError(
                    f"{self.prompt_id}/{self.strategy}: {name} must be finite and <= 0"
                )


def load_token_records(path: str | Path) -> list[TokenRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                records.append(
                    TokenRecord(
                        prompt_id=str(d["prompt_id"]),
                        strategy=str(d["strategy"]),
                        tokens=tuple(d["tokens"]),
                        uncond_logprob=tuple(float(v) for v in d["uncond_logprob"]),
                        cond_logprob=tuple(float(v) for v in d["cond_logprob"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad token record ({exc})") from exc
    return records
