"""Automatic text-quality metrics and the Q*Text aggregate.

Diversity works on token lists; perplexity and coherence on ingested
per-token log-probabilities. Q*Text combines the three normalized metrics
(perplexity inverted, since lower is better) as a penalized weighted mean.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .data_model import TokenRecord, normalize_column


def _ngram_ratio(tokens: Sequence, n: int) -> float:
    total = len(tokens) - n + 1
    if total <= 0:
        return 1.0  # empty-product convention for short inputs
    grams = {tuple(tokens[i : i + n]) for i in range(total)}
    return len(grams) / total


def diversity(tokens: Sequence) -> float:
    """Product over n = 2..4 of unique n-grams / total n-grams."""
    tokens = list(tokens)
    return _ngram_ratio(tokens, 2) * _ngram_ratio(tokens, 3) * _ngram_ratio(tokens, 4)


def _check_logprobs(logs) -> np.ndarray:
    x = np.asarray(logs, dtype=float)
    if x.size == 0:
        raise ValueError("empty log-probability list")
    if not np.all(np.isfinite(x)) or np.any(x > 0):
        raise ValueError("log-probabilities must be finite and <= 0")
    return x


def perplexity(uncond_logprob) -> float:
    """exp of the negative mean log-probability."""
    return math.exp(-float(np.mean(_check_logprobs(uncond_logprob))))


def coherence(cond_logprob) -> float:
    """Mean log-likelihood of the continuation given the prompt."""
    return float(np.mean(_check_logprobs(cond_logprob)))


def gaussian_penalty(x: float, mu: float, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("penalty strength must be >= 0")
    return math.exp(-alpha * (x - mu) ** 2)


@dataclass(frozen=True)
class QTextParams:
    """Weights, targets and penalty strengths for (perplexity, coherence, diversity)."""

    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    targets: tuple[float, float, float] = (1.0, 1.0, 1.0)
    strengths: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("weights", "targets", "strengths"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 3:
                raise ValueError(f"{name} needs exactly three values")
            object.__setattr__(self, name, vals)
        if any(w < 0 for w in self.weights) or not any(self.weights):
            raise ValueError("weights must be >= 0 and not all zero")
        if any(not 0 <= mu <= 1 for mu in self.targets):
            raise ValueError("targets must lie in [0, 1]")
        if any(a < 0 for a in self.strengths):
            raise ValueError("strengths must be >= 0")

    def as_vector(self) -> tuple[float, ...]:
        return self.weights + self.targets + self.strengths

    @classmethod
    def from_vector(cls, v) -> "QTextParams":
        v = tuple(v)
        return cls(v[0:3], v[3:6], v[6:9])

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "targets": list(self.targets),
                "strengths": list(self.strengths)}

    @classmethod
    def from_dict(cls, d: dict) -> "QTextParams":
        return cls(tuple(d["weights"]), tuple(d["targets"]), tuple(d["strengths"]))


def qtext(M: Sequence[float], params: QTextParams) -> float:
    """Penalized weighted mean of three normalized metrics."""
    if len(M) != 3:
        raise ValueError("Q*Text takes exactly three metric values")
    num = 0.0
    for m, w, mu, a in zip(M, params.weights, params.targets, params.strengths):
        num += w * m * gaussian_penalty(m, mu, a)
    return num / sum(params.weights)


def qtext_batch(M: np.ndarray, params: QTextParams) -> np.ndarray:
    """Vectorized :func:`qtext` over rows of an (N, 3) array."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(params.weights)
    mu = np.asarray(params.targets)
    a = np.asarray(params.strengths)
    return (M * np.exp(-a * (M - mu) ** 2)) @ w / w.sum()


def normalized_inputs(ppl, coh, div) -> np.ndarray:
    """(N, 3) Q*Text inputs: inverse min-max perplexity, min-max coherence and diversity."""
    return np.column_stack([
        normalize_column(ppl, "inverse_minmax"),
        normalize_column(coh, "minmax"),
        normalize_column(div, "minmax"),
    ])


def spearman(xs, ys) -> float:
    """Pearson correlation of average ranks; NaN when either side is constant."""
    rx = rankdata(np.asarray(xs, dtype=float))
    ry = rankdata(np.asarray(ys, dtype=float))
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    return float(rx @ ry) / den if den > 0 else float("nan")


W_GRID = tuple(np.round(np.arange(0, 2.0001, 0.25), 10))
MU_GRID = tuple(np.round(np.arange(0, 1.0001, 0.1), 10))
ALPHA_GRID = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass
class SearchConfig:
    """Coordinate-wise grid refinement with random restarts."""

    weight_grid: tuple = W_GRID
    target_grid: tuple = MU_GRID
    strength_grid: tuple = ALPHA_GRID
    rounds: int = 3
    restarts: int = 16
    seed: int = 0

    def grids(self) -> list[tuple]:
        return [self.weight_grid] * 3 + [self.target_grid] * 3 + [self.strength_grid] * 3


@dataclass
class FitTrace:
    """Every distinct candidate evaluated, in evaluation order."""

    candidates: list = field(default_factory=list)
    rhos: list = field(default_factory=list)


def fit_qtext_params(
    metric_rows,
    human,
    search: SearchConfig | None = None,
    trace: FitTrace | None = None,
) -> tuple[QTextParams, float]:
    """Search Q*Text parameters maximizing Spearman correlation with human ratings.

    ``metric_rows`` holds normalized (perplexity, coherence, diversity) inputs
    per text. Restart 0 starts from the first grid value of every parameter;
    later restarts start from random grid points. Ties keep the earliest
    evaluated candidate.
    """
    search = search or SearchConfig()
    M = np.asarray(metric_rows, dtype=float)
    h = np.asarray(human, dtype=float)
    if M.ndim != 2 or M.shape[1] != 3 or len(M) != len(h):
        raise ValueError("metric rows must be (N, 3) and match the ratings")
    if len(h) < 3:
        raise ValueError("need at least three texts")
    if np.all(h == h[0]):
        raise ValueError("human ratings are constant; Spearman correlation undefined")

    grids = search.grids()
    cache: dict[tuple, float] = {}
    best: tuple | None = None
    best_rho = -math.inf

    def evaluate(vec: tuple) -> float:
        nonlocal best, best_rho
        if vec in cache:
            return cache[vec]
        if not any(vec[:3]):
            rho = -math.inf  # all-zero weights: not a valid candidate
        else:
            rho = spearman(qtext_batch(M, QTextParams.from_vector(vec)), h)
            if math.isnan(rho):
                rho = -math.inf
            if trace is not None:
                trace.candidates.append(QTextParams.from_vector(vec))
                trace.rhos.append(rho)
            if rho > best_rho:
                best, best_rho = vec, rho
        cache[vec] = rho
        return rho

    rng = np.random.default_rng(search.seed)
    for restart in range(search.restarts):
        if restart == 0:
            point = [g[0] for g in grids]
        else:
            point = [g[rng.integers(len(g))] for g in grids]
        current = evaluate(tuple(point))
        for _ in range(search.rounds):
            for i, grid in enumerate(grids):
                for value in grid:
                    trial = list(point)
                    trial[i] = value
                    rho = evaluate(tuple(trial))
                    if rho > current:
                        point, current = trial, rho
    if best is None:
        # every candidate degenerate: fall back to a full enumeration check
        for vec in itertools.product(*grids):
            evaluate(vec)
        if best is None:
            raise ValueError("no candidate yields a defined Spearman correlation")
    return QTextParams.from_vector(best), best_rho


@dataclass
class TextMetrics:
    prompt_id: str
    strategy: str
    diversity: float
    perplexity: float
    coherence: float
    qtext: float = float("nan")


def compute_text_metrics(
    records: list[TokenRecord], params: QTextParams | None = None
) -> tuple[list[TextMetrics], dict]:
    """Metrics per record plus Q*Text from batch-normalized inputs.

    Returns the rows and the normalization anchors used.
    """
    params = params or QTextParams()
    rows = [
        TextMetrics(r.prompt_id, r.strategy, diversity(r.tokens),
                    perplexity(r.uncond_logprob), coherence(r.cond_logprob))
        for r in records
    ]
    if not rows:
        return rows, {}
    ppl = [r.perplexity for r in rows]
    coh = [r.coherence for r in rows]
    div = [r.diversity for r in rows]
    scores = qtext_batch(normalized_inputs(ppl, coh, div), params)
    for r, q in zip(rows, scores):
        r.qtext = float(q)
    anchors = {
        name: {"min": float(min(v)), "max": float(max(v))}
        for name, v in (("perplexity", ppl), ("coherence", coh), ("diversity", div))
    }
    return rows, anchors


def write_metrics_csv(rows: list[TextMetrics], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["prompt_id", "strategy", "diversity", "perplexity", "coherence", "qtext"])
        for r in rows:
            w.writerow([r.prompt_id, r.strategy, repr(r.diversity), repr(r.perplexity),
                        repr(r.coherence), repr(r.qtext)])
