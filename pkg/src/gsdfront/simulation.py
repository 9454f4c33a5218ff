"""Synthetic evaluation tables and Monte Carlo calibration of the pairwise test."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .data_model import CARDINAL, ORDINAL, EvaluationTable, MetricSpec, ScaleSpec, from_raw
from .inference import derive_seed, pairwise_test
from .order_structure import DEFAULT_R2_BUDGET, build_preference_system

GRID_STEP = 0.05


@dataclass(frozen=True)
class Shift:
    """Improve one strategy: +delta on cardinal metrics, +1 ordinal level with ``bump_prob``."""

    delta: float
    bump_prob: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if not 0.0 <= self.bump_prob <= 1.0:
            raise ValueError("bump_prob must lie in [0, 1]")


@dataclass(frozen=True)
class SyntheticConfig:
    strategy_count: int = 2
    prompt_count: int = 20
    cardinal_count: int = 1
    ordinal_count: int = 2
    ordinal_levels: int = 5
    effect: Shift | None = None
    seed: int = 0
    designated: int = 0

    def __post_init__(self):
        if self.strategy_count < 1 or self.prompt_count < 1:
            raise ValueError("strategy and prompt counts must be >= 1")
        if self.cardinal_count < 0 or self.ordinal_count < 0:
            raise ValueError("metric counts must be >= 0")
        if self.cardinal_count + self.ordinal_count < 1:
            raise ValueError("need at least one metric")
        if self.ordinal_count and self.ordinal_levels < 1:
            raise ValueError("ordinal metrics need at least one level")
        if not 0 <= self.designated < self.strategy_count:
            raise ValueError("designated strategy index out of range")

    def scale(self) -> ScaleSpec:
        metrics = [MetricSpec(f"c{i + 1}", CARDINAL, "none") for i in range(self.cardinal_count)]
        levels = tuple(range(1, self.ordinal_levels + 1))
        metrics += [
            MetricSpec(f"o{i + 1}", ORDINAL, "none", levels) for i in range(self.ordinal_count)
        ]
        return ScaleSpec(tuple(metrics))


def generate_table(config: SyntheticConfig) -> EvaluationTable:
    """Draw a synthetic table.

    Cardinal values are uniform on the 0.05 grid and ordinal levels uniform.
    Under a shift effect every strategy draws cardinal values from the grid
    on [0, 1 - delta] and the designated strategy adds delta, so its mean
    exceeds the others' by exactly delta in expectation.
    """
    rng = np.random.default_rng(config.seed)
    k, m = config.strategy_count, config.prompt_count
    z, o = config.cardinal_count, config.ordinal_count
    effect = config.effect
    top = 1.0 - (effect.delta if effect else 0.0)
    grid = np.round(np.arange(int(np.floor(top / GRID_STEP + 1e-9)) + 1) * GRID_STEP, 10)
    card = grid[rng.integers(0, len(grid), size=(k, m, z))]
    ords = rng.integers(0, config.ordinal_levels, size=(k, m, o)) if o else np.zeros((k, m, 0))
    if effect is not None:
        d = config.designated
        card[d] = np.minimum(np.round(card[d] + effect.delta, 10), 1.0)
        if o:
            bump = rng.random((m, o)) < effect.bump_prob
            ords[d] = np.minimum(ords[d] + bump, config.ordinal_levels - 1)
    raw = np.concatenate([card, ords.astype(float)], axis=2)
    strategies = [f"S{i}" for i in range(k)]
    prompts = [f"P{j:03d}" for j in range(m)]
    return from_raw(strategies, prompts, raw, config.scale())


def calibration_study(
    config: SyntheticConfig,
    runs: int,
    resamples: int,
    alpha: float = 0.05,
    r2_budget: int | None = DEFAULT_R2_BUDGET,
    opponent: int | None = None,
) -> dict:
    """Rejection frequency of the pairwise test over repeated synthetic draws.

    Each run draws a table with a seed derived from ``(config.seed, run)``
    and tests the designated strategy against ``opponent`` (default: the
    first other strategy).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if config.strategy_count < 2:
        raise ValueError("calibration needs two strategies")
    if opponent is None:
        opponent = 1 if config.designated == 0 else 0
    rejections = 0
    elapsed = []
    p_values = []
    for run in range(runs):
        start = time.perf_counter()
        cfg = replace(config, seed=derive_seed(config.seed, run))
        table = generate_table(cfg)
        system = build_preference_system(table, r2_budget)
        res = pairwise_test(
            table, system,
            table.strategies[config.designated], table.strategies[opponent],
            resamples=resamples, seed=derive_seed(cfg.seed, 1), alpha=alpha,
        )
        rejections += res.reject
        p_values.append(res.p_value)
        elapsed.append(time.perf_counter() - start)
    return {
        "runs": runs,
        "resamples": resamples,
        "alpha": alpha,
        "rejections": rejections,
        "rejection_rate": rejections / runs,
        "mean_runtime": float(np.mean(elapsed)),
        "p_values": p_values,
    }


BENCHMARK_STRATEGIES = ("human", "beam", "contrastive", "temperature", "top_k", "top_p")
# mean latent quality and its spread per strategy
_BENCHMARK_PROFILE = {
    "human": (0.72, 0.12),
    "beam": (0.42, 0.18),
    "contrastive": (0.55, 0.15),
    "temperature": (0.45, 0.20),
    "top_k": (0.50, 0.16),
    "top_p": (0.52, 0.16),
}


def benchmark_scale() -> ScaleSpec:
    levels = (1, 2, 3, 4, 5)
    return ScaleSpec((
        MetricSpec("qtext", CARDINAL, "minmax"),
        MetricSpec("rater_a", ORDINAL, "none", levels),
        MetricSpec("rater_b", ORDINAL, "none", levels),
    ))


def benchmark_table(prompt_count: int = 50, seed: int = 2025) -> EvaluationTable:
    """Six-strategy table shaped like a human-vs-decoders study.

    A latent quality per (strategy, prompt) drives one cardinal automatic
    score and two noisy 1..5 ratings.
    """
    rng = np.random.default_rng(seed)
    k, m = len(BENCHMARK_STRATEGIES), prompt_count
    prompt_effect = rng.normal(0.0, 0.08, size=m)
    raw = np.empty((k, m, 3))
    for i, s in enumerate(BENCHMARK_STRATEGIES):
        mu, sd = _BENCHMARK_PROFILE[s]
        latent = np.clip(mu + prompt_effect + rng.normal(0.0, sd, size=m), 0.0, 1.0)
        raw[i, :, 0] = np.round(np.clip(latent + rng.normal(0.0, 0.05, size=m), 0.0, 1.0), 3)
        for r in (1, 2):
            rating = np.rint(1 + 4 * latent + rng.normal(0.0, 0.6, size=m))
            raw[i, :, r] = np.clip(rating, 1, 5) - 1
    prompts = [f"p{j:02d}" for j in range(m)]
    datasets = ["wikitext" if j % 2 == 0 else "wikinews" for j in range(m)]
    return from_raw(BENCHMARK_STRATEGIES, prompts, raw, benchmark_scale(), datasets)
