"""Small random evaluation tables for property and oracle tests."""

from __future__ import annotations

import numpy as np

from gsdfront.data_model import CARDINAL, ORDINAL, MetricSpec, ScaleSpec, from_raw


def make_scale(z: int, o: int, levels: int = 3, normalization: str = "none") -> ScaleSpec:
    metrics = [MetricSpec(f"c{i}", CARDINAL, normalization) for i in range(z)]
    metrics += [MetricSpec(f"o{i}", ORDINAL, "none", tuple(range(1, levels + 1))) for i in range(o)]
    return ScaleSpec(tuple(metrics))


def table_from(raw, z: int, levels: int = 3, normalization: str = "none"):
    """``raw`` has shape (strategies, prompts, metrics); ordinal entries are 0-based ranks."""
    raw = np.asarray(raw, dtype=float)
    k, m, n = raw.shape
    scale = make_scale(z, n - z, levels, normalization)
    return from_raw([f"S{i}" for i in range(k)], [f"P{j}" for j in range(m)], raw, scale)


def random_small(rng: np.random.Generator, max_strategies=4, max_prompts=5, max_metrics=3):
    """Random instance within the small-oracle envelope (0.25 grid, <= 3 levels)."""
    k = int(rng.integers(2, max_strategies + 1))
    m = int(rng.integers(1, max_prompts + 1))
    n = int(rng.integers(1, max_metrics + 1))
    z = int(rng.integers(0, min(2, n) + 1))
    levels = int(rng.integers(2, 4))
    raw = np.empty((k, m, n))
    raw[:, :, :z] = rng.integers(0, 5, size=(k, m, z)) * 0.25
    raw[:, :, z:] = rng.integers(0, levels, size=(k, m, n - z))
    return table_from(raw, z, levels), z


# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
