"""Agreement between two raters on an ordinal (Likert) scale."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .text_metrics import spearman


class UndefinedStatistic(ValueError):
    """The statistic has a zero denominator for this data."""


@dataclass
class RatingPairs:
    rater_a: list
    rater_b: list
    levels: tuple = (1, 2, 3, 4, 5)

    def __post_init__(self):
        if len(self.rater_a) != len(self.rater_b):
            raise ValueError("raters must rate the same number of items")
        if not self.rater_a:
            raise ValueError("no ratings")
        self.levels = tuple(self.levels)
        index = {lvl: i for i, lvl in enumerate(self.levels)}
        try:
            self._a = np.array([index[v] for v in self.rater_a])
            self._b = np.array([index[v] for v in self.rater_b])
        except KeyError as exc:
            raise ValueError(f"rating {exc.args[0]!r} is not a declared level") from None

    @property
    def ranks(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based level ranks of both raters."""
        return self._a, self._b


def weighted_kappa(pairs: RatingPairs) -> float:
    """Cohen's kappa with linear disagreement weights |i - j| / (c - 1)."""
    c = len(pairs.levels)
    if c < 2:
        raise ValueError("need at least two levels")
    a, b = pairs.ranks
    observed = np.zeros((c, c))
    np.add.at(observed, (a, b), 1.0)
    observed /= len(a)
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    i, j = np.indices((c, c))
    v = np.abs(i - j) / (c - 1)
    den = float((v * expected).sum())
    if den == 0.0:
        raise UndefinedStatistic("weighted kappa undefined: both raters constant at one level")
    return 1.0 - float((v * observed).sum()) / den


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Tie-aware Spearman correlation (average ranks)."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two equal-length lists of length >= 2")
    rho = spearman(xs, ys)
    if np.isnan(rho):
        raise UndefinedStatistic("Spearman correlation undefined for a constant list")
    return rho


def agreement_summary(pairs: RatingPairs) -> dict:
    """Share of items within one level of each other and mean absolute level difference."""
    a, b = pairs.ranks
    diff = np.abs(a - b)
    return {
        "within_one_share": float(np.mean(diff <= 1)),
        "mean_abs_diff": float(np.mean(diff)),
    }


def agreement_report(pairs: RatingPairs) -> dict:
    """All agreement statistics as one JSON-ready block; undefined values become null."""
    out = {"items": len(pairs.rater_a), "levels": list(pairs.levels)}
    for name, fn in (
        ("weighted_kappa", lambda: weighted_kappa(pairs)),
        ("spearman_rho", lambda: spearman_rho(*pairs.ranks)),
    ):
        try:
            out[name] = fn()
        except UndefinedStatistic:
            out[name] = None
    out.update(agreement_summary(pairs))
    return out


def load_ratings(path, levels: Sequence = (1, 2, 3, 4, 5)) -> tuple[list[tuple[str, str]], RatingPairs]:
    """Read ``prompt_id,strategy,rater_a,rater_b``; returns item keys and the pairs."""
    keys, ra, rb = [], [], []
    numeric = all(isinstance(v, (int, float)) for v in levels)
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            keys.append((row["prompt_id"], row["strategy"]))
            a, b = row["rater_a"], row["rater_b"]
            if numeric:
                a, b = float(a), float(b)
                a = int(a) if a.is_integer() else a
                b = int(b) if b.is_integer() else b
            ra.append(a)
            rb.append(b)
    return keys, RatingPairs(ra, rb, tuple(levels))
