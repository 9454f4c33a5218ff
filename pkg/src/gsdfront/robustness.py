"""Sensitivity of pairwise tests to prompts that break the i.i.d. assumption.

For k contaminated prompts, an adversary may replace the k prompt-pairs that
help the candidate most. Under the observed witness utility each prompt
contributes ``(u(cand_j) - u(opp_j)) / m`` to the statistic, and with
utilities in [0, 1] the worst replacement contributes ``-1/m``. The adjusted
statistic is compared against the unchanged resampled distribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data_model import EvaluationTable
from .inference import PairwiseTestResult, permutation_p_value
from .order_structure import PreferenceSystem


@dataclass
class ContaminationCurve:
    candidate: str
    opponent: str
    ks: np.ndarray
    statistics: np.ndarray
    p_values: np.ndarray
    alpha: float

    @property
    def breakdown(self) -> int:
        """Largest k up to which every p_k stays <= alpha; -1 if p_0 already exceeds it."""
        ok = self.p_values <= self.alpha
        if not ok[0]:
            return -1
        bad = np.flatnonzero(~ok)
        return int(self.ks[-1]) if len(bad) == 0 else int(self.ks[bad[0] - 1])

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(int(k), float(p)) for k, p in zip(self.ks, self.p_values)]

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "opponent": self.opponent,
            "alpha": self.alpha,
            "breakdown": self.breakdown,
            "points": [
                {"k": int(k), "statistic": float(s), "p_value": float(p)}
                for k, s, p in zip(self.ks, self.statistics, self.p_values)
            ],
        }


def prompt_contributions(
    test: PairwiseTestResult, table: EvaluationTable, system: PreferenceSystem
) -> np.ndarray:
    """Per-prompt share of the observed statistic under its witness utility."""
    u = np.asarray(test.observed.witness, dtype=float)
    a = system.node_of[table.strategy_index(test.candidate)]
    b = system.node_of[table.strategy_index(test.opponent)]
    return (u[a] - u[b]) / table.m


def contamination_curve(
    test: PairwiseTestResult,
    table: EvaluationTable,
    system: PreferenceSystem,
    k_max: int,
) -> ContaminationCurve:
    """p-value of ``test`` when up to ``k_max`` prompts are adversarially replaced."""
    m = table.m
    if not 0 <= k_max <= m:
        raise ValueError(f"k_max must lie in [0, {m}]")
    contrib = prompt_contributions(test, table, system)
    # drop from observed to worst case, largest first; each in [0, 2/m]
    drops = np.sort(contrib + 1.0 / m)[::-1]
    ks = np.arange(k_max + 1)
    stats = np.empty(k_max + 1)
    stats[0] = test.observed.value
    cum = np.cumsum(drops[:k_max])
    stats[1:] = test.observed.value - cum
    p = np.array([permutation_p_value(s, test.resampled, test.tol) for s in stats])
    return ContaminationCurve(test.candidate, test.opponent, ks, stats, p, test.alpha)


def front_breakdown(curves: list[ContaminationCurve], alpha: float | None = None) -> int:
    """Contamination size every sub-test survives (minimum of the breakdowns)."""
    if not curves:
        raise ValueError("no contamination curves given")
    if alpha is not None:
        curves = [
            ContaminationCurve(c.candidate, c.opponent, c.ks, c.statistics, c.p_values, alpha)
            for c in curves
        ]
    return min(c.breakdown for c in curves)


def write_curve_csv(curve: ContaminationCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["k", "p_value"])
        for k, p in curve.points:
            w.writerow([k, repr(p)])
