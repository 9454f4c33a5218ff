"""Permutation tests for pairwise GSD comparisons and GSD-front membership.

The pairwise test uses D(candidate, opponent) as statistic. Under the null
the two strategies are exchangeable within each prompt, so every resample
swaps the pair's quality vectors on each prompt with probability 1/2 and
recomputes D over the unchanged preference system. Large observed values
speak against the opponent strictly dominating the candidate.

Front membership rejects only if the candidate's test rejects against every
opponent (intersection-union test).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data_model import EvaluationTable
from .gsd import DEFAULT_TOL, DStatistic, UtilityProgram, compute_d
from .order_structure import PreferenceSystem

DEFAULT_RESAMPLES = 1000
DEFAULT_ALPHA = 0.05


def permutation_p_value(observed: float, resampled, tol: float = DEFAULT_TOL) -> float:
    """``(1 + #{resampled >= observed}) / (R + 1)``.

    Resampled values within ``tol`` below the observed value count as ties,
    so solver noise never makes the test anti-conservative.
    """
    resampled = np.asarray(resampled, dtype=float)
    count = int(np.sum(resampled >= observed - tol))
    return (1 + count) / (len(resampled) + 1)


def resample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed for sub-test ``index``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


@dataclass
class PairwiseTestResult:
    candidate: str
    opponent: str
    observed: DStatistic
    resampled: np.ndarray = field(repr=False)
    p_value: float
    threshold: float
    reject: bool
    alpha: float
    seed: int
    tol: float = DEFAULT_TOL

    @property
    def resamples(self) -> int:
        return len(self.resampled)

    def to_dict(self, include_resampled: bool = True) -> dict:
        d = {
            "candidate": self.candidate,
            "opponent": self.opponent,
            "observed": self.observed.value,
            "p_value": self.p_value,
            "threshold": self.threshold,
            "reject": self.reject,
            "alpha": self.alpha,
            "seed": self.seed,
            "resamples": self.resamples,
            "tol": self.tol,
            "witness": [float(x) for x in self.observed.witness],
        }
        if include_resampled:
            d["resampled"] = [float(x) for x in self.resampled]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PairwiseTestResult":
        observed = DStatistic(
            float(d["observed"]), np.asarray(d["witness"], dtype=float),
            d["candidate"], d["opponent"],
        )
        return cls(
            candidate=d["candidate"],
            opponent=d["opponent"],
            observed=observed,
            resampled=np.asarray(d["resampled"], dtype=float),
            p_value=float(d["p_value"]),
            threshold=float(d["threshold"]),
            reject=bool(d["reject"]),
            alpha=float(d["alpha"]),
            seed=int(d["seed"]),
            tol=float(d.get("tol", DEFAULT_TOL)),
        )


def pairwise_test(
    table: EvaluationTable,
    system: PreferenceSystem,
    candidate: str,
    opponent: str,
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
) -> PairwiseTestResult:
    """Paired swap-permutation test of H0: ``opponent`` strictly GSD-dominates ``candidate``."""
    if resamples < 1:
        raise ValueError("need at least one resample")
    if candidate == opponent:
        raise ValueError("candidate and opponent must differ")
    observed = compute_d(table, system, candidate, opponent)
    a = system.node_of[table.strategy_index(candidate)]
    b = system.node_of[table.strategy_index(opponent)]
    prog = UtilityProgram.of(system)
    stats = np.empty(resamples)
    for r in range(resamples):
        swap = resample_rng(seed, r).random(table.m) < 0.5
        stats[r], _ = prog.minimize(np.where(swap, b, a), np.where(swap, a, b))
    p = permutation_p_value(observed.value, stats, tol)
    return PairwiseTestResult(
        candidate=candidate,
        opponent=opponent,
        observed=observed,
        resampled=stats,
        p_value=p,
        threshold=float(np.quantile(stats, 1.0 - alpha)),
        reject=p <= alpha,
        alpha=alpha,
        seed=int(seed),
        tol=tol,
    )


@dataclass
class FrontTestResult:
    candidate: str
    pairwise: list[PairwiseTestResult]
    reject_h0: bool
    alpha: float

    def to_dict(self, include_resampled: bool = True) -> dict:
        return {
            "candidate": self.candidate,
            "alpha": self.alpha,
            "reject_h0": self.reject_h0,
            "pairwise": [t.to_dict(include_resampled) for t in self.pairwise],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrontTestResult":
        return cls(
            candidate=d["candidate"],
            pairwise=[PairwiseTestResult.from_dict(t) for t in d["pairwise"]],
            reject_h0=bool(d["reject_h0"]),
            alpha=float(d["alpha"]),
        )


def front_membership_test(
    table: EvaluationTable,
    candidate: str,
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    system: PreferenceSystem | None = None,
    tol: float = DEFAULT_TOL,
) -> FrontTestResult:
    """Test H0: ``candidate`` is outside the GSD-front, against every other strategy."""
    from .order_structure import build_preference_system

    table.strategy_index(candidate)
    if system is None:
        system = build_preference_system(table)
    results = []
    for i, opponent in enumerate(table.strategies):
        if opponent == candidate:
            continue
        results.append(
            pairwise_test(
                table, system, candidate, opponent,
                resamples=resamples, seed=derive_seed(seed, i), alpha=alpha, tol=tol,
            )
        )
    return FrontTestResult(
        candidate=candidate,
        pairwise=results,
        reject_h0=all(t.reject for t in results),
        alpha=alpha,
    )


def write_resampled_csv(result: PairwiseTestResult, path) -> None:
    """Resampled statistics for a density plot, plus the observed value and threshold."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["resample", "statistic"])
        for r, x in enumerate(result.resampled):
            w.writerow([r, repr(float(x))])
