"""Empirical GSD statistic, dominance relations and the GSD-front.

``D(S, S')`` is the smallest expected-utility gap between two strategies over
all utilities compatible with the preference system. Utilities are bounded
to [0, 1] and live on the distinct observed vectors, so each D value is one
LP over the same feasible region; only the objective changes between pairs
and resamples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .data_model import EvaluationTable
from .linear_program import OPTIMAL, LinearProgram, PersistentLP
from .order_structure import DEFAULT_R2_BUDGET, PreferenceSystem, build_preference_system

DEFAULT_TOL = 1e-8


def constraint_matrix(system: PreferenceSystem) -> sp.csr_matrix:
    """Rows ``u(a) - u(b) >= 0`` per R1 covering edge, then
    ``u(t) - u(u) - u(v) + u(w) >= 0`` per reduced R2 quadruple."""
    k = len(system.vectors)
    edges = system.r1_edges.reshape(-1, 2)
    quads = system.r2_constraints.reshape(-1, 4)
    e, q = len(edges), len(quads)
    rows = np.concatenate([np.repeat(np.arange(e), 2), e + np.repeat(np.arange(q), 4)])
    cols = np.concatenate([edges.ravel(), quads.ravel()])
    data = np.concatenate([np.tile([1.0, -1.0], e), np.tile([1.0, -1.0, -1.0, 1.0], q)])
    # duplicate (row, col) entries are summed, e.g. t == w in a quadruple
    return sp.csr_matrix((data, (rows, cols)), shape=(e + q, k))


class UtilityProgram:
    """LP over utilities compatible with one preference system."""

    def __init__(self, system: PreferenceSystem):
        self.system = system
        k = len(system.vectors)
        A = constraint_matrix(system)
        self.A = A
        self.b = np.zeros(A.shape[0])
        self._lp = PersistentLP(A, self.b, np.zeros(k), np.ones(k))

    @classmethod
    def of(cls, system: PreferenceSystem) -> "UtilityProgram":
        prog = system.cache.get("utility_program")
        if prog is None:
            prog = system.cache["utility_program"] = cls(system)
        return prog

    def objective(self, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
        """Coefficients of (1/m) * sum_j [u(plus_j) - u(minus_j)]."""
        k = len(self.system.vectors)
        m = len(plus)
        return (np.bincount(plus, minlength=k) - np.bincount(minus, minlength=k)) / m

    def program(self, plus, minus) -> LinearProgram:
        return self._lp.program(self.objective(plus, minus))

    def reset(self) -> None:
        self._lp.reset()

    def minimize(self, plus: np.ndarray, minus: np.ndarray) -> tuple[float, np.ndarray]:
        """Return ``(value, witness)``; the value is re-summed from the witness."""
        c = self.objective(plus, minus)
        if not c.any():
            witness = np.full(len(c), 0.5)
            return 0.0, witness
        sol = self._lp.solve(c)
        if sol.status != OPTIMAL:
            # the constant utility is always feasible, so this is a bug
            raise RuntimeError(f"utility LP returned status {sol.status}")
        witness = sol.assignment
        return gap(witness, plus, minus), witness


def gap(utility: np.ndarray, plus: np.ndarray, minus: np.ndarray) -> float:
    """Empirical mean of u(plus_j) - u(minus_j), by direct summation."""
    return float(np.sum(utility[plus] - utility[minus]) / len(plus))


@dataclass
class DStatistic:
    value: float
    witness: np.ndarray = field(repr=False)
    candidate: str
    opponent: str


def compute_d(
    table: EvaluationTable, system: PreferenceSystem, s: str, s_prime: str
) -> DStatistic:
    """Empirical D(s, s'): minimal mean utility gap over compatible utilities."""
    i, j = table.strategy_index(s), table.strategy_index(s_prime)
    prog = UtilityProgram.of(system)
    # a cold start makes the witness independent of earlier solves
    prog.reset()
    value, witness = prog.minimize(system.node_of[i], system.node_of[j])
    return DStatistic(value, witness, s, s_prime)


def gsd_weak(d: DStatistic | float, tol: float = DEFAULT_TOL) -> bool:
    value = d.value if isinstance(d, DStatistic) else float(d)
    return value >= -tol


def gsd_strict(d_fwd: DStatistic | float, d_rev: DStatistic | float, tol: float = DEFAULT_TOL) -> bool:
    return gsd_weak(d_fwd, tol) and not gsd_weak(d_rev, tol)


@dataclass
class FrontResult:
    front: list[str]
    strategies: list[str]
    d: dict[tuple[str, str], float]
    tol: float

    def weak(self, s: str, t: str) -> bool:
        return gsd_weak(self.d[(s, t)], self.tol)

    def strict(self, s: str, t: str) -> bool:
        return gsd_strict(self.d[(s, t)], self.d[(t, s)], self.tol)

    def to_dict(self) -> dict:
        matrix = []
        for s in self.strategies:
            for t in self.strategies:
                matrix.append({
                    "strategy": s,
                    "opponent": t,
                    "d": self.d[(s, t)],
                    "weak": self.weak(s, t),
                    "strict": self.strict(s, t),
                })
        return {"front": list(self.front), "tol": self.tol, "dominance": matrix}


def gsd_front(
    table: EvaluationTable,
    system: PreferenceSystem | None = None,
    tol: float = DEFAULT_TOL,
    r2_budget: int | None = DEFAULT_R2_BUDGET,
) -> FrontResult:
    """Empirical GSD-front: strategies not strictly dominated by any other."""
    if system is None:
        system = build_preference_system(table, r2_budget)
    names = list(table.strategies)
    d = {}
    for s in names:
        for t in names:
            d[(s, t)] = 0.0 if s == t else compute_d(table, system, s, t).value
    front = [
        s for s in names
        if not any(gsd_strict(d[(t, s)], d[(s, t)], tol) for t in names if t != s)
    ]
    if not front:
        raise RuntimeError("empty GSD-front: strict dominance is cyclic under the tolerance")
    return FrontResult(front, names, d, tol)
