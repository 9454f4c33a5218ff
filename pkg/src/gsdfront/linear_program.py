"""Small linear programs: minimize c.x subject to A x >= b and box bounds.

Two solvers share one contract. ``method="simplex"`` is a self-contained
dense two-phase simplex with Bland's rule; ``method="highs"`` hands the
problem to HiGHS. :class:`PersistentLP` keeps a HiGHS model alive so that
many objectives can be optimized over one fixed feasible region with warm
starts, which is what the permutation test needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-12


@dataclass
class LinearProgram:
    """minimize ``objective @ x`` s.t. ``A @ x >= b`` and ``lo <= x <= hi``."""

    objective: np.ndarray
    A: sp.csr_matrix | np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = len(self.objective)
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=float)
        else:
            self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        if self.A.shape != (len(self.b), n):
            raise ValueError(f"constraint matrix shape {self.A.shape} does not match")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")
        data = self.A.data if sp.issparse(self.A) else self.A
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(data))
                and np.all(np.isfinite(self.b))):
            raise ValueError("LP inputs must be finite")
        if np.any(~np.isfinite(self.lo)):
            raise ValueError("lower bounds must be finite")

    @property
    def var_count(self) -> int:
        return len(self.objective)

    def dense_A(self) -> np.ndarray:
        return self.A.toarray() if sp.issparse(self.A) else self.A

    def with_constraint(self, a, rhs: float) -> "LinearProgram":
        row = np.asarray(a, dtype=float).reshape(1, -1)
        return LinearProgram(
            self.objective, np.vstack([self.dense_A(), row]),
            np.append(self.b, rhs), self.lo, self.hi,
        )

    def listing(self) -> str:
        """Plain-text LP listing for debugging."""
        lines = ["minimize " + _expr(self.objective), "subject to"]
        A = self.dense_A()
        for row, rhs in zip(A, self.b):
            lines.append(f"  {_expr(row)} >= {rhs:g}")
        lines.append("bounds")
        for i, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            lines.append(f"  {lo:g} <= x{i} <= {hi:g}")
        return "\n".join(lines) + "\n"


def _expr(coefs) -> str:
    terms = [f"{c:+g} x{i}" for i, c in enumerate(coefs) if c != 0]
    return " ".join(terms) if terms else "0"


@dataclass
class Solution:
    status: str
    value: float = float("nan")
    assignment: np.ndarray | None = None


def verify(lp: LinearProgram, sol: Solution, tol: float = FEAS_TOL) -> list[str]:
    """Independently re-check an optimal solution; returns a list of problems."""
    if sol.status != OPTIMAL:
        return []
    x = np.asarray(sol.assignment, dtype=float)
    problems = []
    if np.any(x < lp.lo - tol) or np.any(x > lp.hi + tol):
        problems.append("bound violated")
    slack = lp.A @ x - lp.b
    if len(slack) and slack.min() < -tol:
        problems.append(f"constraint violated by {-slack.min():.3g}")
    if abs(float(lp.objective @ x) - sol.value) > tol:
        problems.append("objective value mismatch")
    return problems


def solve_min(lp: LinearProgram, method: str = "highs") -> Solution:
    """Globally minimize ``lp``; infeasibility and unboundedness come back as status."""
    if method == "simplex":
        return _solve_simplex(lp)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


def _finish(lp: LinearProgram, x: np.ndarray) -> Solution:
    x = np.clip(x, lp.lo, lp.hi)
    return Solution(OPTIMAL, float(lp.objective @ x), x)


def _solve_highs(lp: LinearProgram) -> Solution:
    from scipy.optimize import linprog

    n = lp.var_count
    A_ub = -lp.A if lp.A.shape[0] else None
    b_ub = -lp.b if lp.A.shape[0] else None
    hi = [None if not np.isfinite(h) else h for h in lp.hi]
    res = linprog(
        lp.objective, A_ub=A_ub, b_ub=b_ub, bounds=list(zip(lp.lo, hi)),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return Solution(INFEASIBLE)
    if res.status == 3:
        return Solution(UNBOUNDED)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return _finish(lp, np.asarray(res.x, dtype=float).reshape(n))


# --- dense two-phase simplex -------------------------------------------------


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run_bland(T: np.ndarray, basis: list[int], allowed: int) -> str:
    """Minimize the objective row of tableau ``T`` in place using Bland's rule.

    The last row holds reduced costs (last entry: minus the objective value);
    only the first ``allowed`` columns may enter the basis.
    """
    rows = T.shape[0] - 1
    while True:
        reduced = T[-1, :allowed]
        candidates = np.flatnonzero(reduced < -FEAS_TOL)
        if len(candidates) == 0:
            return OPTIMAL
        col = int(candidates[0])
        best_row, best_ratio = -1, np.inf
        for i in range(rows):
            a = T[i, col]
            if a > _PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best_ratio - _PIVOT_TOL or (
                    abs(ratio - best_ratio) <= _PIVOT_TOL and basis[i] < basis[best_row]
                ):
                    best_row, best_ratio = i, ratio
        if best_row < 0:
            return UNBOUNDED
        _pivot(T, best_row, col)
        basis[best_row] = col


def _solve_simplex(lp: LinearProgram) -> Solution:
    n = lp.var_count
    A = lp.dense_A()
    # shift to y = x - lo >= 0; upper bounds become -y >= -(hi - lo)
    beta = lp.b - A @ lp.lo
    finite_hi = np.flatnonzero(np.isfinite(lp.hi))
    if len(finite_hi):
        ub_rows = np.zeros((len(finite_hi), n))
        ub_rows[np.arange(len(finite_hi)), finite_hi] = -1.0
        A = np.vstack([A, ub_rows])
        beta = np.concatenate([beta, -(lp.hi - lp.lo)[finite_hi]])
    rows = A.shape[0]
    if rows == 0:
        # only nonnegativity: each variable sits at its best bound
        if np.any(lp.objective < 0):
            return Solution(UNBOUNDED)
        return _finish(lp, lp.lo.copy())

    # a.y - s = beta; rows with beta > 0 get an artificial variable
    needs_art = beta > 0
    n_art = int(needs_art.sum())
    cols = n + rows + n_art
    T = np.zeros((rows + 1, cols + 1))
    basis: list[int] = []
    art = n + rows
    for i in range(rows):
        if needs_art[i]:
            T[i, :n] = A[i]
            T[i, n + i] = -1.0
            T[i, art] = 1.0
            T[i, -1] = beta[i]
            basis.append(art)
            art += 1
        else:
            T[i, :n] = -A[i]
            T[i, n + i] = 1.0
            T[i, -1] = -beta[i]
            basis.append(n + i)

    if n_art:
        # phase 1: minimize the artificial sum
        T[-1, n + rows:cols] = 1.0
        for i in range(rows):
            if basis[i] >= n + rows:
                T[-1] -= T[i]
        _run_bland(T, basis, cols)
        if -T[-1, -1] > FEAS_TOL:
            return Solution(INFEASIBLE)
        # drive zero-level artificials out of the basis
        keep = []
        for i in range(rows):
            if basis[i] >= n + rows:
                nz = np.flatnonzero(np.abs(T[i, : n + rows]) > _PIVOT_TOL)
                if len(nz) == 0:
                    continue  # redundant row
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
            keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        T = np.hstack([T[:, : n + rows], T[:, -1:]])
        rows = len(basis)

    # phase 2: original costs, expressed in reduced form
    T[-1] = 0.0
    T[-1, :n] = lp.objective
    for i in range(rows):
        cb = T[-1, basis[i]]
        if cb != 0.0:
            T[-1] -= cb * T[i]
    status = _run_bland(T, basis, n + rows)
    if status == UNBOUNDED:
        return Solution(UNBOUNDED)
    y = np.zeros(T.shape[1] - 1)
    for i, j in enumerate(basis):
        y[j] = T[i, -1]
    return _finish(lp, y[:n] + lp.lo)


class PersistentLP:
    """A fixed feasible region reused across many objectives (HiGHS, warm-started).

    Each solve starts from the previous basis, so results can depend on the
    call history in their last bits. Call :meth:`reset` to start a new,
    history-free sequence.
    """

    def __init__(self, A, b, lo, hi):
        import highspy

        self._lp = LinearProgram(np.zeros(len(lo)), A, b, lo, hi)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("primal_feasibility_tolerance", 1e-10)
        h.setOptionValue("dual_feasibility_tolerance", 1e-10)
        h.setOptionValue("threads", 1)
        n = self._lp.var_count
        inf = highspy.kHighsInf
        hi_arr = np.where(np.isfinite(self._lp.hi), self._lp.hi, inf)
        h.addVars(n, self._lp.lo, hi_arr)
        A_csr = sp.csr_matrix(self._lp.A)
        rows = A_csr.shape[0]
        if rows:
            h.addRows(
                rows,
                self._lp.b,
                np.full(rows, inf),
                A_csr.nnz,
                A_csr.indptr[:-1].astype(np.int32),
                A_csr.indices.astype(np.int32),
                A_csr.data.astype(float),
            )
        self._h = h
        self._idx = np.arange(n, dtype=np.int32)
        self._highspy = highspy

    @property
    def var_count(self) -> int:
        return self._lp.var_count

    def reset(self) -> None:
        """Drop the warm-start basis so the next solve starts cold."""
        self._h.clearSolver()

    def program(self, objective) -> LinearProgram:
        lp = self._lp
        return LinearProgram(objective, lp.A, lp.b, lp.lo, lp.hi)

    def solve(self, objective) -> Solution:
        c = np.asarray(objective, dtype=float)
        self._h.changeColsCost(len(c), self._idx, c)
        self._h.run()
        status = self._h.getModelStatus()
        ms = self._highspy.HighsModelStatus
        if status == ms.kOptimal:
            x = np.asarray(self._h.getSolution().col_value, dtype=float)
            return _finish(self.program(c), x)
        if status == ms.kInfeasible:
            return Solution(INFEASIBLE)
        if status in (ms.kUnbounded, ms.kUnboundedOrInfeasible):
            return Solution(UNBOUNDED)
        raise RuntimeError(f"HiGHS returned {self._h.modelStatusToString(status)}")
