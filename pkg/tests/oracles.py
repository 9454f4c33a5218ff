"""Independent reference implementations used by the tests.

Nothing here imports the package's algorithms: relations are enumerated
straight from their definitions, and the D statistic is solved with the
full, unreduced constraint list through scipy's HiGHS interface.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
from scipy.optimize import linprog


def distinct_vectors(values: np.ndarray) -> list[tuple]:
    n = values.shape[-1]
    return sorted({tuple(float(x) for x in v) for v in values.reshape(-1, n)})


def r1_pairs(vecs: list[tuple]) -> list[tuple[int, int]]:
    return [
        (i, j) for i, x in enumerate(vecs) for j, y in enumerate(vecs)
        if all(a >= b for a, b in zip(x, y))
    ]


def r2_holds(t, u, v, w, z: int) -> bool:
    card = all(t[i] - u[i] >= v[i] - w[i] - 1e-12 for i in range(z))
    ordl = all(t[i] >= v[i] >= w[i] >= u[i] for i in range(z, len(t)))
    return card and ordl


def r2_quads(vecs, r1, z: int) -> list[tuple[int, int, int, int]]:
    return [
        (t, u, v, w) for (t, u), (v, w) in itertools.product(r1, r1)
        if r2_holds(vecs[t], vecs[u], vecs[v], vecs[w], z)
    ]


def constraint_rows(vecs, z: int) -> np.ndarray:
    """Every R1 and R2 constraint as a dense row of ``A x >= 0``."""
    k = len(vecs)
    r1 = r1_pairs(vecs)
    rows = []
    for a, b in r1:
        if a != b:
            row = np.zeros(k)
            row[a] += 1
            row[b] -= 1
            rows.append(row)
    for t, u, v, w in r2_quads(vecs, r1, z):
        row = np.zeros(k)
        row[t] += 1
        row[u] -= 1
        row[v] -= 1
        row[w] += 1
        if np.any(row):
            rows.append(row)
    return np.array(rows).reshape(-1, k)


def objective(values: np.ndarray, vecs, s: int, t: int) -> np.ndarray:
    index = {v: i for i, v in enumerate(vecs)}
    m = values.shape[1]
    c = np.zeros(len(vecs))
    for j in range(m):
        c[index[tuple(float(x) for x in values[s, j])]] += 1.0 / m
        c[index[tuple(float(x) for x in values[t, j])]] -= 1.0 / m
    return c


def d_statistic(values: np.ndarray, z: int, s: int, t: int, rows=None) -> float:
    """D(s, t) over the full, unreduced constraint list."""
    vecs = distinct_vectors(values)
    A = constraint_rows(vecs, z) if rows is None else rows
    c = objective(values, vecs, s, t)
    res = linprog(
        c, A_ub=-A if len(A) else None, b_ub=np.zeros(len(A)) if len(A) else None,
        bounds=[(0, 1)] * len(vecs), method="highs",
    )
    assert res.status == 0
    return float(res.fun)


def utility_violations(vecs, u: dict, z: int, tol: float) -> int:
    """Count R1/R2 constraints broken by the utility ``u`` (vector -> value)."""
    r1 = r1_pairs(vecs)
    bad = sum(u[vecs[a]] < u[vecs[b]] - tol for a, b in r1)
    for t, uu, v, w in r2_quads(vecs, r1, z):
        if u[vecs[t]] - u[vecs[uu]] < u[vecs[v]] - u[vecs[w]] - tol:
            bad += 1
    return bad


def ngram_diversity(tokens) -> float:
    out = 1.0
    for n in (2, 3, 4):
        grams = [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]
        if grams:
            out *= len(Counter(grams)) / len(grams)
    return out


def perplexity(logs) -> float:
    return math.exp(-sum(logs) / len(logs))


def coherence(logs) -> float:
    return sum(logs) / len(logs)


def penalty(x, mu, alpha) -> float:
    return math.exp(-alpha * (x - mu) * (x - mu))


def qtext(M, w, mu, alpha) -> float:
    num = 0.0
    for i in range(3):
        num += w[i] * M[i] * penalty(M[i], mu[i], alpha[i])
    return num / sum(w)


def linear_kappa(a, b, levels) -> float:
    c = len(levels)
    idx = {lvl: i for i, lvl in enumerate(levels)}
    O = [[0.0] * c for _ in range(c)]
    for x, y in zip(a, b):
        O[idx[x]][idx[y]] += 1 / len(a)
    ra = [sum(O[i]) for i in range(c)]
    cb = [sum(O[i][j] for i in range(c)) for j in range(c)]
    num = den = 0.0
    for i in range(c):
        for j in range(c):
            v = abs(i - j) / (c - 1)
            num += v * O[i][j]
            den += v * ra[i] * cb[j]
    return 1 - num / den
