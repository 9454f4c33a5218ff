"""Partially-cardinal order structure over observed quality vectors.

``R1`` is componentwise dominance. ``R2`` compares preference intensities
of two R1 pairs: cardinal differences must be at least as large, and the
ordinal coordinates of the second pair must be bracketed by the first.

Both relations are dominance relations on feature vectors, so they are
materialized as boolean matrices and reduced to covering edges before they
reach the LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .data_model import EvaluationTable, ScaleSpec

DEFAULT_R2_BUDGET = 2_000_000
# cardinal differences are rounded before comparison so that pairs equal in
# exact arithmetic compare equal after float normalization
DIFF_DECIMALS = 12
_CHUNK = 512


def dominance_matrix(vectors: np.ndarray) -> np.ndarray:
    """``M[a, b]`` is True iff ``vectors[a] >= vectors[b]`` componentwise."""
    v = np.asarray(vectors, dtype=float)
    k = len(v)
    out = np.empty((k, k), dtype=bool)
    for start in range(0, k, _CHUNK):
        block = v[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.all(block[:, None, :] >= v[None, :, :], axis=2)
    return out


def build_r1(vectors: Sequence) -> set[tuple[int, int]]:
    """Exact componentwise-dominance relation over vector indices, reflexive pairs included."""
    a, b = np.nonzero(dominance_matrix(np.asarray(vectors, dtype=float)))
    return set(zip(a.tolist(), b.tolist()))


def _equivalence_classes(geq: np.ndarray) -> np.ndarray:
    """Representative (smallest index) of each node's mutual-dominance class."""
    mutual = geq & geq.T
    return np.argmax(mutual, axis=1)


def reduction_matrix(geq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Covering edges of a preorder given as a boolean matrix.

    Returns ``(edges, rep)``: ``edges`` is a boolean matrix over class
    representatives, ``rep[i]`` the representative of node ``i``.
    """
    geq = np.asarray(geq, dtype=bool)
    rep = _equivalence_classes(geq)
    reps = np.unique(rep)
    sub = geq[np.ix_(reps, reps)]
    strict = sub & ~sub.T
    s = strict.astype(np.float32)
    two_step = (s @ s) > 0
    covering = strict & ~two_step
    edges = np.zeros_like(geq)
    edges[np.ix_(reps, reps)] = covering
    return edges, rep


def transitive_reduction(r1: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    """Minimal edge set whose closure, plus equivalences, gives the strict part of ``r1``.

    ``r1`` must be a preorder on nodes ``0..k-1``. Mutually dominating nodes
    collapse onto their smallest index.
    """
    pairs = list(r1)
    if not pairs:
        return set()
    k = max(max(a, b) for a, b in pairs) + 1
    geq = np.zeros((k, k), dtype=bool)
    for a, b in pairs:
        geq[a, b] = True
    np.fill_diagonal(geq, True)
    edges, _ = reduction_matrix(geq)
    a, b = np.nonzero(edges)
    return set(zip(a.tolist(), b.tolist()))


def pair_features(vectors: np.ndarray, pairs: np.ndarray, z: int) -> np.ndarray:
    """Feature vector per R1 pair ``(t, u)`` such that R2 is feature dominance.

    The features are the rounded cardinal differences ``t - u``, the ordinal
    tops ``t`` and the negated ordinal bottoms ``-u``.
    """
    t = vectors[pairs[:, 0]]
    u = vectors[pairs[:, 1]]
    diff = np.round(t[:, :z] - u[:, :z], DIFF_DECIMALS) + 0.0
    return np.hstack([diff, t[:, z:], -u[:, z:]])


def in_r2(t, u, v, w, z: int) -> bool:
    """Direct check of the R2 definition for one quadruple (given both pairs in R1)."""
    t, u, v, w = (np.asarray(x, dtype=float) for x in (t, u, v, w))
    lhs = np.round(t[:z] - u[:z], DIFF_DECIMALS)
    rhs = np.round(v[:z] - w[:z], DIFF_DECIMALS)
    if np.any(lhs < rhs):
        return False
    return bool(np.all(t[z:] >= v[z:]) and np.all(v[z:] >= w[z:]) and np.all(w[z:] >= u[z:]))


@dataclass
class R2Result:
    """Quadruples as index arrays into a candidate pair list."""

    pairs: np.ndarray  # (p, 2) candidate R1 pairs (t, u)
    first: np.ndarray  # indices into ``pairs``
    second: np.ndarray
    mode: str  # "full" or "covering"
    truncated: bool
    closed: bool  # relation restricted to ``pairs`` is transitively closed

    def quadruples(self) -> set[tuple[tuple[int, int], tuple[int, int]]]:
        p = self.pairs
        return {
            ((int(p[a, 0]), int(p[a, 1])), (int(p[b, 0]), int(p[b, 1])))
            for a, b in zip(self.first.tolist(), self.second.tolist())
        }

    def __len__(self) -> int:
        return len(self.first)


def _r2_over_pairs(vectors, pairs, z, budget):
    feats = pair_features(vectors, pairs, z)
    firsts, seconds = [], []
    count = 0
    truncated = False
    for start in range(0, len(pairs), _CHUNK):
        block = feats[start : start + _CHUNK]
        hit = np.all(block[:, None, :] >= feats[None, :, :], axis=2)
        a, b = np.nonzero(hit)
        a = a + start
        if budget is not None and count + len(a) > budget:
            keep = budget - count
            a, b = a[:keep], b[:keep]
            truncated = True
        firsts.append(a)
        seconds.append(b)
        count += len(a)
        if truncated:
            break
    first = np.concatenate(firsts) if firsts else np.zeros(0, dtype=int)
    second = np.concatenate(seconds) if seconds else np.zeros(0, dtype=int)
    return first, second, truncated


def build_r2(
    vectors: np.ndarray,
    r1: np.ndarray | Iterable[tuple[int, int]],
    scale: ScaleSpec,
    budget: int | None = DEFAULT_R2_BUDGET,
    r1_reduced: np.ndarray | Iterable[tuple[int, int]] | None = None,
) -> R2Result:
    """Enumerate R2 quadruples over distinct R1 pairs.

    With ``budget=None`` every strict R1 pair is a candidate. Otherwise, when
    the squared pair count exceeds the budget, candidates are restricted to
    the covering pairs of R1 (``r1_reduced``), taken in lexicographic order,
    and enumeration stops once ``budget`` quadruples are collected. Pairs
    ``(t, t)`` only yield trivial quadruples and are skipped.
    """
    vectors = np.asarray(vectors, dtype=float)
    z = scale.z
    geq = _as_matrix(r1, len(vectors))
    np.fill_diagonal(geq, False)
    strict_pairs = np.argwhere(geq)
    mode = "full"
    if budget is not None and len(strict_pairs) ** 2 > budget:
        mode = "covering"
        if r1_reduced is None:
            full = _as_matrix(r1, len(vectors))
            np.fill_diagonal(full, True)
            red, _ = reduction_matrix(full)
        else:
            red = _as_matrix(r1_reduced, len(vectors))
        candidates = np.argwhere(red)
    else:
        candidates = strict_pairs
    first, second, truncated = _r2_over_pairs(vectors, candidates, z, budget)
    return R2Result(
        pairs=candidates,
        first=first,
        second=second,
        mode=mode,
        truncated=truncated,
        closed=not truncated,
    )


def _as_matrix(rel, k: int) -> np.ndarray:
    if isinstance(rel, np.ndarray) and rel.dtype == bool:
        return rel.copy()
    m = np.zeros((k, k), dtype=bool)
    for a, b in rel:
        m[a, b] = True
    return m


@dataclass
class PreferenceSystem:
    """Observed distinct quality vectors with their R1 and R2 relations.

    ``node_of[s, j]`` is the vector index of strategy ``s`` on prompt ``j``.
    """

    vectors: np.ndarray
    node_of: np.ndarray
    geq: np.ndarray
    r1_edges: np.ndarray  # (e, 2) covering edges (a, b): u(a) >= u(b)
    r2: R2Result
    scale: ScaleSpec
    r2_budget: int | None = DEFAULT_R2_BUDGET
    r2_constraints: np.ndarray = field(default=None)  # (q, 4) rows (t, u, v, w)
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def r1(self) -> set[tuple[int, int]]:
        a, b = np.nonzero(self.geq)
        return set(zip(a.tolist(), b.tolist()))

    @property
    def r1_reduced(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.r1_edges}

    @property
    def r2_truncated(self) -> bool:
        """True when R2 was thinned in any way (covering pairs or budget cut)."""
        return self.r2.mode != "full" or self.r2.truncated

    def summary(self) -> dict:
        return {
            "nodes": int(len(self.vectors)),
            "r1_pairs": int(self.geq.sum()),
            "r1_covering_edges": int(len(self.r1_edges)),
            "r2_mode": self.r2.mode,
            "r2_budget": self.r2_budget,
            "r2_quadruples": int(len(self.r2)),
            "r2_budget_hit": bool(self.r2.truncated),
            "r2_truncated": bool(self.r2_truncated),
            "lp_r2_constraints": int(len(self.r2_constraints)),
        }


def _lp_r2_constraints(r2: R2Result) -> np.ndarray:
    """Reduce R2 quadruples to a non-redundant constraint list ``(t, u, v, w)``.

    When the quadruple relation is transitively closed, only its covering
    edges (plus cycles through equal-feature classes) are needed. Quadruples
    sharing the top (t == v) or bottom (u == w) endpoint, or with a repeated
    pair, are implied by R1 and dropped.
    """
    pairs = r2.pairs
    p = len(pairs)
    if p == 0 or len(r2) == 0:
        return np.zeros((0, 4), dtype=int)
    rel = np.zeros((p, p), dtype=bool)
    rel[r2.first, r2.second] = True
    if r2.closed:
        np.fill_diagonal(rel, True)
        edges, rep = reduction_matrix(rel)
        a, b = np.nonzero(edges)
        links = [np.stack([a, b], axis=1)]
        # chain each equivalence class into a cycle so its members stay equal
        for r in np.unique(rep):
            members = np.flatnonzero(rep == r)
            if len(members) > 1:
                ring = np.roll(members, -1)
                links.append(np.stack([members, ring], axis=1))
        links = np.concatenate(links)
    else:
        links = np.stack([r2.first, r2.second], axis=1)
    t, u = pairs[links[:, 0], 0], pairs[links[:, 0], 1]
    v, w = pairs[links[:, 1], 0], pairs[links[:, 1], 1]
    keep = (links[:, 0] != links[:, 1]) & (t != v) & (u != w)
    quads = np.stack([t, u, v, w], axis=1)[keep]
    return np.unique(quads, axis=0) if len(quads) else quads.reshape(0, 4)


def build_preference_system(
    table: EvaluationTable, r2_budget: int | None = DEFAULT_R2_BUDGET
) -> PreferenceSystem:
    """Build the global order structure over all observed vectors of ``table``."""
    cells = table.values.reshape(-1, table.scale.n)
    vectors, inverse = np.unique(cells, axis=0, return_inverse=True)
    node_of = np.asarray(inverse).reshape(len(table.strategies), table.m)
    geq = dominance_matrix(vectors)
    red, _ = reduction_matrix(geq)
    r2 = build_r2(vectors, geq, table.scale, budget=r2_budget, r1_reduced=red)
    return PreferenceSystem(
        vectors=vectors,
        node_of=node_of,
        geq=geq,
        r1_edges=np.argwhere(red),
        r2=r2,
        scale=table.scale,
        r2_budget=r2_budget,
        r2_constraints=_lp_r2_constraints(r2),
    )


def dump_relations(system: PreferenceSystem, r1_path, r2_path) -> None:
    """Debug dump: one R1 covering pair / R2 LP quadruple of vector indices per line."""
    with open(r1_path, "w", encoding="utf-8") as f:
        for a, b in system.r1_edges:
            f.write(f"{a} {b}\n")
    with open(r2_path, "w", encoding="utf-8") as f:
        for t, u, v, w in system.r2_constraints:
            f.write(f"{t} {u} {v} {w}\n")
