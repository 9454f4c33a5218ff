import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsdfront.gsd import (
    UtilityProgram,
    compute_d,
    constraint_matrix,
    gap,
    gsd_front,
    gsd_strict,
    gsd_weak,
)
from gsdfront.linear_program import solve_min, verify
from gsdfront.order_structure import build_preference_system

import oracles
from helpers import random_small, table_from


def system_of(table, budget=None):
    return build_preference_system(table, r2_budget=budget)


def test_self_comparison_is_zero():
    t, _ = random_small(np.random.default_rng(1))
    s = system_of(t)
    assert compute_d(t, s, "S0", "S0").value == 0.0


def test_one_prompt_dominance():
    t = table_from([[[1.0, 1]], [[0.0, 0]]], z=1, levels=2)
    s = system_of(t)
    assert compute_d(t, s, "S0", "S1").value == pytest.approx(0.0, abs=1e-12)
    assert compute_d(t, s, "S1", "S0").value == pytest.approx(-1.0, abs=1e-12)


def test_one_prompt_incomparable():
    t = table_from([[[1.0, 0]], [[0.0, 1]]], z=1, levels=2)
    s = system_of(t)
    assert compute_d(t, s, "S0", "S1").value == pytest.approx(-1.0, abs=1e-12)
    assert compute_d(t, s, "S1", "S0").value == pytest.approx(-1.0, abs=1e-12)


def test_unknown_strategy():
    t = table_from([[[1.0]], [[0.0]]], z=1)
    with pytest.raises(KeyError):
        compute_d(t, system_of(t), "S0", "nope")


@pytest.mark.parametrize("value,expected", [(0.0, True), (-1.0, False), (-1e-10, True)])
def test_weak(value, expected):
    assert gsd_weak(value, 1e-8) is expected


@pytest.mark.parametrize("fwd,rev,expected", [(0, -1, True), (0, 0, False), (-0.3, -0.3, False)])
def test_strict(fwd, rev, expected):
    assert gsd_strict(fwd, rev) is expected


def test_front_examples():
    same = table_from(np.tile([[[0.5, 1], [0.25, 0]]], (3, 1, 1)), z=1)
    assert gsd_front(same).front == ["S0", "S1", "S2"]
    chain = table_from([[[1.0, 2], [0.75, 2]], [[0.5, 1], [0.5, 1]], [[0.0, 0], [0.25, 0]]], z=1)
    res = gsd_front(chain)
    assert res.front == ["S0"]
    assert res.strict("S0", "S1") and res.strict("S1", "S2") and res.weak("S0", "S2")
    single = table_from([[[0.3]]], z=1)
    assert gsd_front(single).front == ["S0"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_d_matches_unreduced_oracle(seed):
    rng = np.random.default_rng(seed)
    table, z = random_small(rng)
    system = system_of(table)
    k = len(table.strategies)
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            d = compute_d(table, system, f"S{a}", f"S{b}")
            assert d.value <= 1e-9
            assert d.value == pytest.approx(oracles.d_statistic(table.values, z, a, b), abs=1e-9)
            # value is the direct sum under the witness
            plus, minus = system.node_of[a], system.node_of[b]
            assert d.value == gap(d.witness, plus, minus)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_witness_is_certificate(seed):
    table, _ = random_small(np.random.default_rng(seed))
    system = system_of(table)
    prog = UtilityProgram.of(system)
    d = compute_d(table, system, "S0", "S1")
    lp = prog.program(system.node_of[0], system.node_of[1])
    from gsdfront.linear_program import Solution

    assert verify(lp, Solution("optimal", float(lp.objective @ d.witness), d.witness)) == []
    # the self-contained simplex gives the same optimum
    assert solve_min(lp, "simplex").value == pytest.approx(d.value, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dominated_everywhere_implies_weak(seed):
    rng = np.random.default_rng(seed)
    table, _ = random_small(rng)
    raw = np.array(table.raw)
    bump = rng.integers(0, 2, size=raw[1].shape).astype(float)
    z = table.scale.z
    bump[:, :z] *= 0.25
    raw[0] = raw[1] + bump
    raw[0][:, :z] = np.minimum(raw[0][:, :z], 1.0)
    levels = table.scale.metrics[-1].level_count if table.scale.n > z else 3
    raw[0][:, z:] = np.minimum(raw[0][:, z:], levels - 1)
    t2 = table_from(raw, z, levels)
    assert gsd_weak(compute_d(t2, system_of(t2), "S0", "S1"))


def test_more_constraints_never_lower_d():
    rng = np.random.default_rng(4)
    for _ in range(30):
        table, _ = random_small(rng, max_prompts=6)
        full = system_of(table, None)
        thin = system_of(table, 1)
        for a, b in [("S0", "S1"), ("S1", "S0")]:
            assert compute_d(table, full, a, b).value >= compute_d(table, thin, a, b).value - 1e-9


def test_constraint_matrix_shape():
    table, _ = random_small(np.random.default_rng(8))
    s = system_of(table)
    A = constraint_matrix(s)
    assert A.shape == (len(s.r1_edges) + len(s.r2_constraints), len(s.vectors))
    # the constant utility satisfies every row with equality
    np.testing.assert_allclose(A @ np.full(len(s.vectors), 0.5), 0.0, atol=1e-15)


def test_front_result_dict():
    res = gsd_front(table_from([[[1.0]], [[0.0]]], z=1))
    d = res.to_dict()
    assert d["front"] == ["S0"]
    assert len(d["dominance"]) == 4
    cell = next(c for c in d["dominance"] if c["strategy"] == "S0" and c["opponent"] == "S1")
    assert cell["strict"] is True


def test_d_does_not_depend_on_earlier_solves():
    from gsdfront.simulation import benchmark_table

    table = benchmark_table(prompt_count=20)
    fresh = compute_d(table, system_of(table, 2_000_000), "beam", "human")
    system = system_of(table, 2_000_000)
    for s in ("top_k", "top_p", "contrastive"):
        compute_d(table, system, s, "temperature")
    again = compute_d(table, system, "beam", "human")
    assert again.value == fresh.value
    np.testing.assert_array_equal(again.witness, fresh.witness)
