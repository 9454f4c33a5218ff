import itertools
import json

import numpy as np
import pytest

from gsdfront.gsd import UtilityProgram
from gsdfront.inference import (
    FrontTestResult,
    PairwiseTestResult,
    derive_seed,
    front_membership_test,
    pairwise_test,
    permutation_p_value,
    write_resampled_csv,
)
from gsdfront.order_structure import build_preference_system

from helpers import random_small, table_from


def small_table(seed=0, k=3, m=8):
    rng = np.random.default_rng(seed)
    raw = np.empty((k, m, 2))
    raw[:, :, 0] = rng.integers(0, 5, size=(k, m)) * 0.25
    raw[:, :, 1] = rng.integers(0, 3, size=(k, m))
    return table_from(raw, z=1)


def test_identical_columns_give_p_one():
    t = table_from(np.tile(small_table().raw[:1], (2, 1, 1)), z=1)
    res = pairwise_test(t, build_preference_system(t), "S0", "S1", resamples=30, seed=1)
    assert res.observed.value == 0.0
    assert np.all(res.resampled == 0.0)
    assert res.p_value == 1.0 and not res.reject


def test_p_value_formula():
    assert permutation_p_value(0.0, np.full(9, -0.5)) == 0.1
    assert permutation_p_value(-0.1, np.array([-0.1, -0.2, 0.0, -0.5])) == 3 / 5
    # a value within the tie tolerance counts as "at least as large"
    assert permutation_p_value(0.0, np.array([-1e-10])) == 1.0


def test_cardinal_only_statistic_saturates():
    # S0 beats S1 on every prompt. With one cardinal metric a resample stays
    # dominant (D = 0) exactly when at most half the prompts are swapped.
    from gsdfront.inference import resample_rng

    raw = np.zeros((2, 6, 1))
    raw[0] = 1.0
    t = table_from(raw, z=1)
    res = pairwise_test(t, build_preference_system(t), "S0", "S1", resamples=40, seed=3)
    assert res.observed.value == pytest.approx(0.0, abs=1e-12)
    swaps = np.array([(resample_rng(3, r).random(6) < 0.5).sum() for r in range(40)])
    np.testing.assert_allclose(res.resampled, np.where(swaps <= 3, 0.0, (6 - 2 * swaps) / 6),
                               atol=1e-12)
    ties = int(np.sum(swaps <= 3))
    assert res.p_value == (1 + ties) / 41


def test_errors():
    t = small_table()
    s = build_preference_system(t)
    with pytest.raises(ValueError):
        pairwise_test(t, s, "S0", "S1", resamples=0)
    with pytest.raises(ValueError):
        pairwise_test(t, s, "S0", "S0", resamples=5)
    with pytest.raises(KeyError):
        front_membership_test(t, "nope", resamples=5)


def test_deterministic_and_bounded():
    t = small_table(2)
    s = build_preference_system(t)
    a = pairwise_test(t, s, "S0", "S1", resamples=25, seed=11)
    b = pairwise_test(t, build_preference_system(t), "S0", "S1", resamples=25, seed=11)
    np.testing.assert_array_equal(a.resampled, b.resampled)
    assert a.p_value == b.p_value and a.threshold == b.threshold
    assert 1 / 26 <= a.p_value <= 1
    assert a.reject == (a.p_value <= a.alpha)
    assert a.threshold == np.quantile(a.resampled, 0.95)


def test_full_swap_keeps_the_permutation_law():
    t = small_table(5, k=2, m=4)
    swapped = table_from(t.raw[::-1], z=1)
    dists = []
    for table in (t, swapped):
        s = build_preference_system(table)
        prog = UtilityProgram.of(s)
        a, b = s.node_of[0], s.node_of[1]
        vals = []
        for pattern in itertools.product([False, True], repeat=table.m):
            mask = np.array(pattern)
            vals.append(round(prog.minimize(np.where(mask, b, a), np.where(mask, a, b))[0], 9))
        dists.append(sorted(vals))
    assert dists[0] == dists[1]


def test_all_ones_candidate_never_lowers_observed():
    rng = np.random.default_rng(12)
    for _ in range(20):
        t, z = random_small(rng)
        levels = t.scale.metrics[-1].level_count if t.scale.n > z else 3
        before = pairwise_test(t, build_preference_system(t), "S0", "S1", resamples=1).observed.value
        raw = np.array(t.raw)
        raw[0, :, :z] = 1.0
        raw[0, :, z:] = levels - 1
        t2 = table_from(raw, z, levels)
        after = pairwise_test(t2, build_preference_system(t2), "S0", "S1", resamples=1).observed.value
        assert after >= before - 1e-9


def test_front_membership_structure():
    t = small_table(7, k=4)
    res = front_membership_test(t, "S2", resamples=10, seed=4)
    assert [p.opponent for p in res.pairwise] == ["S0", "S1", "S3"]
    seeds = [p.seed for p in res.pairwise]
    assert seeds == [derive_seed(4, i) for i in (0, 1, 3)]
    assert len(set(seeds)) == 3
    assert res.reject_h0 == all(p.reject for p in res.pairwise)


def test_any_non_rejection_blocks_front_claim():
    t = small_table(8, k=3)
    res = front_membership_test(t, "S0", resamples=10, seed=0)
    res.pairwise[0].reject = False
    assert not FrontTestResult(res.candidate, res.pairwise, all(p.reject for p in res.pairwise),
                               res.alpha).reject_h0


def test_singleton_is_vacuous():
    t = table_from([[[0.5]]], z=1)
    res = front_membership_test(t, "S0", resamples=10)
    assert res.reject_h0 and res.pairwise == []


def test_serialization_round_trip(tmp_path):
    t = small_table(1)
    res = front_membership_test(t, "S0", resamples=12, seed=2)
    text = json.dumps(res.to_dict())
    back = FrontTestResult.from_dict(json.loads(text))
    assert json.dumps(back.to_dict()) == text
    single = PairwiseTestResult.from_dict(res.pairwise[0].to_dict())
    np.testing.assert_array_equal(single.observed.witness, res.pairwise[0].observed.witness)
    write_resampled_csv(res.pairwise[0], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "resample,statistic" and len(lines) == 13
