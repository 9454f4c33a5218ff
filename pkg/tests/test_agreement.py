import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr
from sklearn.metrics import cohen_kappa_score

from gsdfront.agreement import (
    RatingPairs,
    UndefinedStatistic,
    agreement_report,
    agreement_summary,
    load_ratings,
    spearman_rho,
    weighted_kappa,
)

import oracles

LEVELS = (1, 2, 3, 4, 5)
ratings = st.lists(st.tuples(st.sampled_from(LEVELS), st.sampled_from(LEVELS)), min_size=2, max_size=60)


def test_kappa_identical():
    assert weighted_kappa(RatingPairs([1, 2, 5, 3], [1, 2, 5, 3])) == 1.0


def test_kappa_two_cell_matrix():
    pairs = RatingPairs([1, 5], [5, 1])
    # O has 1/2 at (1,5) and (5,1); marginals put 1/2 on levels 1 and 5 for both raters
    observed = 1.0  # both cells sit at the maximal weight 1
    expected = 0.5 * 0.5 * 1.0 * 2  # E mass off the diagonal, weight 1
    assert abs(weighted_kappa(pairs) - (1 - observed / expected)) <= 1e-12
    assert abs(weighted_kappa(pairs) - oracles.linear_kappa([1, 5], [5, 1], LEVELS)) <= 1e-12


def test_kappa_undefined():
    with pytest.raises(UndefinedStatistic):
        weighted_kappa(RatingPairs([3, 3, 3], [3, 3, 3]))


@given(ratings)
def test_kappa_matches_sklearn(rs):
    a, b = zip(*rs)
    pairs = RatingPairs(list(a), list(b))
    try:
        ours = weighted_kappa(pairs)
    except UndefinedStatistic:
        assert len(set(a) | set(b)) == 1
        return
    ref = cohen_kappa_score(a, b, labels=list(LEVELS), weights="linear")
    assert abs(ours - ref) <= 1e-12
    assert abs(ours - oracles.linear_kappa(a, b, LEVELS)) <= 1e-12
    rev = RatingPairs([6 - x for x in a], [6 - x for x in b])
    assert abs(weighted_kappa(rev) - ours) <= 1e-12


def test_spearman_examples():
    assert spearman_rho([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(UndefinedStatistic):
        spearman_rho([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman_rho([1], [1])


@given(ratings)
def test_spearman_matches_scipy_and_is_monotone_invariant(rs):
    a, b = (np.array(x, dtype=float) for x in zip(*rs))
    if len(set(a)) < 2 or len(set(b)) < 2:
        return
    ours = spearman_rho(a, b)
    assert abs(ours - spearmanr(a, b).statistic) <= 1e-12
    assert abs(spearman_rho(np.exp(a), b ** 3) - ours) <= 1e-12


def test_summary_examples():
    assert agreement_summary(RatingPairs([1, 4], [1, 4])) == {"within_one_share": 1.0, "mean_abs_diff": 0.0}
    assert agreement_summary(RatingPairs([1, 2], [3, 2])) == {"within_one_share": 0.5, "mean_abs_diff": 1.0}


@given(ratings)
def test_summary_bounds(rs):
    s = agreement_summary(RatingPairs(*map(list, zip(*rs))))
    assert 0 <= s["within_one_share"] <= 1 and 0 <= s["mean_abs_diff"] <= 4


def test_rating_pairs_validation():
    with pytest.raises(ValueError):
        RatingPairs([1, 2], [1])
    with pytest.raises(ValueError):
        RatingPairs([], [])
    with pytest.raises(ValueError, match="not a declared level"):
        RatingPairs([6], [1])


def test_report_and_loader(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("prompt_id,strategy,rater_a,rater_b\np1,A,3,3\np1,B,3,3.0\n", encoding="utf-8")
    keys, pairs = load_ratings(path)
    assert keys == [("p1", "A"), ("p1", "B")]
    rep = agreement_report(pairs)
    assert rep["weighted_kappa"] is None and rep["spearman_rho"] is None
    assert rep["within_one_share"] == 1.0 and rep["items"] == 2
