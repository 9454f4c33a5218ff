import numpy as np
import pytest
from scipy.stats import ks_2samp

from gsdfront.data_model import validate
from gsdfront.simulation import (
    BENCHMARK_STRATEGIES,
    Shift,
    SyntheticConfig,
    benchmark_table,
    calibration_study,
    generate_table,
)


def test_determinism():
    cfg = SyntheticConfig(strategy_count=3, prompt_count=15, seed=42, effect=Shift(0.2, 0.5))
    a, b = generate_table(cfg), generate_table(cfg)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, generate_table(SyntheticConfig(seed=43)).values)
    assert not validate(a)


def test_null_laws_match_across_strategies():
    cfg = SyntheticConfig(strategy_count=2, prompt_count=5000, seed=1)
    t = generate_table(cfg)
    for k in range(t.scale.n):
        a, b = t.values[0, :, k], t.values[1, :, k]
        assert ks_2samp(a, b).statistic <= 0.05
    card = t.values[:, :, 0]
    np.testing.assert_allclose(card * 20, np.round(card * 20), atol=1e-9)


def test_shift_moves_the_mean():
    cfg = SyntheticConfig(strategy_count=3, prompt_count=4000, effect=Shift(0.3), seed=2)
    t = generate_table(cfg)
    card = t.values[:, :, 0]
    diff = card[0].mean() - card[1:].mean()
    assert abs(diff - 0.3) <= 0.05
    assert card.max() <= 1.0
    # ordinal bump with probability 1 raises every non-top level
    levels = t.values[:, :, 1:]
    assert levels[0].mean() > levels[1:].mean()


def test_config_validation():
    with pytest.raises(ValueError):
        Shift(1.5)
    with pytest.raises(ValueError):
        Shift(0.1, bump_prob=2)
    with pytest.raises(ValueError):
        SyntheticConfig(prompt_count=0)
    with pytest.raises(ValueError):
        SyntheticConfig(cardinal_count=0, ordinal_count=0)
    with pytest.raises(ValueError):
        SyntheticConfig(designated=2)
    assert SyntheticConfig(cardinal_count=0).scale().z == 0


def test_single_run_study():
    out = calibration_study(SyntheticConfig(prompt_count=8), runs=1, resamples=10)
    assert out["rejection_rate"] in (0.0, 1.0)
    assert out["runs"] == 1 and len(out["p_values"]) == 1
    with pytest.raises(ValueError):
        calibration_study(SyntheticConfig(), runs=0, resamples=10)
    with pytest.raises(ValueError):
        calibration_study(SyntheticConfig(strategy_count=1), runs=1, resamples=10)


def test_study_is_reproducible():
    cfg = SyntheticConfig(prompt_count=10, seed=5)
    a = calibration_study(cfg, runs=3, resamples=20)
    b = calibration_study(cfg, runs=3, resamples=20)
    assert a["p_values"] == b["p_values"]


def test_benchmark_table():
    t = benchmark_table()
    assert t.strategies == BENCHMARK_STRATEGIES
    assert t.m == 50 and t.scale.n == 3 and t.scale.z == 1
    assert not validate(t)
