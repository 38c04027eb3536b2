import numpy as np
import pytest

from localgc.errors import DomainError
from localgc.mcharness import (
    ExperimentConfig,
    _sweep_replicate,
    ks_distance_chisq1,
    ordered_map,
    run_calibration,
    run_size_power,
    run_sweep,
)
from localgc.procsim import causal_profile


def small(**kw):
    base = dict(model="i", T=64, replicates=3, u_list=(0.3, 0.7), seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("kw", [
    dict(replicates=0), dict(u_list=(0.0,)), dict(u_list=(1.0,)), dict(u_list=()),
    dict(levels=(0.0,)), dict(levels=(1.2,)), dict(model="iii"), dict(T=3),
    dict(multiplier="magic"), dict(threads=0),
])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        small(**kw)


def test_single_replicate_band_collapses():
    res = run_sweep(small(replicates=1))
    assert res.mean == res.p5 == res.p95


def test_sweep_deterministic_and_ordered():
    a = run_sweep(small())
    b = run_sweep(small())
    assert a.to_rows() == b.to_rows()
    np.testing.assert_array_equal(a.estimates, b.estimates)
    for lo, m, hi in zip(a.p5, a.mean, a.p95):
        assert lo <= m <= hi


def test_thread_count_does_not_change_results():
    a = run_size_power(small(model="power", threads=1))
    b = run_size_power(small(model="power", threads=2))
    np.testing.assert_array_equal(a.statistics, b.statistics)
    np.testing.assert_array_equal(a.rates, b.rates)


def test_replicate_order_independence():
    cfg = small()
    jobs = [(cfg, r) for r in range(cfg.replicates)]
    forward = ordered_map(_sweep_replicate, jobs, 1)
    backward = ordered_map(_sweep_replicate, jobs[::-1], 1)[::-1]
    assert forward == backward


def test_size_power_table_shape_and_se():
    tab = run_size_power(small(model="power", u_list=(0.1, 0.3, 0.5, 0.7, 0.9), replicates=2))
    assert tab.rates.shape == (4, 5)
    assert np.all((tab.rates >= 0) & (tab.rates <= 1))
    np.testing.assert_allclose(tab.se, np.sqrt(tab.rates * (1 - tab.rates) / 2))
    assert tab.rate(0.05, 0.9) == tab.rates[1, 4]


def test_progress_callback_sees_every_replicate():
    seen = []
    run_sweep(small(), progress=lambda d, n: seen.append((d, n)))
    assert seen == [(1, 3), (2, 3), (3, 3)]


def test_calibration_requires_null_model():
    with pytest.raises(DomainError):
        run_calibration(small(model="i"))


def test_ks_distance():
    assert ks_distance_chisq1([1e9]) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    assert ks_distance_chisq1(rng.chisquare(1, 4000)) < 0.03
    assert ks_distance_chisq1(2 * rng.chisquare(1, 4000)) > 0.1


@pytest.mark.slow
def test_sweep_band_contains_truth_at_midpoint():
    res = run_sweep(ExperimentConfig(model="i", T=100, replicates=100, u_list=(0.5,), seed=1))
    truth = causal_profile("i")(0.5)
    assert truth == pytest.approx(0.2854, abs=1e-3)
    assert res.p5[0] <= truth <= res.p95[0]


@pytest.mark.slow
def test_null_calibration_size():
    res = run_calibration(ExperimentConfig(model="null", T=512, replicates=500, u_list=(0.5,), seed=3))
    rate = float(np.mean(res.statistics > 3.841458820694124))
    assert 0.005 <= rate <= 0.08
