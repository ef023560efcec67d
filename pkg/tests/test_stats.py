import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ambitflux.levy import StableSpec, sample_stable
from ambitflux.stats import (
    SampleSet, convergence_in_probability_trend, iqr, ks_critical_value, ks_distance, scaling_exponent,
    tail_index,
)

samples = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


# ------------------------------------------------------------------- KS


def test_ks_identical_and_disjoint(rng):
    a = rng.standard_normal(500)
    assert ks_distance(a, a).statistic == 0
    assert ks_distance(-1 - rng.random(300), 1 + rng.random(200)).statistic == 1


def test_ks_critical_value():
    assert ks_critical_value(2000, 2000, 0.01) == pytest.approx(1.628 * math.sqrt(2 / 2000))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@settings(max_examples=60, deadline=None)
@given(samples, samples)
def test_ks_matches_scipy_and_is_symmetric(a, b):
    res = ks_distance(a, b)
    assert res.statistic == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)
    assert res.statistic == ks_distance(b, a).statistic


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=40), st.lists(st.integers(-50, 50), min_size=1, max_size=40))
def test_ks_invariant_under_monotone_maps(a, b):
    a, b = np.array(a) / 10.0, np.array(b) / 10.0
    assert ks_distance(np.exp(a), np.exp(b)).statistic == ks_distance(a, b).statistic
    assert ks_distance(3 * a - 1, 3 * b - 1).statistic == ks_distance(a, b).statistic


def test_ks_calibration():
    # rejection rate of the 1% critical value under the null, within three binomial errors
    rng = np.random.default_rng(2024)
    trials = 1000
    rej = sum(not ks_distance(rng.standard_normal(10_000), rng.standard_normal(10_000)).passes(0.01)
              for _ in range(trials))
    assert rej / trials <= 0.01 + 3 * math.sqrt(0.01 * 0.99 / trials)


def test_sample_set_rejects_non_finite():
    with pytest.raises(ValueError):
        SampleSet([1.0, np.inf])


def test_iqr():
    assert iqr(np.arange(101.0)) == pytest.approx(50.0)


# ---------------------------------------------------------------- scaling


def test_exact_power_law_slope():
    r = np.array([0.2, 0.1, 0.05, 0.025])
    rep = scaling_exponent(3 * r ** 1.7, r, predicted=1.7)
    assert rep.slope == pytest.approx(1.7, abs=1e-12)
    assert rep.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert rep.within(1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100), st.lists(st.floats(-0.05, 0.05), min_size=4, max_size=4))
def test_slope_invariant_to_constant_factor(beta, c, noise):
    r = np.array([0.2, 0.1, 0.05, 0.025])
    s = r ** beta * np.exp(noise)
    assert scaling_exponent(c * s, r).slope == pytest.approx(scaling_exponent(s, r).slope, abs=1e-9)


def test_scaling_errors():
    r = np.array([0.2, 0.1, 0.05])
    with pytest.raises(ValueError):
        scaling_exponent([1.0, 0.0, 1.0], r)
    with pytest.raises(ValueError):
        scaling_exponent([1.0, 1.0], r[:2])
    with pytest.raises(ValueError):
        scaling_exponent([1.0, 1.0, 1.0], r[::-1])


# ------------------------------------------------------------------ Hill


def test_hill_pareto():
    # unbiased for exact Pareto tails; the spread is the stated standard error
    ests = [tail_index(np.random.default_rng(s).pareto(1.5, 100_000) + 1) for s in range(40)]
    vals = np.array([e.estimate for e in ests])
    assert abs(vals.mean() - 1.5) < 3 * ests[0].stderr / math.sqrt(len(vals))
    assert vals.std() == pytest.approx(1.5 / math.sqrt(316), rel=0.3)
    assert np.mean((vals >= 1.4) & (vals <= 1.6)) > 0.55
    assert not any(e.light_tailed for e in ests)


def test_hill_gaussian_light_tailed(rng):
    x = rng.standard_normal(100_000)
    ests = [tail_index(x, k).estimate for k in (100, 316, 1000, 3000)]
    assert tail_index(x).light_tailed
    assert ests[0] < ests[-1] or min(ests) > 2


def test_hill_stable_draws():
    spec = StableSpec(1.5, np.array([[1.0], [-1.0]]), np.array([0.5, 0.5]))
    hits = [tail_index(sample_stable(spec, 1.0, np.random.default_rng(s), size=100_000)[:, 0]).brackets(1.35, 1.65)
            for s in range(40)]
    assert np.mean(hits) >= 0.85


def test_hill_needs_samples():
    with pytest.raises(ValueError):
        tail_index(np.ones(10))


# ------------------------------------------------------------------ trend


def test_trend_zero_deviations():
    v = convergence_in_probability_trend([np.zeros(100)] * 3, [0.2, 0.1, 0.05], 0.1)
    assert v.passed and np.all(v.fractions == 0)


def test_trend_normal_tail_example(rng):
    radii = [0.2, 0.1, 0.05]
    N = 4000
    devs = [r * rng.standard_normal(N) for r in radii]
    v = convergence_in_probability_trend(devs, radii, 0.1)
    expected = [2 * stats.norm.sf(0.1 / r) for r in radii]
    assert np.allclose(expected, [0.617, 0.317, 0.0455], atol=1e-3)
    assert np.all(np.abs(v.fractions - expected) < 4 * np.sqrt(np.array(expected) * (1 - np.array(expected)) / N))
    assert v.passed


def test_trend_constant_deviations_fail():
    v = convergence_in_probability_trend([np.full(100, 0.2)] * 3, [0.2, 0.1, 0.05], 0.1)
    assert not v.passed


def test_trend_increasing_fails():
    devs = [np.r_[np.zeros(90), np.ones(k)] for k in (0, 5, 10)]
    assert not convergence_in_probability_trend(devs, [0.2, 0.1, 0.05], 0.5).passed
