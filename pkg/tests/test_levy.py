import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ambitflux.experiments import power_tail_triplet
from ambitflux.levy import (
    Exponential, LevyMeasureSpec, LevyTriplet, PointMasses, PowerTail, StableSpec,
    UnsupportedParameterError, attracting_stable_spec, char_exponent, rescaled_exponent,
    sample_id_increment, sample_poisson_jumps, sample_stable, stable_char_exponent,
    stable_constant,
)


def unit_jump_triplet(gamma=0.0):
    nu = LevyMeasureSpec(np.array([[1.0]]), np.array([1.0]), (PointMasses((1.0,), (1.0,)),))
    return LevyTriplet(np.array([gamma]), np.zeros((1, 1)), nu)


def symmetric_stable(alpha=1.5):
    return StableSpec(alpha, np.array([[1.0], [-1.0]]), np.array([0.5, 0.5]))


def _sin_minus_id(x):
    if abs(x) < 1e-2:
        return -x ** 3 / 6 + x ** 5 / 120 - x ** 7 / 5040
    return math.sin(x) - x


def power_tail_oracle(w, alpha, coef=1.0, gamma=0.0):
    """``i gamma w + int_0^1 (e^{iws} - 1 - iws) coef s^(-1-alpha) ds`` by plain quadrature.

    The substitution ``s = u^2`` removes the integrable endpoint singularity.
    """
    jac = lambda u: 2 * coef * u ** (-1 - 2 * alpha)  # noqa: E731
    f_re = lambda u: -2 * math.sin(w * u * u / 2) ** 2 * jac(u)  # noqa: E731
    f_im = lambda u: _sin_minus_id(w * u * u) * jac(u)  # noqa: E731
    re = integrate.quad(f_re, 0, 1, epsabs=1e-12, epsrel=1e-11, limit=200)[0]
    im = integrate.quad(f_im, 0, 1, epsabs=1e-12, epsrel=1e-11, limit=200)[0]
    return complex(re, im + gamma * w)


# ------------------------------------------------------------------ exponents


def test_gaussian_exponent():
    tri = LevyTriplet.gaussian([[1.0]])
    assert char_exponent(tri, [2.0]) == complex(-2.0, 0.0)


def test_exponent_at_zero():
    for tri in (LevyTriplet.gaussian([[1.0]]), unit_jump_triplet(0.3), power_tail_triplet(1.5)):
        assert char_exponent(tri, [0.0]) == 0


def test_unit_jump_exponent():
    val = char_exponent(unit_jump_triplet(), [math.pi])
    assert val == pytest.approx(complex(-2.0, -math.pi), abs=1e-12)


@pytest.mark.parametrize("w", [0.5, 1.0, 3.0, -7.0])
def test_power_tail_exponent_matches_quadrature(w):
    tri = power_tail_triplet(1.5, matched=False)
    assert char_exponent(tri, [w]) == pytest.approx(power_tail_oracle(w, 1.5), rel=1e-8, abs=1e-10)


def test_exponential_radial_exponent_matches_quadrature():
    rad = Exponential(rate=2.0, coef=1.5)
    for w in (0.7, 4.0):
        re = integrate.quad(lambda s: (math.cos(w * s) - 1) * 1.5 * math.exp(-2 * s), 0, np.inf)[0]
        im = integrate.quad(lambda s: (math.sin(w * s) - w * s) * 1.5 * math.exp(-2 * s), 0, 1)[0]
        im += integrate.quad(lambda s: math.sin(w * s) * 1.5 * math.exp(-2 * s), 1, np.inf, limit=200)[0]
        assert rad.exponent(w) == pytest.approx(complex(re, im), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-20, 20, allow_nan=False), st.floats(0, 2), st.floats(0.05, 3))
def test_exponent_invariants(z, gamma, weight):
    nu = LevyMeasureSpec.symmetric(1, PointMasses((0.5, 2.0), (1.0, weight)), 0.5)
    tri = LevyTriplet(np.array([gamma]), np.array([[0.3]]), nu)
    a, b = char_exponent(tri, [z]), char_exponent(tri, [-z])
    assert a.real <= 1e-12
    assert b == pytest.approx(a.conjugate(), abs=1e-12)


def test_stable_exponent_symmetric_example():
    spec = symmetric_stable()
    assert stable_char_exponent(spec, [2.0]) == pytest.approx(-(2 ** 1.5), abs=1e-12)
    assert stable_char_exponent(spec, [0.0]) == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.1, 5), st.floats(0.1, 4), st.floats(0, 1))
def test_strict_stability_scaling(alpha, z, c, skew):
    spec = StableSpec(alpha, np.array([[1.0], [-1.0]]), np.array([1 - skew / 2, skew / 2 + 0.1]))
    lhs = stable_char_exponent(spec, [c * z])
    rhs = c ** alpha * stable_char_exponent(spec, [z])
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_stable_alpha_out_of_scope():
    with pytest.raises(UnsupportedParameterError):
        StableSpec(1.0, np.array([[1.0]]), np.array([1.0]))


def test_stable_constant_matches_integral():
    # int_0^inf (cos(s) - 1) s^(-1-alpha) ds = -c_alpha
    a = 1.5
    val = integrate.quad(lambda s: (math.cos(s) - 1) * s ** (-1 - a), 0, 1)[0]
    val += integrate.quad(lambda s: -s ** (-1 - a), 1, np.inf)[0]
    val += integrate.quad(lambda s: s ** (-1 - a), 1, np.inf, weight="cos", wvar=1.0)[0]
    assert val == pytest.approx(-stable_constant(a), rel=1e-8)


def test_stable_triplet_exponent_consistent():
    spec = StableSpec(1.5, np.array([[1.0], [-1.0]]), np.array([0.8, 0.2]))
    tri = spec.to_triplet()
    for z in (0.3, 1.0, -2.5):
        assert char_exponent(tri, [z]) == pytest.approx(stable_char_exponent(spec, [z]), rel=1e-7)


# ------------------------------------------------------------- rescaling


def test_rescaled_gaussian_exact():
    tri = LevyTriplet.gaussian([[1.0]])
    for r in (1.0, 1e-2, 1e-6):
        assert rescaled_exponent(tri, 2.0, [2.0], r) == pytest.approx(-2.0, rel=1e-14)


@pytest.mark.parametrize("w", [0.5, 1.0, 2.0])
def test_power_tail_domain_of_attraction(w):
    tri = power_tail_triplet(1.5)
    target = stable_char_exponent(attracting_stable_spec(tri, 1.5), [w])
    val = rescaled_exponent(tri, 1.5, [w], 1e-4)
    assert abs(val - target) / abs(target) < 0.01


def test_attracting_spec_weight_convention():
    # limit Lévy density alpha K lam s^(-1-alpha) with K = coef / alpha
    tri = power_tail_triplet(1.5, coef=2.0)
    spec = attracting_stable_spec(tri, 1.5)
    assert spec.levy_density_weights()[0] == pytest.approx(2.0)


def test_finite_variation_limit_is_drift():
    tri = unit_jump_triplet()
    assert tri.gamma0[0] == pytest.approx(-1.0)
    val = rescaled_exponent(tri, 1.0, [1.0], 1e-4)
    assert abs(val - (-1j)) < 0.01


# --------------------------------------------------------------- samplers


def test_zero_volume_increment(rng):
    assert np.all(sample_id_increment(unit_jump_triplet(1.0), 0.0, rng) == 0)


def test_gaussian_increment_moments(rng):
    tri = LevyTriplet.gaussian([[1.0]])
    N = 100_000
    x = np.array([sample_id_increment(tri, 4.0, rng)[0] for _ in range(N)])
    assert abs(x.mean()) < 3 * 2 / math.sqrt(N)
    assert abs(x.var() / 4 - 1) < 0.05


def test_compound_poisson_increment_counts(rng):
    # gamma = 1 cancels the compensator, so the increment is the jump count
    tri = unit_jump_triplet(gamma=1.0)
    N = 20_000
    x = np.array([sample_id_increment(tri, 2.0, rng)[0] for _ in range(N)])
    assert np.allclose(x, np.round(x))
    assert abs(x.mean() - 2.0) < 3 * math.sqrt(2.0 / N)
    assert abs(x.var() - 2.0) < 0.1


def test_infinite_variation_increment_refused(rng):
    with pytest.raises(UnsupportedParameterError):
        sample_id_increment(power_tail_triplet(1.5), 1.0, rng)


def test_stable_zero_scale(rng):
    assert np.all(sample_stable(symmetric_stable(), 0.0, rng) == 0)


def test_gaussian_stable_sampler_ks(rng):
    spec = StableSpec(2.0, sigma=[[1.0]])
    x = sample_stable(spec, 1.0, rng, size=10_000)[:, 0]
    assert stats.kstest(x, "norm").statistic < 0.02


def test_stable_sampler_ecf(rng):
    spec = symmetric_stable()
    N = 100_000
    x = sample_stable(spec, 1.0, rng, size=N)[:, 0]
    for z in (0.5, 1.0, 2.0):
        ecf = np.mean(np.exp(1j * z * x))
        assert abs(ecf - np.exp(stable_char_exponent(spec, [z]))) < 3 / math.sqrt(N)


def test_skewed_stable_sampler_ecf(rng):
    spec = StableSpec(1.5, np.array([[1.0], [-1.0]]), np.array([0.9, 0.1]))
    N = 100_000
    x = sample_stable(spec, 0.7, rng, size=N)[:, 0]
    for z in (0.5, 1.0, 2.0):
        ecf = np.mean(np.exp(1j * z * x))
        assert abs(ecf - np.exp(0.7 * stable_char_exponent(spec, [z]))) < 3 / math.sqrt(N)


def test_empty_measure_gives_no_jumps(rng):
    jc = sample_poisson_jumps((np.zeros(2), np.ones(2)), LevyMeasureSpec.zero(1), 0.0, rng)
    assert len(jc) == 0


def test_poisson_jump_counts(rng):
    nu = unit_jump_triplet().nu
    N = 5000
    counts = [len(sample_poisson_jumps((np.zeros(1), np.array([3.0])), nu, 0.0, rng)) for _ in range(N)]
    assert abs(np.mean(counts) - 3.0) < 3 * math.sqrt(3.0 / N)


def test_power_tail_marks_above_truncation(rng):
    nu = power_tail_triplet(1.5).nu
    x = nu.sample_marks(0.1, 20_000, rng)[:, 0]
    assert np.all((x > 0.1) & (x <= 1.0))
    # P(s > 0.5 | s > 0.1) = (0.5^-a - 1) / (0.1^-a - 1)
    p = (0.5 ** -1.5 - 1) / (0.1 ** -1.5 - 1)
    assert abs(np.mean(x > 0.5) - p) < 4 * math.sqrt(p * (1 - p) / x.size)


def test_invalid_levy_measure_rejected():
    with pytest.raises(ValueError):
        LevyMeasureSpec(np.array([[2.0]]), np.array([1.0]), (PointMasses((1.0,), (1.0,)),))
    with pytest.raises(ValueError):
        PowerTail(2.5)


# ------------------------------------------------------------- invariants


def test_rescaled_error_decreases_along_r():
    for alpha in (1.3, 1.5, 1.8):
        tri = power_tail_triplet(alpha)
        target = stable_char_exponent(attracting_stable_spec(tri, alpha), [1.0])
        errs = [abs(rescaled_exponent(tri, alpha, [1.0], r) - target) for r in (1e-1, 1e-2, 1e-3, 1e-4)]
        assert np.all(np.diff(errs) < 0)


def test_additivity_over_cells():
    # k independent cell increments sum to the law of the whole box
    nu = LevyMeasureSpec.symmetric(1, Exponential(rate=1.5, coef=2.0), 0.5)
    tri = LevyTriplet(np.array([0.3]), np.array([[0.4]]), nu)
    rng = np.random.default_rng(8)
    N, cells = 20_000, [0.5, 0.25, 0.75, 0.5]
    x = np.array([sum(sample_id_increment(tri, v, rng)[0] for v in cells) for _ in range(N)])
    for z in (0.3, 0.7, 1.0, 1.5, 2.5):
        ecf = np.mean(np.exp(1j * z * x))
        assert abs(ecf - np.exp(sum(cells) * char_exponent(tri, [z]))) < 3 / math.sqrt(N)


def test_disjoint_regions_uncorrelated():
    nu = LevyMeasureSpec(np.array([[1.0]]), np.array([2.0]), (PointMasses((1.0,), (1.0,)),))
    rng = np.random.default_rng(10)
    N = 4000
    left, right = np.empty(N), np.empty(N)
    for k in range(N):
        q = sample_poisson_jumps((np.zeros(2), np.array([2.0, 1.0])), nu, 0.0, rng).locations
        left[k], right[k] = np.sum(q[:, 0] < 1), np.sum(q[:, 0] >= 1)
    assert abs(np.corrcoef(left, right)[0, 1]) < 3 / math.sqrt(N)
    assert left.mean() == pytest.approx(2.0, abs=3 * math.sqrt(2 / N))
