"""Verdict statistics: two-sample KS, scaling fits, tail indices and trend tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SampleSet",
    "KSResult",
    "ScalingReport",
    "TailIndex",
    "TrendVerdict",
    "ks_distance",
    "ks_critical_value",
    "iqr",
    "scaling_exponent",
    "tail_index",
    "convergence_in_probability_trend",
]

# asymptotic two-sample KS coefficients c(a), critical value c(a) sqrt((n+m)/(nm))
KS_COEF = {0.05: 1.358, 0.01: 1.628}


@dataclass(frozen=True)
class SampleSet:
    """Finite real samples with free-form metadata (r, t, seeds, experiment id)."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("sample set contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, SampleSet) else SampleSet(s).values


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: dict
    n: int
    m: int

    def passes(self, level: float = 0.01) -> bool:
        return self.statistic < self.critical[level]


def ks_critical_value(n: int, m: int, level: float = 0.01) -> float:
    return KS_COEF[level] * math.sqrt((n + m) / (n * m))


def ks_distance(a, b) -> KSResult:
    """Two-sample Kolmogorov–Smirnov statistic ``sup |F_a - F_b|``."""
    x = np.sort(_values(a))
    y = np.sort(_values(b))
    if x.size == 0 or y.size == 0:
        raise ValueError("KS distance needs nonempty samples")
    grid = np.concatenate([x, y])
    fa = np.searchsorted(x, grid, side="right") / x.size
    fb = np.searchsorted(y, grid, side="right") / y.size
    stat = float(np.max(np.abs(fa - fb)))
    crit = {lvl: ks_critical_value(x.size, y.size, lvl) for lvl in KS_COEF}
    return KSResult(stat, crit, x.size, y.size)


def iqr(values) -> float:
    q1, q3 = np.quantile(_values(values), [0.25, 0.75])
    return float(q3 - q1)


@dataclass(frozen=True)
class ScalingReport:
    radii: np.ndarray
    statistic: np.ndarray
    slope: float
    intercept: float
    predicted: float | None
    residuals: np.ndarray

    def within(self, tol: float) -> bool:
        return self.predicted is not None and abs(self.slope - self.predicted) <= tol


def scaling_exponent(statistic, radii, predicted: float | None = None) -> ScalingReport:
    """Least-squares slope of ``log(statistic)`` against ``log(r)``.

    Parameters
    ----------
    statistic : array_like
        Positive dispersion per radius (e.g. the IQR of the flux samples).
    radii : array_like
        At least three strictly decreasing radii.
    predicted : float, optional
        Exponent the slope is compared with.
    """
    s = np.asarray(statistic, dtype=float)
    r = np.asarray(radii, dtype=float)
    if r.size < 3 or s.shape != r.shape:
        raise ValueError("need at least three radii and one statistic per radius")
    if np.any(np.diff(r) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ValueError("statistics must be positive (degenerate experiment)")
    X = np.column_stack([np.log(r), np.ones_like(r)])
    coef, *_ = np.linalg.lstsq(X, np.log(s), rcond=None)
    res = np.log(s) - X @ coef
    return ScalingReport(r, s, float(coef[0]), float(coef[1]), predicted, res)


@dataclass(frozen=True)
class TailIndex:
    estimate: float
    stderr: float
    k: int
    light_tailed: bool

    def brackets(self, lo: float, hi: float) -> bool:
        return lo <= self.estimate <= hi


def tail_index(samples, k: int | None = None) -> TailIndex:
    """Hill estimate of the tail exponent of ``|samples|`` from the ``k`` largest values.

    ``k`` defaults to ``sqrt(N)``; the standard error is ``estimate / sqrt(k)``.
    Estimates significantly above 2 are flagged light-tailed (no stable tail).
    """
    x = np.abs(_values(samples))
    n = x.size
    if n < 1000:
        raise ValueError("tail_index needs at least 1000 samples")
    k = int(math.sqrt(n)) if k is None else int(k)
    xs = np.sort(x)[::-1]
    top, thr = xs[:k], xs[k]
    if thr <= 0 or k < 10:
        raise ValueError("too few positive exceedances for a tail estimate")
    est = 1.0 / float(np.mean(np.log(top / thr)))
    se = est / math.sqrt(k)
    return TailIndex(est, se, k, est - 3 * se > 2)


@dataclass(frozen=True)
class TrendVerdict:
    fractions: np.ndarray
    radii: np.ndarray
    tolerance: float
    passed: bool
    inversions: int


def convergence_in_probability_trend(deviations, radii, tol: float,
                                     final_max: float = 0.1) -> TrendVerdict:
    """Fraction of ``|deviation| > tol`` per radius; PASS if nonincreasing and small at the end.

    One inversion is tolerated when it lies within two binomial standard
    errors of the preceding fraction.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("need at least three radii")
    devs = [np.abs(np.asarray(d, dtype=float)) for d in deviations]
    if len(devs) != radii.size:
        raise ValueError("one deviation sample per radius")
    frac = np.array([float(np.mean(d > tol)) for d in devs])
    inv, ok = 0, True
    for i in range(1, frac.size):
        if frac[i] > frac[i - 1]:
            n = devs[i].size
            se = math.sqrt(max(frac[i - 1] * (1 - frac[i - 1]), 1.0 / n) / n)
            inv += 1
            if frac[i] - frac[i - 1] > 2 * se or inv > 1:
                ok = False
    ok = ok and frac[-1] < final_max
    return TrendVerdict(frac, radii, tol, bool(ok), inv)
