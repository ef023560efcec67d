"""Infinitely divisible laws: triplets, characteristic exponents and samplers.

Lévy measures are kept in polar form ``nu = sum_k lam_k * (rho_k pushed along u_k)``
with a finite atom list of directions ``u_k`` and a radial measure ``rho_k``
from a small parametric catalog (:class:`PowerTail`, :class:`Exponential`,
:class:`PointMasses`).  The catalog is chosen so that the radial part of the
exponent, tail masses and exact samplers are all cheap.

Stable laws use the spectral-measure convention

    psi_alpha(z) = -sum_k lbar_k |z.u_k|^alpha (1 - i sign(z.u_k) tan(pi alpha / 2)),

so a strictly stable law with spectral atoms ``lbar_k`` has Lévy density
``(lbar_k / c_alpha) s^(-1-alpha) ds`` along ``u_k`` with
``c_alpha = -Gamma(-alpha) cos(pi alpha / 2)`` (see :func:`stable_constant`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureError",
    "UnsupportedParameterError",
    "PowerTail",
    "Exponential",
    "PointMasses",
    "LevyMeasureSpec",
    "LevyTriplet",
    "StableSpec",
    "JumpConfiguration",
    "stable_constant",
    "char_exponent",
    "stable_char_exponent",
    "rescaled_exponent",
    "attracting_stable_spec",
    "sample_id_increment",
    "sample_stable",
    "sample_stable_unit",
    "sample_poisson_jumps",
]

QUAD_ABS_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved abs. error {achieved:.3e})")
        self.achieved = achieved


class UnsupportedParameterError(ValueError):
    pass


# --------------------------------------------------------------------------
# radial catalog


def _sin_minus_x(x):
    """sin(x) - x without cancellation for small |x|."""
    x = np.asarray(x, dtype=float)
    out = np.sin(x) - x
    small = np.abs(x) < 0.1
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        out[small] = -xs * x2 / 6.0 * (1 - x2 / 20.0 * (1 - x2 / 42.0 * (1 - x2 / 72.0)))
    return out


def _cos_minus_one(x):
    return -2.0 * np.sin(0.5 * np.asarray(x, dtype=float)) ** 2


@dataclass(frozen=True)
class PowerTail:
    """``rho(ds) = coef * s^(-1-alpha) ds`` on ``(0, upper]``.

    ``upper = inf`` gives the radial part of a stable Lévy measure.
    """

    alpha: float
    coef: float = 1.0
    upper: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("power-tail index must lie in (0, 2)")
        if self.coef < 0 or not self.upper > 0:
            raise ValueError("coef must be >= 0 and upper > 0")
        if math.isinf(self.upper) and self.alpha <= 0:
            raise ValueError("infinite upper cutoff needs alpha > 0")

    @property
    def finite_variation(self) -> bool:
        return self.alpha < 1 or self.coef == 0

    @property
    def finite_activity(self) -> bool:
        return self.coef == 0

    def tail_mass(self, eps: float) -> float:
        a, u = self.alpha, self.upper
        if eps >= u:
            return 0.0
        if eps <= 0:
            return math.inf if self.coef > 0 else 0.0
        return self.coef * (eps ** -a - (0.0 if math.isinf(u) else u ** -a)) / a

    def moment_below(self, h: float, p: float) -> float:
        """``int_(0,h] s^p rho(ds)``; infinite when ``p <= alpha``."""
        h = min(h, self.upper)
        if self.coef == 0 or h <= 0:
            return 0.0
        if p <= self.alpha:
            return math.inf
        return self.coef * h ** (p - self.alpha) / (p - self.alpha)

    def moment_between(self, lo: float, hi: float, p: float) -> float:
        lo, hi = max(lo, 0.0), min(hi, self.upper)
        if hi <= lo or self.coef == 0:
            return 0.0
        q = p - self.alpha
        if lo == 0:
            return self.moment_below(hi, p)
        if math.isinf(hi):
            if q >= 0:
                return math.inf
            return self.coef * (-lo ** q) / q
        if q == 0:
            return self.coef * math.log(hi / lo)
        return self.coef * (hi ** q - lo ** q) / q

    def tail_constant(self, alpha: float) -> float:
        """``lim_{s->0} s^alpha rho(s, inf)``."""
        if self.coef == 0 or self.alpha < alpha:
            return 0.0
        if self.alpha > alpha:
            return math.inf
        return self.coef / self.alpha

    def sample_above(self, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
        a = self.alpha
        lo = eps ** -a
        hi = 0.0 if math.isinf(self.upper) else self.upper ** -a
        u = rng.random(n)
        return (lo - u * (lo - hi)) ** (-1.0 / a)

    def exponent(self, w: float) -> complex:
        """``int (e^{isw} - 1 - isw 1_{s<=1}) rho(ds)`` by adaptive quadrature.

        The range is split at the compensation cutoff ``s = 1`` and at
        ``s = 2 pi / |w|``; beyond the latter the oscillatory factors are
        handled by QUADPACK's Fourier-weighted rules.
        """
        if w == 0 or self.coef == 0:
            return 0j
        a, U = self.alpha, self.upper
        aw, sgn = abs(w), math.copysign(1.0, w)
        b = min(U, 2 * math.pi / aw)
        breaks = sorted({0.0, b} | ({1.0} if 1.0 < b else set()))
        re = im = 0.0
        err = 0.0

        def f_re(s):
            return float(_cos_minus_one(aw * s)) * s ** (-1 - a)

        def f_im_comp(s):
            return float(_sin_minus_x(np.array([aw * s]))[0]) * s ** (-1 - a)

        def f_im_free(s):
            return math.sin(aw * s) * s ** (-1 - a)

        for lo, hi in zip(breaks[:-1], breaks[1:]):
            v, e = integrate.quad(f_re, lo, hi, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
            re += v
            err += e
            f_im = f_im_comp if hi <= 1.0 else f_im_free
            v, e = integrate.quad(f_im, lo, hi, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
            im += v
            err += e
        if b < U:
            # oscillatory region [b, U]
            seg = [(b, 1.0), (1.0, U)] if b < 1.0 < U else [(b, U)]
            for lo, hi in seg:
                v, e = _fourier_quad(a, lo, hi, aw, "cos")
                re += v - _int_power(lo, hi, -1 - a)
                err += e
                v, e = _fourier_quad(a, lo, hi, aw, "sin")
                im += v
                if hi <= 1.0:
                    im -= aw * _int_power(lo, hi, -a)
                err += e
        if not err < max(50 * QUAD_ABS_TOL, 1e-10 * abs(complex(re, im))):
            raise QuadratureError(f"power-tail exponent at w={w:g}", err)
        return self.coef * complex(re, sgn * im)


def _fourier_quad(a: float, lo: float, hi: float, aw: float, kind: str):
    """``int_lo^hi s^(-1-a) cos|sin(aw s) ds`` with QUADPACK's QAWO/QAWF."""
    f = lambda s: s ** (-1 - a)  # noqa: E731
    if math.isinf(hi):
        return integrate.quad(f, lo, hi, weight=kind, wvar=aw, epsabs=QUAD_ABS_TOL, limlst=200)
    return integrate.quad(f, lo, hi, weight=kind, wvar=aw, epsabs=QUAD_ABS_TOL,
                          epsrel=1e-12, limit=400)


def _int_power(lo: float, hi: float, p: float) -> float:
    """``int_lo^hi s^p ds`` for ``0 < lo < hi <= inf``."""
    if p == -1:
        return math.log(hi / lo)
    if math.isinf(hi):
        return -lo ** (p + 1) / (p + 1)
    return (hi ** (p + 1) - lo ** (p + 1)) / (p + 1)


@dataclass(frozen=True)
class Exponential:
    """``rho(ds) = coef * exp(-rate s) ds`` on ``(0, inf)`` (finite activity)."""

    rate: float
    coef: float = 1.0

    finite_variation = True
    finite_activity = True

    def tail_mass(self, eps: float) -> float:
        return self.coef * math.exp(-self.rate * max(eps, 0.0)) / self.rate

    def moment_below(self, h: float, p: float) -> float:
        if h <= 0:
            return 0.0
        b = self.rate
        return self.coef * special.gammainc(p + 1, b * h) * special.gamma(p + 1) / b ** (p + 1)

    def moment_between(self, lo, hi, p):
        return self.moment_below(hi, p) - self.moment_below(lo, p)

    def tail_constant(self, alpha: float) -> float:
        return 0.0

    def sample_above(self, eps, n, rng):
        return max(eps, 0.0) + rng.exponential(1.0 / self.rate, n)

    def exponent(self, w: float) -> complex:
        b, c = self.rate, self.coef
        comp = (1 - math.exp(-b) * (1 + b)) / b ** 2
        return c * (1 / complex(b, -w) - 1 / b) - 1j * w * c * comp


@dataclass(frozen=True)
class PointMasses:
    """``rho = sum_i weights_i delta_{sizes_i}``."""

    sizes: tuple
    weights: tuple

    finite_variation = True
    finite_activity = True

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.sizes))
        w = tuple(float(v) for v in np.atleast_1d(self.weights))
        if len(s) != len(w) or any(v <= 0 for v in s) or any(v < 0 for v in w):
            raise ValueError("point masses need positive sizes and nonnegative weights")
        object.__setattr__(self, "sizes", s)
        object.__setattr__(self, "weights", w)

    def tail_mass(self, eps):
        return float(sum(w for s, w in zip(self.sizes, self.weights) if s > eps))

    def moment_below(self, h, p):
        return float(sum(w * s ** p for s, w in zip(self.sizes, self.weights) if s <= h))

    def moment_between(self, lo, hi, p):
        return float(sum(w * s ** p for s, w in zip(self.sizes, self.weights) if lo < s <= hi))

    def tail_constant(self, alpha):
        return 0.0

    def sample_above(self, eps, n, rng):
        s = np.array(self.sizes)
        w = np.array(self.weights) * (s > eps)
        return s[rng.choice(len(s), size=n, p=w / w.sum())]

    def exponent(self, w):
        s = np.array(self.sizes)
        c = np.array(self.weights)
        return complex(np.sum(c * (np.exp(1j * s * w) - 1 - 1j * s * w * (s <= 1))))


Radial = Union[PowerTail, Exponential, PointMasses]


# --------------------------------------------------------------------------
# Lévy measures and triplets


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Polar Lévy measure with atomic angular part.

    ``directions`` is ``(k, m)`` with unit rows, ``weights`` the angular
    masses ``lambda_k`` and ``radials`` one radial measure per atom.
    """

    directions: np.ndarray
    weights: np.ndarray
    radials: tuple

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        rad = self.radials
        if not isinstance(rad, (tuple, list)):
            rad = (rad,) * len(w)
        rad = tuple(rad)
        if u.shape[0] != w.shape[0] or len(rad) != w.shape[0]:
            raise ValueError("directions, weights and radials must have equal length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("angular weights must be finite and nonnegative")
        if u.size and not np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12):
            raise ValueError("directions must be unit vectors")
        for r in rad:
            # integrability of 1 ^ s^2
            if r.moment_below(1.0, 2.0) == math.inf or r.tail_mass(1.0) == math.inf:
                raise ValueError("radial part is not a Lévy measure")
        u.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", u)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "radials", rad)

    @classmethod
    def zero(cls, m: int) -> "LevyMeasureSpec":
        return cls(np.zeros((0, m)), np.zeros(0), ())

    @classmethod
    def symmetric(cls, m: int, radial: Radial, weight: float = 0.5) -> "LevyMeasureSpec":
        """Atoms at ``+-e_i`` with equal weights."""
        eye = np.eye(m)
        return cls(np.vstack([eye, -eye]), np.full(2 * m, weight), radial)

    @property
    def m(self) -> int:
        return self.directions.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.weights.size == 0 or not np.any(self.weights > 0)

    @property
    def finite_variation(self) -> bool:
        return all(r.finite_variation for r, w in zip(self.radials, self.weights) if w > 0)

    @property
    def finite_activity(self) -> bool:
        return all(getattr(r, "finite_activity", False) for r, w in zip(self.radials, self.weights) if w > 0)

    def mass_above(self, eps: float) -> float:
        return float(sum(w * r.tail_mass(eps) for r, w in zip(self.radials, self.weights) if w > 0))

    def total_mass(self) -> float:
        return self.mass_above(0.0)

    def vector_moment(self, lo: float, hi: float) -> np.ndarray:
        """``int_{lo < |x| <= hi} x nu(dx)``."""
        out = np.zeros(self.m)
        for u, w, r in zip(self.directions, self.weights, self.radials):
            if w > 0:
                out += w * r.moment_between(lo, hi, 1.0) * u
        return out

    def abs_moment_below(self, h: float) -> float:
        """``int_{|x| <= h} |x| nu(dx)`` (truncation bias bound per unit volume)."""
        return float(sum(w * r.moment_below(h, 1.0) for r, w in zip(self.radials, self.weights) if w > 0))

    def second_moment_below(self, h: float) -> np.ndarray:
        """``int_{|x| <= h} x x' nu(dx)``."""
        out = np.zeros((self.m, self.m))
        for u, w, r in zip(self.directions, self.weights, self.radials):
            if w > 0:
                out += w * r.moment_below(h, 2.0) * np.outer(u, u)
        return out

    def tail_constants(self, alpha: float) -> np.ndarray:
        """Per-atom ``K_k = lim s^alpha rho_k(s, inf)`` (only catalog families)."""
        return np.array([r.tail_constant(alpha) for r in self.radials])

    def sample_marks(self, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
        masses = np.array([w * r.tail_mass(eps) for r, w in zip(self.radials, self.weights)])
        tot = masses.sum()
        out = np.zeros((n, self.m))
        if n == 0:
            return out
        atom = rng.choice(len(masses), size=n, p=masses / tot)
        for k in np.unique(atom):
            sel = atom == k
            s = self.radials[k].sample_above(eps, int(sel.sum()), rng)
            out[sel] = s[:, None] * self.directions[k]
        return out


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet ``(gamma, sigma, nu)`` with cutoff ``|x| <= 1``."""

    gamma: np.ndarray
    sigma: np.ndarray
    nu: LevyMeasureSpec

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        s = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        m = g.shape[0]
        if s.shape != (m, m) or self.nu.m != m:
            raise ValueError("dimension mismatch in triplet")
        if not np.allclose(s, s.T, atol=1e-12):
            raise ValueError("sigma must be symmetric")
        if np.linalg.eigvalsh(s).min() < -1e-12 * max(1.0, np.abs(s).max()):
            raise ValueError("sigma must be positive semidefinite")
        g.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "sigma", s)

    @classmethod
    def gaussian(cls, sigma, gamma=None) -> "LevyTriplet":
        s = np.atleast_2d(np.asarray(sigma, dtype=float))
        m = s.shape[0]
        g = np.zeros(m) if gamma is None else gamma
        return cls(g, s, LevyMeasureSpec.zero(m))

    @classmethod
    def drift(cls, gamma0) -> "LevyTriplet":
        g = np.atleast_1d(np.asarray(gamma0, dtype=float))
        m = g.shape[0]
        return cls(g, np.zeros((m, m)), LevyMeasureSpec.zero(m))

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    @property
    def has_gaussian(self) -> bool:
        return bool(np.any(self.sigma != 0))

    @property
    def finite_variation(self) -> bool:
        return not self.has_gaussian and self.nu.finite_variation

    @property
    def gamma0(self) -> np.ndarray:
        """Drift without compensation, ``gamma - int_{|x|<=1} x nu(dx)``."""
        if not self.nu.finite_variation:
            raise UnsupportedParameterError("gamma0 needs a finite-variation Lévy measure")
        return self.gamma - self.nu.vector_moment(0.0, 1.0)


@dataclass(frozen=True)
class StableSpec:
    """Strictly alpha-stable law, ``1 < alpha <= 2``.

    For ``alpha < 2`` the law is given by spectral atoms (``directions``,
    ``weights``); for ``alpha == 2`` by the covariance ``sigma``.
    """

    alpha: float
    directions: np.ndarray = field(default=None)
    weights: np.ndarray = field(default=None)
    sigma: np.ndarray = field(default=None)

    def __post_init__(self):
        a = float(self.alpha)
        if not 1 < a <= 2:
            raise UnsupportedParameterError(f"alpha={a} outside (1, 2]")
        if a == 2:
            if self.sigma is None:
                raise ValueError("alpha=2 needs a covariance")
            s = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            if not np.any(s):
                raise ValueError("alpha=2 needs a nonzero covariance")
            s.setflags(write=False)
            object.__setattr__(self, "sigma", s)
            object.__setattr__(self, "directions", np.zeros((0, s.shape[0])))
            object.__setattr__(self, "weights", np.zeros(0))
        else:
            if self.directions is None or self.weights is None:
                raise UnsupportedParameterError("alpha<2 needs an atomic spectral measure")
            if self.sigma is not None and np.any(self.sigma):
                raise ValueError("alpha<2 excludes a Gaussian part")
            u = np.atleast_2d(np.asarray(self.directions, dtype=float))
            w = np.atleast_1d(np.asarray(self.weights, dtype=float))
            if u.shape[0] != w.shape[0] or np.any(w < 0) or not np.any(w > 0):
                raise ValueError("spectral atoms need matching nonnegative weights")
            if not np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12):
                raise ValueError("spectral directions must be unit vectors")
            u.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "directions", u)
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "sigma", np.zeros((u.shape[1], u.shape[1])))
        object.__setattr__(self, "alpha", a)

    @classmethod
    def symmetric(cls, alpha: float, m: int, weight: float = 0.5) -> "StableSpec":
        """Spectral atoms ``weight * (delta_{e_i} + delta_{-e_i})``; alpha=2 gives sigma = 2*weight*I."""
        if alpha == 2:
            return cls(2.0, sigma=2 * weight * np.eye(m))
        eye = np.eye(m)
        return cls(alpha, np.vstack([eye, -eye]), np.full(2 * m, weight))

    @property
    def m(self) -> int:
        return self.sigma.shape[0]

    @property
    def is_symmetric(self) -> bool:
        if self.alpha == 2:
            return True
        return bool(np.allclose(self.weights @ self.directions, 0.0, atol=1e-14))

    def levy_density_weights(self) -> np.ndarray:
        """Coefficients ``C_k`` of the Lévy density ``C_k s^(-1-alpha)`` along each atom."""
        return self.weights / stable_constant(self.alpha)

    @property
    def gamma(self) -> np.ndarray:
        """Drift of the strictly stable law in the cutoff-1 convention."""
        if self.alpha == 2:
            return np.zeros(self.m)
        c = self.levy_density_weights()
        return (c @ self.directions) / (1.0 - self.alpha)

    def to_triplet(self) -> LevyTriplet:
        if self.alpha == 2:
            return LevyTriplet.gaussian(self.sigma)
        c = self.levy_density_weights()
        nu = LevyMeasureSpec(self.directions, np.ones_like(c),
                             tuple(PowerTail(self.alpha, ck, math.inf) for ck in c))
        return LevyTriplet(self.gamma, np.zeros((self.m, self.m)), nu)


def stable_constant(alpha: float) -> float:
    """``c_alpha = -Gamma(-alpha) cos(pi alpha / 2) > 0`` for ``1 < alpha < 2``.

    ``int_0^inf (e^{isw} - 1 - isw) s^(-1-alpha) ds
    = -c_alpha |w|^alpha (1 - i sign(w) tan(pi alpha / 2))``.
    """
    return float(-special.gamma(-alpha) * math.cos(math.pi * alpha / 2))


@dataclass(frozen=True)
class JumpConfiguration:
    """Frozen Poisson jumps: ``locations`` (n, d), ``marks`` (n, m)."""

    locations: np.ndarray
    marks: np.ndarray
    region: tuple
    truncation: float = 0.0

    def __post_init__(self):
        lo, hi = (np.asarray(v, dtype=float) for v in self.region)
        q = np.asarray(self.locations, dtype=float).reshape(-1, lo.shape[0])
        x = np.asarray(self.marks, dtype=float)
        x = x.reshape(q.shape[0], -1) if q.shape[0] else x.reshape(0, x.shape[-1] if x.ndim > 1 else 1)
        if q.shape[0] and (np.any(q < lo) or np.any(q > hi)):
            raise ValueError("jump locations outside region")
        for a in (q, x, lo, hi):
            a.setflags(write=False)
        object.__setattr__(self, "locations", q)
        object.__setattr__(self, "marks", x)
        object.__setattr__(self, "region", (lo, hi))

    def __len__(self) -> int:
        return self.locations.shape[0]


# --------------------------------------------------------------------------
# exponents


def char_exponent(triplet: LevyTriplet, z) -> complex:
    """``psi(z) = i gamma.z - z.Sigma z / 2 + int (e^{iz.x} - 1 - i z.x 1_{|x|<=1}) nu(dx)``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (triplet.m,):
        raise ValueError(f"z must have shape ({triplet.m},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    val = complex(-0.5 * z @ triplet.sigma @ z, float(triplet.gamma @ z))
    nu = triplet.nu
    for u, w, r in zip(nu.directions, nu.weights, nu.radials):
        if w > 0:
            val += w * r.exponent(float(z @ u))
    return val


def stable_char_exponent(spec: StableSpec, z) -> complex:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if spec.alpha == 2:
        return complex(-0.5 * z @ spec.sigma @ z)
    a = spec.alpha
    proj = spec.directions @ z
    t = math.tan(math.pi * a / 2)
    terms = np.abs(proj) ** a * (1 - 1j * np.sign(proj) * t)
    return complex(-np.sum(spec.weights * terms))


def rescaled_exponent(triplet: LevyTriplet, alpha: float, w, r: float) -> complex:
    """``r psi(r^(-1/alpha) w)``."""
    if not r > 0:
        raise ValueError("r must be positive")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return r * char_exponent(triplet, r ** (-1.0 / alpha) * w)


def attracting_stable_spec(triplet: LevyTriplet, alpha: float) -> StableSpec:
    """Strictly stable law whose exponent is ``lim r psi(r^(-1/alpha) w)``.

    For ``alpha < 2`` the small-jump tails ``s^alpha rho_k(s, inf) -> K_k``
    give a Lévy density ``alpha K_k lam_k s^(-1-alpha)`` along ``u_k``; in the
    spectral convention of this module that is the atom weight
    ``alpha c_alpha K_k lam_k``.  Only catalog families are checked.
    """
    if alpha == 2:
        if not triplet.has_gaussian:
            raise UnsupportedParameterError("alpha=2 attraction needs a Gaussian part")
        return StableSpec(2.0, sigma=triplet.sigma)
    if triplet.has_gaussian:
        raise UnsupportedParameterError("alpha<2 attraction needs sigma = 0")
    nu = triplet.nu
    K = nu.tail_constants(alpha)
    if not np.all(np.isfinite(K)) or not np.any(K * nu.weights > 0):
        raise UnsupportedParameterError(f"Lévy measure is not attracted to an {alpha}-stable law")
    lbar = alpha * stable_constant(alpha) * K * nu.weights
    keep = lbar > 0
    return StableSpec(alpha, nu.directions[keep], lbar[keep])


# --------------------------------------------------------------------------
# samplers


def sample_stable_unit(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Totally skewed ``S_alpha(1, 1, 0)`` draws (Chambers–Mallows–Stuck).

    Characteristic function ``exp(-|z|^alpha (1 - i sign(z) tan(pi alpha/2)))``.
    """
    t = math.tan(math.pi * alpha / 2)
    B = math.atan(t) / alpha
    S = (1 + t * t) ** (1 / (2 * alpha))
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.standard_exponential(size)
    aVB = alpha * (V + B)
    return S * np.sin(aVB) / np.cos(V) ** (1 / alpha) * (np.cos(V - aVB) / W) ** ((1 - alpha) / alpha)


def sample_stable(spec: StableSpec, scale, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw(s) with log-characteristic function ``scale * psi_alpha(z)``.

    ``scale`` may be an array; the output then has shape ``scale.shape + (m,)``.
    """
    scale = np.asarray(scale, dtype=float)
    if np.any(scale < 0):
        raise ValueError("scale must be nonnegative")
    shape = scale.shape if size is None else tuple(np.atleast_1d(size))
    scale = np.broadcast_to(scale, shape)
    m = spec.m
    if spec.alpha == 2:
        L = _psd_sqrt(spec.sigma)
        g = rng.standard_normal(shape + (m,))
        return np.sqrt(scale)[..., None] * (g @ L.T)
    a = spec.alpha
    k = spec.weights.shape[0]
    S = sample_stable_unit(a, shape + (k,), rng)
    coef = (scale[..., None] * spec.weights) ** (1 / a)
    return (coef * S) @ spec.directions


def _psd_sqrt(sigma: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sigma)
    return vecs * np.sqrt(np.clip(vals, 0, None))


def default_truncation(nu: LevyMeasureSpec, volume: float, tol: float = 1e-3) -> float:
    """Largest catalog-friendly ``eps`` with ``volume * int_{|x|<=eps}|x| nu <= tol``."""
    if nu.finite_activity or volume <= 0:
        return 0.0
    eps = 1.0
    while volume * nu.abs_moment_below(eps) > tol:
        eps *= 0.5
        if eps < 1e-300:
            raise UnsupportedParameterError("cannot truncate: small-jump mean is infinite")
    return eps


def sample_id_increment(triplet: LevyTriplet, volume: float, rng: np.random.Generator,
                        eps: float | None = None) -> np.ndarray:
    """One draw of ``L(cell)`` for a cell of Lebesgue measure ``volume``.

    Supported: Gaussian part, finite-activity jumps, and finite-variation
    infinite-activity jumps truncated at ``eps`` (small jumps dropped; mean
    absolute error at most ``volume * int_{|x|<=eps}|x| nu(dx)``).
    """
    if volume < 0:
        raise ValueError("volume must be nonnegative")
    m = triplet.m
    if volume == 0:
        return np.zeros(m)
    nu = triplet.nu
    out = np.zeros(m)
    if triplet.has_gaussian:
        out += math.sqrt(volume) * (_psd_sqrt(triplet.sigma) @ rng.standard_normal(m))
    if nu.is_zero:
        return out + volume * triplet.gamma
    if not nu.finite_variation:
        raise UnsupportedParameterError(
            "infinite-variation jumps are not sampled here; use sample_stable")
    if eps is None:
        eps = default_truncation(nu, volume)
    n = rng.poisson(volume * nu.mass_above(eps))
    out += nu.sample_marks(eps, n, rng).sum(axis=0)
    return out + volume * triplet.gamma0


def sample_poisson_jumps(region, nu: LevyMeasureSpec, eps: float,
                         rng: np.random.Generator) -> JumpConfiguration:
    """Poisson jumps of ``nu`` restricted to ``|x| > eps`` over a box ``(lo, hi)``."""
    lo, hi = (np.asarray(v, dtype=float) for v in region)
    vol = float(np.prod(hi - lo))
    if nu.is_zero:
        return JumpConfiguration(np.zeros((0, lo.shape[0])), np.zeros((0, nu.m)), (lo, hi), eps)
    mass = nu.mass_above(eps)
    if not np.isfinite(mass):
        raise UnsupportedParameterError(f"nu has infinite mass above eps={eps}; increase eps")
    n = rng.poisson(mass * vol)
    q = lo + (hi - lo) * rng.random((n, lo.shape[0]))
    x = nu.sample_marks(eps, n, rng)
    return JumpConfiguration(q, x, (lo, hi), eps)
