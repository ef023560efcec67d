"""Limit objects of the rescaled flux functionals.

The limit field is a stochastic integral

    Y(t, f) = int_{(0,t] x N(A)} G(t, f, s, x, n) . [Lambda+(ds d(x,n)) - Lambda-(ds d(x,n))]

against two independent strictly alpha-stable bases whose control measures
live on the boundary of the ambit set with densities ``h_M(+-n_A(x))^+``.
``G`` integrates the surface weight over the cap ``{y in M : t y.n >= h_M(n) s}``.

Here the control measures are discretized into ``N_s`` time slices times
``N_c`` boundary cells.  :meth:`LimitSampler.sample_paths` draws one stable
variate per cell, which gives coupled paths in ``t``.
:meth:`LimitSampler.sample_marginal` samples the same cell sum at a single
time exactly in law from two totally skewed variates (a consequence of strict
stability).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .field import Kernel, volume_rule
from .flux import SurfaceWeight
from .geometry import AffineSphere, AmbitSet, section_factor
from .levy import QuadratureError, StableSpec, UnsupportedParameterError, sample_stable, sample_stable_unit
from .stats import ks_distance

__all__ = [
    "PartitionError",
    "BoundaryControlMeasure",
    "LimitFieldSpec",
    "LimitSampler",
    "cap_moments",
    "section_measure",
    "kernel_G",
    "kernel_g_derivative",
    "verify_ac_identity",
    "sample_Y_alpha",
    "sample_Y_derivative",
    "path_regularity",
    "fv_limit_field_check",
    "FUBINI_GATE_MESSAGE",
]

OMEGA = {2: 2.0, 3: math.pi}  # H^{d-1} of the unit (d-1)-ball
DEFAULT_CELLS = {2: 256, 3: 12}

FUBINI_GATE_MESSAGE = (
    "derivative sampler refused for alpha=2, d=2: the stochastic Fubini condition "
    "int_0^t (int |g(r,.)|^2 dmu)^(1/2) dr < inf fails because |g|^2 ~ (1-(s/r)^2)^(-1) is not "
    "integrable near s=r; use the direct sampler")


class PartitionError(RuntimeError):
    """Successive refinements of the cell partition disagree."""


# --------------------------------------------------------------------------
# caps and sections


@lru_cache(maxsize=32)
def _gauss_legendre(n: int):
    x, w = special.roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _frames(v: np.ndarray) -> np.ndarray:
    """Orthonormal complements of unit rows ``v``: shape ``(K, d-1, d)``."""
    K, d = v.shape
    if d == 2:
        return np.stack([-v[:, 1], v[:, 0]], axis=1)[:, None, :]
    ax = np.eye(3)[np.argmin(np.abs(v), axis=1)]
    e1 = np.cross(v, ax)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(v, e1)
    return np.stack([e1, e2], axis=1)


def cap_moments(M: AffineSphere, n, rho, order: int = 64):
    """Cap area and ``int u_M dH`` over ``{y in M : y.n >= h_M(n) rho}``.

    The cap is parametrized in the pre-image sphere around ``v = T'n/|T'n|``
    by the polar angle (Gauss–Legendre, ``order`` nodes) and, for ``d = 3``,
    the azimuth (trapezoid, ``2 order`` nodes).  Returns ``(area, normal)``
    with shapes ``(K,)`` and ``(K, d)``.
    """
    n = np.atleast_2d(np.asarray(n, dtype=float))
    rho = np.broadcast_to(np.asarray(rho, dtype=float), n.shape[:1])
    d = M.d
    v = n @ M.T
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    E = _frames(v)
    tmax = np.arccos(np.clip(rho, -1.0, 1.0))
    x, gw = _gauss_legendre(order)
    if d == 2:
        th = tmax[:, None] * x[None, :]                                  # (K, q)
        wt = tmax[:, None] * gw[None, :]
        w = np.cos(th)[..., None] * v[:, None, :] + np.sin(th)[..., None] * E[:, 0][:, None, :]
    else:
        th = 0.5 * tmax[:, None] * (x[None, :] + 1)
        naz = 2 * order
        ph = 2 * math.pi * (np.arange(naz) + 0.5) / naz
        ring = (np.cos(ph)[:, None, None] * E[:, 0][None] + np.sin(ph)[:, None, None] * E[:, 1][None])
        ring = np.moveaxis(ring, 0, 1)                                   # (K, naz, d)
        w = (np.cos(th)[:, :, None, None] * v[:, None, None, :]
             + np.sin(th)[:, :, None, None] * ring[:, None, :, :])       # (K, q, naz, d)
        wt = (0.5 * tmax[:, None] * gw[None, :] * np.sin(th))[:, :, None] * np.full(naz, 2 * math.pi / naz)
        w = w.reshape(w.shape[0], -1, d)
        wt = wt.reshape(wt.shape[0], -1)
    g = w @ M.inv_T                       # rows T^{-T} w
    jac = M.det * np.linalg.norm(g, axis=-1)
    area = np.sum(wt * jac, axis=1)
    normal = M.det * np.einsum("kq,kqd->kd", wt, g)
    return area, normal


def section_measure(M: AffineSphere, n, rho) -> np.ndarray:
    """Vectorized ``H^{d-1}(D cap {p.n = h_M(n) rho})`` via ``phi(rho) omega |det T| / |T'n|``."""
    n = np.atleast_2d(np.asarray(n, dtype=float))
    rho = np.asarray(rho, dtype=float)
    d = M.d
    phi = np.maximum(1.0 - rho * rho, 0.0) ** ((d - 1) / 2)
    return phi * OMEGA[d] * M.det / np.linalg.norm(n @ M.T, axis=-1)


def kernel_G(t: float, f: SurfaceWeight, s: float, n, M: AffineSphere, Fx, method: str = "closed",
             order: int = 256) -> np.ndarray:
    """``G(t, f, s, x, n) = [int_M f(y)' 1{t y.n >= h_M(n) s} dH(y)] F(p0, x)``.

    ``Fx`` is the ``d x m`` matrix ``F(p0, x)``.  ``method="closed"`` uses the
    section measure for the ``B u_M`` part of ``f`` (and cap quadrature only for
    a constant part); ``method="cap"`` integrates the whole weight over the cap.
    """
    Fx = np.atleast_2d(np.asarray(Fx, dtype=float))
    n = np.asarray(n, dtype=float)
    if t <= 0 or s >= t:
        return np.zeros(Fx.shape[1])
    rho = s / t
    if method == "closed":
        vec = section_measure(M, n, rho)[0] * (f.B @ n)
        if np.any(f.c):
            area, _ = cap_moments(M, n, rho, order)
            vec = vec + area[0] * f.c
    elif method == "cap":
        area, normal = cap_moments(M, n, rho, order)
        vec = f.B @ normal[0] + area[0] * f.c
    else:
        raise ValueError(f"unknown method {method!r}")
    return vec @ Fx


def _phi_dt(s, r, d: int, power: float | None = None, gap=None):
    """``d/dr phi(s / r)`` for ``phi(rho) = (1 - rho^2)^power``.

    ``gap`` may supply ``1 - (s/r)^2`` computed without cancellation.
    """
    p = (d - 1) / 2 if power is None else power
    rho = s / r
    gap = 1.0 - rho * rho if gap is None else gap
    # s / r^2 as rho / r avoids underflow of r^2 for tiny s
    return 2 * p * rho * (rho / r) * gap ** (p - 1)


def _g_direction(n, M: AffineSphere, Fx, i: int, j: int) -> np.ndarray:
    """``(n.e_i) e_j'F H^{d-1}(T(D_1 cap v^perp))``: the time-independent factor of ``g``."""
    return n[i] * section_factor(M, n) * Fx[j]


def kernel_g_derivative(t: float, s: float, n, M: AffineSphere, Fx, i: int, j: int,
                        power: float | None = None) -> np.ndarray:
    """``d/dt G(t, e_j (x) e_i u_M, s, x, n)`` for ``0 < s < t`` (zero otherwise).

    ``power`` overrides the section exponent ``(d - 1)/2`` (used only to
    inject faults in the identity suite).
    """
    Fx = np.atleast_2d(np.asarray(Fx, dtype=float))
    if not 0 < s < t:
        return np.zeros(Fx.shape[1])
    n = np.asarray(n, dtype=float)
    return _phi_dt(s, t, M.d, power) * _g_direction(n, M, Fx, i, j)


def verify_ac_identity(s: float, n, t: float, M: AffineSphere, Fx, i: int, j: int,
                       power: float | None = None) -> float:
    """``max_k |int_s^t g(r) dr - G(t)|_k`` with ``r = s / cos(theta)`` removing the endpoint singularity."""
    if not s > 0:
        raise ValueError("the identity needs s > 0 (G jumps at s = 0)")
    Fx = np.atleast_2d(np.asarray(Fx, dtype=float))
    n = np.asarray(n, dtype=float)
    f = SurfaceWeight.tensor_normal(M.d, i, j)
    G = kernel_G(t, f, s, n, M, Fx)
    if s >= t:
        return float(np.max(np.abs(G)))
    tmax = math.acos(s / t)
    d = M.d

    def integrand(th):
        c, sn = math.cos(th), math.sin(th)
        return _phi_dt(s, s / c, d, power, gap=sn * sn) * s * sn / (c * c)

    # g factorizes into a scalar in r times a fixed row
    val, err = integrate.quad(integrand, 0.0, tmax, epsabs=1e-13, epsrel=1e-13, limit=200)
    if err > 1e-9:
        raise QuadratureError("AC identity quadrature", err)
    lhs = val * _g_direction(n, M, Fx, i, j)
    return float(np.max(np.abs(lhs - G)))


# --------------------------------------------------------------------------
# control measures and specs


@dataclass(frozen=True)
class BoundaryControlMeasure:
    """``mu+-`` on ``(0, inf) x N(A)``: density ``h_M(+-n_A(x))^+`` w.r.t. ``ds dH(x)``."""

    A: AmbitSet
    M: AffineSphere
    sign: int
    n_c: int | None = None

    @cached_property
    def boundary(self):
        order = self.n_c
        if order is None:
            order = DEFAULT_CELLS[self.A.d] if self.A.kind == "ball" else (64 if self.A.d == 2 else 8)
        return self.A.boundary_quadrature(order)

    @cached_property
    def density(self) -> np.ndarray:
        return np.maximum(self.M.support(self.sign * self.boundary.normals), 0.0)

    def total_mass(self, t: float) -> float:
        """``mu((0, t] x N(A))``."""
        return float(t * np.sum(self.boundary.weights * self.density))

    def cell_masses(self, t: float, n_s: int):
        """Midpoints of ``n_s`` equal time slices of ``(0, t]`` and the ``(n_s, N_c)`` cell masses."""
        ds = t / n_s
        s = ds * (np.arange(n_s) + 0.5)
        masses = ds * np.outer(np.ones(n_s), self.boundary.weights * self.density)
        return s, masses


@dataclass(frozen=True)
class LimitFieldSpec:
    """Stable seed law, geometry and the kernel seen from ``p0``."""

    seed: StableSpec
    A: AmbitSet
    M: AffineSphere
    kernel: Kernel
    p0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        if not (self.A.d == self.M.d == self.kernel.d):
            raise ValueError("A, M and the kernel must share the dimension d")
        if self.kernel.m != self.seed.m:
            raise ValueError("kernel columns must match the seed dimension")

    @property
    def alpha(self) -> float:
        return self.seed.alpha

    @property
    def d(self) -> int:
        return self.A.d

    def F_at(self, x) -> np.ndarray:
        """``F(p0, x + p0)`` for boundary points ``x`` of ``A``."""
        x = np.asarray(x, dtype=float)
        return self.kernel.value(self.p0, x + self.p0)

    def G(self, t, f, s, x, n, method="closed"):
        return kernel_G(t, f, s, n, self.M, self.F_at(x), method)


# --------------------------------------------------------------------------
# sampling


class LimitSampler:
    """Cell discretization of ``Y`` for a fixed spec and resolution."""

    def __init__(self, spec: LimitFieldSpec, n_s: int = 200, n_c: int | None = None):
        self.spec = spec
        self.n_s = int(n_s)
        self.plus = BoundaryControlMeasure(spec.A, spec.M, +1, n_c)
        self.minus = BoundaryControlMeasure(spec.A, spec.M, -1, n_c)

    @cached_property
    def _boundary(self):
        b = self.plus.boundary
        return b.nodes, b.normals, self.spec.F_at(b.nodes)   # F: (N_c, d, m)

    def _sign_tables(self, f: SurfaceWeight, times, t_grid: float):
        """Per sign: cell masses ``(n_s, N_c)`` and ``G`` of shape ``(n_t, n_s, N_c, m)``."""
        x, nrm, F = self._boundary
        M = self.spec.M
        out = []
        for meas in (self.plus, self.minus):
            sgn = meas.sign
            s, mass = meas.cell_masses(t_grid, self.n_s)
            nvec = sgn * nrm
            sec_fac = OMEGA[M.d] * M.det / np.linalg.norm(nvec @ M.T, axis=1)   # (N_c,)
            Bn = nvec @ f.B.T                                                   # (N_c, d)
            base_B = np.einsum("ci,cim->cm", Bn, F)                             # (N_c, m)
            base_c = np.einsum("i,cim->cm", f.c, F) if np.any(f.c) else None
            G = np.zeros((len(times), self.n_s, x.shape[0], F.shape[2]))
            for l, t in enumerate(times):
                rho = s / t
                act = rho < 1
                phi = np.where(act, np.maximum(1 - rho * rho, 0.0) ** ((M.d - 1) / 2), 0.0)
                G[l] = phi[:, None, None] * (sec_fac[:, None] * base_B)[None]
                if base_c is not None:
                    for si in np.flatnonzero(act):
                        area, _ = cap_moments(M, nvec, np.full(len(nvec), rho[si]), 48)
                        G[l, si] += area[:, None] * base_c
            out.append((mass, G))
        return out

    # -------------------------------------------------------------- marginals

    def _atom_coefficients(self, f: SurfaceWeight, t: float):
        """Coefficients ``b`` with ``Y(t, f) = sum b * S`` (unit skewed variates), per sign."""
        seed = self.spec.seed
        tabs = self._sign_tables(f, [t], t)
        out = []
        for sign, (mass, G) in zip((1.0, -1.0), tabs):
            proj = G[0] @ seed.directions.T                     # (n_s, N_c, k)
            coef = (mass[..., None] * seed.weights) ** (1 / seed.alpha)
            out.append(sign * proj * coef)
        return np.concatenate([o.ravel() for o in out])

    def gaussian_variance(self, f: SurfaceWeight, t: float) -> float:
        """``sum_+- int G' Sigma G dmu+-`` on the cell partition (``alpha = 2``)."""
        seed = self.spec.seed
        if seed.alpha != 2:
            raise UnsupportedParameterError("variance is finite only for alpha = 2")
        var = 0.0
        for mass, G in self._sign_tables(f, [t], t):
            var += float(np.einsum("sc,sci,ij,scj->", mass, G[0], seed.sigma, G[0]))
        return var

    def skew_scales(self, b: np.ndarray):
        a = self.spec.alpha
        return (np.sum(np.maximum(b, 0) ** a) ** (1 / a), np.sum(np.maximum(-b, 0) ** a) ** (1 / a))

    def sample_marginal(self, f: SurfaceWeight, t: float, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` draws of ``Y(t, f)``, exact in law for the cell sum."""
        if self.spec.alpha == 2:
            return math.sqrt(self.gaussian_variance(f, t)) * rng.standard_normal(size)
        b = self._atom_coefficients(f, t)
        return self._draw_from_coefficients(b, rng, size)

    def _draw_from_coefficients(self, b, rng, size):
        sp, sm = self.skew_scales(b)
        S = sample_stable_unit(self.spec.alpha, (size, 2), rng)
        return sp * S[:, 0] - sm * S[:, 1]

    def sample_contracted(self, Dphi: np.ndarray, f: SurfaceWeight, t: float,
                          rng: np.random.Generator) -> np.ndarray:
        """One draw of ``sum_{i,j} Dphi^(i,j) Y(t, f^(i) e_j)`` per row of ``Dphi`` (shape ``(N, d, d)``)."""
        Dphi = np.asarray(Dphi, dtype=float)
        d = self.spec.d
        comps = [[f.component(i, j) for j in range(d)] for i in range(d)]
        if self.spec.alpha == 2:
            # variance of the contracted weight is a quadratic form in Dphi
            basis = [(i, j) for i in range(d) for j in range(d)]
            tabs = [self._sign_tables(comps[i][j], [t], t) for i, j in basis]
            Q = np.zeros((len(basis), len(basis)))
            sig = self.spec.seed.sigma
            for a_, ta in enumerate(tabs):
                for b_, tb in enumerate(tabs):
                    Q[a_, b_] = sum(float(np.einsum("sc,sci,ij,scj->", ma, Ga[0], sig, Gb[0]))
                                    for (ma, Ga), (_, Gb) in zip(ta, tb))
            v = Dphi.reshape(len(Dphi), -1)
            var = np.einsum("na,ab,nb->n", v, Q, v)
            return np.sqrt(np.maximum(var, 0)) * rng.standard_normal(len(Dphi))
        B = np.stack([self._atom_coefficients(comps[i][j], t) for i in range(d) for j in range(d)])
        out = np.empty(len(Dphi))
        S = sample_stable_unit(self.spec.alpha, (len(Dphi), 2), rng)
        for k, D in enumerate(Dphi):
            sp, sm = self.skew_scales(D.ravel() @ B)
            out[k] = sp * S[k, 0] - sm * S[k, 1]
        return out

    # ------------------------------------------------------------------ paths

    def sample_paths(self, f: SurfaceWeight, times, rng: np.random.Generator, size: int = 1,
                     tables=None) -> np.ndarray:
        """Coupled draws of ``(Y(t_1, f), ..., Y(t_L, f))``, shape ``(size, L)``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        tabs = tables if tables is not None else self._sign_tables(f, times, float(times.max()))
        out = np.zeros((size, len(times)))
        for rep in range(size):
            for sign, (mass, G) in zip((1.0, -1.0), tabs):
                xi = sample_stable(self.spec.seed, mass, rng)        # (n_s, N_c, m)
                out[rep] += sign * np.einsum("lscm,scm->l", G, xi)
        return out

    def check_partition(self, f: SurfaceWeight, t: float, rng: np.random.Generator,
                        size: int = 4000, tol: float = 0.01) -> float:
        """KS distance between this partition and one refined by 2 in ``s``, on coupled unit variates."""
        fine = LimitSampler(self.spec, 2 * self.n_s, self.plus.n_c)
        if self.spec.alpha == 2:
            z = rng.standard_normal(size)
            a = math.sqrt(self.gaussian_variance(f, t)) * z
            b = math.sqrt(fine.gaussian_variance(f, t)) * z
        else:
            S = sample_stable_unit(self.spec.alpha, (size, 2), rng)
            sa = self.skew_scales(self._atom_coefficients(f, t))
            sb = fine.skew_scales(fine._atom_coefficients(f, t))
            a = sa[0] * S[:, 0] - sa[1] * S[:, 1]
            b = sb[0] * S[:, 0] - sb[1] * S[:, 1]
        ks = ks_distance(a, b).statistic
        if ks > tol:
            raise PartitionError(f"partition unresolved (KS {ks:.4f} > {tol}); increase n_s / n_c")
        return ks


def sample_Y_alpha(spec: LimitFieldSpec, f: SurfaceWeight, times, rng: np.random.Generator,
                   size: int = 1, n_s: int = 200, n_c: int | None = None, method: str = "auto",
                   check_partition: bool = False) -> np.ndarray:
    """Draws of ``Y(t, f)`` for each time, shape ``(size, len(times))``.

    ``method="marginal"`` (default for a single time) is exact in law for the
    cell sum; ``"paths"`` (default for several times) couples the times.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sampler = LimitSampler(spec, n_s, n_c)
    if check_partition:
        sampler.check_partition(f, float(times.max()), rng)
    if method == "auto":
        method = "marginal" if len(times) == 1 else "paths"
    if method == "marginal":
        return np.column_stack([sampler.sample_marginal(f, t, rng, size) for t in times])
    return sampler.sample_paths(f, times, rng, size)


def sample_Y_derivative(spec: LimitFieldSpec, i: int, j: int, times, rng: np.random.Generator,
                        size: int = 1, n_s: int = 200, n_c: int | None = None,
                        n_r: int = 48) -> np.ndarray:
    """Paths of ``Y(t, e_j (x) e_i u_M)`` built as ``int_0^t Y'(r) dr``.

    Per cell the time integral of ``g`` is taken by fixed Gauss–Legendre
    nodes after ``r = s / cos(theta)``.  Refused for ``alpha = 2, d = 2``.
    """
    if spec.alpha == 2 and spec.d == 2:
        raise UnsupportedParameterError(FUBINI_GATE_MESSAGE)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sampler = LimitSampler(spec, n_s, n_c)
    x, nrm, F = sampler._boundary
    M = spec.M
    d = spec.d
    xg, wg = _gauss_legendre(n_r)
    tabs = []
    for meas in (sampler.plus, sampler.minus):
        s, mass = meas.cell_masses(float(times.max()), n_s)
        nvec = meas.sign * nrm
        sec_fac = OMEGA[d] * M.det / np.linalg.norm(nvec @ M.T, axis=1)
        base = (nvec[:, i] * sec_fac)[:, None] * F[:, j, :]          # (N_c, m)
        G = np.zeros((len(times), n_s, x.shape[0], F.shape[2]))
        for l, t in enumerate(times):
            for si, sv in enumerate(s):
                if sv >= t:
                    continue
                tm = math.acos(sv / t)
                th = 0.5 * tm * (xg + 1)
                r = sv / np.cos(th)
                drdth = sv * np.sin(th) / np.cos(th) ** 2
                integral = 0.5 * tm * np.sum(wg * _phi_dt(sv, r, d) * drdth)
                G[l, si] = integral * base
        tabs.append((mass, G))
    return sampler.sample_paths(None, times, rng, size, tables=tabs)


def path_regularity(spec: LimitFieldSpec, f: SurfaceWeight, t0: float, steps: Sequence[float],
                    rng: np.random.Generator, size: int = 400, n_c: int | None = None,
                    quantile: float = 0.5):
    """Slope of ``log quantile |Y(t0 + h) - Y(t0)|`` against ``log h``.

    The time partition is aligned with the smallest step.
    """
    steps = np.sort(np.asarray(steps, dtype=float))[::-1]
    tmax = t0 + steps.max()
    n_s = int(round(tmax / steps.min())) * 2
    times = np.concatenate([[t0], t0 + steps])
    Y = sample_Y_alpha(spec, f, times, rng, size=size, n_s=n_s, n_c=n_c, method="paths")
    q = np.array([np.quantile(np.abs(Y[:, k + 1] - Y[:, 0]), quantile) for k in range(len(steps))])
    slope = float(np.polyfit(np.log(steps), np.log(q), 1)[0])
    return slope, steps, q


# --------------------------------------------------------------------------
# finite-variation boundary identity


def fv_limit_field_check(A: AmbitSet, M: AffineSphere, kernel: Kernel, p0, gamma0, f: SurfaceWeight,
                         t: float, gamma_index: str = "j", n_theta: int = 64):
    """Boundary integral of ``G`` against ``gamma0 mu+-`` and its volume form.

    Left: ``sum_+- (+-) int G(t, f, s, x, +-n) . gamma0 h_M(+-n)^+ ds dH(x)``.
    Right: ``t sum int_M f^(i) y^(k) dH int_{A+p0} d_{k+d}F^(i,j) gamma0^(j) dq``.
    """
    p0 = np.asarray(p0, dtype=float)
    g0 = np.asarray(gamma0, dtype=float)
    bq = A.boundary_quadrature()
    Fx = kernel.value(p0, bq.nodes + p0)                      # (N_c, d, m)
    xg, wg = _gauss_legendre(n_theta)
    th = 0.25 * math.pi * (xg + 1)                            # rho = sin(theta) on [0, 1]
    wth = 0.25 * math.pi * wg * np.cos(th)
    rho = np.sin(th)
    left = 0.0
    for sgn in (1.0, -1.0):
        nvec = sgn * bq.normals
        h = np.maximum(M.support(nvec), 0.0)
        # int_0^t G ds = t int_0^1 G(rho) d rho
        vec = np.zeros((len(nvec), A.d))
        for r_, w_ in zip(rho, wth):
            area, normal = cap_moments(M, nvec, np.full(len(nvec), r_), 48)
            vec += w_ * (normal @ f.B.T + area[:, None] * f.c)
        Gg = np.einsum("ci,cij,j->c", vec, Fx, g0)
        left += sgn * t * float(np.sum(bq.weights * h * Gg))
    mq = M.quadrature()
    Mf = np.einsum("j,ji,jk->ik", mq.weights, f(mq.normals), mq.nodes)      # int f^(i) y^(k)
    nodes, w = volume_rule(A)
    _, gq = kernel.profile_grad(p0, nodes + p0)
    dq = w @ gq                                                              # int d_{q_k} s
    if gamma_index == "j":
        Cg = kernel.C @ g0
    else:
        Cg = kernel.C.sum(axis=1) * g0[: A.d]
    right = t * float(np.einsum("ik,i,k->", Mf, Cg, dq))
    return left, right
