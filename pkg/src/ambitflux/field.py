"""Ambit fields ``X(p) = int_{A+p} F(p, q) L(dq)`` and frozen realizations.

A :class:`FieldRealization` freezes one draw of the Lévy basis on a region
covering ``A + p`` for every planned evaluation point ``p`` within
``max_offset`` of ``p0``.  Evaluations at different points reuse that draw,
so increments ``X(p) - X(p0)`` only see the basis on the symmetric
differences of the shifted ambit sets.

Components of the basis are handled as follows.

* drift: deterministic quadrature of ``F gamma0`` over ``A + p``;
* Poisson jumps (finite-variation bases): exact locations and marks;
* Gaussian part: exact joint law of the evaluations.  For a constant kernel
  the covariance is ``C Sigma C' Leb((A+p_i) cap (A+p_j))``, factorized once
  per set of relative offsets; for other kernels it is white noise on a
  scrambled Sobol node set;
* strictly stable part (``alpha < 2``): for a constant kernel the ambit set
  splits into a core common to all evaluation points, contributing one exact
  stable variate, and a thin shell in which jumps above ``eps`` are kept
  exactly and smaller jumps are replaced by their Gaussian approximation.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.stats import qmc

from .geometry import AmbitSet, SurfaceQuadrature, sphere_rule, unit_ball_volume
from .levy import (LevyTriplet, StableSpec, UnsupportedParameterError, sample_poisson_jumps,
                   sample_stable, stable_constant)
from .rng import array_key, stream

__all__ = [
    "Kernel",
    "constant_kernel",
    "gaussian_bump",
    "boundary_vanishing",
    "modulated_kernel",
    "FieldModel",
    "FieldRealization",
    "EvaluationError",
    "build_realization",
    "evaluate",
    "evaluate_many",
    "evaluate_increments",
    "gradient_DX",
    "volume_rule",
    "overlap_deficit",
]

Basis = Union[LevyTriplet, StableSpec]


class EvaluationError(ValueError):
    pass


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class Kernel:
    """``F(p, q) = s(p, q) C`` with a scalar profile ``s`` from a small catalog.

    ``kind`` is one of ``"constant"``, ``"gaussian_bump"`` (``exp(-kappa |q-p|^2)``),
    ``"boundary_vanishing"`` (``1 - |p-q|^2``) and ``"modulated"``
    (``exp(-kappa |q-p|^2 + omega.q)``).
    """

    kind: str
    C: np.ndarray
    kappa: float = 1.0
    omega: np.ndarray | None = None

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        if self.kind not in ("constant", "gaussian_bump", "boundary_vanishing", "modulated"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "modulated":
            om = np.zeros(C.shape[0]) if self.omega is None else np.asarray(self.omega, dtype=float)
            om.setflags(write=False)
            object.__setattr__(self, "omega", om)

    @property
    def d(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def translation_invariant(self) -> bool:
        return self.kind != "modulated" or not np.any(self.omega)

    def profile(self, p, q) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = q - p
        if self.kind == "constant":
            return np.ones(v.shape[:-1])
        r2 = np.sum(v * v, axis=-1)
        if self.kind == "gaussian_bump":
            return np.exp(-self.kappa * r2)
        if self.kind == "boundary_vanishing":
            return 1.0 - r2
        return np.exp(-self.kappa * r2 + q @ self.omega)

    def profile_grad(self, p, q):
        """``(d s / dp, d s / dq)``, each with a trailing axis of length ``d``."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = q - p
        if self.kind == "constant":
            z = np.zeros(np.broadcast_shapes(p.shape, q.shape))
            return z, z.copy()
        if self.kind == "boundary_vanishing":
            return 2 * v, -2 * v
        s = self.profile(p, q)[..., None]
        gp = 2 * self.kappa * v * s
        if self.kind == "gaussian_bump":
            return gp, -gp
        return gp, -gp + self.omega * s

    def value(self, p, q) -> np.ndarray:
        """``F(p, q)`` with trailing shape ``(d, m)``."""
        return self.profile(p, q)[..., None, None] * self.C

    def grad_p(self, p, q) -> np.ndarray:
        """``d_k F^(i,j)`` indexed ``[..., i, j, k]``."""
        gp, _ = self.profile_grad(p, q)
        return self.C[..., None] * gp[..., None, None, :]

    def grad_q(self, p, q) -> np.ndarray:
        """``d_{k+d} F^(i,j)`` indexed ``[..., i, j, k]``."""
        _, gq = self.profile_grad(p, q)
        return self.C[..., None] * gq[..., None, None, :]


def constant_kernel(C) -> Kernel:
    return Kernel("constant", C)


def gaussian_bump(C, kappa: float = 1.0) -> Kernel:
    return Kernel("gaussian_bump", C, kappa)


def boundary_vanishing(C) -> Kernel:
    return Kernel("boundary_vanishing", C)


def modulated_kernel(C, omega, kappa: float = 0.0) -> Kernel:
    return Kernel("modulated", C, kappa, omega)


# --------------------------------------------------------------------------
# volume quadrature and overlap geometry


def volume_rule(A: AmbitSet, n_radial: int = 48, n_angular: int | None = None):
    """Nodes and weights for ``int_A g(q) dq`` (polar Gauss rule for balls, tensor Gauss for boxes)."""
    d = A.d
    x, w = np.polynomial.legendre.leggauss(n_radial)
    if A.kind == "ball":
        R = A.radius
        rad = 0.5 * R * (x + 1)
        rw = 0.5 * R * w * rad ** (d - 1)
        dirs, dw = sphere_rule(d, n_angular if n_angular is not None else (256 if d == 2 else 24))
        nodes = A.a + (rad[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        wts = np.outer(rw, dw).ravel()
        return nodes, wts
    grids = [0.5 * (A.b[k] - A.a[k]) * (x + 1) + A.a[k] for k in range(d)]
    gw = [0.5 * (A.b[k] - A.a[k]) * w for k in range(d)]
    nodes = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.prod(np.stack(np.meshgrid(*gw, indexing="ij"), axis=-1).reshape(-1, d), axis=1)
    return nodes, wts


def overlap_deficit(A: AmbitSet, v) -> np.ndarray:
    """``Leb(A minus (A + v))``, computed without cancellation for small ``v``."""
    v = np.asarray(v, dtype=float)
    if A.kind == "ball":
        R = A.radius
        h = np.minimum(np.linalg.norm(v, axis=-1), 2 * R)
        if A.d == 2:
            return 2 * R * R * np.arcsin(h / (2 * R)) + 0.5 * h * np.sqrt(np.maximum(4 * R * R - h * h, 0.0))
        return math.pi * R * R * h - math.pi * h ** 3 / 12
    wdt = A.b - A.a
    a = np.minimum(np.abs(v), wdt)
    # prod(w) - prod(w - a) expanded as a telescoping sum
    out = np.zeros(v.shape[:-1])
    for k in range(A.d):
        left = np.prod(wdt[:k]) if k else 1.0
        right = np.prod(wdt[k + 1:] - a[..., k + 1:], axis=-1) if k + 1 < A.d else 1.0
        out = out + left * a[..., k] * right
    return out


def _eroded_volume(A: AmbitSet, rho: float) -> float:
    if A.kind == "ball":
        return unit_ball_volume(A.d) * max(A.radius - rho, 0.0) ** A.d
    return float(np.prod(np.maximum(A.b - A.a - 2 * rho, 0.0)))


def _in_core(A: AmbitSet, p0, rho: float, q) -> np.ndarray:
    q = np.asarray(q) - p0
    if A.kind == "ball":
        Rin = A.radius - rho
        return np.sum((q - A.a) ** 2, axis=-1) <= Rin * Rin if Rin > 0 else np.zeros(q.shape[:-1], bool)
    return np.all((q >= A.a + rho) & (q <= A.b - rho), axis=-1)


def _in_dilation(A: AmbitSet, p0, rho: float, q) -> np.ndarray:
    q = np.asarray(q) - p0
    if A.kind == "ball":
        return np.sum((q - A.a) ** 2, axis=-1) <= (A.radius + rho) ** 2
    c = np.clip(q, A.a, A.b)
    return np.sum((q - c) ** 2, axis=-1) <= rho * rho


# factorizations keyed by relative offsets; they do not depend on the draw
_FACTOR_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_FACTOR_CACHE_SIZE = 16


def _offset_factor(A: AmbitSet, offsets: np.ndarray, base_var: float) -> np.ndarray:
    """Cholesky factor of the scalar covariance of ``[W(0), W(v_j) - W(0)]``.

    ``W(v) = white-noise mass of A + v``; ``Var W(0) = base_var``.
    """
    key = (A.kind, A.a.tobytes(), np.asarray(A.b).tobytes(), float(base_var), array_key(offsets))
    hit = _FACTOR_CACHE.get(key)
    if hit is not None:
        _FACTOR_CACHE.move_to_end(key)
        return hit
    n = offsets.shape[0]
    e0 = overlap_deficit(A, offsets)
    eij = overlap_deficit(A, offsets[:, None, :] - offsets[None, :, :])
    S = np.empty((n + 1, n + 1))
    S[0, 0] = base_var
    S[0, 1:] = S[1:, 0] = -e0
    S[1:, 1:] = e0[:, None] + e0[None, :] - eij
    L = _cholesky_jitter(S)
    _FACTOR_CACHE[key] = L
    if len(_FACTOR_CACHE) > _FACTOR_CACHE_SIZE:
        _FACTOR_CACHE.popitem(last=False)
    return L


def _cholesky_jitter(S: np.ndarray) -> np.ndarray:
    # exact zero rows (coincident points) are handled by the jitter as well
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    jit = 1e-12 * max(float(np.mean(np.diag(S))), 1e-300)
    try:
        return np.linalg.cholesky(S + jit * np.eye(S.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise EvaluationError("covariance factorization failed after jitter 1e-12") from exc


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    return vecs * np.sqrt(np.clip(vals, 0, None))


# --------------------------------------------------------------------------
# models and realizations


@dataclass(frozen=True)
class FieldModel:
    """Ambit set, kernel and basis law (a triplet or a strictly stable spec)."""

    A: AmbitSet
    kernel: Kernel
    basis: Basis

    def __post_init__(self):
        if self.kernel.d != self.A.d:
            raise ValueError("kernel rows must match the dimension of A")
        if self.kernel.m != self.basis.m:
            raise ValueError("kernel columns must match the basis dimension")
        if isinstance(self.basis, LevyTriplet):
            if not self.basis.nu.is_zero and not self.basis.nu.finite_variation:
                raise UnsupportedParameterError(
                    "infinite-variation jumps need a StableSpec basis")

    @property
    def d(self) -> int:
        return self.A.d

    @property
    def m(self) -> int:
        return self.kernel.m

    @property
    def is_stable(self) -> bool:
        return isinstance(self.basis, StableSpec) and self.basis.alpha < 2

    @property
    def gaussian_cov(self) -> np.ndarray | None:
        b = self.basis
        if isinstance(b, StableSpec):
            return b.sigma if b.alpha == 2 else None
        return b.sigma if b.has_gaussian else None

    @property
    def finite_variation(self) -> bool:
        return isinstance(self.basis, LevyTriplet) and self.basis.finite_variation

    def drift(self, mode: str = "gamma0") -> np.ndarray:
        b = self.basis
        if isinstance(b, StableSpec):
            return np.zeros(self.m)
        if mode == "gamma":
            return b.gamma
        return b.gamma0 if not b.nu.is_zero else b.gamma

    @cached_property
    def _vrule(self):
        return volume_rule(self.A)

    def drift_integral(self, p, mode: str = "gamma0") -> np.ndarray:
        """``int_{A+p} F(p, q) gamma dq`` for each row of ``p``."""
        p = np.atleast_2d(p)
        g = self.drift(mode)
        if not np.any(g):
            return np.zeros((p.shape[0], self.d))
        if self.kernel.is_constant:
            return np.tile(self.A.volume() * (self.kernel.C @ g), (p.shape[0], 1))
        # every catalog profile is a(p) b(q - p) with a(p) = exp(omega.p) or 1
        nodes, w = self._vrule
        base = float(w @ self.kernel.profile(np.zeros(self.d), nodes))
        scale = np.exp(p @ self.kernel.omega) if self.kernel.kind == "modulated" else np.ones(p.shape[0])
        return (base * scale)[:, None] * (self.kernel.C @ g)[None, :]


@dataclass(frozen=True)
class FieldRealization:
    """One frozen draw of the basis, valid for evaluation points within ``max_offset`` of ``p0``."""

    model: FieldModel
    p0: np.ndarray
    max_offset: float
    seed: int
    jumps_q: np.ndarray
    jumps_x: np.ndarray
    eps: float
    core_value: np.ndarray | None = None
    core_volume: float = 0.0
    small_jump_cov: np.ndarray | None = None
    small_jump_mean: np.ndarray = field(default=None)
    qmc_nodes: int = 2 ** 18

    @property
    def d(self) -> int:
        return self.model.d

    def _check(self, P: np.ndarray):
        off = np.linalg.norm(P - self.p0, axis=1)
        bad = np.flatnonzero(off > self.max_offset * (1 + 1e-12) + 1e-15)
        if bad.size:
            raise EvaluationError(
                f"evaluation offset {off[bad[0]]:.6g} at p={P[bad[0]].tolist()} exceeds the "
                f"bounding offset {self.max_offset:.6g}")

    # ------------------------------------------------------------------ parts

    def jump_part(self, P: np.ndarray) -> np.ndarray:
        if self.jumps_q.shape[0] == 0:
            return np.zeros((P.shape[0], self.d))
        A, K = self.model.A, self.model.kernel
        if A.kind == "ball":
            # |q - p - c|^2 <= R^2 through one matrix product
            qc = self.jumps_q - A.a
            d2 = np.sum(qc * qc, axis=1)[None, :] - 2.0 * P @ qc.T + np.sum(P * P, axis=1)[:, None]
            inside = d2 <= A.radius ** 2
        else:
            inside = A.contains(self.jumps_q[None, :, :] - P[:, None, :])
        if K.is_constant:
            w = inside.astype(float)
        else:
            w = inside * K.profile(P[:, None, :], self.jumps_q[None, :, :])
        return (w @ self.jumps_x) @ K.C.T

    def _gaussian_constant(self, P: np.ndarray, cov: np.ndarray, subtract: float, tag: int) -> np.ndarray:
        A, C = self.model.A, self.model.kernel.C
        offsets = P[1:] - P[0]
        L = _offset_factor(A, offsets, A.volume() - subtract)
        rng = stream(self.seed, tag, array_key(P - self.p0))
        Z = rng.standard_normal((P.shape[0], cov.shape[0]))
        W = L @ Z @ _psd_sqrt(cov).T
        W[1:] += W[0]
        return W @ C.T

    @cached_property
    def _node_set(self):
        lo, hi = self.model.A.bounding_box(self.max_offset)
        lo, hi = lo + self.p0, hi + self.p0
        sob = qmc.Sobol(self.d, scramble=True, seed=np.random.default_rng(stream(self.seed, 5).integers(2**63)))
        q = qmc.scale(sob.random(self.qmc_nodes), lo, hi)
        keep = _in_dilation(self.model.A, self.p0, self.max_offset, q)
        vol = float(np.prod(hi - lo)) / self.qmc_nodes
        return q[keep], vol

    def _gaussian_nodes(self, P: np.ndarray, cov: np.ndarray, tag: int) -> np.ndarray:
        q, vol = self._node_set
        noise = stream(self.seed, tag).standard_normal((q.shape[0], cov.shape[0])) @ _psd_sqrt(cov).T
        noise *= math.sqrt(vol)
        A, K = self.model.A, self.model.kernel
        out = np.empty((P.shape[0], self.d))
        for i, p in enumerate(P):
            inside = A.contains(q - p)
            s = K.profile(p, q[inside])
            out[i] = K.C @ (s @ noise[inside])
        return out

    # ---------------------------------------------------------------- public

    def values(self, P) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        self._check(P)
        model = self.model
        out = model.drift_integral(P)
        out = out + self.jump_part(P)
        cov = model.gaussian_cov
        if cov is not None:
            if model.kernel.is_constant:
                out += self._gaussian_constant(P, cov, 0.0, 3)
            else:
                out += self._gaussian_nodes(P, cov, 3)
        if model.is_stable:
            if self.core_value is not None:
                C = model.kernel.C
                out += C @ (self.core_value - (model.A.volume() - self.core_volume) * self.small_jump_mean)
                out += self._gaussian_constant(P, self.small_jump_cov, self.core_volume, 4)
            else:
                out -= self._stable_mean_correction(P)
                out += self._gaussian_nodes(P, self.small_jump_cov, 4)
        return out

    def _stable_mean_correction(self, P: np.ndarray) -> np.ndarray:
        # kept jumps above eps have mean int F(p,q) m_eps dq over A+p; remove it
        model = self.model
        nodes, w = model._vrule
        out = np.empty((P.shape[0], self.d))
        for i, p in enumerate(P):
            out[i] = (w @ model.kernel.profile(p, nodes + p)) * (model.kernel.C @ self.small_jump_mean)
        return out


# --------------------------------------------------------------------------
# construction


def _stable_truncation(spec: StableSpec, v_min: float, per_cell: float = 50.0) -> float:
    """``eps`` such that a volume ``v_min`` holds about ``per_cell`` jumps above ``eps``."""
    rate_coef = float(np.sum(spec.levy_density_weights())) / spec.alpha  # rate = coef * eps^-alpha
    return (per_cell / (v_min * rate_coef)) ** (-1.0 / spec.alpha)


def build_realization(model: FieldModel, p0, max_offset: float, seed: int,
                      min_offset: float | None = None, eps: float | None = None,
                      max_jumps: int = 200_000) -> FieldRealization:
    """Freeze one draw of the basis around ``p0``.

    ``max_offset`` bounds ``|p - p0|`` over planned evaluations; ``min_offset``
    (default ``max_offset``) sets the stable truncation level so that the
    smallest resolved shell cell holds about 50 jumps.
    """
    if max_offset < 0:
        raise ValueError("max_offset must be nonnegative")
    p0 = np.asarray(p0, dtype=float)
    A = model.A
    d, m = model.d, model.m
    rho = float(max_offset)
    basis = model.basis
    empty_q, empty_x = np.zeros((0, d)), np.zeros((0, m))

    if isinstance(basis, LevyTriplet):
        lo, hi = A.bounding_box(rho)
        if basis.nu.is_zero:
            return FieldRealization(model, p0, rho, seed, empty_q, empty_x, 0.0)
        vol = float(np.prod(hi - lo))
        if eps is None:
            from .levy import default_truncation
            eps = default_truncation(basis.nu, vol)
        jc = sample_poisson_jumps((lo + p0, hi + p0), basis.nu, eps, stream(seed, 1))
        keep = _in_dilation(A, p0, rho, jc.locations)
        return FieldRealization(model, p0, rho, seed, jc.locations[keep], jc.marks[keep], eps)

    if basis.alpha == 2:
        return FieldRealization(model, p0, rho, seed, empty_q, empty_x, 0.0)

    # strictly stable, alpha < 2
    a = basis.alpha
    cdens = basis.levy_density_weights()
    per_vol_rate = lambda e: float(np.sum(cdens)) * e ** (-a) / a  # noqa: E731
    constant = model.kernel.is_constant and rho < _inradius(A)
    if constant:
        core_vol = _eroded_volume(A, rho)
        shell_vol = _dilated_volume(A, rho) - core_vol
    else:
        core_vol = 0.0
        shell_vol = _dilated_volume(A, rho)
    if eps is None:
        r_min = rho if min_offset is None else min(float(min_offset), rho)
        v_min = max(r_min, 1e-12) * A.surface_area() / 4
        eps = _stable_truncation(basis, v_min)
    eps = max(eps, (max_jumps / max(shell_vol, 1e-300) / (float(np.sum(cdens)) / a)) ** (-1.0 / a))
    # jumps above eps on the shell (or the whole dilation), uniform locations
    rng = stream(seed, 1)
    if constant and A.kind == "ball":
        q = _uniform_annulus(A, p0, rho, rng.poisson(per_vol_rate(eps) * shell_vol), rng)
    else:
        lo, hi = A.bounding_box(rho)
        lo, hi = lo + p0, hi + p0
        n = rng.poisson(per_vol_rate(eps) * float(np.prod(hi - lo)))
        q = lo + (hi - lo) * rng.random((n, d))
        keep = _in_dilation(A, p0, rho, q)
        if constant:
            keep &= ~_in_core(A, p0, rho, q)
        q = q[keep]
    # marks: direction atom with prob. proportional to weight, radius Pareto above eps
    atom = rng.choice(len(cdens), size=q.shape[0], p=cdens / cdens.sum())
    s = eps * rng.random(q.shape[0]) ** (-1.0 / a)
    x = s[:, None] * basis.directions[atom]
    mean_eps = (cdens @ basis.directions) * eps ** (1 - a) / (a - 1)
    small_cov = (cdens[:, None, None] * np.einsum("ki,kj->kij", basis.directions, basis.directions)).sum(0)
    small_cov = small_cov * eps ** (2 - a) / (2 - a)
    core_value = None
    if constant:
        core_value = sample_stable(basis, core_vol, stream(seed, 2)) if core_vol > 0 else np.zeros(m)
        # the core variate is the full strictly stable law, so the shell carries the
        # small-jump compensation through mean_eps
    return FieldRealization(model, p0, rho, seed, q, x, eps, core_value, core_vol,
                            small_cov, mean_eps)


def _uniform_annulus(A: AmbitSet, p0, rho: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points of ``{R - rho <= |q - c - p0| <= R + rho}`` for a ball ``A``."""
    d = A.d
    lo, hi = (A.radius - rho) ** d, (A.radius + rho) ** d
    rad = (lo + (hi - lo) * rng.random(n)) ** (1.0 / d)
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return A.a + p0 + rad[:, None] * u


def _inradius(A: AmbitSet) -> float:
    return A.radius if A.kind == "ball" else float(np.min(A.b - A.a)) / 2


def _dilated_volume(A: AmbitSet, rho: float) -> float:
    """``Leb(A (+) B_rho)`` via the Steiner formula (exact for balls and boxes)."""
    d = A.d
    if A.kind == "ball":
        return unit_ball_volume(d) * (A.radius + rho) ** d
    w = A.b - A.a
    if d == 2:
        return float(np.prod(w) + 2 * rho * np.sum(w) + math.pi * rho ** 2)
    return float(np.prod(w) + 2 * rho * (w[0] * w[1] + w[1] * w[2] + w[0] * w[2])
                 + math.pi * rho ** 2 * np.sum(w) + 4 / 3 * math.pi * rho ** 3)


# --------------------------------------------------------------------------
# evaluation


def evaluate_many(field: FieldRealization, P) -> np.ndarray:
    """``X(p)`` for each row of ``P`` (Gaussian parts drawn jointly)."""
    return field.values(P)


def evaluate(field: FieldRealization, p) -> np.ndarray:
    return field.values(np.atleast_2d(p))[0]


def evaluate_increments(field: FieldRealization, p0, r: float, times, quad: SurfaceQuadrature,
                        return_base: bool = False):
    """``X(p0 + r t_l y_j) - X(p0)`` with shape ``(len(times), len(quad), d)``."""
    p0 = np.asarray(p0, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    offsets = r * times[:, None, None] * quad.nodes[None, :, :]
    P = np.vstack([p0[None, :], (p0 + offsets).reshape(-1, field.d)])
    X = field.values(P)
    inc = (X[1:] - X[0]).reshape(times.shape[0], len(quad), field.d)
    zero = (r * times == 0)
    inc[zero] = 0.0
    return (inc, X[0]) if return_base else inc


def gradient_DX(field: FieldRealization, p0=None, drift: str = "gamma0",
                gamma_index: str = "j", boundary_sign: float = 1.0) -> np.ndarray:
    """``DX(p0)`` for finite-variation (or drift-only) realizations.

    ``DX^(i,k) = sum_j int_{A+p0} (d_{k+d} + d_k) F^(i,j) g^(j) dq
    + sum_l d_k F(p0, q_l) x_l 1_A(q_l - p0)``.
    ``gamma_index="i"`` uses the drift component of the row index instead,
    ``boundary_sign`` flips the ``d_{k+d}`` term (fault injection), and
    ``drift="gamma"`` uses the compensated drift.
    """
    model = field.model
    if not (model.finite_variation or (isinstance(model.basis, LevyTriplet) and model.basis.nu.is_zero
                                       and not model.basis.has_gaussian)):
        raise UnsupportedParameterError("DX needs a finite-variation basis without Gaussian part")
    p0 = field.p0 if p0 is None else np.asarray(p0, dtype=float)
    K = model.kernel
    g = model.drift(drift)
    out = np.zeros((model.d, model.d))
    if np.any(g) and not K.is_constant:
        nodes, w = model._vrule
        q = nodes + p0
        gp, gq = K.profile_grad(p0, q)
        tot_p, tot_q = w @ gp, boundary_sign * (w @ gq)
        out += np.outer(K.C @ g, tot_p)
        if gamma_index == "j":
            out += np.outer(K.C @ g, tot_q)
        else:
            out += np.outer(K.C.sum(axis=1) * g[: model.d], tot_q)
    if field.jumps_q.shape[0] and not K.is_constant:
        inside = model.A.contains(field.jumps_q - p0)
        if np.any(inside):
            gp, _ = K.profile_grad(p0, field.jumps_q[inside])
            out += (K.C @ field.jumps_x[inside].T) @ gp
    return out
