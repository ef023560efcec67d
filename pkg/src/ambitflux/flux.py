"""Test functions, surface weights and flux functionals of ambit fields.

``Z(t, f) = int_M [phi(X(p0 + r t y)) - phi(X(p0))] . f(y) dH(y)`` is
evaluated on a :class:`~ambitflux.geometry.SurfaceQuadrature` of ``M``; the
energy flux through ``rM + p0`` is ``r^(d-1) Z(1, u_M)`` because the
closed-surface integral of ``u_M`` vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import evaluate, evaluate_increments, gradient_DX
from .geometry import SurfaceQuadrature

__all__ = [
    "TestFunction",
    "identity",
    "kinetic",
    "affine",
    "SurfaceWeight",
    "LinearField",
    "z_functional",
    "z_many",
    "energy_flux",
    "fv_limit_value",
    "fv_contraction",
    "taylor_residual",
]


@dataclass(frozen=True)
class TestFunction:
    """``phi: R^d -> R^d`` with analytic Jacobian and polynomial growth order ``beta``."""

    __test__ = False  # not a pytest class

    name: str
    beta: float
    B: np.ndarray | None = None
    c: np.ndarray | None = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "identity":
            return x.copy()
        if self.name == "kinetic":
            return np.sum(x * x, axis=-1, keepdims=True) * x
        return x @ self.B.T + self.c

    def jacobian(self, x) -> np.ndarray:
        """``D phi(x)`` with trailing shape ``(d, d)``; ``[i, j] = d phi_i / d x_j``."""
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        eye = np.eye(d)
        if self.name == "identity":
            return np.broadcast_to(eye, x.shape + (d,)).copy()
        if self.name == "kinetic":
            sq = np.sum(x * x, axis=-1)[..., None, None]
            return sq * eye + 2 * x[..., :, None] * x[..., None, :]
        return np.broadcast_to(self.B, x.shape + (d,)).copy()

    @property
    def is_affine(self) -> bool:
        return self.name in ("identity", "affine")


def identity() -> TestFunction:
    return TestFunction("identity", 1.0)


def kinetic() -> TestFunction:
    """``phi(x) = |x|^2 x``, the kinetic-energy flux density."""
    return TestFunction("kinetic", 3.0)


def affine(B, c) -> TestFunction:
    return TestFunction("affine", 1.0, np.atleast_2d(np.asarray(B, dtype=float)),
                        np.atleast_1d(np.asarray(c, dtype=float)))


@dataclass(frozen=True)
class SurfaceWeight:
    """``f(y) = B u_M(y) + c`` on ``M``.

    The catalog (normal field, constants, ``e_j (x) e_i u_M``) is closed under
    the contraction :meth:`component`, which replaces ``f`` by ``f^(i) e_j``.
    """

    B: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if c.shape[0] != B.shape[0]:
            raise ValueError("B and c must agree in dimension")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)

    @classmethod
    def normal(cls, d: int) -> "SurfaceWeight":
        return cls(np.eye(d), np.zeros(d))

    @classmethod
    def constant(cls, c) -> "SurfaceWeight":
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(np.zeros((c.size, c.size)), c)

    @classmethod
    def tensor_normal(cls, d: int, i: int, j: int) -> "SurfaceWeight":
        """``e_j (x) e_i u_M``: the field ``u_M^(i) e_j``."""
        return cls.normal(d).component(i, j)

    @property
    def d(self) -> int:
        return self.c.shape[0]

    def component(self, i: int, j: int) -> "SurfaceWeight":
        """``f^(i) e_j``."""
        E = np.zeros((self.d, self.d))
        E[j, i] = 1.0
        return SurfaceWeight(E @ self.B, E @ self.c)

    def __call__(self, normals) -> np.ndarray:
        return np.asarray(normals) @ self.B.T + self.c

    def __add__(self, other: "SurfaceWeight") -> "SurfaceWeight":
        return SurfaceWeight(self.B + other.B, self.c + other.c)

    def scaled(self, a: float) -> "SurfaceWeight":
        return SurfaceWeight(a * self.B, a * self.c)

    def l2_norm_sq(self, quad: SurfaceQuadrature) -> float:
        return float(quad.integrate(np.sum(self(quad.normals) ** 2, axis=1)))


@dataclass(frozen=True)
class LinearField:
    """Deterministic field ``v(p) = B p`` (stand-in for ``X`` in divergence checks)."""

    B: np.ndarray

    @property
    def d(self) -> int:
        return np.asarray(self.B).shape[0]

    def values(self, P) -> np.ndarray:
        return np.atleast_2d(np.asarray(P, dtype=float)) @ np.asarray(self.B, dtype=float).T


def _phi_increments(inc: np.ndarray, x0: np.ndarray, phi: TestFunction) -> np.ndarray:
    if phi.name == "identity":
        return inc
    return phi(x0 + inc) - phi(x0)


def z_many(field, p0, r: float, times, phi: TestFunction, weights, quad: SurfaceQuadrature):
    """``Z(t_l, f_k)`` for all times and weights from one coupled evaluation.

    Returns ``(Z, X(p0))`` with ``Z`` of shape ``(len(times), len(weights))``.
    """
    inc, x0 = evaluate_increments(field, p0, r, times, quad, return_base=True)
    dphi = _phi_increments(inc, x0, phi)
    fv = np.stack([w(quad.normals) for w in weights], axis=0)  # (k, J, d)
    Z = np.einsum("j,tjd,kjd->tk", quad.weights, dphi, fv)
    return Z, x0


def z_functional(field, p0, r: float, t: float, phi: TestFunction, f: SurfaceWeight,
                 quad: SurfaceQuadrature) -> float:
    if t == 0 or r == 0:
        return 0.0
    Z, _ = z_many(field, p0, r, [t], phi, [f], quad)
    return float(Z[0, 0])


def energy_flux(field, p0, r: float, phi: TestFunction, quad: SurfaceQuadrature) -> float:
    """Flux of ``phi(X)`` through ``rM + p0``, as ``r^(d-1) Z(1, u_M)``."""
    d = quad.d
    return r ** (d - 1) * z_functional(field, p0, r, 1.0, phi, SurfaceWeight.normal(d), quad)


def fv_contraction(Dphi: np.ndarray, DX: np.ndarray, f: SurfaceWeight, quad: SurfaceQuadrature) -> float:
    """``sum_{i,l} Dphi^(i,l) int_M f^(i)(y) (DX y)^(l) dH(y)``."""
    fy = f(quad.normals)              # (J, d) indexed i
    dxy = quad.nodes @ DX.T           # (J, d) indexed l
    D = np.einsum("j,ji,jl->il", quad.weights, fy, dxy)
    return float(np.sum(Dphi * D))


def fv_limit_value(field, p0, phi: TestFunction, f: SurfaceWeight, quad: SurfaceQuadrature,
                   DX: np.ndarray | None = None, **dx_options) -> float:
    """Limit of ``Z(t, f) / (r t)`` for finite-variation fields (multiply by ``t``)."""
    p0 = np.asarray(p0, dtype=float)
    if DX is None:
        DX = gradient_DX(field, p0, **dx_options)
    x0 = evaluate(field, p0)
    return fv_contraction(phi.jacobian(x0), DX, f, quad)


def taylor_residual(field, p0, r: float, t: float, phi: TestFunction, f: SurfaceWeight,
                    quad: SurfaceQuadrature) -> float:
    """``|Z^phi(t, f) - sum_{i,j} Dphi(X(p0))^(i,j) Z^id(t, f^(i) e_j)|``."""
    inc, x0 = evaluate_increments(field, p0, r, [t], quad, return_base=True)
    inc = inc[0]
    fy = f(quad.normals)
    zphi = float(np.einsum("j,jd,jd->", quad.weights, _phi_increments(inc, x0, phi), fy))
    D = phi.jacobian(x0)
    # Z^id(t, f^(i) e_j) = int f^(i) inc^(j)
    zid = np.einsum("j,ji,jk->ik", quad.weights, fy, inc)
    return abs(zphi - float(np.sum(D * zid)))
