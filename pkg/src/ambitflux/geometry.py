"""Ambit sets, affine spheres and surface quadrature.

Ambit sets are balls or axis-aligned boxes; manifolds are affine spheres
``M = T S^{d-1}`` bounding the ellipsoid ``D = T(unit ball)``.  Every
geometric quantity used downstream (normals, erosions, section measures,
surface integrals) has a closed form or a short exact computation here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize

__all__ = [
    "AmbitSet",
    "AffineSphere",
    "SurfaceQuadrature",
    "GeometryError",
    "sphere_rule",
    "support_function",
    "boundary_normal",
    "erosion_membership",
    "surface_integral",
    "hyperplane_section_measure",
    "section_factor",
    "erosion_volume",
    "erosion_volume_asymptote",
    "unit_ball_volume",
]

DEFAULT_ORDER = {2: 512, 3: 64}


class GeometryError(ValueError):
    pass


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


# --------------------------------------------------------------------------
# quadrature on the unit sphere


def sphere_rule(d: int, order: int | None = None):
    """Nodes ``w`` on the unit sphere and surface weights.

    ``d = 2``: midpoint (periodic trapezoid) rule with ``order`` nodes.
    ``d = 3``: Gauss–Legendre in ``cos(theta)`` with ``order`` nodes times
    a periodic trapezoid in azimuth with ``2 * order`` nodes.
    """
    order = DEFAULT_ORDER[d] if order is None else int(order)
    if d == 2:
        th = 2 * math.pi * (np.arange(order) + 0.5) / order
        w = np.column_stack([np.cos(th), np.sin(th)])
        return w, np.full(order, 2 * math.pi / order)
    if d == 3:
        x, gw = np.polynomial.legendre.leggauss(order)
        naz = 2 * order
        ph = 2 * math.pi * (np.arange(naz) + 0.5) / naz
        st = np.sqrt(1 - x * x)
        w = np.stack([
            np.outer(st, np.cos(ph)),
            np.outer(st, np.sin(ph)),
            np.outer(x, np.ones(naz)),
        ], axis=-1).reshape(-1, 3)
        wt = np.outer(gw, np.full(naz, 2 * math.pi / naz)).ravel()
        return w, wt
    raise GeometryError("only d = 2 and d = 3 are supported")


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Quadrature rule on a closed surface: nodes, weights and outward normals."""

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    order: int

    def __post_init__(self):
        for a in (self.nodes, self.weights, self.normals):
            a.setflags(write=False)

    @property
    def d(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return self.weights.shape[0]

    def integrate(self, values) -> np.ndarray:
        """Weighted sum over the leading (node) axis of ``values``."""
        v = np.asarray(values)
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite integrand at a quadrature node")
        return np.tensordot(self.weights, v, axes=(0, 0))


# --------------------------------------------------------------------------
# manifolds and sets


@dataclass(frozen=True)
class AffineSphere:
    """``M = T S^{d-1}``, the boundary of ``T`` applied to the open unit ball."""

    T: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        if T.shape[0] != T.shape[1] or T.shape[0] not in (2, 3):
            raise GeometryError("T must be a 2x2 or 3x3 matrix")
        if abs(np.linalg.det(T)) < 1e-12:
            raise GeometryError("T must be invertible")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @classmethod
    def sphere(cls, d: int) -> "AffineSphere":
        return cls(np.eye(d))

    @property
    def d(self) -> int:
        return self.T.shape[0]

    @cached_property
    def det(self) -> float:
        return float(abs(np.linalg.det(self.T)))

    @cached_property
    def inv_T(self) -> np.ndarray:
        return np.linalg.inv(self.T)

    def support(self, n) -> np.ndarray:
        """``h_M(n) = |T' n|`` (vectorized over leading axes)."""
        return np.linalg.norm(np.asarray(n, dtype=float) @ self.T, axis=-1)

    def domain_volume(self) -> float:
        return self.det * unit_ball_volume(self.d)

    def normals_at(self, w: np.ndarray) -> np.ndarray:
        """Outward unit normal at ``T w`` for unit ``w``."""
        v = w @ self.inv_T  # rows of T^{-T} w
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def quadrature(self, order: int | None = None) -> SurfaceQuadrature:
        w, sw = sphere_rule(self.d, order)
        v = w @ self.inv_T
        jac = self.det * np.linalg.norm(v, axis=1)
        return SurfaceQuadrature(w @ self.T.T, sw * jac,
                                 v / np.linalg.norm(v, axis=1, keepdims=True),
                                 DEFAULT_ORDER[self.d] if order is None else int(order))


@dataclass(frozen=True)
class AmbitSet:
    """Ball ``(center, radius)`` or axis-aligned box ``(lo, hi)`` in ``R^d``."""

    kind: str
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if self.kind == "ball":
            if b.size != 1 or not b[0] > 0:
                raise GeometryError("ball radius must be positive")
            b = b.reshape(())
        elif self.kind == "box":
            if a.shape != b.shape or np.any(b <= a):
                raise GeometryError("box needs lo < hi componentwise")
        else:
            raise GeometryError(f"unknown ambit set kind {self.kind!r}")
        if a.shape[0] not in (2, 3):
            raise GeometryError("only d = 2 and d = 3 are supported")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def ball(cls, center, radius: float) -> "AmbitSet":
        return cls("ball", center, radius)

    @classmethod
    def box(cls, lo, hi) -> "AmbitSet":
        return cls("box", lo, hi)

    @property
    def d(self) -> int:
        return self.a.shape[0]

    @property
    def radius(self) -> float:
        return float(self.b)

    def volume(self) -> float:
        if self.kind == "ball":
            return unit_ball_volume(self.d) * self.radius ** self.d
        return float(np.prod(self.b - self.a))

    def surface_area(self) -> float:
        if self.kind == "ball":
            return self.d * unit_ball_volume(self.d) * self.radius ** (self.d - 1)
        e = self.b - self.a
        return float(2 * sum(np.prod(np.delete(e, k)) for k in range(self.d)))

    def bounding_box(self, pad: float = 0.0):
        if self.kind == "ball":
            return self.a - self.radius - pad, self.a + self.radius + pad
        return self.a - pad, self.b + pad

    def contains(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.kind == "ball":
            return np.sum((q - self.a) ** 2, axis=-1) <= self.radius ** 2
        return np.all((q >= self.a) & (q <= self.b), axis=-1)

    def boundary_quadrature(self, order: int | None = None) -> SurfaceQuadrature:
        """Nodes on ``boundary(A)``, weights and outward normals.

        Box faces use tensor Gauss–Legendre nodes, which lie strictly inside
        the faces and so avoid edges and corners.
        """
        d = self.d
        if self.kind == "ball":
            w, sw = sphere_rule(d, order)
            R = self.radius
            return SurfaceQuadrature(self.a + R * w, sw * R ** (d - 1), w.copy(),
                                     DEFAULT_ORDER[d] if order is None else int(order))
        n = (DEFAULT_ORDER[d] // 4 if d == 2 else DEFAULT_ORDER[d] // 2) if order is None else int(order)
        x, gw = np.polynomial.legendre.leggauss(n)
        pts, wts, nrm = [], [], []
        for k in range(d):
            others = [j for j in range(d) if j != k]
            half = [(self.b[j] - self.a[j]) / 2 for j in others]
            grids = [self.a[j] + h * (x + 1) for j, h in zip(others, half)]
            gws = [h * gw for h in half]
            mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d - 1)
            cell = np.prod(np.stack(np.meshgrid(*gws, indexing="ij"), axis=-1).reshape(-1, d - 1), axis=1)
            for side, val in ((-1.0, self.a[k]), (1.0, self.b[k])):
                p = np.empty((mesh.shape[0], d))
                p[:, others] = mesh
                p[:, k] = val
                nv = np.zeros((mesh.shape[0], d))
                nv[:, k] = side
                pts.append(p)
                nrm.append(nv)
                wts.append(cell)
        return SurfaceQuadrature(np.vstack(pts), np.concatenate(wts), np.vstack(nrm), n)


# --------------------------------------------------------------------------
# operations


def support_function(M: AffineSphere, n) -> float | np.ndarray:
    n = np.asarray(n, dtype=float)
    nn = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(nn - 1) > 1e-9):
        raise GeometryError("support_function expects unit vectors")
    h = M.support(n)
    return float(h) if np.ndim(h) == 0 else h


def boundary_normal(A: AmbitSet, x, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if A.kind == "ball":
        v = x - A.a
        nv = np.linalg.norm(v)
        if abs(nv - A.radius) > tol * max(1.0, A.radius):
            raise GeometryError("point is not on the sphere boundary")
        return v / nv
    at_lo = np.abs(x - A.a) <= tol
    at_hi = np.abs(x - A.b) <= tol
    inside = (x >= A.a - tol) & (x <= A.b + tol)
    hits = int(at_lo.sum() + at_hi.sum())
    if not np.all(inside) or hits == 0:
        raise GeometryError("point is not on the box boundary")
    if hits > 1:
        raise GeometryError("normal undefined on a box edge or corner")
    n = np.zeros(A.d)
    k = int(np.flatnonzero(at_lo | at_hi)[0])
    n[k] = -1.0 if at_lo[k] else 1.0
    return n


def _sphere_extreme_distance(a: np.ndarray, B: np.ndarray, which: str) -> float:
    """``min`` or ``max`` of ``|a - B w|`` over unit ``w``.

    Stationary points satisfy ``(Q - mu I) w = B'a`` with ``Q = B'B``; the
    global extremum sits on the branch of ``mu`` beyond the extreme eigenvalue,
    found from the (monotone) secular equation ``|w(nu)| = 1``.
    """
    Q = B.T @ B
    lam, V = np.linalg.eigh(Q)
    c = V.T @ (B.T @ a)
    if which == "max":
        idx, edge = -1, lam[-1]
        denom = lambda nu: lam - nu  # noqa: E731
    else:
        idx, edge = 0, -lam[0]
        denom = lambda nu: lam + nu  # noqa: E731

    def sec(nu):
        return float(np.sum(c ** 2 / denom(nu) ** 2)) - 1.0

    scale = max(1.0, float(np.abs(lam).max()))
    degenerate = np.abs(lam - lam[idx]) <= 1e-12 * scale
    cand = [V[:, k] * sgn for k in range(len(lam)) for sgn in (1.0, -1.0)]
    hi = edge + float(np.linalg.norm(c)) + 1.0
    # components far below the scale would underflow in the secular equation
    tiny = 1e-13 * max(scale, float(np.linalg.norm(c)))
    if np.any(np.abs(c[degenerate]) > tiny):
        # sec(lo) >= 3 because one term equals 4
        lo = edge + 0.5 * float(np.abs(c[degenerate]).max())
        nu = optimize.brentq(sec, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
        cand.append(V @ (c / denom(nu)))
    else:
        w = np.zeros_like(c)
        c = np.where(degenerate, 0.0, c)
        w[~degenerate] = c[~degenerate] / denom(edge)[~degenerate]
        rest = 1.0 - float(w @ w)
        if rest >= 0:
            k = int(np.flatnonzero(degenerate)[0])
            for sgn in (1.0, -1.0):
                w_ = w.copy()
                w_[k] = sgn * math.sqrt(rest)
                cand.append(V @ w_)
        else:
            nu = optimize.brentq(sec, edge + 1e-13 * scale, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
            cand.append(V @ (c / denom(nu)))
    vals = [float(np.linalg.norm(a - B @ (w / np.linalg.norm(w)))) for w in cand]
    return max(vals) if which == "max" else min(vals)


def erosion_membership(A: AmbitSet, M: AffineSphere, r: float, q):
    """Membership of ``q`` in ``A (-) rM`` and ``A (+) rM``.

    ``A (-) rM = {x : x - rM subset A}``, ``A (+) rM = {a + r y : a in A, y in M}``.
    """
    if r < 0:
        raise GeometryError("r must be nonnegative")
    q = np.asarray(q, dtype=float)
    if r == 0:
        inside = bool(A.contains(q))
        return inside, inside
    B = r * M.T
    if A.kind == "ball":
        a = q - A.a
        R = A.radius
        ero = _sphere_extreme_distance(a, B, "max") <= R * (1 + 1e-14)
        dil = _sphere_extreme_distance(a, B, "min") <= R * (1 + 1e-14)
        return bool(ero), bool(dil)
    hp = M.support(np.eye(A.d))  # h_M(e_k) = h_M(-e_k) for ellipsoids
    ero = bool(np.all(q - r * hp >= A.a) and np.all(q + r * hp <= A.b))
    # q - rM meets the box iff min and max of the gauge |T^{-1}(q - p)|/r over the
    # box bracket 1 (the box is connected)
    Ti = M.inv_T / r
    corners = np.array(np.meshgrid(*zip(A.a, A.b), indexing="ij")).reshape(A.d, -1).T
    gmax = np.linalg.norm((q - corners) @ Ti.T, axis=1).max()
    res = optimize.lsq_linear(Ti, Ti @ q, bounds=(A.a, A.b), method="bvls", tol=1e-14)
    gmin = np.linalg.norm(Ti @ (q - res.x))
    dil = bool(gmin <= 1 + 1e-12 and gmax >= 1 - 1e-12)
    return ero, dil


def surface_integral(surface, integrand: Callable, order: int | None = None,
                     rtol: float = 1e-8, max_doublings: int = 6):
    """Integrate ``integrand(nodes, normals)`` over ``M`` or ``boundary(A)``.

    With ``order=None`` the default rule is doubled until two successive
    values agree to ``rtol``; an explicit ``order`` is used as given.
    """
    def rule(n):
        return surface.quadrature(n) if isinstance(surface, AffineSphere) else surface.boundary_quadrature(n)

    def value(qr):
        vals = np.asarray(integrand(qr.nodes, qr.normals), dtype=float)
        return qr.integrate(vals)

    if order is not None:
        return value(rule(order))
    n = DEFAULT_ORDER[surface.d]
    if isinstance(surface, AmbitSet) and surface.kind == "box":
        n = DEFAULT_ORDER[surface.d] // (4 if surface.d == 2 else 2)
    prev = value(rule(n))
    for _ in range(max_doublings):
        n *= 2
        cur = value(rule(n))
        scale = max(np.max(np.abs(cur)), 1e-300)
        if np.max(np.abs(cur - prev)) <= rtol * scale or np.max(np.abs(cur - prev)) < 1e-14:
            return cur
        prev = cur
    return prev


def section_factor(M: AffineSphere, n) -> float:
    """``H^{d-1}(T(D_1 cap v^perp))`` with ``v = T'n/|T'n|``, from the image of a basis of ``v^perp``."""
    n = np.asarray(n, dtype=float)
    v = M.T.T @ n
    v = v / np.linalg.norm(v)
    # orthonormal basis of v^perp
    _, _, Vt = np.linalg.svd(v[None, :])
    basis = Vt[1:]
    img = basis @ M.T.T
    if M.d == 2:
        return 2.0 * float(np.linalg.norm(img[0]))
    return math.pi * float(np.linalg.norm(np.cross(img[0], img[1])))


def hyperplane_section_measure(M: AffineSphere, n, rho: float) -> float:
    """``H^{d-1}`` of the section of ``D`` by the hyperplane ``{p : p.n = h_M(n) rho}``."""
    if abs(rho) > 1 + 1e-15:
        raise GeometryError("rho must lie in [-1, 1]")
    phi = max(0.0, 1.0 - rho * rho) ** ((M.d - 1) / 2)
    return phi * section_factor(M, n)


def erosion_volume(A: AmbitSet, M: AffineSphere, r: float, order: int = 256) -> float:
    """``Leb(A minus A (-) rM)``.

    Closed form for boxes and for balls with ``T`` orthogonal; otherwise the
    eroded ball (a convex set containing the center) is integrated in polar
    coordinates with radial roots of the max-distance function.
    """
    d = A.d
    if A.kind == "box":
        hp = M.support(np.eye(d))
        inner = (A.b - A.a) - 2 * r * hp
        if np.any(inner < 0):
            raise GeometryError("erosion is empty")
        return A.volume() - float(np.prod(inner))
    R = A.radius
    sv = np.linalg.svd(M.T, compute_uv=False)
    if np.allclose(sv, sv[0], rtol=1e-14):
        Rin = R - r * sv[0]
        if Rin < 0:
            raise GeometryError("erosion is empty")
        return unit_ball_volume(d) * (R ** d - Rin ** d)
    if r * sv[0] >= R:
        raise GeometryError("erosion is empty")
    B = r * M.T
    w, sw = sphere_rule(d, order if d == 2 else max(16, order // 8))

    def radial(u):
        f = lambda s: _sphere_extreme_distance(s * u, B, "max") - R  # noqa: E731
        return optimize.brentq(f, 0.0, R, xtol=1e-15, rtol=1e-15)

    rad = np.array([radial(u) for u in w])
    inner = float(np.sum(sw * rad ** d) / d)
    return A.volume() - inner


def erosion_volume_asymptote(A: AmbitSet, M: AffineSphere, r: float):
    """``(volume, volume / r, predicted slope)`` with the slope ``int h_M(-n_A)^+ dH``."""
    if not r > 0:
        raise GeometryError("r must be positive")
    vol = erosion_volume(A, M, r)
    pred = surface_integral(A, lambda x, n: np.maximum(M.support(-n), 0.0))
    return vol, vol / r, float(pred)
