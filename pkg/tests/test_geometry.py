import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special

from ambitflux.geometry import (
    AffineSphere, AmbitSet, GeometryError, boundary_normal, erosion_membership, erosion_volume,
    erosion_volume_asymptote, hyperplane_section_measure, section_factor, support_function,
    surface_integral,
)

ELLIPSE = AffineSphere(np.diag([2.0, 1.0]))
DISK = AmbitSet.ball(np.zeros(2), 1.0)


def unit_vectors(d):
    return st.lists(st.floats(-1, 1), min_size=d, max_size=d).filter(
        lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))


def matrices(d):
    return st.lists(st.floats(-2, 2), min_size=d * d, max_size=d * d).map(
        lambda v: np.array(v).reshape(d, d)).filter(lambda T: abs(np.linalg.det(T)) > 0.2)


# ------------------------------------------------------------- support


def test_support_examples():
    assert support_function(AffineSphere.sphere(2), np.array([0.6, 0.8])) == pytest.approx(1.0)
    assert support_function(ELLIPSE, np.array([1.0, 0.0])) == pytest.approx(2.0)
    assert support_function(ELLIPSE, np.array([1.0, 1.0]) / math.sqrt(2)) == pytest.approx(math.sqrt(2.5))


def test_support_rejects_non_unit():
    with pytest.raises(GeometryError):
        support_function(ELLIPSE, np.array([1.0, 1.0]))


@settings(max_examples=40, deadline=None)
@given(matrices(2), unit_vectors(2))
def test_support_is_max_of_projection(T, n):
    M = AffineSphere(T)
    th = np.linspace(0, 2 * math.pi, 20001)
    pts = np.column_stack([np.cos(th), np.sin(th)]) @ T.T
    assert support_function(M, n) == pytest.approx(np.max(pts @ n), rel=1e-6)


# -------------------------------------------------------------- normals


def test_boundary_normals():
    assert np.allclose(boundary_normal(DISK, [1.0, 0.0]), [1.0, 0.0])
    assert np.allclose(boundary_normal(AmbitSet.box([0, 0], [1, 1]), [0.5, 0.0]), [0.0, -1.0])
    assert np.allclose(boundary_normal(AmbitSet.ball([1.0, 0.0], 2.0), [3.0, 0.0]), [1.0, 0.0])


def test_boundary_normal_errors():
    with pytest.raises(GeometryError):
        boundary_normal(AmbitSet.box([0, 0], [1, 1]), [0.0, 0.0])
    with pytest.raises(GeometryError):
        boundary_normal(DISK, [0.5, 0.0])


def test_affine_sphere_normals_orthogonal_to_tangent():
    th = np.linspace(0, 2 * math.pi, 50, endpoint=False)
    w = np.column_stack([np.cos(th), np.sin(th)])
    tangent = np.column_stack([-np.sin(th), np.cos(th)]) @ ELLIPSE.T.T
    n = ELLIPSE.normals_at(w)
    assert np.allclose(np.sum(n * tangent, axis=1), 0, atol=1e-12)
    assert np.all(np.sum(n * (w @ ELLIPSE.T.T), axis=1) > 0)


# ----------------------------------------------------------- membership


def test_erosion_membership_examples():
    M = AffineSphere.sphere(2)
    assert erosion_membership(DISK, M, 0.3, [0.6, 0.0]) == (True, True)
    assert erosion_membership(DISK, M, 0.3, [0.8, 0.0]) == (False, True)
    assert erosion_membership(DISK, M, 0.3, [1.4, 0.0]) == (False, False)
    for q in ([0.2, 0.1], [1.2, 0.0]):
        inside = bool(DISK.contains(np.array(q)))
        assert erosion_membership(DISK, M, 0.0, q) == (inside, inside)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.6, 1.6), st.floats(-1.6, 1.6), st.floats(0.05, 0.4))
def test_membership_matches_brute_force(x, y, r):
    q = np.array([x, y])
    th = np.linspace(0, 2 * math.pi, 4001)
    ring = r * np.column_stack([np.cos(th), np.sin(th)]) @ ELLIPSE.T.T
    dist = np.linalg.norm(q - ring, axis=1)
    ero, dil = erosion_membership(DISK, ELLIPSE, r, q)
    # skip points within the brute-force resolution of either boundary
    if abs(dist.max() - 1) > 1e-3:
        assert ero == (dist.max() <= 1)
    if abs(dist.min() - 1) > 1e-3:
        assert dil == (dist.min() <= 1)


def test_box_membership():
    box = AmbitSet.box([0, 0], [1, 1])
    M = AffineSphere.sphere(2)
    assert erosion_membership(box, M, 0.1, [0.5, 0.5]) == (True, True)
    assert erosion_membership(box, M, 0.1, [0.05, 0.5]) == (False, True)
    # near a corner the dilation is rounded
    assert erosion_membership(box, M, 0.1, [1.08, 1.08])[1] is False
    assert erosion_membership(box, M, 0.1, [1.07, 1.07])[1] is True


# ------------------------------------------------------- surface integrals


def test_circle_length():
    val = surface_integral(AffineSphere.sphere(2), lambda x, n: np.ones(len(x)), order=256)
    assert abs(val - 2 * math.pi) < 1e-10


def test_sphere_area():
    val = surface_integral(AffineSphere.sphere(3), lambda x, n: np.ones(len(x)))
    assert abs(val - 4 * math.pi) < 1e-8


def test_ellipse_perimeter():
    oracle = 4 * 2.0 * special.ellipe(0.75)
    val = surface_integral(ELLIPSE, lambda x, n: np.ones(len(x)))
    assert val == pytest.approx(9.6884, abs=1e-4)
    assert abs(val - oracle) < 1e-6


@pytest.mark.parametrize("T", [np.eye(3), np.diag([2.0, 1.0, 0.5]), [[1, 0.3, 0], [0, 1, 0.2], [0.1, 0, 1.5]]])
def test_closed_surface_identities(T):
    # int n dH = 0 and int x.n dH = d Leb(interior)
    M = AffineSphere(np.asarray(T, dtype=float))
    q = M.quadrature(48)
    assert np.allclose(q.integrate(q.normals), 0, atol=1e-10)
    flux = q.integrate(np.sum(q.nodes * q.normals, axis=1))
    assert flux == pytest.approx(3 * M.domain_volume(), rel=1e-9)


def test_box_boundary_quadrature():
    box = AmbitSet.box([0, 0, 0], [1, 2, 3])
    q = box.boundary_quadrature(8)
    assert q.integrate(np.ones(len(q))) == pytest.approx(box.surface_area())
    assert q.integrate(np.sum(q.nodes * q.normals, axis=1)) == pytest.approx(3 * box.volume())


def test_non_finite_integrand():
    with pytest.raises(GeometryError):
        surface_integral(ELLIPSE, lambda x, n: np.full(len(x), np.nan), order=16)


# -------------------------------------------------------------- sections


def test_section_examples():
    M2, M3 = AffineSphere.sphere(2), AffineSphere.sphere(3)
    e1 = np.array([1.0, 0.0])
    assert hyperplane_section_measure(M2, e1, 0.0) == pytest.approx(2.0)
    assert hyperplane_section_measure(M2, e1, 0.5) == pytest.approx(2 * math.sqrt(0.75))
    assert hyperplane_section_measure(M3, np.array([0, 0, 1.0]), 0.6) == pytest.approx(math.pi * 0.64)


@settings(max_examples=30, deadline=None)
@given(matrices(2), unit_vectors(2), st.floats(-0.95, 0.95))
def test_section_chord_length_2d(T, n, rho):
    # chord of the ellipse {T w : |w| <= 1} cut by p.n = h_M(n) rho, by root finding
    M = AffineSphere(T)
    h = support_function(M, n)
    tang = np.array([-n[1], n[0]])
    base = h * rho * n
    inside = lambda s: np.linalg.norm(np.linalg.solve(T, base + s * tang)) - 1  # noqa: E731
    # the centre of the chord: minimize the gauge along the line
    s0 = optimize.minimize_scalar(lambda s: np.linalg.norm(np.linalg.solve(T, base + s * tang))).x
    span = 10 * np.abs(T).max()
    lo = optimize.brentq(inside, s0 - span, s0)
    hi = optimize.brentq(inside, s0, s0 + span)
    assert hyperplane_section_measure(M, n, rho) == pytest.approx(hi - lo, rel=1e-7)


def test_section_area_3d_by_determinant():
    # section through the centre of an axis-aligned ellipsoid: pi times the two other semi-axes
    M = AffineSphere(np.diag([3.0, 2.0, 0.5]))
    assert section_factor(M, np.array([0, 0, 1.0])) == pytest.approx(math.pi * 6.0)
    assert section_factor(M, np.array([1.0, 0, 0])) == pytest.approx(math.pi * 1.0)


# --------------------------------------------------------------- erosion


def test_erosion_volume_disk():
    M = AffineSphere.sphere(2)
    assert erosion_volume(DISK, M, 0.1) == pytest.approx(math.pi * (0.2 - 0.01), rel=1e-12)
    vol, slope, pred = erosion_volume_asymptote(DISK, M, 0.01)
    assert pred == pytest.approx(2 * math.pi, rel=1e-10)
    assert abs(slope - pred) / pred < 0.01


def test_erosion_empty():
    with pytest.raises(GeometryError):
        erosion_volume(DISK, AffineSphere.sphere(2), 1.5)


def test_erosion_volume_ellipse_matches_polar_oracle():
    # radial extent of the eroded disk by brute-force maxima over the ellipse
    r = 0.1
    th = np.linspace(0, 2 * math.pi, 4001)
    ring = r * np.column_stack([np.cos(th), np.sin(th)]) @ ELLIPSE.T.T
    phis = 2 * math.pi * (np.arange(256) + 0.5) / 256

    def rad(u):
        return optimize.brentq(lambda s: np.linalg.norm(s * u - ring, axis=1).max() - 1, 0, 1, xtol=1e-13)

    inner = 0.5 * np.mean([rad(np.array([math.cos(p), math.sin(p)])) ** 2 for p in phis]) * 2 * math.pi
    assert erosion_volume(DISK, ELLIPSE, r) == pytest.approx(math.pi - inner, rel=1e-5)


def test_erosion_slope_ellipse():
    # predicted slope int h_M(-n) dH over the unit circle is the perimeter of the ellipse
    vol, slope, pred = erosion_volume_asymptote(DISK, ELLIPSE, 0.005)
    assert pred == pytest.approx(4 * 2.0 * special.ellipe(0.75), rel=1e-8)
    assert abs(slope - pred) / pred < 0.02


def test_erosion_box():
    box = AmbitSet.box([0, 0], [2, 1])
    vol, slope, pred = erosion_volume_asymptote(box, AffineSphere.sphere(2), 0.01)
    assert vol == pytest.approx(2 - (2 - 0.02) * (1 - 0.02))
    assert pred == pytest.approx(6.0, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.2), st.floats(0.01, 0.2))
def test_erosion_volume_monotone(r1, r2):
    lo, hi = sorted((r1, r2))
    assert erosion_volume(DISK, ELLIPSE, lo, order=64) <= erosion_volume(DISK, ELLIPSE, hi, order=64) + 1e-12
