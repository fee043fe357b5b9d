import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdg_shapeopt.basis import ElementBasis, monomial_exponents
from hdg_shapeopt.geometry import BackgroundMesh, annulus, classify_elements, polyline_area
from hdg_shapeopt.problems import initial_outer_points, recovery_shape
from hdg_shapeopt.quadrature import map_to_triangles
from hdg_shapeopt.transfer import (build_extension_patches, build_transfer_map,
                                   check_admissibility, element_for_points, extrapolate)

from conftest import UNIT_BOX, discretize


def _annulus(n=32):
    return discretize(annulus(0.05, 0.2), (-0.25, -0.25, 0.25, 0.25), n)


def test_paths_land_on_true_boundary():
    mesh, tm, _ = _annulus()
    r = np.hypot(tm.xbar[..., 0], tm.xbar[..., 1])
    on_inner = np.abs(r - 0.05) < 1e-12
    on_outer = np.abs(r - 0.2) < 1e-12
    assert np.all(on_inner | on_outer)
    # path geometry: x + l t = xbar, unit tangent
    np.testing.assert_allclose(tm.x + tm.length[..., None] * tm.tangent, tm.xbar, atol=1e-13)
    np.testing.assert_allclose(np.linalg.norm(tm.tangent, axis=-1), 1.0, atol=1e-12)
    # Dirichlet flags follow the components: inner circle fixed, outer movable
    np.testing.assert_array_equal(tm.dirichlet, on_inner.all(axis=1))


def test_fitted_square_has_zero_paths(fitted_square):
    mesh, tm, cfg = discretize(fitted_square, UNIT_BOX, 4)
    assert tm.length.max() < 1e-14
    rep = check_admissibility(mesh, tm, cfg.k, cfg.tau)
    assert rep.R == 0.0
    assert rep.passed


@pytest.mark.parametrize("n", [16, 32, 64])
def test_partition_identity_annulus(n):
    shape = annulus(0.05, 0.2)
    mesh, tm, _ = discretize(shape, (-0.25, -0.25, 0.25, 0.25), n)
    patches = build_extension_patches(tm, 4)
    exact = polyline_area(shape)
    assert abs(mesh.area + patches.area - exact) / exact <= 1e-6


def test_partition_identity_polyline():
    shape = recovery_shape(initial_outer_points(2000, "ellipse"))
    mesh, tm, _ = discretize(shape, (-1, -1, 1, 1), 40)
    patches = build_extension_patches(tm, 4)
    exact = polyline_area(shape)
    assert abs(mesh.area + patches.area - exact) / exact <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_extrapolation_matches_monomial_oracle(k, seed):
    rng = np.random.default_rng(seed)
    verts = np.array([[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]]]) + rng.uniform(-1, 1, 2)
    basis = ElementBasis(verts, k)
    exps = monomial_exponents(k)
    a = rng.normal(size=len(exps))
    center, scale = basis.center[0], basis.scale[0]

    def p(x):
        z = (x - center) / scale
        return sum(ai * z[..., 0] ** i * z[..., 1] ** j for ai, (i, j) in zip(a, exps))

    # basis b is sum_j coef[b, j] m_j, so the expansion of p solves coef^T c = a
    coeffs = np.linalg.solve(basis.coef[0].T, a)
    # patch points sit within a few element diameters of their element
    far = center + rng.uniform(-0.25, 0.25, (40, 2))
    got = extrapolate(coeffs, basis, 0, far)
    ref = p(far)
    assert np.abs(got - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


def test_extrapolation_reproduces_projection_inside():
    verts = np.array([[[0.2, 0.1], [0.3, 0.1], [0.2, 0.2]]])
    basis = ElementBasis(verts, 2)
    pts, w = map_to_triangles(verts, 4)
    phi = basis.values(np.zeros((1, pts.shape[1]), dtype=int), pts)
    f = 1.0 + pts[..., 0] - 2 * pts[..., 1] ** 2
    c = np.einsum("eq,eq,eqi->i", w, f, phi)
    np.testing.assert_allclose(extrapolate(c, basis, 0, pts[0]), f[0], atol=1e-12)


def test_element_for_points_prefers_own_element():
    mesh, tm, _ = _annulus(24)
    cent = mesh.element_vertices.mean(axis=1)
    np.testing.assert_array_equal(element_for_points(mesh, cent), np.arange(mesh.n_elements))
    # images on Gamma fall back to an element owning a nearby boundary edge
    el = element_for_points(mesh, tm.xbar)
    d = np.linalg.norm(mesh.element_vertices[el].mean(axis=2) - tm.xbar, axis=-1)
    assert d.max() < 3 * mesh.h


def test_admissibility_report_flags_proximity():
    mesh, tm, cfg = _annulus(24)
    rep = check_admissibility(mesh, tm, cfg.k, cfg.tau)
    assert rep.R == pytest.approx(tm.R)
    assert rep.all_H_ok
    assert rep.r_e.shape == (tm.n_edges,)


def test_transfer_map_requires_classified_mesh():
    shape = annulus(0.05, 0.2)
    bg = BackgroundMesh.from_cells((-0.25, -0.25, 0.25, 0.25), 16)
    mesh = classify_elements(bg, shape)
    tm = build_transfer_map(mesh, shape, 3)
    assert tm.x.shape == (tm.n_edges, 3, 2)
