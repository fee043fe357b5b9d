import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdg_shapeopt.geometry import (BackgroundMesh, Circle, DomainShape, GeometryError, Polyline,
                                   annulus, box_shape, build_background_mesh, classify_elements,
                                   polyline_area)
from hdg_shapeopt.problems import TARGET_AREA, initial_outer_points, recovery_shape


def test_background_mesh_counts_and_size():
    bg = BackgroundMesh.from_cells((0, 0, 2, 1), 4, 2)
    assert bg.n_triangles == 16
    assert bg.h == pytest.approx(math.hypot(0.5, 0.5))


def test_build_background_mesh_respects_target():
    bg = build_background_mesh((-1, -1, 1, 1), 0.1)
    assert bg.h <= 0.1 + 1e-12


def test_build_background_mesh_rejects_bad_box():
    with pytest.raises(GeometryError):
        build_background_mesh((0, 0, 0, 1), 0.1)


def test_locate_finds_containing_triangle():
    bg = BackgroundMesh.from_cells((0, 0, 1, 1), 5)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.01, 0.99, (50, 2))
    tri = bg.locate(pts)
    assert np.all(tri >= 0)
    v = bg.vertices[bg.triangles[tri]]
    for p, t in zip(pts, v):
        lam = np.linalg.solve(np.vstack([t.T, np.ones(3)]), np.r_[p, 1.0])
        assert lam.min() > -1e-12


def test_polyline_orientation_fixed():
    pts = initial_outer_points(64, "circle")[::-1]
    outer = Polyline(pts, hole=False, dirichlet=False)
    assert outer.signed_area > 0


def test_self_intersection_rejected():
    bow = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    shape = DomainShape((Polyline(bow, hole=False, dirichlet=False),))
    with pytest.raises(GeometryError):
        shape.validate()


def test_recovery_target_area():
    assert TARGET_AREA == pytest.approx(0.4921460, abs=5e-8)


def test_polygon_area_of_sampled_disk():
    shape = recovery_shape(initial_outer_points(2000, "circle"))
    assert polyline_area(shape) == pytest.approx(TARGET_AREA, abs=1e-5)


def test_fitted_square_keeps_all_triangles():
    bg = BackgroundMesh.from_cells((0, 0, 1, 1), 4)
    mesh = classify_elements(bg, box_shape((0, 0, 1, 1)))
    assert mesh.n_elements == bg.n_triangles
    assert mesh.area == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.integers(12, 40), st.floats(0.12, 0.2))
def test_elements_lie_inside_domain(n, r_out):
    shape = annulus(0.05, r_out)
    bg = BackgroundMesh.from_cells((-0.25, -0.25, 0.25, 0.25), n)
    mesh = classify_elements(bg, shape)
    v = mesh.element_vertices.reshape(-1, 2)
    r = np.hypot(v[:, 0], v[:, 1])
    assert r.max() <= r_out + 1e-12
    assert r.min() >= 0.05 - 1e-12
    # every boundary edge has one owner, interior edges two
    assert np.all(mesh.edge_elements[:, 0] >= 0)


def test_computational_mesh_is_edge_connected():
    shape = annulus(0.05, 0.2)
    mesh = classify_elements(BackgroundMesh.from_cells((-0.25, -0.25, 0.25, 0.25), 24), shape)
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components

    inner = mesh.edge_elements[mesh.interior_edges]
    g = sp.coo_matrix((np.ones(len(inner)), (inner[:, 0], inner[:, 1])),
                      shape=(mesh.n_elements,) * 2)
    assert connected_components(g, directed=False)[0] == 1


def test_empty_domain_raises():
    shape = DomainShape((Circle((0.0, 0.0), 0.01, hole=False, dirichlet=True),))
    with pytest.raises(GeometryError):
        classify_elements(BackgroundMesh.from_cells((-1, -1, 1, 1), 4), shape)
