"""Gauss rules on the reference segment and reference triangle.

The triangle rules are collapsed (Duffy) tensor products of Gauss-Jacobi
and Gauss-Legendre points, so any polynomial degree is available and all
weights are positive.
"""

import functools

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@functools.lru_cache(maxsize=None)
def gauss_legendre(npts):
    """Gauss-Legendre points and weights on [-1, 1] (exact to degree 2n-1)."""
    x, w = roots_legendre(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def segment_rule(degree):
    """Rule on [-1, 1] exact for polynomials of the given degree."""
    return gauss_legendre(max(1, degree // 2 + 1))


@functools.lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule on the reference triangle (0,0), (1,0), (0,1).

    Returns
    -------
    points : ndarray, shape (nq, 2)
    weights : ndarray, shape (nq,)
        Sum to 1/2, the reference area.
    """
    n = max(1, (degree + 2) // 2)
    # collapsed coordinate along x2 carries the (1 - s) Jacobian
    s, ws = roots_jacobi(n, 1.0, 0.0)
    r, wr = roots_legendre(n)
    s = 0.5 * (s + 1.0)
    ws = ws / 4.0
    r = 0.5 * (r + 1.0)
    wr = wr / 2.0
    x2 = np.repeat(s, n)
    x1 = np.tile(r, n) * (1.0 - x2)
    w = np.outer(ws, wr).ravel()
    pts = np.column_stack([x1, x2])
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def map_to_triangles(verts, degree):
    """Physical quadrature points and weights on a batch of triangles.

    Parameters
    ----------
    verts : ndarray, shape (n, 3, 2)
    degree : int

    Returns
    -------
    points : ndarray, shape (n, nq, 2)
    weights : ndarray, shape (n, nq)
        Signed: negative for clockwise triangles, which lets fan
        decompositions of non-convex regions integrate correctly.
    """
    ref, w = triangle_rule(degree)
    v0 = verts[:, 0, :]
    e1 = verts[:, 1, :] - v0
    e2 = verts[:, 2, :] - v0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    pts = (v0[:, None, :] + ref[None, :, 0, None] * e1[:, None, :]
           + ref[None, :, 1, None] * e2[:, None, :])
    return pts, det[:, None] * w[None, :]
