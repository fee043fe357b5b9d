"""Polynomial bases for the element and edge spaces.

Element bases are orthonormal combinations of scaled monomials written in
physical coordinates, so evaluating a local polynomial outside its element
(the extrapolation used on extension patches) is plain evaluation.
"""

import functools

import numpy as np
from numpy.polynomial import legendre

from .quadrature import map_to_triangles, REFERENCE_TRIANGLE


def dim_pk(k):
    return (k + 1) * (k + 2) // 2


@functools.lru_cache(maxsize=None)
def monomial_exponents(k):
    """Exponent pairs (i, j) of x^i y^j with i + j <= k, graded order."""
    return tuple((d - j, j) for d in range(k + 1) for j in range(d + 1))


def monomials(k, xi):
    """Monomial values and gradients at points ``xi`` (..., 2).

    Returns ``(vals, grads)`` with shapes (..., nb) and (..., nb, 2).
    """
    exps = monomial_exponents(k)
    x = xi[..., 0]
    y = xi[..., 1]
    xp = [np.ones_like(x)]
    yp = [np.ones_like(y)]
    for _ in range(k):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    zero = np.zeros_like(x)
    vals = np.stack([xp[i] * yp[j] for i, j in exps], axis=-1)
    gx = np.stack([i * xp[i - 1] * yp[j] if i else zero for i, j in exps], axis=-1)
    gy = np.stack([j * xp[i] * yp[j - 1] if j else zero for i, j in exps], axis=-1)
    return vals, np.stack([gx, gy], axis=-1)


class ElementBasis:
    """Orthonormal P_k bases on a batch of triangles.

    Basis function ``b`` on element ``e`` is
    ``sum_j coef[e, b, j] * m_j((x - center[e]) / scale[e])``.
    """

    def __init__(self, verts, k):
        verts = np.asarray(verts, dtype=float)
        self.k = k
        self.nb = dim_pk(k)
        self.center = verts.mean(axis=1)
        edges = verts[:, [1, 2, 0], :] - verts
        self.scale = np.sqrt((edges ** 2).sum(-1)).max(axis=1)
        pts, w = map_to_triangles(verts, 2 * k)
        vals, _ = monomials(k, self._local(pts, np.arange(len(verts))[:, None]))
        gram = np.einsum("eq,eqi,eqj->eij", np.abs(w), vals, vals)
        chol = np.linalg.cholesky(gram)
        eye = np.broadcast_to(np.eye(self.nb), gram.shape)
        # rows of inv(L) give orthonormal combinations
        self.coef = np.linalg.solve(chol, eye)

    def _local(self, pts, elems):
        return (pts - self.center[elems]) / self.scale[elems][..., None]

    def eval(self, elems, pts):
        """Values and physical gradients of all basis functions.

        ``elems`` broadcasts against ``pts[..., 0]``. Returns arrays of shape
        (..., nb) and (..., nb, 2).
        """
        elems = np.asarray(elems)
        vals, grads = monomials(self.k, self._local(pts, elems))
        c = self.coef[elems]
        phi = np.einsum("...bj,...j->...b", c, vals)
        dphi = np.einsum("...bj,...jd->...bd", c, grads)
        dphi /= self.scale[elems][..., None, None]
        return phi, dphi

    def values(self, elems, pts):
        return self.eval(elems, pts)[0]


def reference_basis(k):
    """Orthonormal basis of P_k on the reference triangle (0,0),(1,0),(0,1).

    Returns a callable ``f(points) -> (values, gradients)``.
    """
    basis = ElementBasis(REFERENCE_TRIANGLE[None], k)

    def evaluate(points):
        points = np.asarray(points, dtype=float)
        return basis.eval(np.zeros(points.shape[:-1], dtype=int), points)

    evaluate.k = k
    evaluate.dim = basis.nb
    return evaluate


def edge_basis(k, t):
    """Orthonormal Legendre polynomials on [-1, 1] at parameters ``t``.

    Orthonormal with respect to ``dt``; an edge of length L has measure
    ``L/2 dt`` so its mass matrix is ``L/2 * I``.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (k + 1,))
    for j in range(k + 1):
        c = np.zeros(j + 1)
        c[j] = 1.0
        out[..., j] = np.sqrt((2 * j + 1) / 2.0) * legendre.legval(t, c)
    return out
