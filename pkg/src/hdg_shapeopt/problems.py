"""Problem presets: the manufactured convergence test and the disk recovery test."""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Circle, DomainShape, Polyline, annulus
from .hdg import ProblemData

HOLE_RADIUS = 0.05
TARGET_RADIUS = 1.0 / math.sqrt(2.0 * math.pi)
TARGET_AREA = math.pi * (1.0 / (2.0 * math.pi) - HOLE_RADIUS ** 2)


def _r2(x):
    return (np.asarray(x) ** 2).sum(-1)


# ---------------------------------------------------------------------------
# convergence experiment: fixed annulus with manufactured fields


def _sinsin(x):
    return np.sin(x[..., 0]) * np.sin(x[..., 1])


def _sinsin_flux(x):
    """``-grad(sin x1 sin x2)``."""
    return -np.stack([np.cos(x[..., 0]) * np.sin(x[..., 1]),
                      np.sin(x[..., 0]) * np.cos(x[..., 1])], axis=-1)


def _sinsin_grad(x):
    return -_sinsin_flux(x)


def _exp_field(x):
    return np.exp(_r2(x) - HOLE_RADIUS ** 2)


def _V(x):
    e = _exp_field(x)
    return np.stack([e, e], axis=-1)


def _sigma_row(x):
    """Row of ``sigma = -grad V`` (both rows coincide)."""
    return -2.0 * x * _exp_field(x)[..., None]


def _V_source(x):
    e = -(4.0 + 4.0 * _r2(x)) * _exp_field(x)
    return np.stack([e, e], axis=-1)


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact fields of the convergence experiment.

    ``y = z = sin(x1) sin(x2)`` with target ``-y`` and adjoint boundary
    data ``z``; ``V = exp(|x|^2 - r_in^2) (1, 1)`` with a matching source,
    Dirichlet data on the inner circle and flux data on the outer one.
    """

    r_in: float = HOLE_RADIUS
    r_out: float = 0.2

    @property
    def shape(self):
        return annulus(self.r_in, self.r_out, inner_dirichlet=True, outer_dirichlet=False)

    @property
    def bbox(self):
        m = 1.25 * self.r_out
        return (-m, -m, m, m)

    @property
    def data(self):
        return ProblemData(f=lambda x: 2.0 * _sinsin(x), g=_sinsin, grad_g=_sinsin_grad,
                           y_target=lambda x: -_sinsin(x))

    y = staticmethod(_sinsin)
    p = staticmethod(_sinsin_flux)
    z = staticmethod(_sinsin)
    r = staticmethod(_sinsin_flux)
    adjoint_boundary = staticmethod(_sinsin)
    V = staticmethod(_V)
    sigma_row = staticmethod(_sigma_row)
    V_source = staticmethod(_V_source)

    @staticmethod
    def V_component(i):
        return _exp_field

    def neumann_values(self, tm):
        """Exact ``sigma n_h`` at the computational boundary nodes (n, nq, 2)."""
        sn = np.einsum("eqd,ed->eq", _sigma_row(tm.x), tm.normals)
        return np.stack([sn, sn], axis=-1)

    def G_exact(self, x):
        """Exact shape gradient on Gamma; the flux term vanishes since g = y."""
        return 0.5 * (_sinsin(x) + _sinsin(x)) ** 2


# ---------------------------------------------------------------------------
# shape recovery experiment


def target_function(x):
    s = _r2(x)
    return (s - 1.0 / (2.0 * math.pi)) * (s - HOLE_RADIUS ** 2)


def recovery_data(source_sign=-1.0):
    """Data of the disk recovery test.

    The source is ``c (4|x|^2 - 1/(2 pi) - r_in^2)`` with ``c = source_sign``.
    On the optimal disk the state is ``-c y_target/4``, so ``-1`` gives
    ``+y_target/4``.
    """
    c = float(source_sign)
    return ProblemData(
        f=lambda x: c * (4.0 * _r2(x) - 1.0 / (2.0 * math.pi) - HOLE_RADIUS ** 2),
        y_target=target_function)


def optimal_state(x):
    """Exact state on the optimal disk for ``source_sign=1``: ``-y_target/4``."""
    return -0.25 * target_function(x)


def optimal_energy_radial(y_factor=0.25, upper=TARGET_RADIUS, n=64):
    """``1/2 int (c*yt - yt)^2`` over the annulus r_in < r < ``upper`` (1D Gauss)."""
    from .quadrature import gauss_legendre

    t, w = gauss_legendre(n)
    a, b = HOLE_RADIUS, upper
    r = 0.5 * (b - a) * t + 0.5 * (b + a)
    yt = (r ** 2 - 1.0 / (2.0 * math.pi)) * (r ** 2 - a ** 2)
    return float(0.5 * (y_factor - 1.0) ** 2 * 2.0 * math.pi * 0.5 * (b - a) * (w * r * yt ** 2).sum())


def closed_form_energy_integral(upper, n=64):
    """``9 pi / 16 int_{r_in}^{upper} r (r^2 - 1/(2 pi))^2 (r^2 - r_in^2)^2 dr``.

    With ``upper = 1/sqrt(2 pi)`` this is the optimal-disk energy.
    """
    from .quadrature import gauss_legendre

    t, w = gauss_legendre(n)
    a = HOLE_RADIUS
    r = 0.5 * (upper - a) * t + 0.5 * (upper + a)
    val = r * (r ** 2 - 1.0 / (2.0 * math.pi)) ** 2 * (r ** 2 - a ** 2) ** 2
    return float(9.0 * math.pi / 16.0 * 0.5 * (upper - a) * (w * val).sum())


def initial_outer_points(n_points=2000, kind="ellipse", **kw):
    """Sample of the initial movable boundary (counter-clockwise)."""
    th = 2.0 * math.pi * np.arange(n_points) / n_points
    if kind == "ellipse":
        a = kw.get("a", 0.5)
        b = kw.get("b", 0.32)
        cx, cy = kw.get("center", (0.04, 0.02))
        return np.column_stack([cx + a * np.cos(th), cy + b * np.sin(th)])
    if kind == "circle":
        r = kw.get("radius", TARGET_RADIUS)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])
    if kind == "flower":
        r0 = kw.get("radius", TARGET_RADIUS)
        amp = kw.get("amplitude", 0.15)
        lobes = kw.get("lobes", 3)
        r = r0 * (1.0 + amp * np.cos(lobes * th))
        return np.column_stack([r * np.cos(th), r * np.sin(th)])
    raise ValueError(f"unknown initial shape {kind!r}")


def recovery_shape(points):
    return DomainShape((Polyline(points, hole=False, dirichlet=False),
                        Circle((0.0, 0.0), HOLE_RADIUS, hole=True, dirichlet=True)))


RECOVERY_BBOX = (-1.0, -1.0, 1.0, 1.0)


def hausdorff_to_circle(points, radius=TARGET_RADIUS, n_circle=20000):
    """Hausdorff distance between a closed polyline and a centred circle."""
    pts = np.asarray(points, dtype=float)
    d1 = np.abs(np.hypot(pts[:, 0], pts[:, 1]) - radius).max()
    th = 2.0 * math.pi * np.arange(n_circle) / n_circle
    circ = radius * np.column_stack([np.cos(th), np.sin(th)])
    import shapely
    ring = shapely.LinearRing(pts)
    d2 = shapely.distance(ring, shapely.points(circ)).max()
    return float(max(d1, d2))
