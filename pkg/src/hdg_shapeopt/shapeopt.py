"""Volume-constrained shape optimisation driven by unfitted HDG solves.

The driver follows the multiplier variant of the gradient-descent loop:
state and adjoint solves give the shape gradient G on the movable boundary,
the multiplier xi is relaxed towards the area-preserving value, the
deformation field solves a vector Laplacian with Neumann datum
``(G + xi) n`` and an Armijo search picks the step.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryError, Polyline, classify_elements, polyline_area
from .hdg import (HdgOperator, SolverError, deformation_operator, solve_adjoint,
                  solve_deformation, solve_state, trace_at_boundary_nodes)
from .transfer import (build_extension_patches, build_transfer_map,
                       element_for_points)

log = logging.getLogger(__name__)


class OptimizationError(RuntimeError):
    """The optimisation loop cannot continue."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


STOP_RULES = ("either", "both")


@dataclass(frozen=True)
class OptConfig:
    """Parameters of the optimisation loop.

    ``stop_rule="either"`` exits as soon as one of the two stopping tests
    falls below ``tol``; ``"both"`` keeps iterating while either exceeds it.
    ``use_multiplier=False`` freezes xi at zero (plain energy descent).
    ``velocity_smoothing`` is a Gaussian width, in units of the mesh size,
    for averaging point velocities along the boundary; 0 moves each point
    with the field evaluated at that point.
    """

    tol: float = 1e-6
    epsilon: float = 1e-4
    m0: float = 1.0
    n_points: int = 2000
    max_iters: int = 90
    step_scale: float = 1.0
    beta: float = 0.5
    c1: float = 1e-4
    max_backtracks: int = 30
    stop_rule: str = "either"
    use_multiplier: bool = True
    velocity_smoothing: float = 0.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.use_multiplier and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if self.max_iters < 0 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be non-negative")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")
        if not self.m0 > 0:
            raise ValueError("target area m0 must be positive")
        if not self.velocity_smoothing >= 0:
            raise ValueError("velocity_smoothing must be non-negative")


@dataclass(frozen=True)
class ShapeIterState:
    """One iterate of the optimisation loop.

    ``step`` is the step that produced this iterate (NaN for the first one);
    ``armijo`` holds ``(J_aug(new), J_aug(old) + c1*step*dJ)`` for that step.
    """

    iteration: int
    shape: object = field(repr=False)
    xi: float
    chi: float
    J: float
    J_aug: float
    dJ: float
    step: float
    area: float
    area_error: float
    n_elements: int
    max_segment: float
    armijo: tuple = (math.nan, math.nan)
    backtracks: int = 0


class Discretization:
    """Computational mesh, transfer data and state solve for one shape."""

    def __init__(self, shape, background, data, cfg):
        self.shape = shape
        self.data = data
        self.cfg = cfg
        self.area = polyline_area(shape)
        self.mesh = classify_elements(background, shape)
        self.tm = build_transfer_map(self.mesh, shape, cfg.edge_points)
        self.patches = build_extension_patches(self.tm, 2 * cfg.k + 2)
        self.op = HdgOperator(self.mesh, self.tm, cfg, data.a_checked)
        self.state = solve_state(self.mesh, self.tm, data, cfg, op=self.op)
        self.J = evaluate_J(self.state, data, self.patches)

    def adjoint(self):
        return solve_adjoint(self.mesh, self.tm, self.data, self.cfg, self.state, op=self.op)

    @property
    def neumann(self):
        return ~self.tm.dirichlet


# ---------------------------------------------------------------------------
# building blocks


def evaluate_J(state, data, patches=None):
    """``1/2 int_Omega (y_h - y_target)^2`` over D_h plus the extension patches."""
    from .quadrature import map_to_triangles

    op = state.op
    mesh = op.mesh
    pts, w = map_to_triangles(mesh.element_vertices, 2 * op.k + 2)
    elems = np.arange(mesh.n_elements)[:, None]
    total = float((w * (state.eval_u(elems, pts) - data.y_target(pts)) ** 2).sum())
    if patches is not None and len(patches.weights):
        pp = patches.points
        total += patches.integrate((state.eval_u(patches.element, pp) - data.y_target(pp)) ** 2)
    return 0.5 * total


def evaluate_shape_gradient(state, adjoint, data, tm, shape=None):
    """Shape gradient at the images of all boundary nodes, shape (n_edges, nq).

    ``G = (r.n)(a^{-1} p.n + dg/dn) + (g - y_target)^2 / 2`` with ``p`` and
    ``r`` extrapolated from the element owning each boundary edge and ``n``
    the outward normal of Gamma at the image point.
    """
    xb = tm.xbar
    own = tm.owner[:, None]
    n = tm.gamma_normal
    pn = np.einsum("eqd,eqd->eq", state.eval_q(own, xb), n)
    rn = np.einsum("eqd,eqd->eq", adjoint.eval_q(own, xb), n)
    dgn = np.einsum("eqd,eqd->eq", data.grad_g(xb), n)
    g = data.g(xb)
    return rn * (pn / data.a(xb) + dgn) + 0.5 * (g - data.y_target(xb)) ** 2


def boundary_mean(values, tm, mask):
    """Mean of node values over the boundary edges selected by ``mask``."""
    w = tm.node_weights[mask]
    total = w.sum()
    if total <= 0:
        raise OptimizationError("movable boundary has zero measure")
    return float((w * values[mask]).sum() / total)


def compute_chi(G, tm, mask):
    """``chi = -(1/|Gamma_N|) int_{Gamma_N} G``."""
    return -boundary_mean(G, tm, mask)


def update_multiplier(xi, chi, area, m0, epsilon):
    return 0.5 * (xi + chi) + epsilon * (area - m0)


def neumann_datum(G_aug, tm):
    """Vector flux datum ``(G_aug n) o phi`` at the boundary nodes."""
    return G_aug[..., None] * tm.gamma_normal


def evaluate_deltaJ(G_aug, deformation, op):
    """Directional derivative ``<(G_aug n) o phi, Vhat_h>`` on Gamma_h^N.

    By the discrete energy identity this equals minus the deformation
    energy (up to the transferred Dirichlet term), so it is non-positive
    for the computed field.
    """
    tm = op.tm
    mask = ~op.dirichlet
    total = 0.0
    for i, comp in enumerate(deformation.components):
        vh = trace_at_boundary_nodes(op, comp)
        total += float((tm.node_weights[mask] * G_aug[mask] * tm.gamma_normal[mask][..., i]
                        * vh[mask]).sum())
    return total


def evaluate_field(deformation, mesh, pts):
    """Deformation field at arbitrary points, extrapolating outside D_h."""
    elems = element_for_points(mesh, pts)
    return deformation.eval_V(elems, pts)


def smooth_boundary_velocity(points, velocity, width):
    """Periodic Gaussian average of point velocities along arc length."""
    velocity = np.asarray(velocity, dtype=float)
    if width <= 0:
        return velocity
    seg = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    total = seg.sum()
    ds = s[:, None] - s[None, :]
    ds = (ds + 0.5 * total) % total - 0.5 * total
    # trapezoid-like weight: half the adjacent segment lengths
    wlen = 0.5 * (seg + np.roll(seg, 1))
    w = np.exp(-0.5 * (ds / width) ** 2) * wlen[None, :]
    return (w @ velocity) / w.sum(axis=1)[:, None]


def deform_shape(shape, velocity, step, bbox=None):
    """Move the movable polyline points by ``step * velocity``.

    ``velocity`` holds one vector per movable point.  Fixed components are
    left untouched.  Raises GeometryError if the moved boundary is invalid.
    """
    outer = shape.outer
    if not isinstance(outer, Polyline):
        raise GeometryError("the outer boundary is not movable")
    if step == 0:
        return shape
    new = outer.points + step * np.asarray(velocity)
    if bbox is not None:
        x0, y0, x1, y1 = bbox
        if (new[:, 0].min() <= x0 or new[:, 0].max() >= x1
                or new[:, 1].min() <= y0 or new[:, 1].max() >= y1):
            raise GeometryError("moved boundary leaves the background box")
    moved = shape.with_outer_points(new)
    moved.validate()
    return moved


def armijo_line_search(value0, slope, trial, step0, beta=0.5, c1=1e-4, max_backtracks=30):
    """Backtracking search for ``value(step) <= value0 + c1 * step * slope``.

    ``trial(step)`` returns ``(value, payload)`` or ``None`` when the step is
    infeasible (treated as a failed test).  Returns
    ``(step, value, payload, backtracks)``.
    """
    if not slope < 0:
        raise OptimizationError(f"not a descent direction (slope={slope:.3e})")
    step = step0
    for j in range(max_backtracks + 1):
        res = trial(step)
        if res is not None:
            value, payload = res
            if value <= value0 + c1 * step * slope:
                return step, value, payload, j
        step *= beta
    raise OptimizationError(f"Armijo search failed after {max_backtracks} backtracks")


# ---------------------------------------------------------------------------
# driver


def _max_segment(shape):
    return float(shape.outer.max_segment) if isinstance(shape.outer, Polyline) else math.nan


def run_optimization(shape0, background, data, hdg_cfg, opt_cfg, callback=None):
    """Run the multiplier-based descent loop from ``shape0``.

    Returns ``(history, status)`` where ``history`` is the list of
    ShapeIterState and ``status`` is one of ``"converged"``,
    ``"max_iters"`` or the failure message.  ``callback(state)`` is invoked
    after every iterate.
    """
    oc = opt_cfg
    history = []

    def build(shape):
        return Discretization(shape, background, data, hdg_cfg)

    def gradient_and_field(disc, xi):
        adj = disc.adjoint()
        G = evaluate_shape_gradient(disc.state, adj, data, disc.tm, disc.shape)
        return G

    try:
        disc = build(shape0)
    except (GeometryError, SolverError) as exc:
        raise OptimizationError(f"initial shape: {exc}", 0) from exc
    if not disc.neumann.any():
        raise OptimizationError("no movable boundary edges", 0)

    G = gradient_and_field(disc, 0.0)
    chi = compute_chi(G, disc.tm, disc.neumann)
    xi = chi if oc.use_multiplier else 0.0
    step = math.nan
    armijo = (math.nan, math.nan)
    backtracks = 0
    dJ0 = None
    prev_aug = None
    status = "max_iters"

    for it in range(oc.max_iters + 1):
        J_aug = disc.J + xi * (disc.area - oc.m0)
        G_aug = G + xi
        dop = deformation_operator(disc.mesh, disc.tm, hdg_cfg)
        neu = neumann_datum(G_aug, disc.tm)
        V = solve_deformation(disc.mesh, disc.tm, neu, hdg_cfg, op=dop)
        dJ = evaluate_deltaJ(G_aug, V, dop)
        state = ShapeIterState(
            iteration=it, shape=disc.shape, xi=float(xi), chi=float(chi), J=float(disc.J),
            J_aug=float(J_aug), dJ=float(dJ), step=float(step), area=disc.area,
            area_error=abs(disc.area - oc.m0), n_elements=disc.mesh.n_elements,
            max_segment=_max_segment(disc.shape), armijo=armijo, backtracks=backtracks)
        history.append(state)
        log.info("it %d J=%.6e J~=%.6e dJ~=%.3e xi=%.4e area=%.6f", it, disc.J, J_aug, dJ, xi, disc.area)
        if callback is not None:
            callback(state)

        if dJ0 is None:
            dJ0 = dJ
        if it > 0:
            ratio = abs(dJ / dJ0) if dJ0 != 0 else 0.0
            change = abs(J_aug - prev_aug)
            small = (ratio <= oc.tol, change <= oc.tol)
            if (any(small) if oc.stop_rule == "either" else all(small)):
                status = "converged"
                break
        if it == oc.max_iters:
            break
        prev_aug = J_aug

        pts = disc.shape.outer.points
        vel = evaluate_field(V, disc.mesh, pts)
        vel = smooth_boundary_velocity(pts, vel, oc.velocity_smoothing * background.h)
        vmax = float(np.abs(vel).max())
        if not vmax > 0:
            status = "zero deformation field"
            break
        step0 = oc.step_scale * background.h / vmax

        def trial(tau, xi=xi, vel=vel, disc=disc):
            try:
                shape = deform_shape(disc.shape, vel, tau, background.bbox)
                new = build(shape)
            except (GeometryError, SolverError) as exc:
                log.debug("trial step %.3e rejected: %s", tau, exc)
                return None
            return new.J + xi * (new.area - oc.m0), new

        try:
            step, value, new_disc, backtracks = armijo_line_search(
                J_aug, dJ, trial, step0, oc.beta, oc.c1, oc.max_backtracks)
        except OptimizationError as exc:
            status = f"iteration {it}: {exc}"
            break
        armijo = (value, J_aug + oc.c1 * step * dJ)
        disc = new_disc
        try:
            G = gradient_and_field(disc, xi)
        except SolverError as exc:
            status = f"iteration {it + 1}: {exc}"
            break
        chi = compute_chi(G, disc.tm, disc.neumann)
        if oc.use_multiplier:
            xi = update_multiplier(xi, chi, disc.area, oc.m0, oc.epsilon)
    return history, status
