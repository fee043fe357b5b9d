"""scikit-learn style wrappers around the solver and the optimisation driver.

``fit`` takes a domain (a :class:`DomainShape` or, for the optimiser, an
``(N, 2)`` array of movable boundary points) instead of a feature matrix;
``predict`` evaluates the fitted state at query points.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import BackgroundMesh, DomainShape, Polyline, classify_elements, polyline_area
from .hdg import HdgConfig, ProblemData, solve_state
from .shapeopt import OptConfig, evaluate_J, run_optimization
from .transfer import build_extension_patches, build_transfer_map, element_for_points


def _check_points(X):
    return check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)


def _check_data(data):
    if not isinstance(data, ProblemData):
        raise TypeError("data must be a ProblemData instance")
    return data


class UnfittedHDGSolver(BaseEstimator):
    """Solve the state problem on a domain immersed in a uniform background mesh.

    Parameters
    ----------
    data : ProblemData
        Coefficient, source, boundary datum and target.
    k, tau : polynomial degree and stabilisation.
    n_cells : cells per side of the background grid.
    bbox : background box ``(x0, y0, x1, y1)``; defaults to a 10% margin
        around the domain.
    """

    def __init__(self, data=None, k=1, tau=1.0, n_cells=32, bbox=None):
        self.data = data
        self.k = k
        self.tau = tau
        self.n_cells = n_cells
        self.bbox = bbox

    def _bbox(self, shape):
        if self.bbox is not None:
            return tuple(float(v) for v in self.bbox)
        pts = np.vstack([c.sample(256) for c in shape.components])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.1 * (hi - lo).max()
        return (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)

    def fit(self, X, y=None):
        if not isinstance(X, DomainShape):
            raise TypeError("fit expects a DomainShape")
        data = _check_data(self.data)
        if int(self.n_cells) < 1:
            raise ValueError("n_cells must be positive")
        X.validate()
        cfg = HdgConfig(k=int(self.k), tau=float(self.tau))
        self.background_ = BackgroundMesh.from_cells(self._bbox(X), int(self.n_cells))
        self.mesh_ = classify_elements(self.background_, X)
        self.transfer_map_ = build_transfer_map(self.mesh_, X, cfg.edge_points)
        self.patches_ = build_extension_patches(self.transfer_map_, 2 * cfg.k + 2)
        self.solution_ = solve_state(self.mesh_, self.transfer_map_, data, cfg)
        self.J_ = evaluate_J(self.solution_, data, self.patches_)
        self.n_elements_ = self.mesh_.n_elements
        self.shape_ = X
        return self

    def predict(self, X):
        """State ``y_h`` at the rows of ``X``; extrapolated outside D_h."""
        check_is_fitted(self, "solution_")
        pts = _check_points(X)
        elems = element_for_points(self.mesh_, pts)
        return self.solution_.eval_u(elems, pts)

    def transform(self, X):
        """Flux ``p_h = -a grad y_h`` at the rows of ``X``, shape (n, 2)."""
        check_is_fitted(self, "solution_")
        pts = _check_points(X)
        elems = element_for_points(self.mesh_, pts)
        return self.solution_.eval_q(elems, pts)

    def score(self, X=None, y=None):
        """Negative energy ``-J``, so larger is better."""
        check_is_fitted(self, "J_")
        return -self.J_


class ShapeOptimizer(BaseEstimator):
    """Volume-constrained shape optimisation of the movable outer boundary.

    ``fit(X)`` accepts a DomainShape whose outer component is a polyline,
    or an ``(N, 2)`` array of counter-clockwise points combined with
    ``fixed_components`` (holes and other fixed curves).
    """

    def __init__(self, data=None, m0=1.0, fixed_components=(), bbox=(-1.0, -1.0, 1.0, 1.0),
                 n_cells=92, k=1, tau=1.0, tol=1e-6, epsilon=1e-4, max_iters=90,
                 step_scale=1.0, beta=0.5, c1=1e-4, max_backtracks=30, stop_rule="either",
                 use_multiplier=True, velocity_smoothing=0.0):
        self.data = data
        self.m0 = m0
        self.fixed_components = fixed_components
        self.bbox = bbox
        self.n_cells = n_cells
        self.k = k
        self.tau = tau
        self.tol = tol
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.step_scale = step_scale
        self.beta = beta
        self.c1 = c1
        self.max_backtracks = max_backtracks
        self.stop_rule = stop_rule
        self.use_multiplier = use_multiplier
        self.velocity_smoothing = velocity_smoothing

    def _shape(self, X):
        if isinstance(X, DomainShape):
            if not isinstance(X.outer, Polyline):
                raise ValueError("the outer boundary must be a polyline to be movable")
            return X
        pts = check_array(X, dtype=np.float64, ensure_min_samples=3)
        if pts.shape[1] != 2:
            raise ValueError(f"expected (N, 2) boundary points, got {pts.shape}")
        outer = Polyline(pts, hole=False, dirichlet=False)
        return DomainShape((outer, *tuple(self.fixed_components)))

    def _opt_config(self):
        return OptConfig(tol=self.tol, epsilon=self.epsilon, m0=self.m0,
                         max_iters=int(self.max_iters), step_scale=self.step_scale,
                         beta=self.beta, c1=self.c1, max_backtracks=int(self.max_backtracks),
                         stop_rule=self.stop_rule, use_multiplier=self.use_multiplier,
                         velocity_smoothing=self.velocity_smoothing)

    def fit(self, X, y=None, callback=None):
        data = _check_data(self.data)
        shape = self._shape(X)
        shape.validate()
        opt = self._opt_config()
        background = BackgroundMesh.from_cells(tuple(self.bbox), int(self.n_cells))
        history, status = run_optimization(shape, background, data,
                                           HdgConfig(k=int(self.k), tau=float(self.tau)),
                                           opt, callback)
        self.history_ = history
        self.status_ = status
        self.shape_ = history[-1].shape
        self.boundary_ = history[-1].shape.outer.points.copy()
        self.J_ = history[-1].J
        self.area_ = polyline_area(self.shape_)
        self.n_iter_ = history[-1].iteration
        return self

    def transform(self, X=None):
        """Optimised movable boundary points."""
        check_is_fitted(self, "boundary_")
        return self.boundary_.copy()

    def predict(self, X):
        """Optimised-domain state at query points."""
        check_is_fitted(self, "shape_")
        solver = UnfittedHDGSolver(self.data, self.k, self.tau, self.n_cells, self.bbox)
        return solver.fit(self.shape_).predict(X)
