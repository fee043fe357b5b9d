"""Experiment harnesses shared by the command line and the test-suite."""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BackgroundMesh, classify_elements
from .hdg import HdgConfig, compute_error_norms, solve_adjoint, solve_deformation, solve_state
from .problems import (RECOVERY_BBOX, TARGET_AREA, ManufacturedProblem, hausdorff_to_circle,
                       initial_outer_points, recovery_data, recovery_shape)
from .shapeopt import OptConfig, evaluate_shape_gradient, run_optimization
from .transfer import build_extension_patches, build_transfer_map

ERROR_COLUMNS = ("err_y", "err_p", "err_z", "err_r", "err_V", "err_sigma",
                 "err_yhat", "err_zhat", "err_Vhat", "err_G")
DH_COLUMNS = ("dh_err_y", "dh_err_p", "dh_err_V", "dh_err_sigma")


def fit_slope(h, err):
    """Least-squares slope of ``log(err)`` against ``log(h)``; NaN below two points."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = (h > 0) & (err > 0) & np.isfinite(err)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(h[ok]), np.log(err[ok]), 1)[0])


def _combine(a, b):
    return {key: math.hypot(a[key], b[key]) for key in a}


def convergence_level(n_cells, k, tau=1.0, problem=None):
    """Errors of state, adjoint, deformation and shape gradient on one mesh."""
    prob = problem or ManufacturedProblem()
    cfg = HdgConfig(k=k, tau=tau)
    background = BackgroundMesh.from_cells(prob.bbox, n_cells)
    shape = prob.shape
    mesh = classify_elements(background, shape)
    tm = build_transfer_map(mesh, shape, cfg.edge_points)
    patches = build_extension_patches(tm, 2 * k + 4)
    data = prob.data

    state = solve_state(mesh, tm, data, cfg)
    adjoint = solve_adjoint(mesh, tm, data, cfg, state, boundary=prob.adjoint_boundary)
    deform = solve_deformation(mesh, tm, prob.neumann_values(tm), cfg,
                               source=prob.V_source, dirichlet=prob.V)

    e_y = compute_error_norms(state, prob.y, prob.p, patches)
    e_z = compute_error_norms(adjoint, prob.z, prob.r, patches)
    comp = [compute_error_norms(c, prob.V_component(i), prob.sigma_row, patches)
            for i, c in enumerate(deform.components)]
    e_V = _combine(*comp)
    dh = [compute_error_norms(state, prob.y, prob.p)]
    dh += [_combine(*[compute_error_norms(c, prob.V_component(i), prob.sigma_row)
                      for i, c in enumerate(deform.components)])]

    G = evaluate_shape_gradient(state, adjoint, data, tm, shape)
    mask = ~tm.dirichlet
    w = tm.node_weights[mask]
    err_G = math.sqrt(float((w * (G[mask] - prob.G_exact(tm.xbar[mask])) ** 2).sum()))

    row = {
        "n_cells": n_cells, "n_elements": mesh.n_elements, "h": background.h,
        "err_y": e_y["u"], "err_p": e_y["q"], "err_z": e_z["u"], "err_r": e_z["q"],
        "err_V": e_V["u"], "err_sigma": e_V["q"],
        "err_yhat": e_y["uhat"], "err_zhat": e_z["uhat"], "err_Vhat": e_V["uhat"],
        "err_G": err_G,
        "dh_err_y": dh[0]["u"], "dh_err_p": dh[0]["q"],
        "dh_err_V": dh[1]["u"], "dh_err_sigma": dh[1]["q"],
        "max_flux_jump": float(max(np.abs(state.op.flux_jumps(state)).max(),
                                   np.abs(adjoint.op.flux_jumps(adjoint)).max())),
    }
    return row


@dataclass
class ConvergenceTable:
    k: int
    rows: list

    @property
    def h(self):
        return np.array([r["h"] for r in self.rows])

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def slope(self, name):
        return fit_slope(self.h, self.column(name))

    def slopes(self):
        return {c: self.slope(c) for c in ERROR_COLUMNS + DH_COLUMNS}


def run_convergence(k, levels, tau=1.0, callback=None):
    """Run the manufactured annulus problem on each ``levels`` entry (cells per side)."""
    rows = []
    for n in levels:
        row = convergence_level(int(n), k, tau)
        rows.append(row)
        if callback is not None:
            callback(row)
    return ConvergenceTable(k, rows)


def recovery_setup(n_cells=92, n_points=2000, initial_shape="ellipse", source_sign=-1.0):
    """Background mesh, initial shape and data of the disk recovery test."""
    background = BackgroundMesh.from_cells(RECOVERY_BBOX, n_cells)
    shape = recovery_shape(initial_outer_points(n_points, initial_shape))
    return background, shape, recovery_data(source_sign)


def run_recovery(n_cells=92, k=1, tau=1.0, n_points=2000, initial_shape="ellipse",
                 source_sign=-1.0, opt=None, callback=None):
    """Disk recovery run; returns ``(history, status, hausdorff, area_error)``."""
    background, shape, data = recovery_setup(n_cells, n_points, initial_shape, source_sign)
    opt = opt or OptConfig(m0=TARGET_AREA, stop_rule="both")
    history, status = run_optimization(shape, background, data, HdgConfig(k=k, tau=tau),
                                       opt, callback)
    last = history[-1]
    return (history, status, hausdorff_to_circle(last.shape.outer.points),
            abs(last.area - TARGET_AREA))
