"""Command line entry point: ``hdg-shapeopt converge|optimize|mesh-info``.

Exit status is 0 on success, 2 for configuration problems and 3 when a
numerical step fails.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .experiments import DH_COLUMNS, ERROR_COLUMNS, fit_slope, run_convergence
from .geometry import (BackgroundMesh, GeometryError, box_shape, classify_elements,
                       polyline_area)
from .hdg import HdgConfig, SolverError
from .quadrature import map_to_triangles
from .problems import (RECOVERY_BBOX, TARGET_AREA, ManufacturedProblem, hausdorff_to_circle,
                       initial_outer_points, recovery_data, recovery_shape)
from .shapeopt import OptConfig, OptimizationError, STOP_RULES, run_optimization
from .transfer import (TransferError, build_extension_patches, build_transfer_map,
                       check_admissibility)

log = logging.getLogger("hdg_shapeopt")

PRESETS = ("experiment1", "experiment2", "square", "custom")
THREADS_ENV = "HDG_SHAPEOPT_THREADS"

_PRESET_DEFAULTS = {
    "experiment1": {"levels": (18, 36, 72, 144), "n_cells": 144},
    "experiment2": {"levels": (92,), "n_cells": 92, "stop_rule": "both"},
    "square": {"levels": (4,), "n_cells": 4},
}


@dataclass
class RunConfig:
    """Typed view of the flat key=value configuration."""

    subcommand: str
    preset: str = "experiment1"
    k: tuple = (1,)
    tau: float = 1.0
    levels: tuple = (18, 36, 72, 144)
    n_cells: int = 92
    seed: int = 0
    # optimisation
    tol: float = 1e-6
    epsilon: float = 1e-4
    m0: float = TARGET_AREA
    n_points: int = 2000
    max_iters: int = 90
    step_scale: float = 1.0
    beta: float = 0.5
    c1: float = 1e-4
    max_backtracks: int = 30
    stop_rule: str = "either"
    use_multiplier: bool = True
    velocity_smoothing: float = 0.0
    source_sign: float = -1.0
    initial_shape: str = "ellipse"
    boundary_every: int = 1
    vtk_iterations: tuple = (0, 30, 50, 90)

    def opt_config(self):
        return OptConfig(tol=self.tol, epsilon=self.epsilon, m0=self.m0, n_points=self.n_points,
                         max_iters=self.max_iters, step_scale=self.step_scale, beta=self.beta,
                         c1=self.c1, max_backtracks=self.max_backtracks,
                         stop_rule=self.stop_rule, use_multiplier=self.use_multiplier,
                         velocity_smoothing=self.velocity_smoothing)


def _int_tuple(text):
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {int: int, float: float, str: str, bool: _bool, tuple: _int_tuple}


def build_run_config(subcommand, values):
    """Convert string values into a validated :class:`RunConfig`."""
    preset = values.get("preset", "experiment1")
    if preset not in PRESETS:
        raise io.ConfigError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if preset == "custom":
        raise io.ConfigError("custom problems are available through the Python API only")
    kwargs = {"subcommand": subcommand, "preset": preset}
    kwargs.update(_PRESET_DEFAULTS.get(preset, {}))
    types = {f.name: f.type for f in fields(RunConfig)}
    unknown = {}
    for key, raw in values.items():
        if key == "preset":
            continue
        if key not in types or key == "subcommand":
            unknown[key] = raw
            continue
        try:
            kwargs[key] = _PARSERS[types[key]](raw)
        except (ValueError, KeyError) as exc:
            raise io.ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    if unknown:
        raise io.ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not cfg.levels or min(cfg.levels) < 1:
        raise io.ConfigError("levels must be a non-empty list of positive integers")
    if cfg.n_cells < 1:
        raise io.ConfigError("n_cells must be positive")
    if not cfg.k or min(cfg.k) < 1:
        raise io.ConfigError("k must be a list of integers >= 1")
    if not cfg.tau > 0:
        raise io.ConfigError("tau must be positive")
    if cfg.stop_rule not in STOP_RULES:
        raise io.ConfigError(f"stop_rule must be one of {STOP_RULES}")
    if cfg.initial_shape not in ("ellipse", "circle", "flower"):
        raise io.ConfigError(f"unknown initial_shape {cfg.initial_shape!r}")
    if cfg.boundary_every < 0:
        raise io.ConfigError("boundary_every must be non-negative")
    if cfg.subcommand == "converge" and cfg.preset != "experiment1":
        raise io.ConfigError("converge needs a preset with an exact solution (experiment1)")
    if cfg.subcommand == "optimize" and cfg.preset != "experiment2":
        raise io.ConfigError("optimize needs the experiment2 preset")
    try:
        cfg.opt_config()
    except ValueError as exc:
        raise io.ConfigError(str(exc)) from exc


def _header(cfg):
    return [f"{f.name}={getattr(cfg, f.name)}" for f in fields(RunConfig)]


# ---------------------------------------------------------------------------
# subcommands


def run_converge(cfg, out):
    paths = []
    for k in cfg.k:
        table = run_convergence(k, cfg.levels, cfg.tau,
                                callback=lambda r: log.info("level %d: %d elements", r["n_cells"],
                                                            r["n_elements"]))
        cols = ["n_cells", "n_elements", "h", *ERROR_COLUMNS, *DH_COLUMNS, "max_flux_jump"]
        rows = [[r[c] for c in cols] for r in table.rows]
        path = os.path.join(out, f"convergence_k{k}.csv")
        io.write_csv(path, cols, rows, [f"convergence table, k={k}", *_header(cfg)])
        slope_rows = [[name, fit_slope(table.h, table.column(name))]
                      for name in ERROR_COLUMNS + DH_COLUMNS]
        spath = os.path.join(out, f"slopes_k{k}.csv")
        io.write_csv(spath, ["quantity", "slope"], slope_rows,
                     [f"least-squares slopes of log(error) vs log(h), k={k}",
                      f"levels={','.join(map(str, cfg.levels))}"])
        for name, s in slope_rows:
            print(f"k={k} {name:14s} slope {io.format_number(s) if math.isnan(s) else f'{s:.3f}'}")
        paths += [path, spath]
    return paths


def run_optimize(cfg, out):
    background = BackgroundMesh.from_cells(RECOVERY_BBOX, cfg.n_cells)
    shape0 = recovery_shape(initial_outer_points(cfg.n_points, cfg.initial_shape))
    data = recovery_data(cfg.source_sign)
    hcfg = HdgConfig(k=cfg.k[0], tau=cfg.tau)
    bdir = io.ensure_dir(os.path.join(out, "boundary"))
    vdir = io.ensure_dir(os.path.join(out, "fields"))
    cols = ["iteration", "J", "J_aug", "dJ_aug", "xi", "chi", "area", "area_error", "step",
            "backtracks", "n_elements", "max_segment", "hausdorff"]
    rows = []

    def callback(state):
        pts = state.shape.outer.points
        haus = hausdorff_to_circle(pts)
        rows.append([state.iteration, state.J, state.J_aug, state.dJ, state.xi, state.chi,
                     state.area, state.area_error, state.step, state.backtracks,
                     state.n_elements, state.max_segment, haus])
        log.info("iteration %d: J=%.6e area=%.6f hausdorff=%.4e", state.iteration, state.J,
                 state.area, haus)
        if cfg.boundary_every and state.iteration % cfg.boundary_every == 0:
            io.write_polyline(os.path.join(bdir, f"boundary_{state.iteration:04d}.csv"), pts,
                              [f"movable boundary, iteration {state.iteration}"])
        if state.iteration in cfg.vtk_iterations:
            _dump_state(os.path.join(vdir, f"state_{state.iteration:04d}.vtk"), state.shape,
                        background, data, hcfg)

    try:
        history, status = run_optimization(shape0, background, data, hcfg, cfg.opt_config(),
                                           callback)
    finally:
        io.write_csv(os.path.join(out, "history.csv"), cols, rows,
                     ["optimisation history", *_header(cfg)])
    last = history[-1]
    io.write_polyline(os.path.join(out, "boundary_final.csv"), last.shape.outer.points,
                      [f"final movable boundary, iteration {last.iteration}, status {status}"])
    print(f"status: {status}")
    print(f"iterations: {last.iteration}")
    print(f"J: {last.J:.10e}")
    print(f"area error: {last.area_error:.3e}")
    print(f"hausdorff distance to optimal circle: {rows[-1][-1]:.3e}")
    if status not in ("converged", "max_iters"):
        raise OptimizationError(status)
    return status


def _dump_state(path, shape, background, data, hcfg):
    from .shapeopt import Discretization

    disc = Discretization(shape, background, data, hcfg)
    mesh = disc.mesh
    pts, w = map_to_triangles(mesh.element_vertices, 2 * hcfg.k)
    vals = disc.state.eval_u(np.arange(mesh.n_elements)[:, None], pts)
    mean = (w * vals).sum(axis=1) / w.sum(axis=1)
    io.write_vtk(path, mesh, cell_data={"y_h": mean})


def _mesh_info_shape(cfg):
    if cfg.preset == "experiment1":
        prob = ManufacturedProblem()
        return prob.shape, BackgroundMesh.from_cells(prob.bbox, cfg.n_cells)
    if cfg.preset == "experiment2":
        shape = recovery_shape(initial_outer_points(cfg.n_points, cfg.initial_shape))
        return shape, BackgroundMesh.from_cells(RECOVERY_BBOX, cfg.n_cells)
    bbox = (0.0, 0.0, 1.0, 1.0)
    return box_shape(bbox), BackgroundMesh.from_cells(bbox, cfg.n_cells)


def run_mesh_info(cfg, out):
    shape, background = _mesh_info_shape(cfg)
    k = cfg.k[0]
    hcfg = HdgConfig(k=k, tau=cfg.tau)
    mesh = classify_elements(background, shape)
    tm = build_transfer_map(mesh, shape, hcfg.edge_points)
    patches = build_extension_patches(tm, 2 * k + 2)
    rep = check_admissibility(mesh, tm, k, cfg.tau)
    area = polyline_area(shape)
    lines = [
        f"preset: {cfg.preset}",
        f"background triangles: {background.n_triangles}",
        f"elements: {mesh.n_elements}",
        f"edges: {mesh.n_edges} (boundary {len(mesh.boundary_edges)})",
        f"h: {background.h:.6e}",
        f"shape regularity: {rep.rho:.6f}",
        f"R: {rep.R:.6e} (bound {rep.R_bound:.6e}, {'ok' if rep.R_ok else 'violated'})",
        f"max H_perp: {float(rep.H_perp.max()) if rep.H_perp.size else 0.0:.6e} "
        f"(bound {rep.H_bound:.6e}, {'ok' if rep.all_H_ok else 'violated'})",
        f"area(Omega): {area:.12f}",
        f"area(D_h): {mesh.area:.12f}",
        f"area(patches): {patches.area:.12f}",
        f"partition residual: {abs(mesh.area + patches.area - area) / area:.3e}",
    ]
    outer = shape.outer
    if hasattr(outer, "max_segment"):
        lines.append(f"max polyline segment: {outer.max_segment:.6e}")
    if rep.r_e.size:
        counts, edges = np.histogram(rep.r_e, bins=10)
        lines.append("r_e histogram:")
        lines += [f"  [{a:.4f}, {b:.4f}): {c}" for a, b, c in zip(edges[:-1], edges[1:], counts)]
    text = "\n".join(lines)
    print(text)
    with open(os.path.join(out, "mesh_info.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return rep


COMMANDS = {"converge": run_converge, "optimize": run_optimize, "mesh-info": run_mesh_info}


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise io.ConfigError(f"{THREADS_ENV} must be a positive integer") from exc
    if n < 1:
        raise io.ConfigError(f"{THREADS_ENV} must be a positive integer")
    return n


def make_parser():
    parser = argparse.ArgumentParser(prog="hdg-shapeopt", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration entry (repeatable)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = io.read_config(args.config, args.set)
        cfg = build_run_config(args.command, values)
        threads = _thread_limit()
        out = io.ensure_dir(args.out)
    except (io.ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        with threadpool_limits(limits=threads):
            COMMANDS[args.command](cfg, out)
    except (SolverError, OptimizationError, GeometryError, TransferError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
