import math

import numpy as np
import pytest

from hdg_shapeopt.geometry import BackgroundMesh, GeometryError
from hdg_shapeopt.hdg import HdgConfig
from hdg_shapeopt.problems import (RECOVERY_BBOX, TARGET_AREA, initial_outer_points,
                                   recovery_data, recovery_shape)
from hdg_shapeopt.shapeopt import (Discretization, OptConfig, OptimizationError,
                                   armijo_line_search, boundary_mean, compute_chi, deform_shape,
                                   evaluate_shape_gradient, run_optimization,
                                   smooth_boundary_velocity, update_multiplier)


def test_armijo_accepts_sufficient_decrease():
    f = lambda t: (1.0 - t) ** 2  # noqa: E731
    step, value, payload, bt = armijo_line_search(f(0), -2.0, lambda t: (f(t), t), 4.0)
    assert value <= f(0) + 1e-4 * step * -2.0
    assert bt == 2 and step == 1.0 and payload == 1.0


def test_armijo_backtracks_over_infeasible_steps():
    calls = []

    def trial(t):
        calls.append(t)
        return None if t > 0.3 else (-t, t)

    step, *_ = armijo_line_search(0.0, -1.0, trial, 1.0)
    assert step == 0.25 and calls == [1.0, 0.5, 0.25]


def test_armijo_rejects_ascent_direction():
    with pytest.raises(OptimizationError):
        armijo_line_search(0.0, 1.0, lambda t: (0.0, None), 1.0)


def test_armijo_gives_up():
    with pytest.raises(OptimizationError):
        armijo_line_search(0.0, -1.0, lambda t: (1.0, None), 1.0, max_backtracks=3)


def test_multiplier_update():
    assert update_multiplier(2.0, 4.0, 1.5, 1.0, 0.1) == pytest.approx(3.05)


def test_opt_config_validation():
    with pytest.raises(ValueError):
        OptConfig(stop_rule="never")
    with pytest.raises(ValueError):
        OptConfig(c1=1.5)
    with pytest.raises(ValueError):
        OptConfig(velocity_smoothing=-1.0)


def test_smoothing_keeps_uniform_fields():
    pts = initial_outer_points(300, "ellipse")
    v = np.tile([0.3, -0.2], (300, 1))
    np.testing.assert_allclose(smooth_boundary_velocity(pts, v, 0.05), v, atol=1e-14)
    rnd = np.random.default_rng(1).normal(size=(300, 2))
    assert smooth_boundary_velocity(pts, rnd, 0.0) is not None
    np.testing.assert_array_equal(smooth_boundary_velocity(pts, rnd, 0.0), rnd)


def test_deform_shape_guards():
    shape = recovery_shape(initial_outer_points(200, "circle"))
    vel = shape.outer.points.copy()
    assert deform_shape(shape, vel, 0.0) is shape
    with pytest.raises(GeometryError):
        deform_shape(shape, vel, 2.0, RECOVERY_BBOX)
    moved = deform_shape(shape, vel, 0.1, RECOVERY_BBOX)
    np.testing.assert_allclose(moved.outer.points, 1.1 * shape.outer.points)


@pytest.fixture(scope="module")
def disk_discretization():
    bg = BackgroundMesh.from_cells(RECOVERY_BBOX, 48)
    shape = recovery_shape(initial_outer_points(2000, "circle"))
    return Discretization(shape, bg, recovery_data(-1.0), HdgConfig(k=1))


def test_chi_is_minus_mean(disk_discretization):
    d = disk_discretization
    G = np.full(d.tm.x.shape[:2], 2.5)
    assert compute_chi(G, d.tm, d.neumann) == pytest.approx(-2.5)
    assert boundary_mean(G, d.tm, d.neumann) == pytest.approx(2.5)


def test_gradient_nearly_constant_on_optimal_disk(disk_discretization):
    d = disk_discretization
    G = evaluate_shape_gradient(d.state, d.adjoint(), d.data, d.tm, d.shape)[d.neumann]
    assert np.ptp(G) <= 0.1 * abs(G.mean())


@pytest.fixture(scope="module")
def short_run():
    bg = BackgroundMesh.from_cells(RECOVERY_BBOX, 40)
    shape = recovery_shape(initial_outer_points(2000, "ellipse"))
    opt = OptConfig(m0=TARGET_AREA, max_iters=3, stop_rule="both", velocity_smoothing=1.0)
    return run_optimization(shape, bg, recovery_data(-1.0), HdgConfig(k=1), opt)


def test_run_records_every_iterate(short_run):
    history, status = short_run
    assert status == "max_iters"
    assert [s.iteration for s in history] == [0, 1, 2, 3]
    assert math.isnan(history[0].step)


def test_armijo_condition_at_every_accepted_step(short_run):
    for s in short_run[0][1:]:
        new, bound = s.armijo
        assert new <= bound


def test_directional_derivative_is_descent(short_run):
    for s in short_run[0]:
        assert s.dJ <= 1e-10


def test_energy_decreases(short_run):
    aug = [s.J_aug for s in short_run[0]]
    assert aug[-1] < aug[0]


def test_either_rule_stops_early():
    bg = BackgroundMesh.from_cells(RECOVERY_BBOX, 32)
    shape = recovery_shape(initial_outer_points(500, "ellipse"))
    opt = OptConfig(m0=TARGET_AREA, max_iters=5, tol=1.0, stop_rule="either")
    history, status = run_optimization(shape, bg, recovery_data(-1.0), HdgConfig(k=1), opt)
    assert status == "converged" and len(history) == 2
