import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdg_shapeopt.geometry import annulus, box_shape
from hdg_shapeopt.hdg import (HdgConfig, HdgOperator, ProblemData, compute_error_norms,
                              energy_identity, solve_adjoint, solve_deformation, solve_state)
from hdg_shapeopt.problems import ManufacturedProblem
from hdg_shapeopt.transfer import build_extension_patches

from conftest import UNIT_BOX, discretize, poly, random_poly


def monolithic_solve(op, load, g=None, gn=None):
    """Dense solve of the uncondensed system (Q per element and all traces)."""
    mesh, tm = op.mesh, op.tm
    L = op.loc
    n, nb = mesh.n_elements, op.nb
    nq = 3 * nb
    N = n * nq + op.n_dofs
    M = np.zeros((N, N))
    b = np.zeros(N)
    ldofs = op.ldofs
    for e in range(n):
        r = slice(e * nq, (e + 1) * nq)
        M[r, r] = L["K"][e]
        M[r, n * nq + ldofs[e]] += L["C"][e]
        b[e * nq + 2 * nb:(e + 1) * nq] = load[e]
    dir_rows = set()
    for j in np.nonzero(op.dirichlet)[0]:
        dir_rows.update(int(d) for d in op._dofs(tm.edges[j]))
    for e in range(n):
        for a, dof in enumerate(ldofs[e]):
            if int(dof) in dir_rows:
                continue
            M[n * nq + dof, e * nq:(e + 1) * nq] += L["H"][e][a]
            M[n * nq + dof, n * nq + ldofs[e]] += L["G"][e][a]
    for j in np.nonzero(op.dirichlet)[0]:
        dofs = op._dofs(tm.edges[j])
        own = tm.owner[j]
        M[n * nq + dofs, n * nq + dofs] += op.Me[j]
        M[n * nq + dofs, own * nq:(own + 1) * nq] -= op.P[j]
        if g is not None:
            b[n * nq + dofs] += np.einsum("q,qm,q->m", op.wq_b[j], op.psi_b[j], g[j])
    for j in np.nonzero(~op.dirichlet)[0]:
        if gn is not None:
            dofs = op._dofs(tm.edges[j])
            b[n * nq + dofs] += np.einsum("q,qm,q->m", op.wq_b[j], op.psi_b[j], gn[j])
    x = np.linalg.solve(M, b)
    Q = x[:n * nq].reshape(n, nq)
    return Q, x[n * nq:]


def _check_equivalence(mesh, tm, cfg, dirichlet=None):
    rng = np.random.default_rng(3)
    op = HdgOperator(mesh, tm, cfg, dirichlet=dirichlet)
    load = rng.normal(size=(mesh.n_elements, op.nb))
    g = rng.normal(size=tm.x.shape[:2])
    gn = rng.normal(size=tm.x.shape[:2])
    sol = op.solve(load, g, gn)
    Q, uhat = monolithic_solve(op, load, g, gn)
    nb = op.nb
    ref = np.concatenate([sol.q[..., 0], sol.q[..., 1], sol.u], axis=1)
    scale = max(1.0, np.abs(Q).max())
    assert np.abs(Q - ref).max() <= 1e-10 * scale
    assert np.abs(uhat - sol.uhat.ravel()).max() <= 1e-10 * max(1.0, np.abs(uhat).max())
    return nb


@pytest.mark.parametrize("k", [1, 2])
def test_condensed_equals_monolithic_fitted(fitted_square, k):
    mesh, tm, _ = discretize(fitted_square, UNIT_BOX, 2)
    assert mesh.n_elements <= 8
    _check_equivalence(mesh, tm, HdgConfig(k=k))


@pytest.mark.parametrize("k", [1, 2])
def test_condensed_equals_monolithic_unfitted(small_disk, k):
    shape, bbox = small_disk
    mesh, tm, _ = discretize(shape, bbox, 4)
    assert mesh.n_elements <= 8
    assert tm.length.max() > 0
    _check_equivalence(mesh, tm, HdgConfig(k=k))


def test_condensed_equals_monolithic_mixed(fitted_square):
    mesh, tm, _ = discretize(fitted_square, UNIT_BOX, 2)
    mixed = tm.x[:, :, 0].mean(axis=1) < 1e-12
    _check_equivalence(mesh, tm, HdgConfig(k=1), dirichlet=mixed)


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_state_exact_for_polynomials(k, seed):
    u, grad, lap = poly(random_poly(np.random.default_rng(seed), k))
    data = ProblemData(f=lambda x: -lap(x), g=u, grad_g=grad, y_target=u)
    mesh, tm, cfg = discretize(box_shape(UNIT_BOX), UNIT_BOX, 3, k)
    sol = solve_state(mesh, tm, data, cfg)
    err = compute_error_norms(sol, u, lambda x: -grad(x))
    assert max(err.values()) <= 1e-9


@settings(max_examples=6, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_adjoint_exact_for_polynomials(k, seed):
    rng = np.random.default_rng(seed)
    y, gy, ly = poly(random_poly(rng, k))
    z, gz, lz = poly(random_poly(rng, k))
    # -lap z = y - y_target  with the exact state y reproduced by the scheme
    data = ProblemData(f=lambda x: -ly(x), g=y, grad_g=gy, y_target=lambda x: y(x) + lz(x))
    mesh, tm, cfg = discretize(box_shape(UNIT_BOX), UNIT_BOX, 3, k)
    state = solve_state(mesh, tm, data, cfg)
    adj = solve_adjoint(mesh, tm, data, cfg, state, boundary=z)
    err = compute_error_norms(adj, z, lambda x: -gz(x))
    assert max(err.values()) <= 1e-9


@pytest.mark.parametrize("k", [1, 2, 3])
def test_deformation_exact_for_polynomials(k):
    rng = np.random.default_rng(k)
    comps = [poly(random_poly(rng, k)) for _ in range(2)]
    mesh, tm, cfg = discretize(box_shape(UNIT_BOX), UNIT_BOX, 3, k)
    left = tm.x[:, :, 0].mean(axis=1) < 1e-12
    op = HdgOperator(mesh, tm, cfg, dirichlet=left)
    V = lambda x: np.stack([c[0](x) for c in comps], axis=-1)  # noqa: E731
    src = lambda x: np.stack([-c[2](x) for c in comps], axis=-1)  # noqa: E731
    neu = np.stack([np.einsum("eqd,ed->eq", -c[1](tm.x), tm.normals) for c in comps], axis=-1)
    sol = solve_deformation(mesh, tm, neu, cfg, op=op, source=src, dirichlet=V)
    for (u, grad, _), comp in zip(comps, sol.components):
        err = compute_error_norms(comp, u, lambda x, g=grad: -g(x))
        assert max(err.values()) <= 1e-9


@pytest.mark.parametrize("k", [1, 2])
def test_flux_single_valued(k):
    prob = ManufacturedProblem()
    mesh, tm, cfg = discretize(prob.shape, prob.bbox, 24, k)
    sol = solve_state(mesh, tm, prob.data, cfg)
    assert np.abs(sol.op.flux_jumps(sol)).max() <= 1e-9


@pytest.mark.parametrize("k", [1, 2])
def test_energy_identity(k):
    shape = annulus(0.05, 0.2)
    mesh, tm, cfg = discretize(shape, (-0.25, -0.25, 0.25, 0.25), 24, k)
    op = HdgOperator(mesh, tm, cfg, dirichlet=tm.dirichlet)
    rng = np.random.default_rng(0)
    gn = np.where(tm.dirichlet[:, None], 0.0, rng.normal(size=tm.x.shape[:2]))
    sol = op.solve(None, None, gn)
    lhs, rhs = energy_identity(op, sol, gn)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)
    assert rhs > 0


def test_constant_error_norm():
    mesh, tm, cfg = discretize(box_shape(UNIT_BOX), UNIT_BOX, 3)
    data = ProblemData(f=lambda x: 0 * x[..., 0], g=lambda x: 0 * x[..., 0])
    sol = solve_state(mesh, tm, data, cfg)
    err = compute_error_norms(sol, lambda x: 0 * x[..., 0] + 0.5, lambda x: 0 * x)
    assert err["u"] == pytest.approx(0.5, rel=1e-12)


def test_unfitted_solution_converges():
    prob = ManufacturedProblem()
    errs = []
    for n in (16, 32):
        mesh, tm, cfg = discretize(prob.shape, prob.bbox, n)
        sol = solve_state(mesh, tm, prob.data, cfg)
        errs.append(compute_error_norms(sol, prob.y, prob.p, build_extension_patches(tm, 6))["u"])
    assert errs[1] < errs[0] / 3


def test_invalid_config():
    with pytest.raises(ValueError):
        HdgConfig(k=0)
    with pytest.raises(ValueError):
        HdgConfig(tau=0.0)
