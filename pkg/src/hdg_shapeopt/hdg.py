"""Unfitted HDG discretisation of the state, adjoint and deformation problems.

All three problems share one scalar mixed operator

    a^{-1} q + grad u = 0,   div q = f   in D_h,

with the numerical flux ``qhat.n = q.n + tau (u - uhat)``.  On boundary
edges of D_h the trace is either tied to transferred Dirichlet data

    uhat = g(xbar) + int_0^l a^{-1} E_h(q)(x + s t) . t ds

(the integral couples the row to the adjacent element's flux, so it is
assembled into the condensed system rather than lagged), or to a prescribed
normal flux.  The deformation field is two copies of the scalar problem
with ``a = 1`` sharing one factorisation.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .basis import ElementBasis, edge_basis
from .quadrature import gauss_legendre, map_to_triangles


class SolverError(RuntimeError):
    """The discrete system could not be solved."""


@dataclass(frozen=True)
class HdgConfig:
    """Discretisation parameters."""

    k: int = 1
    tau: float = 1.0
    volume_degree: int = None
    path_points: int = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("polynomial degree k must be an integer >= 1")
        if not self.tau > 0:
            raise ValueError("stabilisation tau must be positive")
        if self.volume_degree is None:
            object.__setattr__(self, "volume_degree", 2 * self.k + 2)
        if self.path_points is None:
            object.__setattr__(self, "path_points", self.k + 2)

    @property
    def edge_points(self):
        return self.k + 2

    @property
    def error_degree(self):
        return 2 * self.k + 4


def _const(value):
    def f(x):
        return np.full(np.shape(x)[:-1], float(value))
    return f


def _zero_vec(x):
    return np.zeros(np.shape(x))


@dataclass
class ProblemData:
    """Coefficients and data; callables map points (..., 2) to values."""

    a: object = None
    f: object = None
    g: object = None
    grad_g: object = None
    y_target: object = None
    a_bounds: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.a is None:
            self.a = _const(1.0)
        if self.f is None:
            self.f = _const(0.0)
        if self.g is None:
            self.g = _const(0.0)
        if self.grad_g is None:
            self.grad_g = _zero_vec
        if self.y_target is None:
            self.y_target = _const(0.0)
        lo, hi = self.a_bounds
        if not 0 < lo <= hi:
            raise ValueError("diffusivity bounds must satisfy 0 < a_min <= a_max")

    def a_checked(self, x):
        vals = np.asarray(self.a(x), dtype=float)
        lo, hi = self.a_bounds
        if np.any(vals < lo * (1 - 1e-12)) or np.any(vals > hi * (1 + 1e-12)):
            raise ValueError("diffusivity leaves its declared bounds")
        return vals


# ---------------------------------------------------------------------------
# local matrices


def face_quadrature(mesh, k, nq):
    """Edge quadrature seen from every element face, in global edge orientation.

    Returns points (n, 3, nq, 2), weights (n, 3, nq), the edge basis at the
    reference nodes (nq, k+1) and the reference parameters.
    """
    t, w = gauss_legendre(nq)
    ev = mesh.vertices[mesh.edges[mesh.element_edges]]
    mid = 0.5 * (ev[:, :, 0] + ev[:, :, 1])
    half = 0.5 * (ev[:, :, 1] - ev[:, :, 0])
    pts = mid[:, :, None, :] + t[None, None, :, None] * half[:, :, None, :]
    L = 2 * np.hypot(half[..., 0], half[..., 1])
    wts = 0.5 * L[..., None] * w[None, None, :]
    return pts, wts, edge_basis(k, t), t


def assemble_local(mesh, basis, cfg, a, load=None):
    """Local HDG blocks for every element of D_h.

    The unknown ordering per element is ``Q = (q_x, q_y, u)``; the three
    face traces follow in local face order.  The local equations read
    ``K Q + C uhat = F`` and the flux tested on the faces is
    ``H Q + G uhat``.

    Returns a dict with ``A`` (a^{-1}-weighted mass), ``Dx``, ``Dy``
    (``(phi_j, d_x phi_i)``), ``K``, ``C``, ``H``, ``G`` and ``F``.
    """
    k = cfg.k
    nb = basis.nb
    nt = k + 1
    n = mesh.n_elements
    verts = mesh.element_vertices
    pts, w = map_to_triangles(verts, cfg.volume_degree)
    elems = np.arange(n)[:, None]
    phi, dphi = basis.eval(elems, pts)
    ainv = 1.0 / a(pts)
    A = np.einsum("eq,eqi,eqj->eij", w * ainv, phi, phi)
    Dx = np.einsum("eq,eqi,eqj->eij", w, dphi[..., 0], phi)
    Dy = np.einsum("eq,eqi,eqj->eij", w, dphi[..., 1], phi)

    fpts, fw, psi, _ = face_quadrature(mesh, k, cfg.edge_points)
    fphi = basis.values(np.arange(n)[:, None, None], fpts)  # (n, 3, nq, nb)
    nrm = mesh.face_normals()
    Ex = np.einsum("efq,efqi,efqj,ef->eij", fw, fphi, fphi, nrm[..., 0])
    Ey = np.einsum("efq,efqi,efqj,ef->eij", fw, fphi, fphi, nrm[..., 1])
    S = np.einsum("efq,efqi,efqj->eij", fw, fphi, fphi)
    T = np.einsum("efq,efqi,qm->eifm", fw, fphi, psi).reshape(n, nb, 3 * nt)
    Cx = np.einsum("efq,efqi,qm,ef->eifm", fw, fphi, psi, nrm[..., 0]).reshape(n, nb, 3 * nt)
    Cy = np.einsum("efq,efqi,qm,ef->eifm", fw, fphi, psi, nrm[..., 1]).reshape(n, nb, 3 * nt)

    tau = cfg.tau
    Z = np.zeros((n, nb, nb))
    K = np.block([
        [A, Z, -Dx],
        [Z, A, -Dy],
        [Ex - Dx, Ey - Dy, tau * S],
    ])
    C = np.concatenate([Cx, Cy, -tau * T], axis=1)
    H = np.concatenate([Cx, Cy, tau * T], axis=1).transpose(0, 2, 1)
    elen = fw.sum(axis=2)
    G = -tau * np.einsum("ef,mn->efmn", 0.5 * elen, np.eye(nt))
    Gfull = np.zeros((n, 3 * nt, 3 * nt))
    for f in range(3):
        Gfull[:, f * nt:(f + 1) * nt, f * nt:(f + 1) * nt] = G[:, f]
    F = np.zeros((n, 3 * nb))
    if load is not None:
        F[:, 2 * nb:] = load
    return dict(A=A, Dx=Dx, Dy=Dy, K=K, C=C, H=H, G=Gfull, F=F,
                S=S, T=T, Cx=Cx, Cy=Cy, Ex=Ex, Ey=Ey)


def assemble_local_state(mesh, data, cfg):
    """Local blocks of the state problem including the source load."""
    basis = ElementBasis(mesh.element_vertices, cfg.k)
    load = volume_load(mesh, basis, cfg, data.f)
    return assemble_local(mesh, basis, cfg, data.a_checked, load)


def volume_load(mesh, basis, cfg, f):
    """``(f, phi_i)_K`` for every element."""
    pts, w = map_to_triangles(mesh.element_vertices, cfg.volume_degree)
    phi = basis.values(np.arange(mesh.n_elements)[:, None], pts)
    return np.einsum("eq,eq,eqi->ei", w, f(pts), phi)


# ---------------------------------------------------------------------------
# condensed operator


@dataclass(eq=False)
class ScalarHdgSolution:
    """Element coefficients of (q, u) and edge coefficients of uhat."""

    op: object = field(repr=False)
    q: np.ndarray      # (n_elements, nb, 2)
    u: np.ndarray      # (n_elements, nb)
    uhat: np.ndarray   # (n_edges, k+1)

    @property
    def basis(self):
        return self.op.basis

    def eval_u(self, elems, pts):
        phi = self.basis.values(elems, pts)
        return np.einsum("...b,...b->...", phi, self.u[elems])

    def eval_q(self, elems, pts):
        phi = self.basis.values(elems, pts)
        return np.einsum("...b,...bd->...d", phi, self.q[elems])

    def eval_grad_u(self, elems, pts):
        _, dphi = self.basis.eval(elems, pts)
        return np.einsum("...bd,...b->...d", dphi, self.u[elems])


@dataclass(eq=False)
class TensorHdgSolution:
    """Deformation field: rows of sigma, components of V and of Vhat."""

    components: tuple

    @property
    def sigma(self):
        """Coefficients of sigma, shape (n_elements, nb, 2, 2): [.., i, j] = sigma_ij."""
        return np.stack([c.q for c in self.components], axis=2)

    @property
    def V(self):
        return np.stack([c.u for c in self.components], axis=-1)

    @property
    def Vhat(self):
        return np.stack([c.uhat for c in self.components], axis=-1)

    def eval_V(self, elems, pts):
        return np.stack([c.eval_u(elems, pts) for c in self.components], axis=-1)

    def eval_sigma(self, elems, pts):
        return np.stack([c.eval_q(elems, pts) for c in self.components], axis=-2)


class HdgOperator:
    """Statically condensed HDG system on D_h with transferred boundary data.

    Parameters
    ----------
    mesh : ComputationalMesh
    tm : TransferMap
        Supplies the boundary nodes, their images and the paths.
    cfg : HdgConfig
    a : callable, optional
        Diffusivity; defaults to 1.
    dirichlet : bool array over ``tm.edges``, optional
        Which boundary edges carry transferred Dirichlet data; the rest carry
        a prescribed flux.  Defaults to all Dirichlet.
    """

    def __init__(self, mesh, tm, cfg, a=None, dirichlet=None):
        if tm.ref_nodes.shape[0] < cfg.k + 1:
            raise ValueError("transfer map needs at least k+1 nodes per edge")
        self.mesh = mesh
        self.tm = tm
        self.cfg = cfg
        self.a = a if a is not None else _const(1.0)
        self.k = cfg.k
        self.nt = cfg.k + 1
        self.basis = ElementBasis(mesh.element_vertices, cfg.k)
        self.nb = self.basis.nb
        nbd = tm.n_edges
        self.dirichlet = np.ones(nbd, dtype=bool) if dirichlet is None else np.asarray(dirichlet, bool)
        self.loc = assemble_local(mesh, self.basis, cfg, self.a)
        K = self.loc["K"]
        try:
            self.Kinv = np.linalg.inv(K)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular local solver block (tau <= 0 or degenerate element)") from exc
        self.KinvC = self.Kinv @ self.loc["C"]
        self._boundary_blocks()
        self._assemble()

    # -- boundary rows -------------------------------------------------------

    def _boundary_blocks(self):
        tm = self.tm
        nt, nb = self.nt, self.nb
        self.psi_b = edge_basis(self.k, tm.edge_param)            # (nbd, nq, nt)
        self.wq_b = tm.node_weights                                # (nbd, nq)
        # path integral of a^{-1} phi_j t along each transfer path
        npath = self.cfg.path_points
        xi, wx = gauss_legendre(npath)
        s = 0.5 * (xi + 1)[None, None, :] * tm.length[..., None]
        pts = tm.x[:, :, None, :] + s[..., None] * tm.tangent[:, :, None, :]
        ws = 0.5 * wx[None, None, :] * tm.length[..., None]
        owner = tm.owner
        phi = self.basis.values(owner[:, None, None], pts)          # (nbd, nq, np, nb)
        ainv = 1.0 / self.a(pts)
        integ = np.einsum("eqr,eqrb->eqb", ws * ainv, phi)          # (nbd, nq, nb)
        Px = np.einsum("eq,eqm,eqb,eq->emb", self.wq_b, self.psi_b, integ, tm.tangent[..., 0])
        Py = np.einsum("eq,eqm,eqb,eq->emb", self.wq_b, self.psi_b, integ, tm.tangent[..., 1])
        self.P = np.concatenate([Px, Py, np.zeros((tm.n_edges, nt, nb))], axis=2)
        # edge mass (orthonormal Legendre): |e|/2 * I
        self.Me = 0.5 * tm.edge_lengths

    def _dofs(self, edges):
        return edges[..., None] * self.nt + np.arange(self.nt)

    def _assemble(self):
        mesh, tm = self.mesh, self.tm
        nt = self.nt
        n = mesh.n_elements
        H, G = self.loc["H"], self.loc["G"]
        Sk = -H @ self.KinvC + G                                   # (n, 3nt, 3nt)
        self.Sk = Sk
        ldofs = self._dofs(mesh.element_edges).reshape(n, 3 * nt)
        dir_edge = np.zeros(mesh.n_edges, dtype=bool)
        dir_edge[tm.edges[self.dirichlet]] = True
        self.dir_edge = dir_edge
        row_is_dir = dir_edge[mesh.element_edges]                  # (n, 3)
        keep_row = ~np.repeat(row_is_dir, nt, axis=1)               # (n, 3nt)
        rows = np.broadcast_to(ldofs[:, :, None], Sk.shape)
        cols = np.broadcast_to(ldofs[:, None, :], Sk.shape)
        mask = np.broadcast_to(keep_row[:, :, None], Sk.shape)
        r_list = [rows[mask]]
        c_list = [cols[mask]]
        v_list = [Sk[mask]]
        # transferred Dirichlet rows: M uhat_e + P K^{-1} C uhat_K = b_g + P K^{-1} F
        di = np.nonzero(self.dirichlet)[0]
        if len(di):
            own = tm.owner[di]
            PKC = np.einsum("emj,ejc->emc", self.P[di], self.KinvC[own])
            f = tm.face[di]
            PKC[np.arange(len(di))[:, None], np.arange(nt)[None, :],
                f[:, None] * nt + np.arange(nt)[None, :]] += self.Me[di, None]
            rr = self._dofs(tm.edges[di])
            cc = ldofs[own]
            r_list.append(np.broadcast_to(rr[:, :, None], PKC.shape).ravel())
            c_list.append(np.broadcast_to(cc[:, None, :], PKC.shape).ravel())
            v_list.append(PKC.ravel())
        N = mesh.n_edges * nt
        self.n_dofs = N
        self.matrix = sp.coo_matrix(
            (np.concatenate(v_list), (np.concatenate(r_list), np.concatenate(c_list))),
            shape=(N, N)).tocsc()
        self.ldofs = ldofs
        self.keep_row = keep_row
        try:
            self.lu = splu(self.matrix)
        except RuntimeError as exc:
            raise SolverError(
                "condensed HDG system is singular; the scheme is only guaranteed "
                "uniquely solvable on sufficiently fine admissible meshes "
                "(see check_admissibility)") from exc

    # -- solves --------------------------------------------------------------

    def rhs(self, load=None, dirichlet_values=None, neumann_values=None):
        """Condensed right-hand side.

        ``load`` is ``(f, phi_i)`` per element (n, nb); ``dirichlet_values``
        and ``neumann_values`` are values at the transfer-map nodes
        (n_boundary_edges, nq), read on Dirichlet / flux edges respectively.
        """
        mesh, tm = self.mesh, self.tm
        nb = self.nb
        n = mesh.n_elements
        F = np.zeros((n, 3 * nb))
        if load is not None:
            F[:, 2 * nb:] = load
        KinvF = np.einsum("eij,ej->ei", self.Kinv, F)
        b = np.zeros(self.n_dofs)
        contrib = -np.einsum("eij,ej->ei", self.loc["H"], KinvF)
        np.add.at(b, self.ldofs[self.keep_row], contrib[self.keep_row])
        di = np.nonzero(self.dirichlet)[0]
        ni = np.nonzero(~self.dirichlet)[0]
        if len(di):
            bd = np.einsum("emj,ej->em", self.P[di], KinvF[tm.owner[di]])
            if dirichlet_values is not None:
                g = np.asarray(dirichlet_values)[di]
                bd += np.einsum("eq,eqm,eq->em", self.wq_b[di], self.psi_b[di], g)
            b[self._dofs(tm.edges[di])] += bd
        if len(ni) and neumann_values is not None:
            gn = np.asarray(neumann_values)[ni]
            b[self._dofs(tm.edges[ni])] += np.einsum("eq,eqm,eq->em", self.wq_b[ni], self.psi_b[ni], gn)
        return b, F

    def solve(self, load=None, dirichlet_values=None, neumann_values=None):
        b, F = self.rhs(load, dirichlet_values, neumann_values)
        x = self.lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite trace solution")
        return self.recover(x, F)

    def recover(self, x, F):
        nb = self.nb
        uhat = x.reshape(-1, self.nt)
        ul = x[self.ldofs]
        Q = np.einsum("eij,ej->ei", self.Kinv, F - np.einsum("eij,ej->ei", self.loc["C"], ul))
        q = np.stack([Q[:, :nb], Q[:, nb:2 * nb]], axis=-1)
        return ScalarHdgSolution(self, q, Q[:, 2 * nb:].copy(), uhat.copy())

    def load(self, f):
        return volume_load(self.mesh, self.basis, self.cfg, f)

    def boundary_fluxes(self, sol):
        """``<qhat.n, mu>`` on every element face, shape (n, 3, k+1)."""
        Q = np.concatenate([sol.q[..., 0], sol.q[..., 1], sol.u], axis=1)
        ul = sol.uhat.ravel()[self.ldofs]
        out = np.einsum("eij,ej->ei", self.loc["H"], Q) + np.einsum("eij,ej->ei", self.loc["G"], ul)
        return out.reshape(self.mesh.n_elements, 3, self.nt)

    def flux_jumps(self, sol):
        """Sum of ``<qhat.n, mu>`` from both sides of each interior edge."""
        fl = self.boundary_fluxes(sol)
        tot = np.zeros((self.mesh.n_edges, self.nt))
        np.add.at(tot, self.mesh.element_edges, fl)
        return tot[self.mesh.interior_edges]

    def transferred_values(self, sol):
        """Transferred data ``int_0^l a^{-1} E_h(q) . t`` at the boundary nodes."""
        tm = self.tm
        xi, wx = gauss_legendre(self.cfg.path_points)
        s = 0.5 * (xi + 1)[None, None, :] * tm.length[..., None]
        pts = tm.x[:, :, None, :] + s[..., None] * tm.tangent[:, :, None, :]
        ws = 0.5 * wx[None, None, :] * tm.length[..., None]
        qv = sol.eval_q(tm.owner[:, None, None], pts)
        ainv = 1.0 / self.a(pts)
        return np.einsum("eqr,eqrd,eqd->eq", ws * ainv, qv, tm.tangent)


# ---------------------------------------------------------------------------
# problem drivers


def boundary_values(tm, func):
    """Evaluate a callable at the images xbar of the boundary nodes."""
    return np.asarray(func(tm.xbar), dtype=float)


def solve_state(mesh, tm, data, cfg, op=None):
    """State problem ``-div(a grad y) = f`` in Omega, ``y = g`` on Gamma."""
    op = op if op is not None else HdgOperator(mesh, tm, cfg, data.a_checked)
    return op.solve(op.load(data.f), boundary_values(tm, data.g))


def solve_adjoint(mesh, tm, data, cfg, state, op=None, boundary=None):
    """Adjoint problem with source ``y_h - y_target``.

    ``boundary`` optionally supplies non-homogeneous Dirichlet data for the
    adjoint (manufactured tests); the shape-optimisation adjoint uses zero.
    """
    op = op if op is not None else state.op
    load = state.u - op.load(data.y_target)
    gz = boundary_values(tm, boundary) if boundary is not None else None
    return op.solve(load, gz)


def deformation_operator(mesh, tm, cfg):
    return HdgOperator(mesh, tm, cfg, None, dirichlet=tm.dirichlet)


def solve_deformation(mesh, tm, neumann, cfg, op=None, source=None, dirichlet=None):
    """Deformation field: ``-Laplace V = source``, ``V = dirichlet`` on Gamma_D
    (transferred), ``sigma n_h = neumann`` on Gamma_h^N.

    ``neumann`` holds vector values (n_boundary_edges, nq, 2) at the boundary
    nodes, typically ``(G n) o phi``.  ``source`` and ``dirichlet`` are
    optional vector callables.
    """
    op = op if op is not None else deformation_operator(mesh, tm, cfg)
    comps = []
    neumann = np.asarray(neumann, dtype=float)
    for i in range(2):
        load = op.load(lambda x, i=i: source(x)[..., i]) if source is not None else None
        gd = boundary_values(tm, dirichlet)[..., i] if dirichlet is not None else None
        comps.append(op.solve(load, gd, neumann[..., i]))
    return TensorHdgSolution(tuple(comps))


# ---------------------------------------------------------------------------
# error norms


def project_traces(mesh, k, func, nq=None):
    """L2 projection of ``func`` onto P_k of every edge, shape (n_edges, k+1)."""
    nq = nq or k + 3
    t, w = gauss_legendre(nq)
    ev = mesh.vertices[mesh.edges]
    mid = 0.5 * (ev[:, 0] + ev[:, 1])
    half = 0.5 * (ev[:, 1] - ev[:, 0])
    pts = mid[:, None, :] + t[None, :, None] * half[:, None, :]
    psi = edge_basis(k, t)
    return np.einsum("q,eq,qm->em", w, func(pts), psi)


def compute_error_norms(sol, exact_u, exact_q, patches=None, degree=None):
    """L2(Omega) errors of u and q plus the h-weighted trace error.

    The Omega norms integrate over D_h and, when ``patches`` is given, the
    extension patches with extrapolated discrete fields.  The trace error is
    ``(sum_K h_K ||P_M u - uhat||_{dK}^2)^{1/2}`` with P_M the L2 projection
    onto the edge space.
    """
    op = sol.op
    mesh = op.mesh
    k = op.k
    degree = degree or 2 * k + 4
    pts, w = map_to_triangles(mesh.element_vertices, degree)
    elems = np.arange(mesh.n_elements)[:, None]
    eu = (exact_u(pts) - sol.eval_u(elems, pts)) ** 2
    eq = ((exact_q(pts) - sol.eval_q(elems, pts)) ** 2).sum(-1)
    su = float((w * eu).sum())
    sq = float((w * eq).sum())
    if patches is not None and len(patches.weights):
        pe = patches.element
        pp = patches.points
        su += patches.integrate((exact_u(pp) - sol.eval_u(pe, pp)) ** 2)
        sq += patches.integrate(((exact_q(pp) - sol.eval_q(pe, pp)) ** 2).sum(-1))
    proj = project_traces(mesh, k, exact_u)
    diff2 = ((proj - sol.uhat) ** 2).sum(-1) * 0.5 * mesh.edge_lengths()
    hK = mesh.diameters()
    trace = float((hK[:, None] * diff2[mesh.element_edges]).sum())
    return {"u": np.sqrt(max(su, 0.0)), "q": np.sqrt(max(sq, 0.0)), "uhat": np.sqrt(trace)}


def trace_at_boundary_nodes(op, sol):
    """``uhat`` evaluated at the transfer-map nodes, shape (n_boundary_edges, nq)."""
    return np.einsum("eqm,em->eq", op.psi_b, sol.uhat[op.tm.edges])


def flux_at_boundary_nodes(op, sol):
    """``qhat . n_h`` at the transfer-map nodes from the owning element."""
    tm = op.tm
    own = tm.owner[:, None]
    qn = np.einsum("eqd,ed->eq", sol.eval_q(own, tm.x), tm.normals)
    return qn + op.cfg.tau * (sol.eval_u(own, tm.x) - trace_at_boundary_nodes(op, sol))


def energy_identity(op, sol, neumann):
    """Both sides of the discrete energy identity of one scalar component.

    With zero source and zero Dirichlet datum, testing the scheme with the
    solution itself gives

        ||q||^2 + tau ||u - uhat||^2_{dT} + <qhat.n, g_D>_{Gamma_h^D}
            = -<g_N, uhat>_{Gamma_h^N}

    where ``g_D`` is the transferred path integral.  Returns ``(lhs, rhs)``.
    """
    mesh, tm = op.mesh, op.tm
    qq = float((sol.q ** 2).sum())
    fpts, fw, psi, _ = face_quadrature(mesh, op.k, op.cfg.edge_points)
    n = mesh.n_elements
    u_f = sol.eval_u(np.arange(n)[:, None, None], fpts)
    uh_f = np.einsum("qm,efm->efq", psi, sol.uhat[mesh.element_edges])
    jump = op.cfg.tau * float((fw * (u_f - uh_f) ** 2).sum())
    w = tm.node_weights
    d = op.dirichlet
    gD = op.transferred_values(sol)
    bd = float((w[d] * flux_at_boundary_nodes(op, sol)[d] * gD[d]).sum())
    nn = ~d
    rhs = -float((w[nn] * np.asarray(neumann)[nn] * trace_at_boundary_nodes(op, sol)[nn]).sum())
    return qq + jump + bd, rhs
