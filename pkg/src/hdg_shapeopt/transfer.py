"""Transfer paths from the computational boundary to Gamma, extension patches
covering Omega minus D_h, extrapolation, and admissibility diagnostics."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Circle, GeometryError
from .quadrature import gauss_legendre, map_to_triangles


class TransferError(GeometryError):
    """No admissible transfer path could be built for some boundary node."""


N_PATH_SAMPLES = 16
_FALLBACK_ANGLES = np.deg2rad([15, -15, 30, -30, 45, -45, 60, -60, 75, -75])


@dataclass(frozen=True, eq=False)
class TransferMap:
    """Transfer paths attached to every boundary edge of D_h.

    Per boundary edge ``i`` (ordered as ``mesh.boundary_halfedges()``) and
    edge quadrature node ``q`` the map stores the node ``x``, its image
    ``xbar`` on Gamma, the path length ``l`` and the unit tangent ``t``
    pointing from ``x`` towards ``xbar`` (``t = n_h`` when ``l = 0``).
    Edge endpoints use one path per boundary corner so that neighbouring
    extension patches share their sides.
    """

    mesh: object = field(repr=False)
    shape: object = field(repr=False)
    edges: np.ndarray
    owner: np.ndarray
    face: np.ndarray
    tail: np.ndarray
    head: np.ndarray
    normals: np.ndarray
    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    x: np.ndarray
    xbar: np.ndarray
    length: np.ndarray
    tangent: np.ndarray
    component: np.ndarray
    gamma_normal: np.ndarray
    corner_x: np.ndarray
    corner_xbar: np.ndarray
    corner_component: np.ndarray
    prev: np.ndarray
    H_perp: np.ndarray
    h_perp: np.ndarray
    dirichlet: np.ndarray

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def r_e(self):
        return self.H_perp / self.h_perp

    @property
    def R(self):
        return float(self.r_e.max()) if len(self.edges) else 0.0

    @property
    def edge_lengths(self):
        return self.mesh.edge_lengths()[self.edges]

    @property
    def node_weights(self):
        """Physical quadrature weights of the edge nodes, shape (nb, nq)."""
        return 0.5 * self.edge_lengths[:, None] * self.ref_weights[None, :]

    @property
    def edge_param(self):
        """Edge parameter in [-1, 1] of each node in the global edge orientation."""
        flip = self.mesh.edges[self.edges, 0] != self.tail
        return np.where(flip[:, None], -self.ref_nodes[None, :], self.ref_nodes[None, :])


def _path_crosses(mesh, kept, x, t, l):
    """True where the open segment x -> x + l t meets interior(D_h)."""
    bg = mesh.background
    frac = np.arange(1, N_PATH_SAMPLES + 1) / (N_PATH_SAMPLES + 1)
    pts = x[:, None, :] + (l[:, None, None] * frac[None, :, None]) * t[:, None, :]
    tri = bg.locate(pts)
    hit = np.zeros(pts.shape[:2], dtype=bool)
    sel = tri >= 0
    sel[sel] = kept[tri[sel]]
    if not sel.any():
        return hit.any(axis=1)
    v = bg.vertices[bg.triangles[tri[sel]]]
    p = pts[sel]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    w = p - v[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    b1 = (w[:, 0] * e2[:, 1] - w[:, 1] * e2[:, 0]) / det
    b2 = (e1[:, 0] * w[:, 1] - e1[:, 1] * w[:, 0]) / det
    b0 = 1 - b1 - b2
    hit[sel] = np.minimum(np.minimum(b0, b1), b2) > 1e-9
    return hit.any(axis=1)


def _cast(shape, x, d):
    best = np.full(len(x), np.inf)
    comp = np.full(len(x), -1)
    for ci, c in enumerate(shape.components):
        s = c.ray_hit(x, d)
        better = s < best
        best[better] = s[better]
        comp[better] = ci
    return best, comp


def _closest(shape, x):
    dists = np.array([c.distance(x) for c in shape.components])
    comp = dists.argmin(axis=0)
    xbar = np.empty_like(x)
    for ci, c in enumerate(shape.components):
        sel = comp == ci
        if sel.any():
            xbar[sel] = c.closest(x[sel])
    return xbar, comp


def map_points(mesh, shape, x, d, labels=None, slack=2.0):
    """Map points of Gamma_h to Gamma along admissible straight paths.

    Candidates are the ray ``x + s d``, the segment to the closest point of
    Gamma, and rays rotated away from ``d``; a candidate is admissible when
    it leaves D_h outwards without re-entering it.  The ray along ``d`` is
    kept unless it is more than ``slack`` times longer than the distance to
    Gamma, otherwise the shortest admissible candidate wins.  Returns
    ``(xbar, length, tangent, component)``; zero-length paths get
    ``tangent = d``.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    h = mesh.h
    kept = np.zeros(mesh.background.n_triangles, dtype=bool)
    kept[mesh.element_ids] = True
    n = len(x)
    xbar = np.empty_like(x)
    length = np.full(n, np.inf)
    comp = np.full(n, -1)

    dist = shape.distance(x)
    on_gamma = dist <= 1e-10 * h
    if on_gamma.any():
        xb, cp = _closest(shape, x[on_gamma])
        xbar[on_gamma] = xb
        length[on_gamma] = 0.0
        comp[on_gamma] = cp
    todo = np.nonzero(~on_gamma)[0]
    if not len(todo):
        return xbar, length, d.copy(), comp

    def offer(idx, dirs, s, cp):
        ok = np.isfinite(s) & (s <= 4 * h)
        if ok.any():
            ok[ok] = ~_path_crosses(mesh, kept, x[idx[ok]], dirs[ok], s[ok])
        better = ok & (s < length[idx])
        j = idx[better]
        xbar[j] = x[j] + s[better, None] * dirs[better]
        length[j] = s[better]
        comp[j] = cp[better]

    s, cp = _cast(shape, x[todo], d[todo])
    offer(todo, d[todo], s, cp)
    redo = todo[length[todo] > slack * dist[todo]]
    if len(redo):
        xb, cp = _closest(shape, x[redo])
        diff = xb - x[redo]
        l = np.hypot(diff[:, 0], diff[:, 1])
        t = diff / l[:, None]
        l = np.where(np.einsum("ij,ij->i", t, d[redo]) > 0, l, np.inf)
        offer(redo, t, l, cp)
        for ang in _FALLBACK_ANGLES:
            c, sn = math.cos(ang), math.sin(ang)
            dd = d[redo]
            rot = np.column_stack([c * dd[:, 0] - sn * dd[:, 1], sn * dd[:, 0] + c * dd[:, 1]])
            s, cp = _cast(shape, x[redo], rot)
            offer(redo, rot, s, cp)
    bad = np.nonzero(~np.isfinite(length))[0]
    if len(bad):
        where = bad if labels is None else np.asarray(labels)[bad]
        raise TransferError(
            "no admissible transfer path for boundary edge(s) "
            f"{sorted(set(np.ravel(where).tolist()))[:10]}; refine the background mesh")
    tangent = d.copy()
    pos = length > 0
    tangent[pos] = (xbar[pos] - x[pos]) / length[pos, None]
    return xbar, length, tangent, comp


def _corner_pairs(mesh, tail, head):
    """Successor boundary half-edge across each exterior corner."""
    verts = mesh.vertices
    out_by_vertex = {}
    for j, v in enumerate(tail):
        out_by_vertex.setdefault(int(v), []).append(j)
    nxt = np.empty(len(tail), dtype=np.int64)
    for i, v in enumerate(head):
        cands = out_by_vertex[int(v)]
        if len(cands) == 1:
            nxt[i] = cands[0]
            continue
        p = verts[v]
        a_in = math.atan2(*(verts[tail[i]] - p)[::-1])
        gaps = [((math.atan2(*(verts[head[j]] - p)[::-1]) - a_in) % (2 * math.pi)) or 2 * math.pi
                for j in cands]
        nxt[i] = cands[int(np.argmin(gaps))]
    prev = np.empty_like(nxt)
    prev[nxt] = np.arange(len(nxt))
    return nxt, prev


def build_transfer_map(mesh, shape, q_per_edge):
    """Transfer paths for the nodes of a ``q_per_edge``-point Gauss rule on
    every boundary edge, plus one path per boundary corner."""
    if q_per_edge < 1:
        raise ValueError("q_per_edge must be positive")
    edges, tail, head, owner, face = mesh.boundary_halfedges()
    nb = len(edges)
    verts = mesh.vertices
    normals = mesh.face_normals()[owner, face]
    h_perp = mesh.face_heights()[owner, face]
    ref, w = gauss_legendre(q_per_edge)

    pt = verts[tail]
    ph = verts[head]
    # nodes parametrised from tail (-1) to head (+1)
    x = 0.5 * (pt + ph)[:, None, :] + 0.5 * ref[None, :, None] * (ph - pt)[:, None, :]
    dirs = np.broadcast_to(normals[:, None, :], x.shape).reshape(-1, 2)
    labels = np.repeat(edges, q_per_edge)
    xbar, length, tangent, comp = map_points(mesh, shape, x.reshape(-1, 2), dirs, labels)
    xbar = xbar.reshape(x.shape)
    length = length.reshape(nb, q_per_edge)
    tangent = tangent.reshape(x.shape)
    comp = comp.reshape(nb, q_per_edge)

    nxt, prev = _corner_pairs(mesh, tail, head)
    # corner i sits at head[i], between half-edges i and nxt[i]
    cx = verts[head]
    a_in = np.arctan2(*(verts[tail] - cx).T[::-1])
    a_out = np.arctan2(*(verts[head[nxt]] - cx).T[::-1])
    gap = (a_out - a_in) % (2 * np.pi)
    gap = np.where(gap == 0, 2 * np.pi, gap)
    bis = a_in + 0.5 * gap
    cdir = np.column_stack([np.cos(bis), np.sin(bis)])
    cxbar, _, _, ccomp = map_points(mesh, shape, cx, cdir, edges)

    gamma_normal = np.empty_like(xbar)
    for ci, c in enumerate(shape.components):
        sel = comp == ci
        if sel.any():
            gamma_normal[sel] = c.normal(xbar[sel])

    # H_e: longest transfer path attached to the edge
    clen = np.hypot(*(cxbar - cx).T)
    H = np.maximum(length.max(axis=1), np.maximum(clen, clen[prev]))

    is_dir = np.array([c.dirichlet for c in shape.components])
    frac_dir = (w[None, :] * is_dir[comp]).sum(axis=1) / w.sum()
    dirichlet = frac_dir >= 0.5
    mixed = (frac_dir > 0) & (frac_dir < 1)
    if mixed.any():
        warnings.warn(
            f"{int(mixed.sum())} boundary edge(s) map onto both Dirichlet and Neumann parts "
            "of Gamma; classified by majority", stacklevel=2)

    return TransferMap(
        mesh=mesh, shape=shape, edges=edges, owner=owner, face=face, tail=tail, head=head,
        normals=normals, ref_nodes=np.asarray(ref), ref_weights=np.asarray(w),
        x=x, xbar=xbar, length=length, tangent=tangent, component=comp,
        gamma_normal=gamma_normal, corner_x=cx, corner_xbar=cxbar, corner_component=ccomp,
        prev=prev, H_perp=H, h_perp=h_perp, dirichlet=dirichlet)


# ---------------------------------------------------------------------------
# extension patches


@dataclass(frozen=True, eq=False)
class ExtensionPatches:
    """Quadrature on the extension patches, concatenated over boundary edges.

    Weights are signed; a fan of triangles from the edge midpoint covers each
    patch, with circular sides integrated on the exact arc.
    """

    points: np.ndarray
    weights: np.ndarray
    patch: np.ndarray
    owner: np.ndarray
    n_patches: int

    @property
    def element(self):
        """Owning element of every quadrature point."""
        return self.owner[self.patch]

    @property
    def areas(self):
        return np.bincount(self.patch, weights=self.weights, minlength=self.n_patches)

    @property
    def area(self):
        return float(self.weights.sum())

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _arc_fan(m, circle, th0, dth, degree):
    ns = max(1, (degree + 3) // 2)
    nt = max(4, degree // 2 + 3)
    s, ws = gauss_legendre(ns)
    u, wu = gauss_legendre(nt)
    s = 0.5 * (s + 1)
    ws = 0.5 * ws
    u = 0.5 * (u + 1)
    wu = 0.5 * wu
    th = th0 + dth * u
    P = circle.point(th)
    dP = circle.radius * np.column_stack([-np.sin(th), np.cos(th)])
    rel = P - m
    det = rel[:, 0] * dP[:, 1] - rel[:, 1] * dP[:, 0]
    pts = m + s[:, None, None] * rel[None, :, :]
    wts = (ws * s)[:, None] * (wu * det * dth)[None, :]
    return pts.reshape(-1, 2), wts.ravel()


def build_extension_patches(tm, degree):
    """Quadrature on every extension patch exact to ``degree`` on straight pieces."""
    mesh = tm.mesh
    shape = tm.shape
    verts = mesh.vertices
    pts_all, wts_all, pid_all = [], [], []
    tris = []
    tri_pid = []
    area_tol = 1e-14 * mesh.h ** 2
    for i in range(tm.n_edges):
        pt = verts[tm.tail[i]]
        ph = verts[tm.head[i]]
        m = 0.5 * (pt + ph)
        jt = tm.prev[i]
        qt = tm.corner_xbar[jt]
        qh = tm.corner_xbar[i]
        ct = tm.corner_component[jt]
        ch = tm.corner_component[i]
        local = [(pt, qt)]
        arc_pieces = []
        if ct == ch:
            comp = shape.components[ct]
            if isinstance(comp, Circle):
                th0 = comp.param(qt)
                dth = _wrap_angle(comp.param(qh) - th0)
                arc_pieces.append((comp, float(th0), float(dth)))
            else:
                s0 = comp.param(qt[None])[0]
                gap = comp.param_gap(s0, comp.param(qh[None])[0])
                chain = [qt, *comp.vertices_between(s0, gap), qh]
                local.extend(zip(chain[:-1], chain[1:]))
        else:
            local.append((qt, qh))
        local.append((qh, ph))
        for a, b in local:
            tris.append((m, a, b))
            tri_pid.append(i)
        for comp, th0, dth in arc_pieces:
            if abs(dth) * comp.radius ** 2 < area_tol:
                continue
            p, w = _arc_fan(m, comp, th0, dth, degree)
            pts_all.append(p)
            wts_all.append(w)
            pid_all.append(np.full(len(w), i))
    if tris:
        tv = np.array(tris)
        p, w = map_to_triangles(tv, degree)
        pts_all.append(p.reshape(-1, 2))
        wts_all.append(w.ravel())
        pid_all.append(np.repeat(np.array(tri_pid), p.shape[1]))
    if pts_all:
        points = np.concatenate(pts_all)
        weights = np.concatenate(wts_all)
        patch = np.concatenate(pid_all)
    else:
        points = np.zeros((0, 2))
        weights = np.zeros(0)
        patch = np.zeros(0, dtype=np.int64)
    # fitted edges: drop the vanishing contributions entirely
    areas = np.bincount(patch, weights=weights, minlength=tm.n_edges)
    keep = np.abs(areas[patch]) >= area_tol
    return ExtensionPatches(points[keep], weights[keep], patch[keep], tm.owner, tm.n_edges)


def _wrap_angle(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


# ---------------------------------------------------------------------------
# extrapolation


def extrapolate(coeffs, basis, element, points):
    """Evaluate the polynomial of ``element`` at (possibly external) points.

    ``coeffs`` has shape (nb,) or (nb, m) for ``m`` fields at once.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi = basis.values(np.full(len(points), element), points)
    return phi @ coeffs


def element_for_points(mesh, pts, candidates=8):
    """Element of D_h used to evaluate discrete fields at arbitrary points.

    Points inside D_h get their own element; the others get the owner of the
    nearest boundary edge (exact point-to-segment distance among the
    ``candidates`` edges with the closest midpoints).
    """
    pts = np.asarray(pts, dtype=float)
    flat = pts.reshape(-1, 2)
    lookup = np.full(mesh.background.n_triangles, -1, dtype=np.int64)
    lookup[mesh.element_ids] = np.arange(mesh.n_elements)
    tri = mesh.background.locate(flat)
    out = np.where(tri >= 0, lookup[np.maximum(tri, 0)], -1)
    miss = np.nonzero(out < 0)[0]
    if len(miss):
        be, tail, head, owner, _ = mesh.boundary_halfedges()
        a = mesh.vertices[tail]
        b = mesh.vertices[head]
        m = min(candidates, len(be))
        _, idx = cKDTree(0.5 * (a + b)).query(flat[miss], k=m)
        idx = idx.reshape(len(miss), m)
        p = flat[miss][:, None, :]
        d = b[idx] - a[idx]
        s = np.clip(np.einsum("mcd,mcd->mc", p - a[idx], d) / np.einsum("mcd,mcd->mc", d, d), 0, 1)
        dist = np.linalg.norm(p - a[idx] - s[..., None] * d, axis=-1)
        out[miss] = owner[idx[np.arange(len(miss)), dist.argmin(axis=1)]]
    return out.reshape(pts.shape[:-1])


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    r: float
    rho: float
    R: float
    H_perp: np.ndarray = field(repr=False)
    r_e: np.ndarray = field(repr=False)
    H_bound: float
    R_bound: float
    C_ext: float
    C_inv: float

    @property
    def H_ok(self):
        return self.H_perp <= self.H_bound

    @property
    def all_H_ok(self):
        return bool(np.all(self.H_ok))

    @property
    def R_ok(self):
        return self.R < self.R_bound

    @property
    def passed(self):
        return self.all_H_ok and self.R_ok


def distance_bound(tau, a_inv_max):
    """Largest admissible boundary gap H_e for stabilisation ``tau``."""
    return 1.0 / (4.0 * tau * min(1.0, 1.0 + a_inv_max))


def proximity_bound(k, rho, C1=1.0, C2=1.0):
    """Upper bound for R from the extrapolation and inverse constants."""
    beta = 1.0 / rho
    c_ext = C1 * (k + 1) ** 2 * (3 * beta + 2) ** k
    c_inv = C2 * k ** 2
    return 2 ** (-1 / 3) * (c_inv * c_ext) ** (-2 / 3), c_ext, c_inv


def check_admissibility(mesh, tm, k, tau, a=None):
    """Evaluate the geometric admissibility conditions; never raises."""
    bg = mesh.background
    rho = bg.shape_regularity()
    if a is None or tm.n_edges == 0:
        a_inv_max = 1.0
    else:
        vals = np.asarray(a(tm.x.reshape(-1, 2)), dtype=float)
        a_inv_max = float(np.max(1.0 / vals))
    H_bound = distance_bound(tau, a_inv_max)
    R_bound, c_ext, c_inv = proximity_bound(k, rho)
    r_e = tm.r_e if tm.n_edges else np.zeros(0)
    return AdmissibilityReport(
        r=bg.h_min / bg.h, rho=rho, R=float(r_e.max()) if len(r_e) else 0.0,
        H_perp=tm.H_perp.copy(), r_e=r_e.copy(), H_bound=H_bound, R_bound=R_bound,
        C_ext=c_ext, C_inv=c_inv)

