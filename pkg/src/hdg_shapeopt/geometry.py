"""Background triangulation, curved domains and the computational mesh D_h."""

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class GeometryError(ValueError):
    """Raised for invalid shapes or meshes that cannot host a computation."""


# ---------------------------------------------------------------------------
# background mesh


@dataclass(frozen=True, eq=False)
class BackgroundMesh:
    """Uniform right-triangle split of an ``nx`` by ``ny`` grid of a box.

    Cell (i, j) is split along the diagonal from its lower-left to its
    upper-right corner; triangle ``2*(j*nx + i)`` is the lower one.
    """

    bbox: tuple
    nx: int
    ny: int
    vertices: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)

    @classmethod
    def from_cells(cls, bbox, nx, ny=None):
        ny = nx if ny is None else ny
        x0, y0, x1, y1 = map(float, bbox)
        xs = np.linspace(x0, x1, nx + 1)
        ys = np.linspace(y0, y1, ny + 1)
        X, Y = np.meshgrid(xs, ys)
        verts = np.column_stack([X.ravel(), Y.ravel()])
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        i = i.ravel()
        j = j.ravel()
        v00 = j * (nx + 1) + i
        v10 = v00 + 1
        v01 = v00 + nx + 1
        v11 = v01 + 1
        tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
        tris[0::2] = np.column_stack([v00, v10, v11])
        tris[1::2] = np.column_stack([v00, v11, v01])
        return cls((x0, y0, x1, y1), nx, ny, verts, tris)

    @property
    def dx(self):
        return (self.bbox[2] - self.bbox[0]) / self.nx

    @property
    def dy(self):
        return (self.bbox[3] - self.bbox[1]) / self.ny

    @property
    def h(self):
        return math.hypot(self.dx, self.dy)

    @property
    def h_min(self):
        # every triangle is congruent, so min and max diameters agree
        return self.h

    @property
    def n_triangles(self):
        return len(self.triangles)

    def shape_regularity(self):
        """Inscribed-circle diameter over element diameter."""
        a, b = self.dx, self.dy
        c = math.hypot(a, b)
        return (a + b - c) / c

    def locate(self, pts):
        """Background triangle index containing each point (-1 outside)."""
        pts = np.asarray(pts, dtype=float)
        x0, y0, x1, y1 = self.bbox
        u = (pts[..., 0] - x0) / self.dx
        v = (pts[..., 1] - y0) / self.dy
        i = np.floor(u).astype(np.int64)
        j = np.floor(v).astype(np.int64)
        inside = (i >= 0) & (i < self.nx) & (j >= 0) & (j < self.ny)
        i = np.clip(i, 0, self.nx - 1)
        j = np.clip(j, 0, self.ny - 1)
        upper = (v - j) > (u - i)
        tri = 2 * (j * self.nx + i) + upper
        return np.where(inside, tri, -1)


def build_background_mesh(bbox, h_target):
    """Uniform triangulation of ``bbox`` with element diameter <= ``h_target``."""
    x0, y0, x1, y1 = map(float, bbox)
    width, height = x1 - x0, y1 - y0
    if not (width > 0 and height > 0):
        raise GeometryError(f"degenerate bounding box {bbox!r}")
    if not h_target > 0:
        raise GeometryError("h_target must be positive")
    if h_target > max(width, height):
        raise GeometryError(
            f"h_target={h_target} exceeds the box extent {max(width, height)}")
    side = h_target / math.sqrt(2.0)
    nx = max(1, math.ceil(width / side - 1e-9))
    ny = max(1, math.ceil(height / side - 1e-9))
    return BackgroundMesh.from_cells((x0, y0, x1, y1), nx, ny)


# ---------------------------------------------------------------------------
# boundary components


def _wrap(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class Circle:
    """Circular boundary component, stored analytically.

    ``hole=True`` means Omega lies outside the circle.  ``dirichlet`` marks
    the component as fixed (Gamma_D) for the deformation field.
    """

    center: tuple
    radius: float
    hole: bool = False
    dirichlet: bool = True

    @property
    def sign(self):
        return -1.0 if self.hole else 1.0

    @property
    def length(self):
        return 2 * np.pi * self.radius

    @property
    def signed_area(self):
        return self.sign * np.pi * self.radius ** 2

    def distance(self, pts):
        d = np.asarray(pts) - np.asarray(self.center)
        return np.abs(np.hypot(d[..., 0], d[..., 1]) - self.radius)

    def outside(self, pts, tol):
        """True where a point lies strictly on the non-Omega side."""
        d = np.asarray(pts) - np.asarray(self.center)
        r = np.hypot(d[..., 0], d[..., 1])
        if self.hole:
            return r < self.radius - tol
        return r > self.radius + tol

    def cuts(self, tri, tol):
        """True where a triangle (n, 3, 2) reaches the non-Omega side.

        Vertices are assumed already tested; for a hole the edges can still
        dip into the disk, and the disk can sit inside the triangle.
        """
        if not self.hole:
            return np.zeros(len(tri), dtype=bool)
        c = np.asarray(self.center)
        a = tri
        b = tri[:, [1, 2, 0]]
        ab = b - a
        u = np.clip(np.einsum("nki,nki->nk", c - a, ab) / np.einsum("nki,nki->nk", ab, ab), 0, 1)
        foot = a + u[..., None] * ab
        dist = np.hypot(*(foot - c).transpose(2, 0, 1)).min(axis=1)
        return (dist < self.radius - tol) | _point_in_triangles(c, tri)

    def ray_hit(self, x, d):
        """Smallest positive s with |x + s d - c| = R (inf if none)."""
        m = x - np.asarray(self.center)
        b = np.einsum("...i,...i", m, d)
        c = np.einsum("...i,...i", m, m) - self.radius ** 2
        disc = b * b - c
        sq = np.sqrt(np.maximum(disc, 0.0))
        s1 = -b - sq
        s2 = -b + sq
        eps = 1e-14 * self.radius
        s = np.where(s1 > eps, s1, np.where(s2 > eps, s2, np.inf))
        return np.where(disc >= 0, s, np.inf)

    def closest(self, pts):
        d = np.asarray(pts) - np.asarray(self.center)
        r = np.hypot(d[..., 0], d[..., 1])
        r = np.where(r == 0, 1.0, r)
        return np.asarray(self.center) + self.radius * d / r[..., None]

    def normal(self, pts):
        """Unit normal pointing out of Omega at boundary points."""
        d = np.asarray(pts) - np.asarray(self.center)
        return self.sign * d / np.hypot(d[..., 0], d[..., 1])[..., None]

    def param(self, pts):
        d = np.asarray(pts) - np.asarray(self.center)
        return np.arctan2(d[..., 1], d[..., 0])

    def param_gap(self, s0, s1):
        """Signed parameter increment from s0 to s1 along the orientation."""
        return self.sign * _wrap(np.asarray(s1) - np.asarray(s0))

    def point(self, theta):
        return np.asarray(self.center) + self.radius * np.stack(
            [np.cos(theta), np.sin(theta)], axis=-1)

    def sample(self, n):
        theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
        if self.hole:
            theta = -theta
        return self.point(theta)


@dataclass(frozen=True, eq=False)
class Polyline:
    """Closed polygonal boundary component (the movable part of Gamma).

    Vertices are stored so that Omega lies to the left: counter-clockwise
    for the outer boundary, clockwise for a hole.
    """

    points: np.ndarray
    hole: bool = False
    dirichlet: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise GeometryError("polyline needs at least 3 points in 2D")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        ccw = _shoelace(pts) > 0
        if ccw == self.hole:
            pts = pts[::-1].copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        seg = np.roll(pts, -1, axis=0) - pts
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seglen == 0):
            raise GeometryError("polyline has repeated consecutive points")
        cum = np.concatenate([[0.0], np.cumsum(seglen)])
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_seglen", seglen)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_ring", shapely.LinearRing(pts))
        object.__setattr__(self, "_poly", shapely.Polygon(pts))
        shapely.prepare(self._poly)

    @property
    def sign(self):
        return -1.0 if self.hole else 1.0

    @property
    def length(self):
        return self._cum[-1]

    @property
    def signed_area(self):
        return _shoelace(self.points)

    @property
    def max_segment(self):
        return float(self._seglen.max())

    def is_simple(self):
        return bool(self._ring.is_simple)

    def distance(self, pts):
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 2)
        d = shapely.distance(self._ring, shapely.points(flat))
        return d.reshape(pts.shape[:-1])

    def outside(self, pts, tol):
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 2)
        inside = shapely.contains_xy(self._poly, flat[:, 0], flat[:, 1])
        near = self.distance(flat) <= tol
        res = ~near & (inside if self.hole else ~inside)
        return res.reshape(pts.shape[:-1])

    def cuts(self, tri, tol):
        """True where a triangle (n, 3, 2) is not inside the closed region."""
        polys = shapely.polygons(tri)
        if self.hole:
            core = self._poly.buffer(-tol) if tol > 0 else self._poly
            return shapely.intersects(core, polys) & ~shapely.touches(core, polys)
        region = self._poly.buffer(tol) if tol > 0 else self._poly
        return ~shapely.covers(region, polys)

    def ray_hit(self, x, d, chunk=512):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        d = np.asarray(d, dtype=float).reshape(-1, 2)
        p0 = self.points
        e = self._seg
        out = np.full(len(x), np.inf)
        scale = self.length
        for lo in range(0, len(x), chunk):
            xs = x[lo:lo + chunk, None, :]
            ds = d[lo:lo + chunk, None, :]
            w = p0[None] - xs
            den = ds[..., 0] * e[None, :, 1] - ds[..., 1] * e[None, :, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (w[..., 0] * e[None, :, 1] - w[..., 1] * e[None, :, 0]) / den
                u = (w[..., 0] * ds[..., 1] - w[..., 1] * ds[..., 0]) / den
            ok = (np.abs(den) > 1e-300) & (u >= -1e-12) & (u <= 1 + 1e-12) & (s > 1e-14 * scale)
            out[lo:lo + chunk] = np.where(ok, s, np.inf).min(axis=1)
        return out

    def _project(self, pts, chunk=512):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        seg_idx = np.empty(len(pts), dtype=np.int64)
        u_best = np.empty(len(pts))
        l2 = self._seglen ** 2
        for lo in range(0, len(pts), chunk):
            w = pts[lo:lo + chunk, None, :] - self.points[None]
            u = np.clip(np.einsum("nsi,si->ns", w, self._seg) / l2, 0.0, 1.0)
            diff = w - u[..., None] * self._seg[None]
            dist2 = np.einsum("nsi,nsi->ns", diff, diff)
            best = dist2.argmin(axis=1)
            seg_idx[lo:lo + chunk] = best
            u_best[lo:lo + chunk] = u[np.arange(len(best)), best]
        return seg_idx, u_best

    def closest(self, pts):
        pts = np.asarray(pts, dtype=float)
        s, u = self._project(pts)
        out = self.points[s] + u[:, None] * self._seg[s]
        return out.reshape(pts.shape)

    def normal(self, pts):
        pts = np.asarray(pts, dtype=float)
        s, _ = self._project(pts)
        t = self._seg[s] / self._seglen[s][:, None]
        # Omega on the left of the traversal: outward normal is t rotated clockwise
        return np.column_stack([t[:, 1], -t[:, 0]]).reshape(pts.shape)

    def param(self, pts):
        pts = np.asarray(pts, dtype=float)
        s, u = self._project(pts)
        return (self._cum[s] + u * self._seglen[s]).reshape(pts.shape[:-1])

    def param_gap(self, s0, s1):
        L = self.length
        return (np.asarray(s1) - np.asarray(s0) + 0.5 * L) % L - 0.5 * L

    def vertices_between(self, s0, gap):
        """Polyline vertices strictly between arc parameters s0 and s0+gap."""
        L = self.length
        cum = self._cum[:-1]
        rel = (cum - s0) % L
        if gap >= 0:
            sel = np.nonzero((rel > 0) & (rel < gap))[0]
            order = np.argsort(rel[sel])
        else:
            rel = (s0 - cum) % L
            sel = np.nonzero((rel > 0) & (rel < -gap))[0]
            order = np.argsort(rel[sel])
        return self.points[sel[order]]

    def point(self, s):
        s = np.asarray(s, dtype=float) % self.length
        idx = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self.points) - 1)
        u = (s - self._cum[idx]) / self._seglen[idx]
        return self.points[idx] + u[..., None] * self._seg[idx]

    def sample(self, n=None):
        return self.points


def _point_in_triangles(p, tri):
    d = [(tri[:, (i + 1) % 3, 0] - tri[:, i, 0]) * (p[1] - tri[:, i, 1])
         - (tri[:, (i + 1) % 3, 1] - tri[:, i, 1]) * (p[0] - tri[:, i, 0]) for i in range(3)]
    d = np.array(d)
    return np.all(d > 0, axis=0) | np.all(d < 0, axis=0)


def _shoelace(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


# ---------------------------------------------------------------------------
# domain shape


@dataclass(frozen=True, eq=False)
class DomainShape:
    """Omega described by one outer boundary component and optional holes."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        outer = [c for c in comps if not c.hole]
        if len(outer) != 1:
            raise GeometryError("exactly one outer boundary component is required")
        if not any(c.dirichlet for c in comps) or all(c.dirichlet for c in comps):
            # the deformation problem needs both Gamma_D and Gamma_N; the
            # state and adjoint problems do not care, so only record it
            object.__setattr__(self, "_mixed", False)
        else:
            object.__setattr__(self, "_mixed", True)

    @property
    def outer(self):
        return next(c for c in self.components if not c.hole)

    @property
    def holes(self):
        return [c for c in self.components if c.hole]

    @property
    def movable(self):
        return [c for c in self.components if isinstance(c, Polyline)]

    @property
    def has_mixed_boundary(self):
        return self._mixed

    def inside(self, pts, tol=0.0):
        """Closed membership in Omega, with ``tol`` slack on the boundary."""
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=bool)
        for c in self.components:
            out |= c.outside(pts, tol)
        return ~out

    def distance(self, pts):
        return np.min([c.distance(pts) for c in self.components], axis=0)

    def contains_triangles(self, tri, tol=0.0):
        """Exact test of closure(Omega) containing each triangle (n, 3, 2)."""
        tri = np.asarray(tri, dtype=float)
        ok = self.inside(tri, tol).all(axis=1)
        for c in self.components:
            idx = np.nonzero(ok)[0]
            if len(idx):
                ok[idx] = ~c.cuts(tri[idx], tol)
        return ok

    def nearest_component(self, pts):
        return np.argmin([c.distance(pts) for c in self.components], axis=0)

    @property
    def boundary_length(self):
        return sum(c.length for c in self.components)

    def validate(self):
        """Raise GeometryError if the boundary self-intersects or overlaps."""
        for c in self.components:
            if isinstance(c, Polyline) and not c.is_simple():
                raise GeometryError("polyline boundary self-intersects")
        outer = self.outer
        for hole in self.holes:
            pts = hole.sample(64)
            if np.any(outer.outside(pts, 0.0)):
                raise GeometryError("hole is not contained in the outer boundary")
            if isinstance(hole, Circle) and isinstance(outer, Polyline):
                if np.min(outer.distance(np.asarray(hole.center)[None])) <= hole.radius:
                    raise GeometryError("outer polyline intersects a circular hole")
            if isinstance(outer, Circle) and isinstance(hole, Polyline):
                if np.any(outer.outside(hole.points, 0.0)):
                    raise GeometryError("hole polyline leaves the outer circle")
        return self

    def with_outer_points(self, points):
        """Copy of the shape with the movable outer polyline replaced."""
        comps = []
        for c in self.components:
            if isinstance(c, Polyline) and not c.hole:
                comps.append(Polyline(points, hole=False, dirichlet=c.dirichlet))
            else:
                comps.append(c)
        return DomainShape(tuple(comps))


def polyline_area(shape):
    """Area of Omega (shoelace for polylines, exact for circles)."""
    shape.validate()
    area = sum(c.signed_area for c in shape.components)
    if not area > 0:
        raise GeometryError("non-positive domain area")
    return float(area)


def annulus(r_in, r_out, center=(0.0, 0.0), inner_dirichlet=True, outer_dirichlet=False):
    return DomainShape((
        Circle(tuple(center), r_out, hole=False, dirichlet=outer_dirichlet),
        Circle(tuple(center), r_in, hole=True, dirichlet=inner_dirichlet),
    ))


def box_shape(bbox, dirichlet=True):
    x0, y0, x1, y1 = bbox
    pts = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
    return DomainShape((Polyline(pts, hole=False, dirichlet=dirichlet),))


# ---------------------------------------------------------------------------
# computational mesh


@dataclass(frozen=True, eq=False)
class ComputationalMesh:
    """Elements of the background mesh lying in the closure of Omega.

    Local face ``f`` of an element joins its vertices ``f+1`` and ``f+2``
    (mod 3); edges are oriented from the lower to the higher vertex index.
    """

    background: BackgroundMesh = field(repr=False)
    element_ids: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    edge_elements: np.ndarray = field(repr=False)
    edge_faces: np.ndarray = field(repr=False)
    element_edges: np.ndarray = field(repr=False)

    @property
    def vertices(self):
        return self.background.vertices

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def h(self):
        return self.background.h

    @property
    def element_vertices(self):
        return self.vertices[self.elements]

    @property
    def boundary_edges(self):
        return np.nonzero(self.edge_elements[:, 1] < 0)[0]

    @property
    def interior_edges(self):
        return np.nonzero(self.edge_elements[:, 1] >= 0)[0]

    @property
    def is_boundary_edge(self):
        return self.edge_elements[:, 1] < 0

    @property
    def areas(self):
        v = self.element_vertices
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self):
        return float(self.areas.sum())

    def face_vertices(self):
        """Array (n, 3, 2, 2): endpoints of each local face, CCW order."""
        v = self.element_vertices
        return np.stack([v[:, [1, 2, 0]], v[:, [2, 0, 1]]], axis=2)

    def face_lengths(self):
        fv = self.face_vertices()
        d = fv[:, :, 1] - fv[:, :, 0]
        return np.hypot(d[..., 0], d[..., 1])

    def face_normals(self):
        """Outward unit normals per element face, shape (n, 3, 2)."""
        fv = self.face_vertices()
        d = fv[:, :, 1] - fv[:, :, 0]
        L = np.hypot(d[..., 0], d[..., 1])
        return np.stack([d[..., 1], -d[..., 0]], axis=-1) / L[..., None]

    def face_heights(self):
        """Height of each element relative to each of its faces."""
        return 2 * self.areas[:, None] / self.face_lengths()

    def diameters(self):
        return self.face_lengths().max(axis=1)

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def boundary_halfedges(self):
        """Boundary edges oriented with D_h on the left.

        Returns ``(edge_ids, tail, head, owner, face)``.
        """
        be = self.boundary_edges
        owner = self.edge_elements[be, 0]
        face = self.edge_faces[be, 0]
        tri = self.elements[owner]
        tail = tri[np.arange(len(be)), (face + 1) % 3]
        head = tri[np.arange(len(be)), (face + 2) % 3]
        return be, tail, head, owner, face

    def boundary_normals(self):
        be, _, _, owner, face = self.boundary_halfedges()
        return self.face_normals()[owner, face]


def classify_elements(mesh, shape, tol_factor=1e-12):
    """Extract D_h: triangles contained in closure(Omega).

    Vertices and centroid are tested first; triangles close to Gamma are
    then checked exactly, since an edge can cut a concave part of the
    boundary while its endpoints stay inside.  Only the largest
    edge-connected group of triangles is kept.
    """
    tol = tol_factor * mesh.h
    vin = shape.inside(mesh.vertices, tol)
    tri = mesh.triangles
    cen = mesh.vertices[tri].mean(axis=1)
    keep = vin[tri].all(axis=1)
    cand = np.nonzero(keep)[0]
    if len(cand):
        keep[cand] = shape.inside(cen[cand], tol)
    near = np.nonzero(keep)[0]
    near = near[shape.distance(cen[near]) < mesh.h]
    if len(near):
        keep[near] = shape.contains_triangles(mesh.vertices[tri[near]], tol)
    ids = np.nonzero(keep)[0]
    if len(ids) == 0:
        raise GeometryError(
            f"no background element lies inside the domain (h={mesh.h:.3g}); "
            "refine the background mesh")
    return _build_computational_mesh(mesh, ids)


def _build_computational_mesh(mesh, ids):
    elements, edges, edge_elements, edge_faces, element_edges = _skeleton(mesh.triangles[ids])
    # keep the largest edge-connected component
    inner = edge_elements[:, 1] >= 0
    a = edge_elements[inner, 0]
    b = edge_elements[inner, 1]
    n = len(elements)
    adj = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        big = np.argmax(np.bincount(labels))
        ids = ids[labels == big]
        elements, edges, edge_elements, edge_faces, element_edges = _skeleton(mesh.triangles[ids])
    return ComputationalMesh(mesh, ids, elements, edges, edge_elements, edge_faces, element_edges)


def _skeleton(elements):
    n = len(elements)
    fa = elements[:, [1, 2, 0]]
    fb = elements[:, [2, 0, 1]]
    pairs = np.stack([np.minimum(fa, fb), np.maximum(fa, fb)], axis=-1).reshape(-1, 2)
    edges, inv = np.unique(pairs, axis=0, return_inverse=True)
    inv = inv.ravel()
    ne = len(edges)
    elem_of = np.repeat(np.arange(n), 3)
    face_of = np.tile(np.arange(3), n)
    order = np.argsort(inv, kind="stable")
    counts = np.bincount(inv, minlength=ne)
    if np.any(counts > 2):
        raise GeometryError("non-conforming mesh: an edge is shared by more than two elements")
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edge_elements = np.full((ne, 2), -1, dtype=np.int64)
    edge_faces = np.full((ne, 2), -1, dtype=np.int64)
    edge_elements[:, 0] = elem_of[order[start]]
    edge_faces[:, 0] = face_of[order[start]]
    two = counts == 2
    edge_elements[two, 1] = elem_of[order[start[two] + 1]]
    edge_faces[two, 1] = face_of[order[start[two] + 1]]
    element_edges = inv.reshape(n, 3)
    return elements, edges, edge_elements, edge_faces, element_edges
