"""Boundary sampling and adaptive triangulation of a spherical patch.

The mean value interpolant is very smooth away from the boundary, so
the patch interior is meshed with a graded triangulation: edge length
near the boundary matches the boundary sample spacing and grows
linearly with geodesic distance from it.  Strategy:

1. stereographically project the boundary from the antipode of the
   patch centroid (bijective on the patch, even past 180 degrees),
2. place interior points deterministically on a quadtree driven by the
   sizing field (converted to plane lengths via the conformal factor),
3. Delaunay-triangulate, keep triangles whose centroids fall inside the
   boundary loop, and lift interior points back to the sphere.

Boundary conformity is enforced by keeping interior points out of the
diametral disks of boundary edges (removing offenders and
re-triangulating if any survive), so the mesh boundary is exactly the
input polygon, in order.  Everything is deterministic: the same
boundary yields byte-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import sphere
from .errors import DegeneratePolyline, OutsidePatch, TriangulationFailure
from .smvc import SphericalPolygon, interior_point

# Sizing field: target edge length = max(spacing, GRADING * distance to
# boundary), clamped to MAX_EDGE radians (protects spherical barycentric
# validity; no triangle may span ~90 degrees).
GRADING = 0.5
MAX_EDGE = 0.35

# Interior points closer to the boundary than this fraction of the local
# target size are dropped (they would break boundary-edge conformity).
BOUNDARY_CLEARANCE = 0.75

# Quadtree cells stop splitting at QUAD_FACTOR * target edge length;
# calibrated so ~280 boundary samples yield ~1000 total vertices.
QUAD_FACTOR = 1.5


def slerp(a, b, t):
    """Great-circle interpolation between unit vectors ``a`` and ``b``."""
    ang = sphere.angle_between(a, b)
    if ang < 1e-12:
        return np.tile(a, (len(np.atleast_1d(t)), 1))
    t = np.asarray(t, dtype=float)[:, None]
    return (np.sin((1 - t) * ang) * a[None, :] + np.sin(t * ang) * b[None, :]) / np.sin(ang)


def sample_boundary(polyline, spacing):
    """Resample a (phi, theta) polyline into a dense spherical polygon.

    Consecutive vertices are joined along the shorter great-circle arc
    (which resolves the equirectangular seam wrap), with points inserted
    so consecutive samples are at most ``spacing`` radians apart.
    Consecutive duplicate vertices are dropped.
    """
    pl = np.asarray(polyline, dtype=float)
    if pl.ndim != 2 or pl.shape[1] != 2:
        raise DegeneratePolyline("polyline must be (n, 2) of (phi, theta)")
    units = sphere.sph_to_unit(pl[:, 0], pl[:, 1])
    keep = [units[0]]
    for u in units[1:]:
        if sphere.angle_between(keep[-1], u) > 1e-9:
            keep.append(u)
    if len(keep) > 1 and sphere.angle_between(keep[0], keep[-1]) <= 1e-9:
        keep.pop()
    if len(keep) < 3:
        raise DegeneratePolyline("fewer than 3 distinct polyline vertices")
    units = np.asarray(keep)

    out = []
    n = len(units)
    for i in range(n):
        a, b = units[i], units[(i + 1) % n]
        arc = sphere.angle_between(a, b)
        segs = max(1, int(np.ceil(arc / spacing - 1e-9)))
        out.append(slerp(a, b, np.arange(segs) / segs))
    return SphericalPolygon(np.vstack(out))


def stereo_project(points, center):
    """Project unit vectors from the antipode of ``center`` to its tangent plane."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c = np.asarray(center, dtype=float)
    cos_t = np.clip(pts @ c, -1.0, 1.0)
    scale = 2.0 / (1.0 + cos_t)
    proj = -c[None, :] + scale[:, None] * (pts + c[None, :]) - c[None, :]
    e1, e2 = sphere.tangent_basis(c)
    return np.stack([proj @ e1, proj @ e2], axis=1)


def stereo_unproject(p2d, center):
    """Inverse of :func:`stereo_project`."""
    p2d = np.atleast_2d(np.asarray(p2d, dtype=float))
    c = np.asarray(center, dtype=float)
    e1, e2 = sphere.tangent_basis(c)
    q = p2d[:, 0:1] * e1[None, :] + p2d[:, 1:2] * e2[None, :]  # in tangent plane
    r2 = np.sum(p2d**2, axis=1)
    # invert radius 2*tan(theta/2): point at angle theta from center
    denom = 1.0 + r2 / 4.0
    return ((1.0 - r2 / 4.0) / denom)[:, None] * c[None, :] + q / denom[:, None]


def _polygon_winding_mask(points2d, loop2d):
    """Vectorized 2D winding-number inside test against a closed loop."""
    a = loop2d[None, :, :] - points2d[:, None, :]
    b = np.roll(loop2d, -1, axis=0)[None, :, :] - points2d[:, None, :]
    ang = np.arctan2(
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0], np.sum(a * b, axis=-1)
    )
    return np.round(np.sum(ang, axis=1) / (2 * np.pi)).astype(int) != 0


def _conformal_factor(p2d):
    """Plane length per unit sphere length at projected radius |p|."""
    return 1.0 + np.sum(np.atleast_2d(p2d) ** 2, axis=1) / 4.0


def _interior_points(b2d, boundary_units, center, spacing):
    """Deterministic graded interior sampling (quadtree cell centers).

    Processes whole quadtree levels as arrays; cells split until their
    size drops below ``QUAD_FACTOR`` times the local plane target length.
    """
    lo = b2d.min(axis=0)
    hi = b2d.max(axis=0)
    size = float(max(hi - lo))
    if size <= 0:
        return np.empty((0, 2))

    cells = np.array([[(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, size]])
    child_offsets = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])
    leaves = []
    for _ in range(40):  # depth guard; real depth is ~log2(size/spacing)
        if not len(cells):
            break
        p = cells[:, :2]
        u = stereo_unproject(p, center)
        cos_d = np.clip(u @ boundary_units.T, -1.0, 1.0).max(axis=1)
        dist = np.arccos(cos_d)
        target = np.minimum(np.maximum(spacing, GRADING * dist), MAX_EDGE)
        target_plane = target * _conformal_factor(p)
        split = cells[:, 2] > QUAD_FACTOR * target_plane
        # keep leaves clear of the boundary so its edges stay Delaunay
        keep = ~split & (dist >= BOUNDARY_CLEARANCE * target)
        leaves.append(p[keep])
        sc = cells[split]
        if not len(sc):
            break
        centers = sc[:, None, :2] + child_offsets[None, :, :] * (sc[:, 2] / 4)[:, None, None]
        sizes = np.repeat(sc[:, 2] / 2, 4)
        cells = np.column_stack([centers.reshape(-1, 2), sizes])
    pts = np.vstack(leaves) if leaves else np.empty((0, 2))
    if not len(pts):
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]  # deterministic order
    inside = _polygon_winding_mask(pts, b2d)
    return pts[inside]


def _boundary_edges_present(tri, nb):
    """Check every boundary edge (i, i+1 mod nb) is a Delaunay edge."""
    edges = set()
    for simplex in tri.simplices:
        for k in range(3):
            e = (int(simplex[k]), int(simplex[(k + 1) % 3]))
            edges.add((min(e), max(e)))
    missing = []
    for i in range(nb):
        e = (i, (i + 1) % nb)
        if (min(e), max(e)) not in edges:
            missing.append(e)
    return missing


@dataclass
class AdaptiveMesh:
    """Graded triangulation of a spherical patch.

    Vertices 0..n_boundary-1 are the polygon boundary in order; the rest
    are interior.  ``plane`` holds the stereographic coordinates used to
    build the mesh (reused for point location and by the projected-PCA
    splitting variant).
    """

    vertices: np.ndarray          # (N, 3) unit vectors
    triangles: np.ndarray         # (M, 3) vertex indices, positive plane area
    n_boundary: int
    plane: np.ndarray             # (N, 2) stereographic coordinates
    proj_center: np.ndarray       # (3,) patch centroid (projection tangent point)
    _delaunay: Delaunay = field(repr=False)
    _simplex_to_tri: np.ndarray = field(repr=False)  # delaunay simplex -> kept id or -1
    _tri_inv: np.ndarray = field(repr=False)         # (M, 3, 3) inverse vertex matrices
    _kdtree: cKDTree = field(repr=False)
    _incident: np.ndarray = field(repr=False)        # (N, K) kept tris per vertex, -1 pad

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def boundary_polygon(self):
        return SphericalPolygon(self.vertices[: self.n_boundary])

    def edges(self):
        """Unique undirected edges as an (E, 2) int array."""
        e = np.vstack(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def edge_lengths(self, edges=None):
        e = self.edges() if edges is None else edges
        return sphere.angle_between(self.vertices[e[:, 0]], self.vertices[e[:, 1]])

    # barycentric slack: a unit vector is inside a spherical triangle iff
    # its cone coordinates are all nonnegative; allow fp grazing past 0
    BARY_TOL = 1e-9

    def locate(self, points):
        """Locate points in the mesh: (triangle ids, barycentric weights).

        Membership is exact spherical-triangle (cone) membership; the
        planar walk only serves as the accelerator.  Weights are the
        spherical barycentric coordinates: the weighted vertex sum is
        parallel to the query point, so after normalization it
        reproduces it to machine precision.  Points outside the patch
        get triangle id -1 and zero weights.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cos_c = pts @ self.proj_center
        finite = cos_c > -1.0 + 1e-12  # antipode of the projection point
        tri_ids = -np.ones(len(pts), dtype=int)
        weights = np.zeros((len(pts), 3))
        if not np.any(finite):
            return tri_ids, weights
        fidx = np.nonzero(finite)[0]
        p2d = stereo_project(pts[fidx], self.proj_center)
        simplex = self._delaunay.find_simplex(p2d)
        guess = np.where(simplex >= 0, self._simplex_to_tri[simplex], -1)

        ok = np.nonzero(guess >= 0)[0]
        retry = [np.nonzero(guess < 0)[0]]
        if len(ok):
            w = np.einsum("nij,nj->ni", self._tri_inv[guess[ok]], pts[fidx[ok]])
            s = w.sum(axis=1)
            good = (s > 0) & (w.min(axis=1) >= -self.BARY_TOL * s)
            retry.append(ok[~good])
            gi = ok[good]
            tri_ids[fidx[gi]] = guess[gi]
            wg = np.clip(w[good], 0.0, None)
            weights[fidx[gi]] = wg / wg.sum(axis=1, keepdims=True)
        retry = np.unique(np.concatenate(retry))
        if len(retry):
            # grazing or projection-curvature cases: resolve against the
            # nearest vertex's incident triangles with exact cone tests
            rid, rw = self._locate_by_vertex(p2d[retry], pts[fidx[retry]])
            tri_ids[fidx[retry]] = rid
            weights[fidx[retry]] = rw
        return tri_ids, weights

    def _locate_by_vertex(self, p2d, pts):
        """Slow-path location: best incident triangle of the nearest vertex."""
        _, vid = self._kdtree.query(p2d)
        cand = self._incident[vid]  # (n, K) kept triangle ids, -1 padded
        n = len(pts)
        safe = np.maximum(cand, 0)
        w = np.einsum("nkij,nkj->nki", self._tri_inv[safe], pts[:, None, :])
        s = w.sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            margins = np.where(s > 0, w.min(axis=2) / s, -np.inf)
        margins[cand < 0] = -np.inf
        best = np.argmax(margins, axis=1)
        rows = np.arange(n)
        tri_ids = np.where(margins[rows, best] >= -self.BARY_TOL, cand[rows, best], -1)
        weights = np.zeros((n, 3))
        ok = tri_ids >= 0
        if np.any(ok):
            wb = np.clip(w[rows[ok], best[ok]], 0.0, None)
            weights[ok] = wb / wb.sum(axis=1, keepdims=True)
        return tri_ids, weights

    def locate_one(self, v):
        """Single-point :meth:`locate`; raises OutsidePatch when outside."""
        tri_ids, weights = self.locate(np.asarray(v, dtype=float)[None, :])
        if tri_ids[0] < 0:
            raise OutsidePatch("point does not lie inside the meshed patch")
        return int(tri_ids[0]), weights[0]

    def to_obj(self):
        """OBJ-style text dump (debug export)."""
        lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in self.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.triangles]
        return "\n".join(lines) + "\n"


def build_adaptive_mesh(polygon, spacing=None):
    """Triangulate the interior of a spherical polygon (see module docstring).

    ``spacing`` defaults to the median boundary sample gap.  Raises
    :class:`TriangulationFailure` when a conforming mesh cannot be built.
    """
    boundary = polygon.vertices
    nb = len(boundary)
    center = interior_point(polygon)  # projection tangent point, inside the patch
    if not np.all(np.isfinite(center)):
        raise TriangulationFailure("degenerate polygon interior point")
    if spacing is None:
        spacing = float(np.median(sphere.angle_between(boundary, np.roll(boundary, -1, axis=0))))

    b2d = stereo_project(boundary, center)
    interior = _interior_points(b2d, boundary, center, spacing)

    for attempt in range(6):
        pts2d = np.vstack([b2d, interior]) if len(interior) else b2d
        tri = Delaunay(pts2d)
        missing = _boundary_edges_present(tri, nb)
        if not missing:
            break
        # remove interior points inside the diametral disks of missing edges
        keep = np.ones(len(interior), dtype=bool)
        for i, j in missing:
            mid = (b2d[i] + b2d[j]) / 2
            rad = np.linalg.norm(b2d[i] - b2d[j]) / 2
            keep &= np.linalg.norm(interior - mid, axis=1) > rad * (1.0 + 1e-9)
        if keep.all():
            raise TriangulationFailure(
                f"boundary edges {missing} not recoverable near "
                f"{np.degrees(sphere.unit_to_sph(boundary[missing[0][0]]))}"
            )
        interior = interior[keep]
    else:
        raise TriangulationFailure("boundary conformity not reached")

    centroids = pts2d[tri.simplices].mean(axis=1)
    kept_mask = _polygon_winding_mask(centroids, b2d)
    kept = tri.simplices[kept_mask]

    # drop unused interior points (outside the loop) and reindex
    used = np.unique(kept)
    if not np.all(np.isin(np.arange(nb), used)):
        raise TriangulationFailure("some boundary vertices ended up unused")
    remap = -np.ones(len(pts2d), dtype=int)
    remap[used] = np.arange(len(used))
    kept = remap[kept]
    pts2d = pts2d[used]
    verts = np.vstack([boundary, stereo_unproject(pts2d[nb:], center)]) if len(used) > nb else boundary.copy()

    # orient consistently (positive plane area) and validate
    a = pts2d[kept[:, 1]] - pts2d[kept[:, 0]]
    b = pts2d[kept[:, 2]] - pts2d[kept[:, 0]]
    areas = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    flip = areas < 0
    kept[flip] = kept[flip][:, [0, 2, 1]]
    if np.any(np.abs(areas) < 1e-14):
        raise TriangulationFailure("degenerate (zero-area) triangle produced")

    _validate_manifold(kept, nb)

    simplex_to_tri = -np.ones(len(tri.simplices), dtype=int)
    kept_idx = np.nonzero(kept_mask)[0]
    simplex_to_tri[kept_idx] = np.arange(len(kept_idx))

    mats = verts[kept]  # (M, 3, 3) rows = vertex vectors
    tri_inv = np.linalg.inv(np.swapaxes(mats, 1, 2))

    incident_lists = [[] for _ in range(len(pts2d))]
    for t, (i, j, k) in enumerate(kept):
        incident_lists[i].append(t)
        incident_lists[j].append(t)
        incident_lists[k].append(t)
    kmax = max(len(lst) for lst in incident_lists)
    incident = -np.ones((len(pts2d), kmax), dtype=int)
    for i, lst in enumerate(incident_lists):
        incident[i, : len(lst)] = lst

    return AdaptiveMesh(
        vertices=verts,
        triangles=kept,
        n_boundary=nb,
        plane=pts2d,
        proj_center=center,
        _delaunay=tri,
        _simplex_to_tri=simplex_to_tri,
        _tri_inv=tri_inv,
        _kdtree=cKDTree(pts2d),
        _incident=incident,
    )


def _validate_manifold(triangles, nb):
    """Each interior edge in exactly 2 triangles, boundary edges in exactly 1."""
    from collections import Counter

    count = Counter()
    for t in triangles:
        for k in range(3):
            e = (int(t[k]), int(t[(k + 1) % 3]))
            count[(min(e), max(e))] += 1
    for i in range(nb):
        e = (i, (i + 1) % nb)
        if count.get((min(e), max(e)), 0) != 1:
            raise TriangulationFailure(f"boundary edge {e} not manifold")
    bad = [e for e, c in count.items() if c > 2]
    if bad:
        raise TriangulationFailure(f"non-manifold edges: {bad[:5]}")
