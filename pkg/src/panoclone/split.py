"""Large-patch splitting: detection, path construction, composed weights.

Patches spanning close to (or beyond) 180 degrees drive some boundary
angles toward pi, where the coordinates overflow and discolor the
clone.  The cure is to cut the patch along a vertex path into two
sub-regions, evaluate coordinates inside each sub-region against its
own (small) boundary, and chain them through the path vertices back to
weights over the full boundary:

    lambda_{v,i} = lbar_{v,i} + sum_{j in path} lbar_{v,j} * lambda_{j,i}   (i on the own side)
    lambda_{v,i} =              sum_{j in path} lbar_{v,j} * lambda_{j,i}   (i on the far side)

where ``lbar`` are coordinates w.r.t. the sub-boundary and
``lambda_j`` the path vertices' rows w.r.t. the full boundary.  The
chained rows inherit exact position reproduction from their factors.

Three path constructions are provided: the default cuts along the great
circle at the median boundary azimuth; two PCA alternatives (on the 3D
boundary vertices, and on the stereographically projected boundary) are
kept for comparison.  The 3D-PCA variant is known to leave a sub-region
wider than 180 degrees on tall slanted patches; such plans carry
``flagged=True`` instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import sphere
from .errors import NoIntersection
from .smvc import SphericalPolygon, smvc_rows

# A patch needs splitting when its span exceeds pi * (1 - SPLIT_MARGIN).
SPLIT_MARGIN = 1.0 / 18.0

REGION_PATH, REGION_A, REGION_B = 0, 1, 2


@dataclass(frozen=True)
class SplitPlan:
    """A splitting path and the induced partition of mesh and boundary."""

    path: np.ndarray            # ordered mesh-vertex ids; endpoints on the boundary
    left_boundary: np.ndarray   # boundary ids of sub-region A (incl. both endpoints)
    right_boundary: np.ndarray  # boundary ids of sub-region B (incl. both endpoints)
    region: np.ndarray          # per-mesh-vertex tag: 0 path, 1 A-side, 2 B-side
    method: str
    sub_spans: tuple            # angular spans of the two sub-polygons (radians)
    flagged: bool               # True when a sub-region still spans >= pi - margin

    def sub_polygon_ids(self, side):
        """Ordered mesh-vertex ids of sub-boundary P_1 (side=0) or P_2 (side=1).

        Each sub-polygon walks its boundary arc from one path endpoint to
        the other, then returns along the splitting path.
        """
        if side == 0:
            return np.concatenate([self.left_boundary, self.path[::-1][1:-1]])
        return np.concatenate([self.right_boundary, self.path[1:-1]])


def minimax_span(points, iterations=120):
    """Twice the spherical circumradius of a point set (minimax span).

    The vertex-mean span over-reports for asymmetric sets whose mean
    sits far off the true center; the minimax center is found with the
    Badoiu-Clarkson pull-toward-farthest iteration (deterministic).
    """
    pts = np.asarray(points, dtype=float)
    c = sphere.normalize(pts.mean(axis=0))
    if not np.all(np.isfinite(c)):
        c = pts[0]
    for k in range(1, iterations + 1):
        ang = sphere.angle_between(c, pts)
        far = pts[int(np.argmax(ang))]
        c = sphere.normalize(c + (far - c) / (k + 1.0))
    return 2.0 * float(np.max(sphere.angle_between(c, pts)))


def needs_split(polygon, margin=SPLIT_MARGIN):
    """Whether the patch field of view approaches 180 degrees.

    Returns ``(decision, span_radians)``; the span is twice the largest
    centroid-to-vertex angle.
    """
    span = polygon.angular_span()
    return span > np.pi * (1.0 - margin), span


def _median_azimuth(polygon):
    """Median boundary azimuth, unwrapped across the largest azimuthal gap.

    Anchoring the unwrap at the widest empty azimuth interval makes the
    median independent of where the patch sits relative to the seam.
    """
    phi, _ = sphere.unit_to_sph(polygon.vertices)
    order = np.sort(phi)
    gaps = np.diff(np.concatenate([order, [order[0] + 2.0 * np.pi]]))
    k = int(np.argmax(gaps))
    ref = order[k] + gaps[k] / 2.0  # middle of the widest gap
    unwrapped = np.mod(phi - ref, 2.0 * np.pi) + ref
    return float(np.median(unwrapped))


def _boundary_crossings(boundary, normal):
    """Intersections of the great circle (normal form) with boundary arcs.

    Returns (edge indices, intersection points); edge i joins boundary
    vertex i to i+1.
    """
    g = boundary @ normal
    nxt = np.roll(g, -1)
    cross = np.nonzero(np.sign(g) * np.sign(nxt) < 0)[0]
    pts = []
    for i in cross:
        j = (i + 1) % len(boundary)
        # positive combination of the two arc endpoints (not the antipode)
        p = np.sign(g[i]) * (g[i] * boundary[j] - g[j] * boundary[i])
        pts.append(p / np.linalg.norm(p))
    return cross, np.asarray(pts)


def _interior_graph(mesh_obj, allowed_boundary):
    """Sparse geodesic-length graph over interior vertices + two endpoints."""
    edges = mesh_obj.edges()
    lengths = mesh_obj.edge_lengths(edges)
    nb = mesh_obj.n_boundary
    ok_vertex = np.zeros(mesh_obj.n_vertices, dtype=bool)
    ok_vertex[nb:] = True
    ok_vertex[list(allowed_boundary)] = True
    keep = ok_vertex[edges[:, 0]] & ok_vertex[edges[:, 1]]
    e = edges[keep]
    w = lengths[keep]
    n = mesh_obj.n_vertices
    return coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
        shape=(n, n),
    ).tocsr()


def _split_from_normal(mesh_obj, normal, method):
    boundary = mesh_obj.vertices[: mesh_obj.n_boundary]
    nb = mesh_obj.n_boundary
    edges_hit, pts = _boundary_crossings(boundary, normal)
    if len(edges_hit) < 2:
        raise NoIntersection(
            f"splitting great circle crosses the boundary {len(edges_hit)} times"
        )
    if len(edges_hit) > 2:
        # several crossings: take the pair with maximum geodesic separation
        best = (-1.0, 0, 1)
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                d = sphere.angle_between(pts[a], pts[b])
                if d > best[0]:
                    best = (d, a, b)
        sel = [best[1], best[2]]
        edges_hit, pts = edges_hit[sel], pts[sel]

    # nearest boundary vertices to the two intersection points; a valid
    # endpoint needs an interior neighbor to anchor the path
    edges = mesh_obj.edges()
    interior_link = np.zeros(nb, dtype=bool)
    at_boundary = edges < nb
    mixed = at_boundary[:, 0] != at_boundary[:, 1]
    interior_link[edges[mixed][at_boundary[mixed]]] = True
    ends = []
    for p in pts:
        d = sphere.angle_between(p, boundary)
        for pick in np.argsort(d):
            if interior_link[pick] and pick not in ends:
                ends.append(int(pick))
                break
        else:
            raise NoIntersection("no boundary vertex near the crossing reaches the interior")
    e1, e2 = ends

    graph = _interior_graph(mesh_obj, ends)
    dist, pred = dijkstra(graph, indices=e1, return_predecessors=True)
    if not np.isfinite(dist[e2]):
        raise NoIntersection("no interior path connects the chosen endpoints")
    path = [e2]
    while path[-1] != e1:
        path.append(int(pred[path[-1]]))
    path = np.asarray(path[::-1], dtype=int)

    # boundary partition: walk the cycle between the endpoints both ways;
    # canonicalize the path to run from the smaller boundary id to the larger
    i1, i2 = sorted((e1, e2))
    if path[0] != i1:
        path = path[::-1]
    arc_a = np.arange(i1, i2 + 1)
    arc_b = np.concatenate([np.arange(i2, nb), np.arange(0, i1 + 1)])
    if len(arc_a) < 3 or len(arc_b) < 3:
        raise NoIntersection("splitting path endpoints are adjacent on the boundary")

    region = np.full(mesh_obj.n_vertices, -1, dtype=np.int8)
    region[path] = REGION_PATH
    _tag_components(mesh_obj, region, arc_a, arc_b)

    p1_ids = np.concatenate([arc_a, path[::-1][1:-1]])
    p2_ids = np.concatenate([arc_b, path[1:-1]])
    spans = tuple(minimax_span(mesh_obj.vertices[ids]) for ids in (p1_ids, p2_ids))
    flagged = any(s >= np.pi * (1.0 - SPLIT_MARGIN) for s in spans)
    return SplitPlan(
        path=path,
        left_boundary=arc_a,
        right_boundary=arc_b,
        region=region,
        method=method,
        sub_spans=spans,
        flagged=flagged,
    )


def _tag_components(mesh_obj, region, arc_a, arc_b):
    """Flood-fill the two sides of the path over mesh edges."""
    from collections import deque

    edges = mesh_obj.edges()
    n = mesh_obj.n_vertices
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)

    def fill(seeds, tag):
        q = deque(int(s) for s in seeds if region[s] == -1)
        for s in q:
            region[s] = tag
        while q:
            u = q.popleft()
            for vtx in adj[u]:
                if region[vtx] == -1:
                    region[vtx] = tag
                    q.append(vtx)

    fill(arc_a[1:-1], REGION_A)
    fill(arc_b[1:-1], REGION_B)
    if np.any(region == -1):  # pockets untouched by either arc: attach to A
        fill(np.nonzero(region == -1)[0], REGION_A)


def split_path_median_azimuth(mesh_obj):
    """Default split: great circle through the z axis at the median azimuth."""
    boundary_poly = mesh_obj.boundary_polygon()
    phi_m = _median_azimuth(boundary_poly)
    normal = np.array([-np.sin(phi_m), np.cos(phi_m), 0.0])
    return _split_from_normal(mesh_obj, normal, "median")


def split_path_pca_sphere(mesh_obj):
    """Alternative 1: great circle normal to the first 3D principal component."""
    b = mesh_obj.vertices[: mesh_obj.n_boundary]
    centered = b - b.mean(axis=0)
    _, vecs = np.linalg.eigh(centered.T @ centered)
    normal = vecs[:, -1]  # largest eigenvalue
    return _split_from_normal(mesh_obj, normal, "pca-sphere")


def split_path_pca_projected(mesh_obj):
    """Alternative 2: PCA on the stereographically projected boundary.

    The principal line of the projected boundary (through the projected
    mean) is lifted back to the sphere; the splitting great circle runs
    perpendicular to it through the lifted mean point, i.e. its normal
    is the lifted principal direction.
    """
    from .mesh import stereo_unproject

    p = mesh_obj.plane[: mesh_obj.n_boundary]
    mean2d = p.mean(axis=0)
    centered = p - mean2d
    _, vecs = np.linalg.eigh(centered.T @ centered)
    d2 = vecs[:, -1]
    eps = 1e-4
    two = stereo_unproject(
        np.vstack([mean2d - eps * d2, mean2d + eps * d2]), mesh_obj.proj_center
    )
    anchor = sphere.normalize(two.mean(axis=0))
    tangent = two[1] - two[0]
    tangent -= (tangent @ anchor) * anchor
    normal = sphere.normalize(tangent)
    return _split_from_normal(mesh_obj, normal, "pca-projected")


SPLIT_METHODS = {
    "median": split_path_median_azimuth,
    "pca-sphere": split_path_pca_sphere,
    "pca-projected": split_path_pca_projected,
}


def composed_coordinates(mesh_obj, plan):
    """Coordinate rows w.r.t. the full boundary for every mesh vertex.

    Path vertices evaluate directly against the full boundary; each
    side's interior vertices evaluate against their sub-boundary and
    chain through the path rows (see module docstring).  Boundary
    vertices get indicator rows.  Chaining preserves exact position
    reproduction; partition of unity holds for the sum-normalized form
    because every factor row normalizes consistently.
    """
    nb = mesh_obj.n_boundary
    n = mesh_obj.n_vertices
    verts = mesh_obj.vertices
    full_poly = mesh_obj.boundary_polygon()

    rows = np.zeros((n, nb))
    rows[np.arange(nb), np.arange(nb)] = 1.0

    # path rows against the full boundary (endpoints are boundary vertices,
    # their indicator rows are already in place)
    interior_path = plan.path[(plan.path >= nb)]
    path_rows = np.zeros((len(plan.path), nb))
    for k, pid in enumerate(plan.path):
        if pid < nb:
            path_rows[k, pid] = 1.0
    if len(interior_path):
        r = smvc_rows(verts[interior_path], full_poly)
        path_rows[np.isin(plan.path, interior_path)] = r
        rows[interior_path] = r

    for side, tag in ((0, REGION_A), (1, REGION_B)):
        ids = plan.sub_polygon_ids(side)
        sub_poly = SphericalPolygon(verts[ids])
        members = np.nonzero((plan.region == tag) & (np.arange(n) >= nb))[0]
        if not len(members):
            continue
        lbar = smvc_rows(verts[members], sub_poly)
        # columns of lbar follow `ids`: boundary-arc entries scatter
        # directly, path entries chain through the path rows
        is_path_col = np.isin(ids, plan.path)
        arc_cols = np.nonzero(~is_path_col)[0]
        path_cols = np.nonzero(is_path_col)[0]
        out = np.zeros((len(members), nb))
        out[:, ids[arc_cols]] = lbar[:, arc_cols]
        if len(path_cols):
            path_pos = {int(p): k for k, p in enumerate(plan.path)}
            chain = np.asarray([path_pos[int(ids[c])] for c in path_cols])
            out += lbar[:, path_cols] @ path_rows[chain]
        rows[members] = out
    return rows
