"""Spherical mean value coordinates (SMVC).

Two independent implementations are kept on purpose and cross-checked:

* :func:`smvc_direct` evaluates the closed form

      lambda_i = [(tan(a_{i-1}/2) + tan(a_i/2)) / sin(t_i)]
                 / sum_j cot(t_j) (tan(a_{j-1}/2) + tan(a_j/2))

  where ``t_i`` is the angle between the evaluation point ``v`` and
  boundary vertex ``v_i`` and ``a_i`` the signed angle between
  ``v x v_i`` and ``v x v_{i+1}``.  This is the production path.

* :func:`smvc_stereographic` runs the full derivation pipeline: project
  the polygon from the antipode of ``v`` onto the tangent plane at
  ``v``, take planar mean value coordinates there, scale each weight by
  ``2 / (1 + cos(t_i))`` and renormalize by ``2 - sum``.  It shares no
  intermediate computation with the closed form and doubles as an
  overflow probe: the scaled sum approaches 2 exactly when some
  boundary angle approaches pi, which is the regime that discolors
  large cloned patches.

The returned weights are homogeneous coordinates fixed at the scale of
the closed form above: they reproduce the evaluation point exactly
(``sum_i lambda_i v_i = v``) but do not generally sum to 1 on the
sphere (the two normalizations coincide only in the planar limit; no
single row can satisfy both off the plane).  Interpolation uses the
sum-1 scaling, see :func:`normalize_rows`.  Weights may be negative for
non-convex or very large polygons; large negative magnitudes are the
documented discoloration regime, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sphere
from .errors import AntipodalBoundary, DegeneratePolyline

# Snap to an indicator row below this angle to a vertex: the closed form
# is singular there but its limit is the indicator.
VERTEX_SNAP_EPS = 1e-9

# Hard error above pi - ANTIPODAL_EPS: the evaluation point sees a
# boundary vertex at (numerically) the antipode.
ANTIPODAL_EPS = 1e-9

# Default margin for the overflow flag on sum(lambda~): flag when the
# sum exceeds 2 - OVERFLOW_DELTA.
OVERFLOW_DELTA = 0.1


# Canonical orientation: the patch interior winds +1 around any interior
# anchor in the stereographic chart from the anchor's antipode.
INTERIOR_WINDING = 1


@dataclass(frozen=True)
class SphericalPolygon:
    """Closed spherical polygon, vertices ordered along the boundary.

    A closed curve divides the sphere into two regions, so the patch is
    identified by orientation.  Construction normalizes the vertex order
    so the enclosed patch is the one a user outlined in the unrolled
    equirectangular chart (sign of the flat loop integral of theta
    d-phi, azimuth steps taken along the shorter arc).
    """

    vertices: np.ndarray  # (n, 3) unit vectors

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise DegeneratePolyline("polygon needs >= 3 vertices of shape (n, 3)")
        gaps = sphere.angle_between(v, np.roll(v, -1, axis=0))
        if np.any(gaps < 1e-9):
            raise DegeneratePolyline("consecutive polygon vertices coincide")
        phi, theta = sphere.unit_to_sph(v)
        dphi = np.mod(np.roll(phi, -1) - phi + np.pi, 2.0 * np.pi) - np.pi
        if abs(dphi.sum()) < np.pi:
            # bounded loop in the unrolled chart: normalize the order so the
            # flat-enclosed region is the patch (positive flat loop area)
            flat_area = float(np.sum((theta + np.roll(theta, -1)) / 2.0 * dphi))
            if flat_area < 0.0:
                v = v[::-1].copy()
        # else: the loop wraps the full azimuth range (a polar-cap style
        # boundary); the drawn direction decides the side, eastward
        # traversal encloses the region toward the north pole
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return self.vertices.shape[0]

    def centroid(self):
        """Normalized mean of the vertices (the patch datum/projection center)."""
        return sphere.normalize(self.vertices.mean(axis=0))

    def angular_span(self):
        """``2 * max_i angle(centroid, v_i)``, the patch field of view."""
        c = self.centroid()
        return 2.0 * float(np.max(sphere.angle_between(c, self.vertices)))


@dataclass(frozen=True)
class CoordinateDiagnostics:
    """Overflow probe for one evaluation (see module docstring)."""

    theta_max: float
    sum_tilde: float
    lambda_min: float
    lambda_max_abs: float
    overflow: bool


def planar_mvc(p, poly):
    """Planar mean value coordinates of ``p`` w.r.t. a 2D polygon.

    ``w_i = (tan(a_{i-1}/2) + tan(a_i/2)) / d_i`` with ``d_i`` the
    distance to vertex ``i`` and ``a_i`` the signed angle subtended at
    ``p`` by edge ``(i, i+1)``; weights are normalized to sum 1.

    If ``p`` lies on a vertex (``d_i < 1e-12``) the indicator row of the
    nearest vertex is returned (the limit of the formula).
    """
    p = np.asarray(p, dtype=float)
    poly = np.asarray(poly, dtype=float)
    r = poly - p[None, :]
    d = np.linalg.norm(r, axis=1)
    if np.any(d < 1e-12):
        out = np.zeros(len(poly))
        out[int(np.argmin(d))] = 1.0
        return out
    r_next = np.roll(r, -1, axis=0)
    d_next = np.roll(d, -1)
    cross = r[:, 0] * r_next[:, 1] - r[:, 1] * r_next[:, 0]
    dot = np.sum(r * r_next, axis=1)
    # tan(a_i / 2) = sin a / (1 + cos a), stable for |a| < pi
    tan_half = cross / (d * d_next + dot)
    w = (np.roll(tan_half, 1) + tan_half) / d
    return w / w.sum()


def _direct_rows_raw(points, verts):
    """Closed-form SMVC rows for a batch of points (no snapping/errors).

    Returns (rows, theta) with shapes (m, n) and (m, n).
    """
    dots = np.clip(points @ verts.T, -1.0, 1.0)  # (m, n) = cos(theta)
    cr = np.cross(points[:, None, :], verts[None, :, :])  # v x v_i
    sin_t = np.linalg.norm(cr, axis=2)
    theta = np.arctan2(sin_t, dots)
    cr_next = np.roll(cr, -1, axis=1)
    sin_next = np.roll(sin_t, -1, axis=1)
    # signed angle between v x v_i and v x v_{i+1} about v
    s = np.sum(np.cross(cr, cr_next) * points[:, None, :], axis=2)
    c = np.sum(cr * cr_next, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        tan_half = s / (sin_t * sin_next + c)
        t_sum = np.roll(tan_half, 1, axis=1) + tan_half
        num = t_sum / sin_t
        den = np.sum(dots / sin_t * t_sum, axis=1)
        rows = num / den[:, None]
    return rows, theta


def smvc_rows(points, polygon):
    """Closed-form SMVC rows for many points at once.

    Points within ``VERTEX_SNAP_EPS`` of a boundary vertex get that
    vertex's indicator row.  Raises :class:`AntipodalBoundary` if any
    point sees a boundary vertex at (numerically) its antipode.
    """
    verts = polygon.vertices
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rows, theta = _direct_rows_raw(points, verts)

    bad = theta > np.pi - ANTIPODAL_EPS
    if np.any(bad):
        pi, vi = np.argwhere(bad)[0]
        raise AntipodalBoundary(
            f"boundary vertex {vi} is antipodal to evaluation point {pi}; "
            "split the patch before computing coordinates",
            vertex_index=int(vi),
        )

    snap = theta < VERTEX_SNAP_EPS
    snap_pts = np.any(snap, axis=1)
    if np.any(snap_pts):
        rows[snap_pts] = 0.0
        idx_pt, idx_v = np.nonzero(snap)
        # keep the first snapped vertex per point
        first = np.unique(idx_pt, return_index=True)[1]
        rows[idx_pt[first], idx_v[first]] = 1.0
    return rows


def smvc_direct(v, polygon):
    """Closed-form SMVC row of a single point (see module docstring)."""
    return smvc_rows(np.asarray(v, dtype=float)[None, :], polygon)[0]


def normalize_rows(rows):
    """Rescale coordinate rows to sum 1 (the interpolation weights).

    This is the scaling under which a constant boundary field
    interpolates to the same constant everywhere; the membrane uses it.
    The input scaling (exact position reproduction) is recoverable from
    the output, the two are the same homogeneous coordinate vector.
    """
    rows = np.asarray(rows, dtype=float)
    s = rows.sum(axis=-1, keepdims=True)
    return rows / s


def _stereo_project_from_antipode(v, verts):
    """Project polygon vertices from ``-v`` onto the tangent plane at ``v``.

    Returns 2D coordinates in a deterministic tangent basis at ``v``
    (``v`` itself maps to the origin) together with ``cos(theta_i)``.
    """
    cos_t = np.clip(verts @ v, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = 2.0 / (1.0 + cos_t)
        proj = -v[None, :] + scale[:, None] * (verts + v[None, :])
        e1, e2 = sphere.tangent_basis(v)
        q = proj - v[None, :]
        return np.stack([q @ e1, q @ e2], axis=1), cos_t


def smvc_stereographic(v, polygon):
    """SMVC via the stereographic pipeline; returns (row, diagnostics).

    Pipeline: project the polygon from the antipode of ``v`` onto the
    tangent plane at ``v``; take planar mean value coordinates of the
    (projected) point; scale weight ``i`` by ``2 / (1 + cos(theta_i))``;
    renormalize the scaled weights by ``2 - sum``.  The projection
    radius of vertex ``i`` must equal ``2 * tan(theta_i / 2)``; this is
    asserted on every call as an internal consistency check.

    Independent of :func:`smvc_direct` by construction (pure 2D planar
    coordinates plus the two scaling steps); used as the oracle for the
    closed form and as the source of overflow diagnostics.
    """
    v = np.asarray(v, dtype=float)
    verts = polygon.vertices
    # half-angle chord ratio: tan(theta/2) = |v_i - v| / |v_i + v|, which
    # stays accurate near both theta = 0 and theta = pi (arccos does not)
    with np.errstate(divide="ignore"):
        tan_half = np.linalg.norm(verts - v, axis=1) / np.linalg.norm(verts + v, axis=1)
    theta = 2.0 * np.arctan(tan_half)

    if np.any(theta > np.pi - ANTIPODAL_EPS):
        vi = int(np.argmax(theta))
        raise AntipodalBoundary(
            f"boundary vertex {vi} is antipodal to the evaluation point",
            vertex_index=vi,
        )

    scale = 1.0 + tan_half**2  # = 2 / (1 + cos theta), stably
    proj = -v[None, :] + scale[:, None] * (verts + v[None, :])
    e1, e2 = sphere.tangent_basis(v)
    q = proj - v[None, :]
    p2d = np.stack([q @ e1, q @ e2], axis=1)

    d = np.linalg.norm(p2d, axis=1)
    if not np.allclose(d, 2.0 * tan_half, atol=1e-9, rtol=1e-12):
        raise AssertionError("stereographic chord length d_i != 2*tan(theta_i/2)")

    if np.any(theta < VERTEX_SNAP_EPS):
        row = np.zeros(len(verts))
        row[int(np.argmin(theta))] = 1.0
        diag = CoordinateDiagnostics(float(theta.max()), 1.0, 0.0, 1.0, False)
        return row, diag

    lam_bar = planar_mvc(np.zeros(2), p2d)
    lam_tilde = scale * lam_bar
    sum_tilde = float(lam_tilde.sum())
    row = lam_tilde / (2.0 - sum_tilde)
    diag = CoordinateDiagnostics(
        theta_max=float(theta.max()),
        sum_tilde=sum_tilde,
        lambda_min=float(row.min()),
        lambda_max_abs=float(np.abs(row).max()),
        overflow=sum_tilde > 2.0 - OVERFLOW_DELTA,
    )
    return row, diag


def diagnose(v, polygon):
    """Overflow diagnostics for one evaluation; never raises.

    Degenerate evaluations (antipodal boundary vertex) report an
    infinite scaled sum and set the overflow flag.
    """
    try:
        _, diag = smvc_stereographic(v, polygon)
        return diag
    except AntipodalBoundary:
        theta = sphere.angle_between(np.asarray(v, dtype=float), polygon.vertices)
        return CoordinateDiagnostics(
            theta_max=float(np.max(theta)),
            sum_tilde=float("inf"),
            lambda_min=float("-inf"),
            lambda_max_abs=float("inf"),
            overflow=True,
        )


def point_in_polygon(points, polygon, center=None):
    """Winding-number inside test on the sphere.

    The polygon and the query points are stereographically projected
    from the antipode of a interior reference point (a bijection on the
    whole sphere minus that single point, so valid even for patches
    spanning more than 180 degrees).  Returns a boolean array (or a
    scalar for a single point).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c = interior_point(polygon) if center is None else np.asarray(center, dtype=float)
    poly2d, _ = _stereo_project_from_antipode(c, polygon.vertices)
    q2d, cos_q = _stereo_project_from_antipode(c, pts)
    # points numerically at the projection point are outside any patch
    valid = cos_q > -1.0 + 1e-12

    a = poly2d[None, :, :] - q2d[:, None, :]
    b = np.roll(poly2d, -1, axis=0)[None, :, :] - q2d[:, None, :]
    with np.errstate(invalid="ignore"):
        ang = np.arctan2(
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
            np.sum(a * b, axis=-1),
        )
        winding = np.round(np.nan_to_num(np.sum(ang, axis=1)) / (2.0 * np.pi)).astype(int)
    inside = (winding == INTERIOR_WINDING) & valid
    if np.asarray(points).ndim == 1:
        return bool(inside[0])
    return inside


def interior_point(polygon):
    """A verified point strictly inside the polygon.

    The normalized vertex mean works for compact patches, but for large
    non-convex ones it can fall outside (a 300-degree band's end arcs
    drag the mean into the azimuthal gap, whose points the boundary
    also winds, with opposite sign).  Each candidate is therefore
    verified by self-projection: ``c`` is accepted only when the
    boundary winds around it with the canonical interior orientation in
    the chart anchored at ``c`` itself.  Falls back to inward offsets
    of boundary vertices, then gives up with
    :class:`DegeneratePolyline`.
    """
    verts = polygon.vertices
    n = len(verts)

    def valid(c):
        if np.min(verts @ c) < -1.0 + 1e-9:  # boundary touches the antipode
            return False
        if np.max(verts @ c) > 1.0 - 1e-12:  # boundary passes through c
            return False
        return bool(point_in_polygon(c, polygon, center=c))

    mean = verts.mean(axis=0)
    norm = np.linalg.norm(mean)
    candidates = []
    if norm > 1e-9:
        candidates += [mean / norm, -mean / norm]
    gap = float(np.median(sphere.angle_between(verts, np.roll(verts, -1, axis=0))))
    for i in range(0, n, max(1, n // 12)):
        t = verts[(i + 1) % n] - verts[i - 1]
        tn = np.linalg.norm(t)
        if tn < 1e-12:
            continue
        side = np.cross(verts[i], t / tn)
        for sign in (1.0, -1.0):
            for delta in (3.0 * gap, 10.0 * gap, 0.3):
                c = np.cos(delta) * verts[i] + np.sin(delta) * sign * side
                candidates.append(c / np.linalg.norm(c))
    for c in candidates:
        if valid(c):
            return c
    raise DegeneratePolyline("no interior reference point found for the polygon")
