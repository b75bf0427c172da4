"""End-to-end panorama cloning.

A clone session preprocesses a source patch once (boundary sampling,
adaptive mesh, coordinate rows, optional split); cloning at any target
anchor then only needs the cheap per-anchor work: rotate the boundary,
sample the target, diffuse the boundary differences through the
precomputed rows, and rasterize.  Coordinates never depend on the
anchor because they are rotation-equivariant, which is what makes the
preprocess-once / clone-many structure sound.

The composite at a target pixel is ``clamp(g(v) + membrane(v))`` where
``v`` is the pixel direction pulled back into source space and the
membrane interpolates the boundary differences ``target - source`` over
the mesh.  Supersampling averages a stratified sub-pixel grid; an
optional matte (alpha raster registered to the source) modulates the
cloned color over the target.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import mesh as mesh_mod
from . import panorama as pano_mod
from . import smvc, split as split_mod, sphere
from .errors import MaskOutOfBounds, PanocloneError
from .mesh import AdaptiveMesh
from .smvc import SphericalPolygon

SUPERSAMPLING_LEVELS = (1, 2, 4, 8, 16)

_JITTER_CACHE = {}


def _jitter_table(n):
    """Fixed stratified sub-pixel offsets for n x n supersampling."""
    if n not in _JITTER_CACHE:
        if n == 1:
            _JITTER_CACHE[n] = np.array([[0.5, 0.5]])
        else:
            rng = np.random.default_rng(91000 + n)
            cells = np.stack(np.meshgrid(np.arange(n), np.arange(n)), -1).reshape(-1, 2)
            _JITTER_CACHE[n] = (cells + rng.uniform(0.2, 0.8, size=cells.shape)) / n
    return _JITTER_CACHE[n]


@dataclass
class CloneSession:
    """Preprocessed source patch, immutable and reusable across anchors."""

    source: pano_mod.Panorama
    boundary: SphericalPolygon
    mesh: AdaptiveMesh
    rows: np.ndarray            # (N, nb) position-reproducing coordinate rows
    weights: np.ndarray         # (N, nb) sum-1 interpolation scaling of rows
    split: split_mod.SplitPlan | None
    datum: np.ndarray           # (3,) source anchor carried to the target
    supersampling: int
    matte: pano_mod.Panorama | None
    source_boundary_rgb: np.ndarray  # (nb, 3) g(v_i), precomputed
    timings: dict               # preprocess breakdown in ms


def _ensure_rgb(pano):
    """Gray panoramas broadcast to three channels for the clone math."""
    if pano.channels >= 3:
        return pano
    return pano_mod.Panorama(np.repeat(pano.data, 3, axis=2))


def default_spacing(source, polyline):
    """One source-pixel arc length at the patch's mean latitude."""
    pl = np.asarray(polyline, dtype=float)
    mean_theta = float(np.mean(pl[:, 1]))
    lat_scale = max(abs(np.sin(mean_theta)), 0.05)
    return 2.0 * np.pi / source.width * lat_scale


def preprocess(source, polyline, *, spacing=None, split="auto", supersampling=1, matte=None):
    """Build a :class:`CloneSession` for a source patch.

    ``polyline`` is an (n, 2) array of (phi, theta) boundary vertices in
    source space.  ``split`` is one of ``auto`` (split when the span
    calls for it), ``off`` (never split; large patches may overflow or
    raise), or a method name (``median``, ``pca-sphere``,
    ``pca-projected``) to force that splitting path.
    """
    if supersampling not in SUPERSAMPLING_LEVELS:
        raise ValueError(f"supersampling must be one of {SUPERSAMPLING_LEVELS}")
    source = _ensure_rgb(source)
    if spacing is None:
        spacing = default_spacing(source, polyline)

    t0 = time.perf_counter()
    boundary = mesh_mod.sample_boundary(polyline, spacing)
    patch_mesh = mesh_mod.build_adaptive_mesh(boundary)
    t_mesh = time.perf_counter()

    plan = None
    if split == "off":
        rows = _direct_rows(patch_mesh)
    elif split == "auto":
        wants, _span = split_mod.needs_split(boundary)
        if wants:
            try:
                plan = split_mod.split_path_median_azimuth(patch_mesh)
            except split_mod.NoIntersection:
                plan = split_mod.split_path_pca_projected(patch_mesh)
            rows = split_mod.composed_coordinates(patch_mesh, plan)
        else:
            rows = _direct_rows(patch_mesh)
    elif split in split_mod.SPLIT_METHODS:
        plan = split_mod.SPLIT_METHODS[split](patch_mesh)
        rows = split_mod.composed_coordinates(patch_mesh, plan)
    else:
        raise ValueError(f"unknown split mode {split!r}")
    t_rows = time.perf_counter()

    if matte is not None and (matte.width != source.width or matte.height != source.height):
        raise PanocloneError("matte raster must match the source dimensions")

    datum = _session_datum(boundary)
    g_boundary = pano_mod.sample_bilinear(source, boundary.vertices)[:, :3]
    return CloneSession(
        source=source,
        boundary=boundary,
        mesh=patch_mesh,
        rows=rows,
        weights=smvc.normalize_rows(rows),
        split=plan,
        datum=datum,
        supersampling=supersampling,
        matte=matte,
        source_boundary_rgb=g_boundary,
        timings={
            "mesh_ms": (t_mesh - t0) * 1e3,
            "rows_ms": (t_rows - t_mesh) * 1e3,
        },
    )


def _session_datum(boundary):
    """Patch centroid when it lies inside the patch, else a verified interior point."""
    c = boundary.centroid()
    if np.all(np.isfinite(c)) and smvc.point_in_polygon(c, boundary):
        return c
    return smvc.interior_point(boundary)


def _direct_rows(patch_mesh):
    """Unsplit rows: indicators on the boundary, closed-form SMVC inside."""
    nb = patch_mesh.n_boundary
    n = patch_mesh.n_vertices
    rows = np.zeros((n, nb))
    rows[np.arange(nb), np.arange(nb)] = 1.0
    if n > nb:
        rows[nb:] = smvc.smvc_rows(
            patch_mesh.vertices[nb:], patch_mesh.boundary_polygon()
        )
    return rows


def _anchor_unit(anchor):
    a = np.asarray(anchor, dtype=float)
    if a.shape == (2,):
        return sphere.sph_to_unit(a[0], a[1])
    if a.shape == (3,):
        return sphere.normalize(a)
    raise ValueError("anchor must be (phi, theta) or a unit vector")


def compute_membrane(session, target, anchor, rotation_method="two-step"):
    """Per-anchor boundary differences and the membrane at mesh vertices.

    Returns ``(rotation, diffs, membrane)``: the placement rotation, the
    per-boundary-sample color differences ``target - source`` and the
    (n_vertices, 3) membrane, i.e. the differences diffused into the
    patch by the interpolation weights.  ``rotation_method`` selects the
    orientation-preserving two-step placement (default) or the naive
    axis-angle one kept for comparison figures.
    """
    v_t = _anchor_unit(anchor)
    if rotation_method == "two-step":
        rot = sphere.two_step_rotation(session.datum, v_t)
    elif rotation_method == "naive":
        rot = sphere.naive_rotation(session.datum, v_t)
    else:
        raise ValueError(f"unknown rotation method {rotation_method!r}")
    rotated = session.boundary.vertices @ rot.T
    target_rgb = pano_mod.sample_bilinear(target, rotated)[:, :3]
    diffs = target_rgb - session.source_boundary_rgb
    membrane = session.weights @ diffs
    return rot, diffs, membrane


def _pixel_ranges(session, rot, target, pad):
    """Row range and wrapped column range covering the rotated patch."""
    h, w = target.height, target.width
    rotated = session.boundary.vertices @ rot.T
    x, y = pano_mod.unit_to_pixel(rotated, w, h)

    y_lo, y_hi = int(np.floor(y.min())) - pad, int(np.ceil(y.max())) + pad
    # a pole inside the patch forces full rows/columns on that side
    ids, _ = session.mesh.locate(np.vstack([rot.T @ [0, 0, 1.0], rot.T @ [0, 0, -1.0]]))
    if ids[0] >= 0:
        y_lo = 0
    if ids[1] >= 0:
        y_hi = h
    y_lo, y_hi = max(0, y_lo), min(h, y_hi)

    if ids[0] >= 0 or ids[1] >= 0:
        return y_lo, y_hi, 0, w
    x_anchor = np.angle(np.mean(np.exp(1j * x * 2 * np.pi / w))) * w / (2 * np.pi)
    dx = np.mod(x - x_anchor + w / 2, w) - w / 2
    x_lo = int(np.floor(dx.min() + x_anchor)) - pad
    x_hi = int(np.ceil(dx.max() + x_anchor)) + pad
    if x_hi - x_lo >= w:
        return y_lo, y_hi, 0, w
    return y_lo, y_hi, x_lo, x_hi


def render_clone(session, target, anchor, supersampling=None, rect=None, rotation_method="two-step"):
    """Clone the session's patch into ``target`` at ``anchor``.

    Returns ``(panorama, timings)`` where timings carry ``membrane_ms``
    and ``raster_ms``.  ``rect`` (x, y, w, h) restricts the output to a
    sub-window of the target (pixels outside are left unchanged), used
    for low-latency previews.
    """
    n_super = session.supersampling if supersampling is None else supersampling
    if n_super not in SUPERSAMPLING_LEVELS:
        raise ValueError(f"supersampling must be one of {SUPERSAMPLING_LEVELS}")
    target = _ensure_rgb(target)

    t0 = time.perf_counter()
    rot, _diffs, membrane = compute_membrane(session, target, anchor, rotation_method)
    t_membrane = time.perf_counter()

    h, w = target.height, target.width
    out = target.data[:, :, :3].copy()
    y_lo, y_hi, x_lo, x_hi = _pixel_ranges(session, rot, target, pad=2)
    if rect is not None:
        rx, ry, rw, rh = rect
        y_lo, y_hi = max(y_lo, ry), min(y_hi, ry + rh)
        # column windows wrap, so only clamp when the request is narrower
        x_lo, x_hi = max(x_lo, rx), min(x_hi, rx + rw)
    if y_hi <= y_lo or x_hi <= x_lo:
        return pano_mod.from_array(out), {
            "membrane_ms": (t_membrane - t0) * 1e3,
            "raster_ms": (time.perf_counter() - t_membrane) * 1e3,
        }

    xs = np.arange(x_lo, x_hi)
    ys = np.arange(y_lo, y_hi)
    gx, gy = np.meshgrid(xs, ys)
    gx = gx.ravel()
    gy = gy.ravel()
    centers_u = pano_mod.pixel_to_unit(np.mod(gx, w) + 0.5, gy + 0.5, w, h)
    centers_v = centers_u @ rot  # rot^T applied row-wise
    tri_ids, bary = session.mesh.locate(centers_v)
    inside = tri_ids >= 0
    if not np.any(inside):
        return pano_mod.from_array(out), {
            "membrane_ms": (t_membrane - t0) * 1e3,
            "raster_ms": (time.perf_counter() - t_membrane) * 1e3,
        }

    px = gx[inside]
    py = gy[inside]
    tri_in = tri_ids[inside]
    tri_verts = session.mesh.triangles[tri_in]  # (m, 3)

    if n_super == 1:
        v_in = centers_v[inside]
        acc = _shade(session, target, membrane, v_in, centers_u[inside], tri_verts, bary[inside])
    else:
        acc = _supersample(
            session, target, membrane, rot, px, py, tri_in, tri_verts, n_super, w, h
        )

    flat = out.reshape(-1, 3)
    flat[np.mod(px, w) + py * w] = np.clip(acc, 0.0, 1.0)
    t_raster = time.perf_counter()
    return pano_mod.from_array(out), {
        "membrane_ms": (t_membrane - t0) * 1e3,
        "raster_ms": (t_raster - t_membrane) * 1e3,
    }


def _subsample_dirs(px, py, offsets, w, h):
    """Unit directions of sub-pixel samples via exact angle addition."""
    ang_x = px * (2.0 * np.pi / w)
    ang_y = py * (np.pi / h)
    sin_px, cos_px = np.sin(ang_x), np.cos(ang_x)
    sin_py, cos_py = np.sin(ang_y), np.cos(ang_y)
    for ox, oy in offsets:
        bx = ox * 2.0 * np.pi / w
        by = oy * np.pi / h
        sphi = sin_px * np.cos(bx) + cos_px * np.sin(bx)
        cphi = cos_px * np.cos(bx) - sin_px * np.sin(bx)
        sth = sin_py * np.cos(by) + cos_py * np.sin(by)
        cth = cos_py * np.cos(by) - sin_py * np.sin(by)
        yield np.stack([sth * cphi, sth * sphi, cth], axis=1)


def _supersample(session, target, membrane, rot, px, py, tri_in, tri_verts, n_super, w, h):
    """Average an n x n stratified sub-pixel grid over the inside pixels.

    Pixels are split in two tiers.  Core pixels (more than ~2 pixels from
    the patch boundary) shade every sub-sample against the pixel center's
    triangle: the membrane is piecewise linear and a sub-pixel step stays
    within the triangle's linear extension, so no per-sample relocation
    is needed; texture fetches run in float32.  Ring pixels near the
    boundary are shaded exactly, with all their sub-samples located in
    one vectorized batch (sub-samples falling off the patch average in
    the target color, which antialiases the seam).
    """
    offsets = _jitter_table(n_super)
    centers_v = pano_mod.pixel_to_unit(np.mod(px, w) + 0.5, py + 0.5, w, h) @ rot

    # ring = pixels whose sub-sample square can reach the boundary
    # (sub-samples stray at most ~0.8 pixel diagonals from the center)
    boundary = session.boundary.vertices
    kd = cKDTree(boundary)
    chord, _ = kd.query(centers_v)
    ring = chord < 1.5 * np.pi / h
    core = ~ring

    acc = np.zeros((len(px), 3))
    if np.any(core):
        acc[core] = _supersample_core(
            session, target, membrane, rot,
            px[core], py[core], tri_in[core], tri_verts[core], offsets, w, h,
        )
    if np.any(ring):
        acc[ring] = _supersample_ring(
            session, target, membrane, rot,
            px[ring], py[ring], tri_in[ring], tri_verts[ring],
            centers_v[ring], offsets, w, h,
        )
    return acc


def _supersample_core(session, target, membrane, rot, px, py, tri_in, tri_verts, offsets, w, h):
    acc = np.zeros((len(px), 3), dtype=np.float32)
    tri_inv32 = session.mesh._tri_inv[tri_in].astype(np.float32)
    mem_tri = membrane[tri_verts].astype(np.float32)
    src32 = session.source.data[:, :, :3].astype(np.float32)
    rot32 = rot.astype(np.float32)
    matte = session.matte
    for u_s in _subsample_dirs(px, py, offsets, w, h):
        v_s = u_s.astype(np.float32) @ rot32
        w_s = np.einsum("nij,nj->ni", tri_inv32, v_s)
        wg = w_s / w_s.sum(axis=1, keepdims=True)
        g = _bilinear_f32(src32, v_s)
        color = np.clip(g + np.einsum("nk,nkc->nc", wg, mem_tri), 0.0, 1.0)
        if matte is not None:
            alpha = pano_mod.sample_bilinear(matte, v_s.astype(np.float64))[:, :1]
            tgt = pano_mod.sample_bilinear(target, u_s)[:, :3]
            color = (alpha * color + (1.0 - alpha) * tgt).astype(np.float32)
        acc += color
    return (acc / len(offsets)).astype(np.float64)


def _supersample_ring(session, target, membrane, rot, px, py, tri_in, tri_verts, centers_v, offsets, w, h):
    """Boundary-ring pixels: per-sub-sample in/out against the local edge.

    A ring sub-sample is inside the patch iff it lies on the interior
    side of the great circle through the boundary edge nearest to it;
    the pixel center (known inside) calibrates the side per edge.  This
    is exact up to sub-pixel corner rounding.  Inside samples shade via
    the center pixel's triangle extension (as in the core tier), outside
    ones take the target color, which antialiases the seam.
    """
    n_pix = len(px)
    boundary = session.boundary.vertices
    nb = len(boundary)
    edge_normals = np.cross(boundary, np.roll(boundary, -1, axis=0))
    edge_mids = sphere.normalize(boundary + np.roll(boundary, -1, axis=0))

    # candidate edges around the nearest boundary vertex of each pixel
    kd = cKDTree(boundary)
    _, j = kd.query(centers_v)
    cand = (j[:, None] + np.arange(-2, 2)[None, :]) % nb  # (n, 4)
    cn = edge_normals[cand]                               # (n, 4, 3)
    side = np.sign(np.einsum("nkd,nd->nk", cn, centers_v))
    side[side == 0] = 1.0
    cm = edge_mids[cand]

    tri_inv_in = session.mesh._tri_inv[tri_in]
    mem_tri = membrane[tri_verts]
    src = session.source.data[:, :, :3]
    acc = np.zeros((n_pix, 3))
    for u_s in _subsample_dirs(px, py, offsets, w, h):
        v_s = u_s @ rot
        # nearest candidate edge per sub-sample, then its half-space test
        near = np.argmax(np.einsum("nkd,nd->nk", cm, v_s), axis=1)
        rows = np.arange(n_pix)
        inside = np.einsum("nd,nd->n", cn[rows, near], v_s) * side[rows, near] >= 0

        w_s = np.einsum("nij,nj->ni", tri_inv_in, v_s)
        wg = w_s / w_s.sum(axis=1, keepdims=True)
        g = pano_mod.sample_bilinear(session.source, v_s)[:, :3]
        color = np.clip(g + np.einsum("nk,nkc->nc", wg, mem_tri), 0.0, 1.0)
        if session.matte is not None:
            alpha = pano_mod.sample_bilinear(session.matte, v_s)[:, :1]
            tgt_in = pano_mod.sample_bilinear(target, u_s)[:, :3]
            color = alpha * color + (1.0 - alpha) * tgt_in
        outside = ~inside
        if np.any(outside):
            color[outside] = pano_mod.sample_bilinear(target, u_s[outside])[:, :3]
        acc += color
    return acc / len(offsets)


def _bilinear_f32(data, v):
    """Tight float32 bilinear fetch (wrap columns, reflect past poles)."""
    h, w = data.shape[:2]
    flat = data.reshape(-1, data.shape[2])
    phi = np.arctan2(v[:, 1], v[:, 0])
    phi[phi < 0] += 2.0 * np.pi
    theta = np.arctan2(np.sqrt(v[:, 0] ** 2 + v[:, 1] ** 2), v[:, 2])
    xf = phi * (w / (2.0 * np.pi)) - 0.5
    yf = theta * (h / np.pi) - 0.5
    i0 = np.floor(xf).astype(np.int64)
    j0 = np.floor(yf).astype(np.int64)
    fx = (xf - i0).astype(np.float32)[:, None]
    fy = (yf - j0).astype(np.float32)[:, None]
    out = np.zeros((len(v), data.shape[2]), dtype=np.float32)
    half = w // 2
    for dj, wy in ((0, 1.0 - fy), (1, fy)):
        j = j0 + dj
        refl_top = j < 0
        refl_bot = j > h - 1
        j = np.where(refl_top, -1 - j, j)
        j = np.where(refl_bot, 2 * h - 1 - j, j)
        shift = np.where(refl_top | refl_bot, half, 0)
        base = j * w
        for di, wx in ((0, 1.0 - fx), (1, fx)):
            i = np.mod(i0 + di + shift, w)
            out += (wy * wx) * flat[base + i]
    return out


def _shade(session, target, membrane, v_src, u_tgt, tri_verts, bary):
    """Color of cloned samples: source + interpolated membrane, matted."""
    g = pano_mod.sample_bilinear(session.source, v_src)[:, :3]
    m = np.einsum("nk,nkc->nc", bary, membrane[tri_verts])
    color = np.clip(g + m, 0.0, 1.0)
    if session.matte is not None:
        alpha = pano_mod.sample_bilinear(session.matte, v_src)[:, :1]
        tgt = pano_mod.sample_bilinear(target, u_tgt)[:, :3]
        color = alpha * color + (1.0 - alpha) * tgt
    return color


# --------------------------------------------------------------- planar MVC

def rasterize_polygon(points_xy, w, h):
    """Even-odd scanline fill of a pixel-space polygon into a bool mask."""
    pts = np.asarray(points_xy, dtype=float)
    mask = np.zeros((h, w), dtype=bool)
    ys = np.arange(h) + 0.5
    x0 = pts[:, 0]
    y0 = pts[:, 1]
    x1 = np.roll(x0, -1)
    y1 = np.roll(y0, -1)
    for j, yc in enumerate(ys):
        crosses = (y0 <= yc) != (y1 <= yc)
        if not np.any(crosses):
            continue
        t = (yc - y0[crosses]) / (y1[crosses] - y0[crosses])
        xc = np.sort(x0[crosses] + t * (x1[crosses] - x0[crosses]))
        for a, b in zip(xc[0::2], xc[1::2]):
            lo, hi = int(np.ceil(a - 0.5)), int(np.floor(b - 0.5))
            if hi >= lo:
                mask[j, max(0, lo) : min(w, hi + 1)] = True
    return mask


_MOORE = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _trace_contour(mask):
    """Ordered outer contour of a connected mask (Moore neighbor tracing)."""
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise MaskOutOfBounds("empty mask")
    start = (int(ys.min()), int(xs[ys == ys.min()].min()))
    contour = [start]
    prev_dir = 6  # entered heading "west", so backtrack points east of start
    cur = start
    h, w = mask.shape
    for _ in range(8 * mask.sum() + 8):
        found = False
        for k in range(8):
            d = (prev_dir + 5 + k) % 8  # start from the backtrack neighbor
            dy, dx = _MOORE[d]
            ny, nx = cur[0] + dy, cur[1] + dx
            if 0 <= ny < h and 0 <= nx < w and mask[ny, nx]:
                if (ny, nx) == start and len(contour) > 2:
                    return np.array([(x, y) for y, x in contour])
                contour.append((ny, nx))
                cur = (ny, nx)
                prev_dir = d
                found = True
                break
        if not found:  # isolated pixel
            return np.array([(x, y) for y, x in contour])
    raise MaskOutOfBounds("contour tracing did not close")


def planar_clone_baseline(source, target, mask, offset):
    """Planar MVC cloning on the unrolled rasters (comparison baseline).

    ``mask`` selects the source patch; ``offset = (dx, dy)`` translates
    it into the target.  No sphere awareness at all: shapes distort near
    the poles and the mask may not leave the raster, exactly the
    behavior the spherical method exists to fix.
    """
    dx, dy = int(offset[0]), int(offset[1])
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise MaskOutOfBounds("empty mask")
    h, w = target.height, target.width
    if ys.min() + dy < 0 or ys.max() + dy >= h or xs.min() + dx < 0 or xs.max() + dx >= w:
        raise MaskOutOfBounds("mask leaves the target raster after the offset")

    contour = _trace_contour(mask)
    interior = mask.copy()
    interior[contour[:, 1], contour[:, 0]] = False
    iy, ix = np.nonzero(interior)

    src = source.data[:, :, :3]
    tgt = target.data[:, :, :3]
    d = tgt[contour[:, 1] + dy, contour[:, 0] + dx] - src[contour[:, 1], contour[:, 0]]

    out = tgt.copy()
    cpts = contour.astype(float)
    for lo in range(0, len(iy), 4096):
        sl = slice(lo, lo + 4096)
        p = np.stack([ix[sl], iy[sl]], axis=1).astype(float)
        lam = _planar_mvc_batch(p, cpts)
        out[iy[sl] + dy, ix[sl] + dx] = np.clip(
            src[iy[sl], ix[sl]] + lam @ d, 0.0, 1.0
        )
    return pano_mod.from_array(out)


def _planar_mvc_batch(points, poly):
    """Planar MVC rows for many points against one polygon."""
    r = poly[None, :, :] - points[:, None, :]
    dist = np.linalg.norm(r, axis=2)
    dist = np.maximum(dist, 1e-12)
    r_next = np.roll(r, -1, axis=1)
    d_next = np.roll(dist, -1, axis=1)
    cross = r[:, :, 0] * r_next[:, :, 1] - r[:, :, 1] * r_next[:, :, 0]
    dot = np.sum(r * r_next, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        tan_half = cross / (dist * d_next + dot)
        wts = (np.roll(tan_half, 1, axis=1) + tan_half) / dist
        wts = np.nan_to_num(wts, nan=0.0, posinf=0.0, neginf=0.0)
        return wts / wts.sum(axis=1, keepdims=True)


# ------------------------------------------------------------- serialization

_MAGIC = b"PANOCLONESESSION/1\n"


def save_session(session, fileobj):
    """Serialize a session to a binary stream (deterministic layout)."""
    arrays = {
        "source": session.source.data,
        "boundary": session.boundary.vertices,
        "mesh_vertices": session.mesh.vertices,
        "mesh_triangles": session.mesh.triangles.astype(np.int64),
        "mesh_plane": session.mesh.plane,
        "proj_center": session.mesh.proj_center,
        "rows": session.rows,
        "datum": session.datum,
        "source_boundary_rgb": session.source_boundary_rgb,
    }
    if session.matte is not None:
        arrays["matte"] = session.matte.data
    if session.split is not None:
        arrays["split_path"] = session.split.path.astype(np.int64)
        arrays["split_left"] = session.split.left_boundary.astype(np.int64)
        arrays["split_right"] = session.split.right_boundary.astype(np.int64)
        arrays["split_region"] = session.split.region.astype(np.int8)

    header = {
        "version": 1,
        "n_boundary": int(session.mesh.n_boundary),
        "supersampling": int(session.supersampling),
        "split": None
        if session.split is None
        else {
            "method": session.split.method,
            "sub_spans": [float(s) for s in session.split.sub_spans],
            "flagged": bool(session.split.flagged),
        },
        "arrays": [
            {"name": k, "dtype": str(v.dtype), "shape": list(v.shape)}
            for k, v in arrays.items()
        ],
    }
    head = json.dumps(header, sort_keys=True).encode()
    fileobj.write(_MAGIC)
    fileobj.write(len(head).to_bytes(8, "little"))
    fileobj.write(head)
    for v in arrays.values():
        fileobj.write(np.ascontiguousarray(v).tobytes())


def serialize_session(session):
    buf = io.BytesIO()
    save_session(session, buf)
    return buf.getvalue()


def load_session(fileobj):
    """Inverse of :func:`save_session`."""
    if fileobj.read(len(_MAGIC)) != _MAGIC:
        raise PanocloneError("not a panoclone session stream")
    n = int.from_bytes(fileobj.read(8), "little")
    header = json.loads(fileobj.read(n).decode())
    arrays = {}
    for spec in header["arrays"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        dt = np.dtype(spec["dtype"])
        buf = fileobj.read(count * dt.itemsize)
        arrays[spec["name"]] = np.frombuffer(buf, dtype=dt).reshape(spec["shape"]).copy()

    source = pano_mod.Panorama(arrays["source"])
    boundary = SphericalPolygon(arrays["boundary"])
    patch_mesh = _rebuild_mesh(
        arrays["mesh_vertices"],
        arrays["mesh_triangles"].astype(int),
        header["n_boundary"],
        arrays["mesh_plane"],
        arrays["proj_center"],
    )
    plan = None
    if header["split"] is not None:
        plan = split_mod.SplitPlan(
            path=arrays["split_path"].astype(int),
            left_boundary=arrays["split_left"].astype(int),
            right_boundary=arrays["split_right"].astype(int),
            region=arrays["split_region"],
            method=header["split"]["method"],
            sub_spans=tuple(header["split"]["sub_spans"]),
            flagged=header["split"]["flagged"],
        )
    matte = None
    if "matte" in arrays:
        matte = pano_mod.Panorama(arrays["matte"])
    rows = arrays["rows"]
    return CloneSession(
        source=source,
        boundary=boundary,
        mesh=patch_mesh,
        rows=rows,
        weights=smvc.normalize_rows(rows),
        split=plan,
        datum=arrays["datum"],
        supersampling=header["supersampling"],
        matte=matte,
        source_boundary_rgb=arrays["source_boundary_rgb"],
        timings={},
    )


def _rebuild_mesh(vertices, triangles, n_boundary, plane, proj_center):
    """Reconstruct the mesh acceleration structures from stored arrays."""
    tri = Delaunay(plane)
    kept = {tuple(sorted(t)): i for i, t in enumerate(triangles)}
    simplex_to_tri = -np.ones(len(tri.simplices), dtype=int)
    for s, simplex in enumerate(tri.simplices):
        simplex_to_tri[s] = kept.get(tuple(sorted(simplex)), -1)
    mats = vertices[triangles]
    tri_inv = np.linalg.inv(np.swapaxes(mats, 1, 2))
    incident_lists = [[] for _ in range(len(vertices))]
    for t, (i, j, k) in enumerate(triangles):
        incident_lists[i].append(t)
        incident_lists[j].append(t)
        incident_lists[k].append(t)
    kmax = max(len(lst) for lst in incident_lists)
    incident = -np.ones((len(vertices), kmax), dtype=int)
    for i, lst in enumerate(incident_lists):
        incident[i, : len(lst)] = lst
    return AdaptiveMesh(
        vertices=vertices,
        triangles=triangles,
        n_boundary=n_boundary,
        plane=plane,
        proj_center=proj_center,
        _delaunay=tri,
        _simplex_to_tri=simplex_to_tri,
        _tri_inv=tri_inv,
        _kdtree=cKDTree(plane),
        _incident=incident,
    )
