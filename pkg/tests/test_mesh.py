import numpy as np
import pytest

from panoclone import mesh, smvc, sphere
from panoclone.errors import DegeneratePolyline, OutsidePatch
from synth import band_polyline, cap_polyline


def build_cap(radius_deg=25, n_boundary=279, center=(1.0, 1.3)):
    pl = cap_polyline(center[0], center[1], radius_deg, n=24)
    poly0 = smvc.SphericalPolygon(sphere.sph_to_unit(pl[:, 0], pl[:, 1]))
    perim = np.sum(
        sphere.angle_between(poly0.vertices, np.roll(poly0.vertices, -1, axis=0))
    )
    boundary = mesh.sample_boundary(pl, perim / n_boundary)
    return mesh.build_adaptive_mesh(boundary)


# ------------------------------------------------------------ boundary sampling

def test_sample_boundary_triangle_counts():
    # triangle with 10-degree edges, 1-degree spacing -> 30 samples (+/- rounding)
    c = sphere.sph_to_unit(0.5, 1.2)
    e1, e2 = sphere.tangent_basis(c)
    r = np.radians(10) / np.sqrt(3)  # circumradius for ~10 deg sides
    b = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3]) + 0.3
    verts = np.cos(r) * c + np.sin(r) * (np.cos(b)[:, None] * e1 + np.sin(b)[:, None] * e2)
    side = sphere.angle_between(verts[0], verts[1])
    phi, theta = sphere.unit_to_sph(verts)
    poly = mesh.sample_boundary(np.stack([phi, theta], axis=1), side / 10)
    assert abs(len(poly) - 30) <= 1


def test_sample_boundary_coarse_spacing_keeps_input():
    pl = cap_polyline(0.3, 1.5, 20, n=12)
    poly = mesh.sample_boundary(pl, np.radians(60))
    assert len(poly) == 12


def test_sample_boundary_seam_wrap():
    # polyline hopping across phi = 0: arcs must take the short way around
    pl = np.array(
        [[np.radians(350), 1.4], [np.radians(10), 1.4], [np.radians(10), 1.7], [np.radians(350), 1.7]]
    )
    poly = mesh.sample_boundary(pl, np.radians(2))
    arcs = sphere.angle_between(poly.vertices, np.roll(poly.vertices, -1, axis=0))
    assert np.degrees(arcs.max()) < 2.5  # nothing took the 340-degree detour
    span = np.degrees(poly.angular_span())
    assert span < 45


def test_sample_boundary_dedup_and_degenerate():
    pl = np.array([[0.0, 1.0], [0.0, 1.0], [0.1, 1.0]])
    with pytest.raises(DegeneratePolyline):
        mesh.sample_boundary(pl, 0.01)


# ------------------------------------------------------------ mesh construction

def test_mesh_boundary_preserved_and_manifold():
    m = build_cap(radius_deg=20, n_boundary=100)
    poly = m.boundary_polygon()
    np.testing.assert_array_equal(m.vertices[: m.n_boundary], poly.vertices)
    # every boundary vertex used by at least one triangle
    used = np.unique(m.triangles)
    assert np.all(np.isin(np.arange(m.n_boundary), used))
    # positive spherical area: the three vertices form a proper frame
    tv = m.vertices[m.triangles]
    det = np.linalg.det(tv)
    assert np.all(np.abs(det) > 1e-12)


def test_mesh_density_band_279():
    m = build_cap(radius_deg=25, n_boundary=279)
    assert 270 <= m.n_boundary <= 290
    assert 700 <= m.n_vertices <= 1600


def test_mesh_max_vertex_pair_angle():
    for build in (lambda: build_cap(20, 150), lambda: _band_mesh()):
        m = build()
        tv = m.vertices[m.triangles]
        for a, b in ((0, 1), (1, 2), (2, 0)):
            ang = sphere.angle_between(tv[:, a], tv[:, b])
            assert ang.max() < np.pi / 2


def _band_mesh():
    pl = band_polyline(az_span_deg=300, half_height_deg=20, n_az=120)
    return mesh.build_adaptive_mesh(mesh.sample_boundary(pl, np.radians(1.5)))


def test_mesh_interior_rows_nonnegative_convex_patch():
    m = build_cap(radius_deg=12, n_boundary=90)
    poly = m.boundary_polygon()
    rows = smvc.smvc_rows(m.vertices[m.n_boundary :], poly)
    assert rows.min() > -1e-12


def test_mesh_determinism():
    m1 = build_cap(radius_deg=18, n_boundary=120)
    m2 = build_cap(radius_deg=18, n_boundary=120)
    assert np.array_equal(m1.vertices, m2.vertices)
    assert np.array_equal(m1.triangles, m2.triangles)
    assert m1.to_obj() == m2.to_obj()


# ------------------------------------------------------------------ locate

def test_locate_mesh_vertices_indicator():
    m = build_cap(radius_deg=20, n_boundary=100)
    sel = [0, 5, m.n_boundary - 1, m.n_boundary + 2, m.n_vertices - 1]
    ids, w = m.locate(m.vertices[sel])
    assert np.all(ids >= 0)
    np.testing.assert_allclose(w.max(axis=1), 1.0, atol=1e-9)


def test_locate_edge_midpoints():
    m = build_cap(radius_deg=20, n_boundary=100)
    e = m.edges()
    mids = sphere.normalize(m.vertices[e[:, 0]] + m.vertices[e[:, 1]])
    ids, w = m.locate(mids)
    assert np.all(ids >= 0)
    srt = np.sort(w, axis=1)
    assert srt[:, 0].max() < 1e-6
    assert np.abs(srt[:, 1:] - 0.5).max() < 1e-6


def test_locate_random_interior_reproduction():
    m = build_cap(radius_deg=25, n_boundary=150)
    rng = np.random.default_rng(4)
    c = m.proj_center
    e1, e2 = sphere.tangent_basis(c)
    rho = rng.uniform(0, np.radians(24), 10000)
    beta = rng.uniform(0, 2 * np.pi, 10000)
    d = np.cos(beta)[:, None] * e1 + np.sin(beta)[:, None] * e2
    pts = np.cos(rho)[:, None] * c + np.sin(rho)[:, None] * d
    ids, w = m.locate(pts)
    inside = ids >= 0
    assert inside.mean() > 0.95
    tv = m.vertices[m.triangles[ids[inside]]]
    rec = np.einsum("nk,nkd->nd", w[inside], tv)
    rec /= np.linalg.norm(rec, axis=1, keepdims=True)
    assert np.linalg.norm(rec - pts[inside], axis=1).max() < 1e-6


def test_locate_outside_raises():
    m = build_cap(radius_deg=20, n_boundary=100)
    with pytest.raises(OutsidePatch):
        m.locate_one(-m.proj_center)


def test_obj_export_roundtrips_counts():
    m = build_cap(radius_deg=15, n_boundary=80)
    text = m.to_obj()
    nv = sum(1 for line in text.splitlines() if line.startswith("v "))
    nf = sum(1 for line in text.splitlines() if line.startswith("f "))
    assert nv == m.n_vertices and nf == len(m.triangles)
