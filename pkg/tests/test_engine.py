import io

import numpy as np
import pytest

from panoclone import engine, panorama, sphere
from panoclone.errors import MaskOutOfBounds, PoleDatum
from synth import band_polyline, cap_polyline, smooth_panorama


SRC = smooth_panorama(h=256, seed=11)
TGT = smooth_panorama(h=256, seed=12)
PATCH = cap_polyline(1.0, 1.4, 18, n=30)


@pytest.fixture(scope="module")
def session():
    return engine.preprocess(SRC, PATCH)


def test_identity_clone_lossless(session):
    out, _ = engine.render_clone(session, SRC, session.datum)
    q_out = panorama.to_uint8(out)
    q_src = panorama.to_uint8(SRC)
    assert np.abs(q_out.astype(int) - q_src.astype(int)).max() <= 1


def test_constant_difference_membrane(session):
    shifted = panorama.from_array(np.clip(SRC.data - 0.07, 0, 1))
    _, diffs, mem = engine.compute_membrane(session, shifted, session.datum)
    np.testing.assert_allclose(diffs, -0.07, atol=1e-12)
    np.testing.assert_allclose(mem, -0.07, atol=1e-9)


def test_membrane_boundary_values_exact(session):
    rot, diffs, mem = engine.compute_membrane(session, TGT, (2.2, 1.1))
    nb = session.mesh.n_boundary
    np.testing.assert_allclose(mem[:nb], diffs, atol=1e-9)


def test_boundary_seamless(session):
    anchor = (2.2, 1.1)
    out, _ = engine.render_clone(session, TGT, anchor)
    rot, _, _ = engine.compute_membrane(session, TGT, anchor)
    bverts = session.boundary.vertices @ rot.T
    dev = np.abs(
        panorama.sample_bilinear(out, bverts) - panorama.sample_bilinear(TGT, bverts)
    )
    assert dev.max() <= 2.0 / 255.0


def test_anchor_equivariance(session):
    # cloning then spinning about z equals cloning at the spun anchor
    anchor = np.array([2.0, 1.2])
    dphi = 2 * np.pi * 17 / TGT.width  # whole pixels, so the spin is exact
    out1, _ = engine.render_clone(session, TGT, anchor)
    rolled = panorama.from_array(np.roll(out1.data, 17, axis=1))
    tgt_rolled = panorama.from_array(np.roll(TGT.data, 17, axis=1))
    ses_out2, _ = engine.render_clone(
        engine.preprocess(SRC, PATCH), tgt_rolled, (anchor[0] + dphi, anchor[1])
    )
    diff = np.abs(rolled.data - ses_out2.data).mean()
    assert diff <= 2.0 / 255.0


def test_seam_continuity():
    # anchor across phi=0 with smooth boundary difference: the composite
    # wraps and the seam-adjacent columns stay as continuous as the
    # underlying content
    ses = engine.preprocess(SRC, PATCH)
    tgt = panorama.from_array(np.clip(SRC.data - 0.05, 0, 1))
    out, _ = engine.render_clone(ses, tgt, (0.02, 1.35))
    cols = np.abs(out.data[:, 0, :] - out.data[:, -1, :])
    assert cols.max() <= 2.0 / 255.0


def test_supersampling_reduces_aliasing():
    # high-frequency azimuthal stripes near the pole, cloned to the equator:
    # the source is minified there and 1x1 sampling aliases
    h = 256
    w = 2 * h
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    data = np.full((h, w, 3), 0.5)
    data += 0.3 * np.sin(ii * 2 * np.pi / w * 180)[..., None]
    striped = panorama.from_array(np.clip(data, 0, 1))
    patch = cap_polyline(1.0, np.radians(24), 14, n=30)
    ses = engine.preprocess(striped, patch)
    anchor = (4.0, np.pi / 2)
    out1, _ = engine.render_clone(ses, TGT, anchor, supersampling=1)
    out4, _ = engine.render_clone(ses, TGT, anchor, supersampling=4)
    out16, _ = engine.render_clone(ses, TGT, anchor, supersampling=16)
    r1 = np.sqrt(np.mean((out1.data - out16.data) ** 2))
    r4 = np.sqrt(np.mean((out4.data - out16.data) ** 2))
    assert r1 > 2.0 * r4 > 0.0


def test_supersampling_cost_structure(session):
    out1, tm1 = engine.render_clone(session, TGT, (2.2, 1.1), supersampling=1)
    out16, tm16 = engine.render_clone(session, TGT, (2.2, 1.1), supersampling=16)
    t1 = tm1["membrane_ms"] + tm1["raster_ms"]
    t16 = tm16["membrane_ms"] + tm16["raster_ms"]
    assert 4.0 * t1 < t16 < 40.0 * t1


def test_rect_preview_matches_full(session):
    anchor = (2.2, 1.1)
    full, _ = engine.render_clone(session, TGT, anchor)
    rect = (520, 60, 140, 120)
    sub, _ = engine.render_clone(session, TGT, anchor, rect=rect)
    x, y, rw, rh = rect
    np.testing.assert_array_equal(
        panorama.to_uint8(sub)[y : y + rh, x : x + rw],
        panorama.to_uint8(full)[y : y + rh, x : x + rw],
    )
    # outside the rect the target is untouched
    assert np.array_equal(sub.data[0, :, :], TGT.data[0, :, :3])


def test_matte_modulation():
    # alpha=0 over half the patch defers to the target there
    alpha = np.zeros((SRC.height, SRC.width, 1))
    alpha[:, : SRC.width // 2] = 1.0
    matte = panorama.from_array(alpha)
    ses = engine.preprocess(SRC, PATCH, matte=matte)
    anchor = (2.2, 1.1)
    out, _ = engine.render_clone(ses, TGT, anchor)
    rot, _, _ = engine.compute_membrane(ses, TGT, anchor)
    inner = sphere.normalize(ses.boundary.vertices.mean(axis=0))
    # pick probe points on both alpha sides of the patch interior
    e1, e2 = sphere.tangent_basis(inner)
    probe_on = inner  # datum is in the alpha=1 half (phi=1.0 < pi)
    v_t = rot @ probe_on
    assert np.abs(
        panorama.sample_bilinear(out, v_t) - panorama.sample_bilinear(TGT, v_t)
    ).max() > 0.01  # cloned content visible where alpha=1


def test_pole_datum_raises():
    polar_patch = cap_polyline(0.3, 0.0, 10, n=24)
    ses = engine.preprocess(SRC, polar_patch)
    with pytest.raises(PoleDatum):
        engine.render_clone(ses, TGT, (2.0, 1.0))


def test_preprocess_split_modes():
    pl300 = band_polyline(az_span_deg=300, half_height_deg=20, n_az=100)
    ses = engine.preprocess(SRC, pl300, spacing=np.radians(1.5), split="auto")
    assert ses.split is not None and ses.split.method == "median"
    small = engine.preprocess(SRC, PATCH, split="auto")
    assert small.split is None
    forced = engine.preprocess(SRC, PATCH, split="median")
    assert forced.split is not None


def test_session_serialization_round_trip(session):
    blob1 = engine.serialize_session(session)
    blob2 = engine.serialize_session(engine.preprocess(SRC, PATCH))
    assert blob1 == blob2  # preprocess is deterministic, bytes included
    ses2 = engine.load_session(io.BytesIO(blob1))
    anchor = (2.2, 1.1)
    out1, _ = engine.render_clone(session, TGT, anchor)
    out2, _ = engine.render_clone(ses2, TGT, anchor)
    assert np.array_equal(panorama.to_uint8(out1), panorama.to_uint8(out2))


# ------------------------------------------------------------------ baseline

def test_planar_baseline_constant_difference_matches():
    w, h = SRC.width, SRC.height
    pl = cap_polyline(1.0, np.pi / 2, 12, n=30)
    px = np.stack([pl[:, 0] * w / (2 * np.pi), pl[:, 1] * h / np.pi], axis=1)
    mask = engine.rasterize_polygon(px, w, h)
    shifted = panorama.from_array(np.clip(SRC.data + 0.08, 0, 1))
    ses = engine.preprocess(SRC, pl)
    sph, _ = engine.render_clone(ses, shifted, ses.datum)
    base = engine.planar_clone_baseline(SRC, shifted, mask, (0, 0))
    assert np.abs(sph.data - base.data).mean() <= 2.0 / 255.0


def test_planar_baseline_diverges_with_latitude():
    w, h = SRC.width, SRC.height
    pl = cap_polyline(1.0, np.pi / 2, 12, n=30)
    px = np.stack([pl[:, 0] * w / (2 * np.pi), pl[:, 1] * h / np.pi], axis=1)
    mask = engine.rasterize_polygon(px, w, h)
    shifted = panorama.from_array(np.clip(SRC.data + 0.08, 0, 1))
    ses = engine.preprocess(SRC, pl)
    means = []
    for lat in (0, 30, 60):
        theta_t = np.pi / 2 - np.radians(lat)
        dy = int(round((theta_t - np.pi / 2) * h / np.pi))
        sph, _ = engine.render_clone(ses, shifted, (1.0, theta_t))
        base = engine.planar_clone_baseline(SRC, shifted, mask, (0, dy))
        means.append(np.abs(sph.data - base.data).mean())
    assert means[0] < means[1] < means[2]


def test_planar_baseline_out_of_bounds():
    w, h = SRC.width, SRC.height
    mask = np.zeros((h, w), dtype=bool)
    mask[10:40, 100:160] = True
    with pytest.raises(MaskOutOfBounds):
        engine.planar_clone_baseline(SRC, TGT, mask, (0, -20))
    with pytest.raises(MaskOutOfBounds):
        engine.planar_clone_baseline(SRC, TGT, mask, (w - 120, 0))
