import numpy as np
import pytest

from panoclone import panorama, sphere
from panoclone.errors import AspectError, FormatError


def smooth_pano(h=64, seed=0):
    """Procedural panorama that is continuous on the sphere by construction."""
    w = 2 * h
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    v = panorama.pixel_to_unit(ii, jj, w, h)
    rng = np.random.default_rng(seed)
    a = rng.uniform(-0.4, 0.4, size=(3, 3))
    data = np.stack(
        [0.5 + a[k, 0] * v[..., 0] + a[k, 1] * np.sin(2 * v[..., 1]) + a[k, 2] * v[..., 2] for k in range(3)],
        axis=-1,
    )
    return panorama.from_array(data)


def test_aspect_rejected():
    with pytest.raises(AspectError):
        panorama.Panorama(np.zeros((60, 100, 3)))


def test_pixel_to_unit_conventions():
    np.testing.assert_allclose(panorama.pixel_to_unit(1.0, 1.0, 4, 2), [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(panorama.pixel_to_unit(0.0, 0.0, 4, 2), [0, 0, 1], atol=1e-15)


def test_pixel_round_trip():
    rng = np.random.default_rng(1)
    w, h = 128, 64
    x = rng.uniform(1e-6, w - 1e-6, size=500)
    y = rng.uniform(1e-3, h - 1e-3, size=500)
    v = panorama.pixel_to_unit(x, y, w, h)
    xb, yb = panorama.unit_to_pixel(v, w, h)
    np.testing.assert_allclose(xb, x, atol=1e-9)
    np.testing.assert_allclose(yb, y, atol=1e-9)


def test_sample_constant():
    pano = panorama.from_array(np.full((32, 64, 3), 0.37))
    rng = np.random.default_rng(2)
    v = rng.normal(size=(200, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    np.testing.assert_allclose(panorama.sample_bilinear(pano, v), 0.37, atol=1e-12)


def test_sample_pixel_center_exact():
    pano = smooth_pano(32)
    h, w = pano.height, pano.width
    for (i, j) in [(3, 5), (40, 17), (63, 31), (0, 0), (10, 31)]:
        v = panorama.pixel_to_unit(i + 0.5, j + 0.5, w, h)
        np.testing.assert_allclose(panorama.sample_bilinear(pano, v), pano.data[j, i], atol=1e-12)


def test_seam_continuity():
    pano = smooth_pano(64, seed=3)
    eps = 1e-7
    for theta in np.linspace(0.2, np.pi - 0.2, 9):
        a = panorama.sample_bilinear(pano, sphere.sph_to_unit(2 * np.pi - eps, theta))
        b = panorama.sample_bilinear(pano, sphere.sph_to_unit(eps, theta))
        np.testing.assert_allclose(a, b, atol=1e-5)


def test_pole_sampling_reflects():
    # a panorama whose top row varies with phi: approaching the pole from
    # opposite azimuths must converge to the same value (reflection), where
    # row clamping would leave a discontinuity the size of the row variation
    h, w = 16, 32
    data = np.zeros((h, w, 3))
    data[:, :, 0] = np.linspace(0, 1, w)[None, :]
    pano = panorama.from_array(data)
    eps = 1e-7
    a = panorama.sample_bilinear(pano, sphere.sph_to_unit(0.3, eps))
    b = panorama.sample_bilinear(pano, sphere.sph_to_unit(0.3 + np.pi, eps))
    assert abs(a[0] - b[0]) < 1e-4
    clamp_gap = abs(
        panorama.sample_bilinear(pano, sphere.sph_to_unit(0.3, np.pi / h))[0]
        - panorama.sample_bilinear(pano, sphere.sph_to_unit(0.3 + np.pi, np.pi / h))[0]
    )
    assert clamp_gap > 0.1  # the field itself does vary across the pole


def test_save_load_round_trip(tmp_path):
    pano = smooth_pano(32, seed=4)
    p = tmp_path / "p.png"
    panorama.save(pano, p)
    again = panorama.load(p)
    assert again.data.shape == pano.data.shape
    assert np.max(np.abs(again.data - pano.data)) <= 1.0 / 255.0 + 1e-12


def test_load_rejects_bad_aspect(tmp_path):
    from PIL import Image

    p = tmp_path / "bad.png"
    Image.fromarray(np.zeros((600, 1000, 3), dtype=np.uint8)).save(p)
    with pytest.raises(AspectError):
        panorama.load(p)


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"this is not an image")
    with pytest.raises(FormatError):
        panorama.load(p)
