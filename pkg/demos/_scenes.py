"""Synthetic panoramas and patch outlines shared by the demo scripts."""

import numpy as np

from panoclone import panorama, sphere


def smooth_panorama(h=512, seed=0, harmonics=4):
    """Band-limited random panorama, continuous on the sphere."""
    w = 2 * h
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    v = panorama.pixel_to_unit(ii, jj, w, h)
    rng = np.random.default_rng(seed)
    data = np.full((h, w, 3), 0.5)
    for k in range(3):
        for _ in range(harmonics):
            d = sphere.normalize(rng.normal(size=3))
            data[:, :, k] += rng.uniform(0.04, 0.13) * np.sin(
                rng.uniform(1, 3) * np.pi * (v @ d) + rng.uniform(0, 2 * np.pi)
            )
    return panorama.from_array(np.clip(data, 0, 1))


def textured_panorama(h=512, seed=0):
    """Checker-and-gradient panorama that makes warps easy to see."""
    w = 2 * h
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    v = panorama.pixel_to_unit(ii, jj, w, h)
    rng = np.random.default_rng(seed)
    a, b = sphere.normalize(rng.normal(size=3)), sphere.normalize(rng.normal(size=3))
    checker = (np.sin(24 * (v @ a)) * np.sin(24 * (v @ b)) > 0).astype(float)
    data = np.stack(
        [
            0.25 + 0.5 * checker,
            0.45 + 0.3 * (v @ np.array([0, 0, 1.0])),
            0.5 + 0.25 * np.sin(6 * (v @ a)),
        ],
        axis=-1,
    )
    return panorama.from_array(np.clip(data, 0, 1))


def cap_outline(center_phi, center_theta, radius_deg, n=40):
    c = sphere.sph_to_unit(center_phi, center_theta)
    e1, e2 = sphere.tangent_basis(c)
    r = np.radians(radius_deg)
    bearings = np.linspace(0, 2 * np.pi, n, endpoint=False)
    verts = np.cos(r) * c + np.sin(r) * (
        np.cos(bearings)[:, None] * e1 + np.sin(bearings)[:, None] * e2
    )
    phi, theta = sphere.unit_to_sph(verts)
    return np.stack([phi, theta], axis=1)


def band_outline(az_span_deg=300, half_height_deg=20, n_az=120, tilt_deg=0.0):
    half = np.radians(az_span_deg) / 2
    hh = np.radians(half_height_deg)
    phis = np.linspace(-half, half, n_az)
    pts = (
        [(p, np.pi / 2 - hh) for p in phis]
        + [(half, t) for t in np.linspace(np.pi / 2 - hh, np.pi / 2 + hh, 8)[1:-1]]
        + [(p, np.pi / 2 + hh) for p in phis[::-1]]
        + [(-half, t) for t in np.linspace(np.pi / 2 + hh, np.pi / 2 - hh, 8)[1:-1]]
    )
    sph = np.array(pts)
    v = sphere.sph_to_unit(sph[:, 0], sph[:, 1])
    if tilt_deg:
        rot = sphere.rodriguez(np.array([1.0, 0, 0]), np.radians(tilt_deg))
        v = v @ rot.T
    phi, theta = sphere.unit_to_sph(v)
    return np.stack([phi, theta], axis=1)


def out_dir():
    import pathlib

    d = pathlib.Path(__file__).parent / "out"
    d.mkdir(exist_ok=True)
    return d
