"""Synthetic geometry and imagery shared by the test modules."""

import numpy as np

from panoclone import panorama, smvc, sphere


def random_polygon_pair(rng, span_max_deg=170, n_range=(6, 12)):
    """Random star-shaped spherical polygon plus a point strictly inside it.

    Bearing gaps are bounded so edges cannot dip past the sampled interior
    point; membership is verified (and the point pulled toward the star
    center if needed) so the "strictly inside" precondition always holds.
    """
    n = int(rng.integers(*n_range))
    c = sphere.normalize(rng.normal(size=3))
    e1, e2 = sphere.tangent_basis(c)
    while True:
        b = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([b, [b[0] + 2 * np.pi]]))
        if gaps.min() > 0.08 and gaps.max() < 1.4:
            break
    span = rng.uniform(5, span_max_deg)
    # keep the polygon clear of the poles so it never encircles one
    pole_room = min(abs(c[2]), 1.0)  # |cos| of the nearer pole distance
    max_rad = min(np.radians(span) / 2, np.arccos(pole_room) - 0.1)
    while max_rad < np.radians(2.0):
        c = sphere.normalize(rng.normal(size=3))
        max_rad = min(np.radians(span) / 2, np.arccos(min(abs(c[2]), 1.0)) - 0.1)
        e1, e2 = sphere.tangent_basis(c)
    rad = rng.uniform(0.3, 1.0, n) * max_rad
    verts = (
        np.cos(rad)[:, None] * c
        + np.sin(rad)[:, None] * (np.cos(b)[:, None] * e1 + np.sin(b)[:, None] * e2)
    )
    poly = smvc.SphericalPolygon(verts)
    rho = rng.uniform(0, 0.5 * rad.min())
    beta = rng.uniform(0, 2 * np.pi)
    d = np.cos(beta) * e1 + np.sin(beta) * e2
    v = np.cos(rho) * c + np.sin(rho) * d
    while not smvc.point_in_polygon(v, poly):
        rho *= 0.5
        v = np.cos(rho) * c + np.sin(rho) * d
    return v, poly


def band_polyline(az_span_deg=300, half_height_deg=20, n_az=60, n_side=6, tilt_deg=0.0):
    """(phi, theta) polyline of an equatorial band patch, optionally tilted.

    The band runs along the equator over ``az_span_deg`` of azimuth with
    polar half-height ``half_height_deg``; ``tilt_deg`` rotates the whole
    patch about the x axis (a slanted patch).
    """
    half = np.radians(az_span_deg) / 2
    hh = np.radians(half_height_deg)
    phis = np.linspace(-half, half, n_az)
    top = [(p, np.pi / 2 - hh) for p in phis]
    right = [(half, t) for t in np.linspace(np.pi / 2 - hh, np.pi / 2 + hh, n_side)[1:-1]]
    bottom = [(p, np.pi / 2 + hh) for p in phis[::-1]]
    left = [(-half, t) for t in np.linspace(np.pi / 2 + hh, np.pi / 2 - hh, n_side)[1:-1]]
    sph = np.array(top + right + bottom + left)
    v = sphere.sph_to_unit(sph[:, 0], sph[:, 1])
    if tilt_deg:
        rot = sphere.rodriguez(np.array([1.0, 0.0, 0.0]), np.radians(tilt_deg))
        v = v @ rot.T
    phi, theta = sphere.unit_to_sph(v)
    return np.stack([phi, theta], axis=1)


def band_polygon(**kw):
    pl = band_polyline(**kw)
    return smvc.SphericalPolygon(sphere.sph_to_unit(pl[:, 0], pl[:, 1]))


def cap_polyline(center_phi, center_theta, radius_deg, n=48):
    """(phi, theta) polyline of a circular cap around the given center."""
    c = sphere.sph_to_unit(center_phi, center_theta)
    e1, e2 = sphere.tangent_basis(c)
    r = np.radians(radius_deg)
    b = np.linspace(0, 2 * np.pi, n, endpoint=False)
    verts = np.cos(r) * c + np.sin(r) * (np.cos(b)[:, None] * e1 + np.sin(b)[:, None] * e2)
    phi, theta = sphere.unit_to_sph(verts)
    return np.stack([phi, theta], axis=1)


def smooth_panorama(h=128, seed=0, harmonics=3):
    """Procedural panorama, smooth and continuous on the sphere."""
    w = 2 * h
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    v = panorama.pixel_to_unit(ii, jj, w, h)
    rng = np.random.default_rng(seed)
    data = np.full((h, w, 3), 0.5)
    for k in range(3):
        for _ in range(harmonics):
            d = sphere.normalize(rng.normal(size=3))
            amp = rng.uniform(0.03, 0.12)
            freq = rng.uniform(1.0, 3.0)
            phase = rng.uniform(0, 2 * np.pi)
            data[:, :, k] += amp * np.sin(freq * np.pi * (v @ d) + phase)
    return panorama.from_array(np.clip(data, 0.0, 1.0))
