"""Unit-sphere geometry: coordinate conversions, angles and rotations.

Conventions used throughout the package:

* ``+z`` is the north pole.
* ``phi`` is the azimuthal angle in ``[0, 2*pi)``, measured from ``+x``
  toward ``+y``.
* ``theta`` is the polar angle in ``[0, pi]``, with ``theta = 0`` at the
  north pole, so ``x = sin(theta)*cos(phi)``, ``y = sin(theta)*sin(phi)``,
  ``z = cos(theta)``.

All functions accept either a single vector of shape ``(3,)`` or a batch
of shape ``(..., 3)`` and are pure (no state, safe to call concurrently).
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateAngle, DegenerateAxis, PoleDatum

# Below this, a cross product is considered zero and angles degenerate.
CROSS_EPS = 1e-12

# A point with |z| above 1 - POLE_EPS is treated as a pole.
POLE_EPS = 1e-12

# Datum points closer than this (in |sin(theta)|) to a pole make the
# two-step rotation axis undefined.
DATUM_POLE_EPS = 1e-9


def normalize(v):
    """Return ``v`` scaled to unit length (batched over the last axis)."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def sph_to_unit(phi, theta):
    """Convert spherical coordinates to unit vectors.

    Parameters
    ----------
    phi : float or array
        Azimuthal angle in radians.
    theta : float or array
        Polar angle in radians (0 at the north pole).

    Returns
    -------
    numpy.ndarray
        Unit vector(s), shape ``(..., 3)``.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def unit_to_sph(v):
    """Convert unit vectors to ``(phi, theta)`` spherical coordinates.

    ``phi`` is normalized into ``[0, 2*pi)``; at the poles
    (``|z| > 1 - 1e-12``) ``phi = 0`` by convention.

    Returns
    -------
    (phi, theta) : tuple of floats or arrays
    """
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.hypot(x, y)
    theta = np.arctan2(rho, z)
    phi = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    phi = np.where(np.abs(z) > 1.0 - POLE_EPS, 0.0, phi)
    if v.ndim == 1:
        return float(phi), float(theta)
    return phi, theta


def angle_between(a, b):
    """Angle between two unit vectors in ``[0, pi]``.

    Uses ``atan2(|a x b|, a . b)`` which stays accurate near 0 and pi.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.cross(a, b)
    s = np.linalg.norm(cross, axis=-1)
    c = np.sum(a * b, axis=-1)
    ang = np.arctan2(s, c)
    if ang.ndim == 0:
        return float(ang)
    return ang


def signed_angle_at(v, a, b):
    """Signed angle between ``v x a`` and ``v x b``.

    Positive when the turn from ``v x a`` to ``v x b`` is
    counter-clockwise as seen from outside the sphere at ``v`` (looking
    toward the origin), i.e. a positive rotation about ``+v``.

    Raises
    ------
    DegenerateAngle
        If ``a`` or ``b`` is within 1e-12 of ``+/-v`` (cross product
        vanishes and the angle is undefined).
    """
    v = np.asarray(v, dtype=float)
    c1 = np.cross(v, np.asarray(a, dtype=float))
    c2 = np.cross(v, np.asarray(b, dtype=float))
    n1 = np.linalg.norm(c1)
    n2 = np.linalg.norm(c2)
    if n1 < CROSS_EPS or n2 < CROSS_EPS:
        raise DegenerateAngle("a or b is (anti)parallel to v; angle undefined")
    s = float(np.dot(np.cross(c1, c2), v))
    c = float(np.dot(c1, c2))
    return float(np.arctan2(s, c))


def rodriguez(axis, angle):
    """Rotation matrix about ``axis`` by ``angle`` (axis must be unit).

    ``R = I*cos(t) + sin(t)*[u]_x + (1 - cos(t))*u u^T`` with the
    right-hand rule about ``u``.
    """
    u = np.asarray(axis, dtype=float)
    c = float(np.cos(angle))
    s = float(np.sin(angle))
    ux, uy, uz = u
    skew = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return c * np.eye(3) + s * skew + (1.0 - c) * np.outer(u, u)


def rotation_about_z(angle):
    """Rotation about the z axis by ``angle`` radians."""
    c, s = float(np.cos(angle)), float(np.sin(angle))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def two_step_rotation(v_s, v_t):
    """Orientation-preserving rotation taking ``v_s`` to ``v_t``.

    The rotation is composed as ``R = R2 @ R1``: ``R1`` spins about the
    z axis by the azimuth difference, then ``R2`` rotates within the
    target meridian plane (about the horizontal normal of that plane)
    by the polar-angle difference.  The composition maps the meridian
    through ``v_s`` onto the meridian through ``v_t`` and therefore
    keeps "local north" pointing north.

    Raises
    ------
    PoleDatum
        If ``v_s`` is within 1e-9 of a pole, where the second rotation
        axis degenerates.  Callers should nudge the datum off the pole.
    """
    v_s = np.asarray(v_s, dtype=float)
    v_t = np.asarray(v_t, dtype=float)
    phi_s, theta_s = unit_to_sph(v_s)
    phi_t, theta_t = unit_to_sph(v_t)
    r1 = rotation_about_z(phi_t - phi_s)
    v_s1 = r1 @ v_s
    u = np.cross(v_s1, np.array([0.0, 0.0, 1.0]))
    nu = np.linalg.norm(u)
    if nu < DATUM_POLE_EPS:
        raise PoleDatum("datum point is at a pole; meridian rotation undefined")
    # Positive rotation about v_s' x z moves the point toward the north
    # pole, so the polar angle delta enters with a minus sign.
    r2 = rodriguez(u / nu, theta_s - theta_t)
    return r2 @ r1


def naive_rotation(v_s, v_t):
    """Axis-angle rotation taking ``v_s`` to ``v_t`` (comparison baseline).

    Axis ``v_s x v_t``, angle ``arccos(v_s . v_t)``.  Does not preserve
    the patch orientation; kept only to demonstrate the difference from
    :func:`two_step_rotation`.

    Raises
    ------
    DegenerateAxis
        If ``v_s`` and ``v_t`` are (anti)parallel.
    """
    v_s = np.asarray(v_s, dtype=float)
    v_t = np.asarray(v_t, dtype=float)
    u = np.cross(v_s, v_t)
    nu = np.linalg.norm(u)
    if nu < CROSS_EPS:
        raise DegenerateAxis("v_s and v_t are (anti)parallel")
    angle = float(np.arctan2(nu, np.dot(v_s, v_t)))
    return rodriguez(u / nu, angle)


def tangent_basis(v):
    """Deterministic orthonormal basis ``(e1, e2)`` of the plane normal to ``v``.

    ``e1`` is derived from the coordinate axis least aligned with ``v``
    so the result is stable under small perturbations of ``v``.
    """
    v = np.asarray(v, dtype=float)
    k = int(np.argmin(np.abs(v)))
    a = np.zeros(3)
    a[k] = 1.0
    e1 = a - v * v[k]
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


def local_north(v):
    """Unit tangent at ``v`` pointing toward the north pole.

    Undefined at the poles (returns a zero-norm vector there).
    """
    v = np.asarray(v, dtype=float)
    z = np.array([0.0, 0.0, 1.0])
    t = z - np.sum(v * z, axis=-1, keepdims=True) * v if v.ndim > 1 else z - np.dot(v, z) * v
    return normalize(t)
