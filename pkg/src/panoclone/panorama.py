"""Equirectangular panorama raster: spherical sampling and file I/O.

A panorama is a ``width = 2 * height`` raster whose columns span azimuth
``[0, 2*pi)`` and rows span polar angle ``[0, pi]`` (row 0 at the north
pole).  Pixel centers sit at ``(i + 0.5, j + 0.5)``; the continuous
mapping ``phi = 2*pi*x/w``, ``theta = pi*y/h`` is used for geometry.

Sampling is bilinear with true spherical neighborhoods: columns wrap
modulo the width, and rows beyond the first/last reflect through the
pole with a half-width column shift (the neighborhood of a pole spans
all azimuths).  Values are stored as floats in ``[0, 1]`` as decoded
from 8-bit files; no gamma conversion is applied (cloning runs on the
stored intensities).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import sphere
from .errors import AspectError, FormatError


@dataclass(frozen=True)
class Panorama:
    """Immutable equirectangular raster, channels in ``[0, 1]``."""

    data: np.ndarray  # (h, w, c) float64, c in {1, 3, 4}

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] not in (1, 3, 4):
            raise AspectError("expected (h, w, c) raster with 1, 3 or 4 channels")
        h, w = d.shape[:2]
        if w != 2 * h:
            raise AspectError(f"width must equal 2*height, got {w}x{h}")
        if d.min() < 0.0 or d.max() > 1.0:
            raise AspectError("channel values must lie in [0, 1]")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]


def from_array(arr):
    """Wrap a float array (copied, clipped to [0,1]) as a Panorama."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Panorama(np.clip(arr, 0.0, 1.0))


def pixel_to_unit(x, y, w, h):
    """Continuous pixel coordinates to unit vectors (``phi = 2*pi*x/w``)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = 2.0 * np.pi * x / w
    theta = np.pi * y / h
    return sphere.sph_to_unit(phi, theta)


def unit_to_pixel(v, w, h):
    """Inverse of :func:`pixel_to_unit` (phi in [0, 2*pi) maps to x in [0, w))."""
    phi, theta = sphere.unit_to_sph(np.asarray(v, dtype=float))
    return np.asarray(phi) * w / (2.0 * np.pi), np.asarray(theta) * h / np.pi


def _wrap_rows(j, x_shift, h, w):
    """Map row indices past the poles onto reflected rows with a phi+pi shift.

    Returns the valid row index and a boolean mask of entries that were
    reflected (their column lookup must shift by w/2).
    """
    reflected_top = j < 0
    reflected_bot = j > h - 1
    j = np.where(reflected_top, -1 - j, j)
    j = np.where(reflected_bot, 2 * h - 1 - j, j)
    reflected = reflected_top | reflected_bot
    return j, reflected


def sample_bilinear(pano, v):
    """Sample a panorama at unit direction(s) ``v`` with bilinear filtering.

    Horizontal neighbors wrap modulo the width; vertical access beyond
    the pole rows reflects through the pole with a half-width column
    shift.  Accepts ``(3,)`` or ``(n, 3)`` and returns ``(c,)`` or
    ``(n, c)``.
    """
    data = pano.data
    h, w, c = data.shape
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    v = np.atleast_2d(v)

    x, y = unit_to_pixel(v, w, h)
    xf = x - 0.5
    yf = y - 0.5
    i0 = np.floor(xf).astype(np.int64)
    j0 = np.floor(yf).astype(np.int64)
    fx = (xf - i0)[:, None]
    fy = (yf - j0)[:, None]

    out = np.zeros((v.shape[0], c))
    half = w // 2
    for dj, wy in ((0, 1.0 - fy), (1, fy)):
        j, refl = _wrap_rows(j0 + dj, None, h, w)
        for di, wx in ((0, 1.0 - fx), (1, fx)):
            i = np.mod(i0 + di + np.where(refl, half, 0), w)
            out += wy * wx * data[j, i]
    if single:
        return out[0]
    return out


def load(path):
    """Load a PNG/JPEG equirectangular image as a :class:`Panorama`.

    Raises
    ------
    FormatError
        If the file cannot be decoded.
    AspectError
        If the image is not 2:1.
    """
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"cannot decode image {path!r}: {exc}") from exc
    if img.mode not in ("L", "RGB", "RGBA"):
        img = img.convert("RGBA" if "A" in img.getbands() else "RGB")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[1] != 2 * arr.shape[0]:
        raise AspectError(
            f"not equirectangular: {arr.shape[1]}x{arr.shape[0]} (need width = 2*height)"
        )
    return Panorama(arr)


def to_uint8(pano):
    """Quantize to 8 bit with round-half-up."""
    return np.clip(np.floor(pano.data * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save(pano, path):
    """Write an 8-bit PNG (round-half-up quantization)."""
    arr = to_uint8(pano)
    if arr.shape[2] == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB" if arr.shape[2] == 3 else "RGBA")
    img.save(path, format="PNG")
