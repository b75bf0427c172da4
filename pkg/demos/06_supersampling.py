"""Supersampling vs aliasing when the source is minified.

A patch near a pole is oversampled in the equirectangular raster; when
its fine azimuthal detail is cloned toward the equator, one output
pixel covers many source pixels and single-sample rendering aliases.
Stratified sub-pixel sampling averages the detail out.
"""

import time

import numpy as np

from panoclone import engine, panorama
from _scenes import cap_outline, out_dir

h = 512
w = 2 * h
jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
stripes = np.full((h, w, 3), 0.5)
stripes += 0.3 * np.sin(ii * 2 * np.pi / w * 240)[..., None]
source = panorama.from_array(np.clip(stripes, 0, 1))
target = panorama.from_array(np.full((h, w, 3), 0.45))

outline = cap_outline(1.0, np.radians(24), 14)
session = engine.preprocess(source, outline)
anchor = (4.0, np.pi / 2)

reference, _ = engine.render_clone(session, target, anchor, supersampling=16)
for n in (1, 2, 4, 8, 16):
    t0 = time.perf_counter()
    out, timings = engine.render_clone(session, target, anchor, supersampling=n)
    dt = (time.perf_counter() - t0) * 1e3
    residual = np.sqrt(np.mean((out.data - reference.data) ** 2)) * 255
    panorama.save(out, out_dir() / f"06_supersample_{n}x{n}.png")
    print(f"{n:2d}x{n:<2d}: clone {dt:7.1f} ms, residual vs 16x16 reference "
          f"{residual:6.3f}/255")
print("wrote", out_dir())
