"""Basic workflow: preprocess a patch once, clone it at several anchors.

The session is built once; each anchor afterwards costs only the
membrane evaluation and rasterization (a few milliseconds), which is
what makes interactive dragging possible.
"""

import time

import numpy as np

from panoclone import engine, panorama
from _scenes import cap_outline, out_dir, smooth_panorama, textured_panorama

source = textured_panorama(h=512, seed=3)
target = smooth_panorama(h=512, seed=9)
outline = cap_outline(1.1, 1.35, 20)

t0 = time.perf_counter()
session = engine.preprocess(source, outline)
print(f"preprocess: {(time.perf_counter() - t0) * 1e3:.0f} ms "
      f"({session.mesh.n_boundary} boundary samples, {session.mesh.n_vertices} vertices)")

panorama.save(source, out_dir() / "01_source.png")
panorama.save(target, out_dir() / "01_target.png")

for name, anchor in [("equator", (3.5, np.pi / 2)), ("north", (5.2, 0.7)), ("south", (0.4, 2.3))]:
    t0 = time.perf_counter()
    out, timings = engine.render_clone(session, target, anchor)
    print(f"clone at {name}: membrane {timings['membrane_ms']:.1f} ms, "
          f"raster {timings['raster_ms']:.1f} ms")
    panorama.save(out, out_dir() / f"01_clone_{name}.png")

print("wrote", out_dir())
