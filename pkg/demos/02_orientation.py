"""Orientation preservation: two-step rotation vs the naive axis-angle one.

Both rotations carry the datum to the anchor, but the naive one rolls
the patch about the view axis; the two-step estimate keeps local north
pointing north, so cloned content stays upright wherever it lands.
"""

import numpy as np

from panoclone import engine, panorama, sphere
from _scenes import cap_outline, out_dir, smooth_panorama, textured_panorama

source = textured_panorama(h=512, seed=5)
target = smooth_panorama(h=512, seed=6)
outline = cap_outline(0.9, 1.1, 16)
session = engine.preprocess(source, outline)

anchor = (4.4, 1.9)
v_t = sphere.sph_to_unit(*anchor)

out_two, _ = engine.render_clone(session, target, anchor)
out_naive, _ = engine.render_clone(session, target, anchor, rotation_method="naive")
panorama.save(out_two, out_dir() / "02_two_step.png")
panorama.save(out_naive, out_dir() / "02_naive.png")

naive = sphere.naive_rotation(session.datum, v_t)
two = sphere.two_step_rotation(session.datum, v_t)
print("both map datum to anchor:",
      np.linalg.norm(naive @ session.datum - v_t) < 1e-12,
      np.linalg.norm(two @ session.datum - v_t) < 1e-12)
print("rotation difference (Frobenius):", float(np.linalg.norm(naive - two)))
north = sphere.local_north(v_t)
print("north error, two-step:", float(np.linalg.norm(two @ sphere.local_north(session.datum) - north)))
print("north error, naive:   ", float(np.linalg.norm(naive @ sphere.local_north(session.datum) - north)))
print("wrote", out_dir())
