"""The three splitting-path constructions on a tall slanted band.

On tall wide patches the first 3D principal component of the boundary
aligns with the patch normal (the 300-degree arc's in-plane spread
saturates in chord length), so the induced cut runs lengthwise and
leaves both halves wider than 180 degrees.  The median-azimuth cut and
the projected-PCA cut stay transverse.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from panoclone import mesh, sphere, split
from _scenes import band_outline, out_dir

outline = band_outline(az_span_deg=300, half_height_deg=42, n_az=120, tilt_deg=12)
m = mesh.build_adaptive_mesh(mesh.sample_boundary(outline, np.radians(1.5)))

fig, axes = plt.subplots(3, 1, figsize=(12, 10))
for ax, (name, fn) in zip(axes, split.SPLIT_METHODS.items()):
    plan = fn(m)
    bphi, btheta = sphere.unit_to_sph(m.vertices[: m.n_boundary])
    pphi, ptheta = sphere.unit_to_sph(m.vertices[plan.path])
    ax.scatter(np.degrees(bphi), np.degrees(btheta), s=2, c="steelblue", label="boundary")
    ax.plot(np.degrees(pphi), np.degrees(ptheta), "r.-", lw=2, label="splitting path")
    ax.set_title(
        f"{name}: sub-spans {np.degrees(plan.sub_spans).round(0)} deg"
        + ("  [FLAGGED > 180]" if plan.flagged else "")
    )
    ax.set_xlim(0, 360)
    ax.set_ylim(180, 0)
    ax.legend(loc="upper right")
fig.tight_layout()
fig.savefig(out_dir() / "04_splitting_paths.png", dpi=110)
print("wrote", out_dir() / "04_splitting_paths.png")
