"""Command-line batch cloning.

Exit codes map one-to-one from library error codes (see ERROR_EXIT_CODES);
failures print a machine-readable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import engine, panorama, smvc, sphere
from .errors import PanocloneError, PoleDatum

ERROR_EXIT_CODES = {
    "degenerate-angle": 10,
    "degenerate-axis": 11,
    "pole-datum": 12,
    "format-error": 13,
    "aspect-error": 14,
    "antipodal-boundary": 15,
    "degenerate-polyline": 16,
    "triangulation-failure": 17,
    "outside-patch": 18,
    "no-intersection": 19,
    "mask-out-of-bounds": 20,
    "coordinate-overflow": 21,
    "internal": 25,
}


class CoordinateOverflow(PanocloneError):
    """Unsplit coordinates of this patch overflow (sum of scaled weights near 2)."""

    code = "coordinate-overflow"

    def __init__(self, message, vertex_index=None):
        super().__init__(message)
        self.vertex_index = vertex_index


def overflow_report(session, delta=smvc.OVERFLOW_DELTA):
    """Worst scaled-weight sum over the mesh (the discoloration signal).

    The raw rows reproduce positions exactly, so their sums s recover the
    intermediate scaled sum as T = 2s / (1 + s); T approaching 2 is the
    overflow regime.
    """
    s = session.rows.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 2.0 * s / (1.0 + s)
    t = np.where(np.isfinite(t), t, np.inf)
    worst = int(np.argmax(t))
    return bool(t[worst] > 2.0 - delta), worst, float(t[worst])


def parse_boundary(text, source):
    """Boundary JSON: list of {phi, theta} in radians, or pixel-space form.

    Pixel input is an object {"pixels": [{"x", "y"}...], "width", "height"}
    and is converted with the continuous pixel mapping.
    """
    data = json.loads(text)
    if isinstance(data, dict) and "pixels" in data:
        w = data.get("width", source.width)
        h = data.get("height", source.height)
        pts = np.array([[p["x"], p["y"]] for p in data["pixels"]], dtype=float)
        phi = pts[:, 0] * 2.0 * np.pi / w
        theta = np.clip(pts[:, 1] * np.pi / h, 0.0, np.pi)
        return np.stack([phi, theta], axis=1)
    return np.array([[p["phi"], p["theta"]] for p in data], dtype=float)


def parse_anchor(text):
    phi, theta = (float(x) for x in text.split(","))
    return phi, theta


def build_parser():
    p = argparse.ArgumentParser(
        prog="panoclone",
        description="Clone a patch of one 360-degree panorama into another.",
    )
    p.add_argument("--source", required=True, help="source equirectangular image")
    p.add_argument("--target", required=True, help="target equirectangular image")
    p.add_argument("--boundary", required=True, help="boundary polyline JSON file")
    p.add_argument("--anchor", required=True, help="target anchor 'phi,theta' in radians")
    p.add_argument("--supersample", type=int, default=1, choices=engine.SUPERSAMPLING_LEVELS)
    p.add_argument(
        "--split",
        default="auto",
        choices=["auto", "off", "median", "pca-sphere", "pca-projected"],
    )
    p.add_argument("--matte", help="optional alpha raster registered to the source")
    p.add_argument("--baseline", choices=["planar"], help="use the planar comparison method")
    p.add_argument("--dump-mesh", metavar="OBJ", help="write the adaptive mesh as OBJ text")
    p.add_argument(
        "--dump-diagnostics",
        metavar="CSV",
        help="write per-vertex theta_max, sum of scaled weights and min weight",
    )
    p.add_argument("-o", "--output", required=True, help="output PNG")
    return p


def _fail(err):
    payload = {"error": err.code, "detail": str(err)}
    idx = getattr(err, "vertex_index", None)
    if idx is not None:
        payload["vertex_index"] = idx
    print(json.dumps(payload), file=sys.stderr)
    return ERROR_EXIT_CODES.get(err.code, ERROR_EXIT_CODES["internal"])


def _nudged(datum):
    """Move a polar datum 1e-6 radians off the pole (toward +x)."""
    axis = np.array([0.0, 1.0, 0.0])
    return sphere.rodriguez(axis, 1e-6) @ datum


def diagnostics_csv(session):
    poly = session.boundary
    lines = ["vertex,theta_max,sum_tilde,lambda_min"]
    for i in range(session.mesh.n_boundary, session.mesh.n_vertices):
        d = smvc.diagnose(session.mesh.vertices[i], poly)
        lines.append(f"{i},{d.theta_max:.9g},{d.sum_tilde:.9g},{d.lambda_min:.9g}")
    return "\n".join(lines) + "\n"


def dump_diagnostics(session, path):
    with open(path, "w") as f:
        f.write(diagnostics_csv(session))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        source = panorama.load(args.source)
        target = panorama.load(args.target)
        with open(args.boundary) as f:
            polyline = parse_boundary(f.read(), source)
        anchor = parse_anchor(args.anchor)
        matte = panorama.load(args.matte) if args.matte else None

        if args.baseline == "planar":
            w, h = source.width, source.height
            px = np.stack(
                [polyline[:, 0] * w / (2 * np.pi), polyline[:, 1] * h / np.pi], axis=1
            )
            mask = engine.rasterize_polygon(px, w, h)
            datum_px = px.mean(axis=0)
            ax, ay = anchor[0] * w / (2 * np.pi), anchor[1] * h / np.pi
            out = engine.planar_clone_baseline(
                source, target, mask, (int(round(ax - datum_px[0])), int(round(ay - datum_px[1])))
            )
            panorama.save(out, args.output)
            return 0

        session = engine.preprocess(
            source,
            polyline,
            split=args.split,
            supersampling=args.supersample,
            matte=matte,
        )
        if args.dump_mesh:
            with open(args.dump_mesh, "w") as f:
                f.write(session.mesh.to_obj())
        if args.dump_diagnostics:
            dump_diagnostics(session, args.dump_diagnostics)
        if args.split == "off":
            bad, idx, worst = overflow_report(session)
            if bad:
                raise CoordinateOverflow(
                    f"unsplit coordinates overflow (sum of scaled weights "
                    f"{worst:.4f} at mesh vertex {idx}); rerun with --split",
                    vertex_index=idx,
                )
        try:
            out, _ = engine.render_clone(session, target, anchor)
        except PoleDatum:
            print("warning: datum at a pole; nudging by 1e-6 rad", file=sys.stderr)
            session.datum = _nudged(session.datum)
            out, _ = engine.render_clone(session, target, anchor)
        panorama.save(out, args.output)
        return 0
    except PanocloneError as err:
        return _fail(err)


if __name__ == "__main__":
    sys.exit(main())
