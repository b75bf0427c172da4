"""HTTP service exposing the preprocess-once / clone-many workflow.

Sessions are content-addressed: posting the same source, boundary and
options returns the same session id without recomputing, so an editor
can hammer the clone endpoint while preprocessing happens exactly once.
Evicted sessions optionally spill to disk and reload on demand; spilled
sessions reproduce byte-identical composites.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import threading
from collections import OrderedDict

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image

from . import cli as cli_mod
from . import engine, panorama
from .errors import PanocloneError


class SessionCache:
    """LRU of preprocessed sessions with optional disk spill."""

    def __init__(self, max_sessions=16, spill_dir=None):
        self.max_sessions = max_sessions
        self.spill_dir = spill_dir
        self._lock = threading.Lock()
        self._items = OrderedDict()

    def _spill_path(self, key):
        return os.path.join(self.spill_dir, f"{key}.session")

    def get(self, key):
        with self._lock:
            if key in self._items:
                self._items.move_to_end(key)
                return self._items[key]
        if self.spill_dir:
            path = self._spill_path(key)
            if os.path.exists(path):
                with open(path, "rb") as f:
                    session = engine.load_session(f)
                self.put(key, session, spill=False)
                return session
        return None

    def put(self, key, session, spill=True):
        with self._lock:
            self._items[key] = session
            self._items.move_to_end(key)
            while len(self._items) > self.max_sessions:
                old_key, old = self._items.popitem(last=False)
                if self.spill_dir and spill:
                    path = self._spill_path(old_key)
                    if not os.path.exists(path):
                        with open(path, "wb") as f:
                            engine.save_session(old, f)
        if self.spill_dir and spill:
            path = self._spill_path(key)
            if not os.path.exists(path):
                with open(path, "wb") as f:
                    engine.save_session(session, f)


def _load_upload(data, max_dim):
    pano = panorama.load(io.BytesIO(data))
    if pano.width > max_dim:
        raise _TooLarge(f"image wider than the {max_dim}px cap")
    return pano


class _TooLarge(Exception):
    pass


def create_app(max_sessions=16, spill_dir=None, max_dim=8192):
    app = FastAPI(title="panoclone")
    app.state.sessions = SessionCache(max_sessions, spill_dir)
    app.state.targets = OrderedDict()
    app.state.targets_lock = threading.Lock()
    app.state.preprocess_count = 0
    app.state.create_locks = {}
    app.state.create_locks_guard = threading.Lock()

    def geometry_error(err):
        payload = {"error": err.code, "detail": str(err)}
        if getattr(err, "vertex_index", None) is not None:
            payload["vertex_index"] = err.vertex_index
        if err.code == "pole-datum":
            payload["hint"] = "move the anchor or datum off the pole (nudge by ~1e-6 rad)"
        return JSONResponse(payload, status_code=422)

    @app.exception_handler(PanocloneError)
    async def _panoclone_error(request: Request, err: PanocloneError):
        return geometry_error(err)

    @app.exception_handler(_TooLarge)
    async def _too_large(request: Request, err: _TooLarge):
        return JSONResponse({"error": "too-large", "detail": str(err)}, status_code=413)

    @app.post("/targets")
    def upload_target(file: UploadFile = File(...)):
        data = file.file.read()
        pano = _load_upload(data, max_dim)
        tid = hashlib.sha256(data).hexdigest()[:16]
        with app.state.targets_lock:
            app.state.targets[tid] = pano
            while len(app.state.targets) > 64:
                app.state.targets.popitem(last=False)
        return {"target_id": tid, "width": pano.width, "height": pano.height}

    @app.post("/sessions")
    def create_session(
        source: UploadFile = File(...),
        boundary: str = Form(...),
        split: str = Form("auto"),
        supersampling: int = Form(1),
        matte: UploadFile | None = File(None),
    ):
        data = source.file.read()
        matte_data = matte.file.read() if matte is not None else b""
        try:
            boundary_obj = json.loads(boundary)
        except json.JSONDecodeError:
            return JSONResponse(
                {"error": "malformed", "detail": "boundary is not valid JSON"},
                status_code=400,
            )
        if split not in ("auto", "off", "median", "pca-sphere", "pca-projected"):
            return JSONResponse(
                {"error": "malformed", "detail": f"unknown split mode {split!r}"},
                status_code=400,
            )
        if supersampling not in engine.SUPERSAMPLING_LEVELS:
            return JSONResponse(
                {"error": "malformed", "detail": "supersampling must be 1, 2, 4, 8 or 16"},
                status_code=400,
            )
        key_material = data + matte_data + json.dumps(
            {"boundary": boundary_obj, "split": split, "supersampling": supersampling},
            sort_keys=True,
        ).encode()
        sid = hashlib.sha256(key_material).hexdigest()[:16]

        with app.state.create_locks_guard:
            lock = app.state.create_locks.setdefault(sid, threading.Lock())
        with lock:  # concurrent identical creates preprocess once
            session = app.state.sessions.get(sid)
            if session is None:
                source_pano = _load_upload(data, max_dim)
                matte_pano = _load_upload(matte_data, max_dim) if matte_data else None
                polyline = cli_mod.parse_boundary(boundary, source_pano)
                session = engine.preprocess(
                    source_pano,
                    polyline,
                    split=split,
                    supersampling=supersampling,
                    matte=matte_pano,
                )
                app.state.sessions.put(sid, session)
                app.state.preprocess_count += 1

        plan = None
        if session.split is not None:
            plan = {
                "method": session.split.method,
                "path": [int(i) for i in session.split.path],
                "left_boundary": [int(i) for i in session.split.left_boundary],
                "right_boundary": [int(i) for i in session.split.right_boundary],
                "sub_spans": [float(s) for s in session.split.sub_spans],
                "flagged": bool(session.split.flagged),
            }
        return {
            "session_id": sid,
            "mesh_stats": {
                "boundary_samples": int(session.mesh.n_boundary),
                "vertices": int(session.mesh.n_vertices),
                "triangles": int(len(session.mesh.triangles)),
            },
            "split_plan": plan,
        }

    @app.post("/sessions/{sid}/clone")
    def clone(sid: str, body: dict):
        session = app.state.sessions.get(sid)
        if session is None:
            return JSONResponse({"error": "unknown-session"}, status_code=404)
        tid = body.get("target_id")
        with app.state.targets_lock:
            target = app.state.targets.get(tid)
        if target is None:
            return JSONResponse({"error": "unknown-target"}, status_code=404)
        anchor = body.get("anchor") or {}
        if "phi" not in anchor or "theta" not in anchor:
            return JSONResponse(
                {"error": "malformed", "detail": "anchor needs phi and theta"},
                status_code=400,
            )
        supersampling = body.get("supersampling", session.supersampling)
        if supersampling not in engine.SUPERSAMPLING_LEVELS:
            return JSONResponse(
                {"error": "malformed", "detail": "bad supersampling"}, status_code=400
            )
        rect = None
        if body.get("rect"):
            r = body["rect"]
            rect = (int(r["x"]), int(r["y"]), int(r["w"]), int(r["h"]))
        out, timings = engine.render_clone(
            session, target, (float(anchor["phi"]), float(anchor["theta"])),
            supersampling=supersampling, rect=rect,
        )
        arr = panorama.to_uint8(out)
        if rect is not None:
            x, y, rw, rh = rect
            arr = arr[y : y + rh, x : x + rw]
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="PNG")
        png = buf.getvalue()
        return Response(
            content=png,
            media_type="image/png",
            headers={
                "preprocess-cached": "true",
                "membrane_ms": f"{timings['membrane_ms']:.3f}",
                "raster_ms": f"{timings['raster_ms']:.3f}",
            },
        )

    @app.get("/sessions/{sid}/diagnostics")
    def diagnostics(sid: str):
        session = app.state.sessions.get(sid)
        if session is None:
            return JSONResponse({"error": "unknown-session"}, status_code=404)
        return Response(content=cli_mod.diagnostics_csv(session), media_type="text/csv")

    return app


def main(argv=None):
    parser = argparse.ArgumentParser(prog="panoclone-serve")
    parser.add_argument("--port", type=int, default=int(os.environ.get("PANOCLONE_PORT", 8000)))
    parser.add_argument("--host", default=os.environ.get("PANOCLONE_HOST", "127.0.0.1"))
    parser.add_argument(
        "--max-sessions", type=int, default=int(os.environ.get("PANOCLONE_MAX_SESSIONS", 16))
    )
    parser.add_argument("--spill-dir", default=os.environ.get("PANOCLONE_SPILL_DIR"))
    parser.add_argument(
        "--max-dim", type=int, default=int(os.environ.get("PANOCLONE_MAX_DIM", 8192))
    )
    args = parser.parse_args(argv)
    import uvicorn

    app = create_app(args.max_sessions, args.spill_dir, args.max_dim)
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
