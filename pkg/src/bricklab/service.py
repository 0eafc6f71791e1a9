"""HTTP session service exposing the Break-and-Make environment.

One session wraps one live environment.  Sessions are isolated, steps on a
session are serialized by a per-session lock, and idle sessions expire.
Actions arrive either as the stable integer encoding or as a typed record;
both map through the environment's action codec so agents, logs, and the
browser UI share one wire format.
"""

import os
import secrets
import threading
import time

import numpy as np

from .datagen import GeneratorConfig, load_manifest, manifest_files, random_assembly
from .env import ActionCodec, BreakAndMakeEnv, EnvConfig, EnvError
from .ldraw import FlattenError, ParseError, load_assembly
from .raster import frame_to_png

DEFAULT_IDLE_TIMEOUT = 30 * 60.0  # seconds


class Session:
    def __init__(self, session_id, env):
        self.session_id = session_id
        self.env = env
        self.lock = threading.Lock()
        self.last_used = time.monotonic()
        self.terminal = False
        self.score = None

    def touch(self):
        self.last_used = time.monotonic()


def _score_payload(score):
    return {
        "f1_b": score.f1_b,
        "f1_e": score.f1_e,
        "f1_a": score.f1_a,
        "aed": score.aed,
    }


def _observation_payload(session):
    env = session.env
    return {
        "session_id": session.session_id,
        "phase": env.phase,
        "step_count": env.step_count,
        "max_steps": env.max_steps,
        "table_size": env.config.table_size,
        "hand_size": env.config.hand_size,
        "action_space": env.codec.total,
        "terminal": session.terminal,
    }


_POLARITY_ALIASES = {"+": "+", "pos": "+", " ": "+", "-": "-", "neg": "-"}


def create_app(library, dataset_roots=None, idle_timeout=DEFAULT_IDLE_TIMEOUT):
    """Build the FastAPI application.

    `dataset_roots` maps dataset name -> directory containing manifest.json
    and scene files.
    """
    from fastapi import FastAPI, HTTPException, Request, Response

    app = FastAPI(title="bricklab session service")
    sessions = {}
    registry_lock = threading.Lock()
    roots = dict(dataset_roots or {})

    def purge_expired():
        now = time.monotonic()
        with registry_lock:
            for sid in [s for s, sess in sessions.items()
                        if now - sess.last_used > idle_timeout]:
                del sessions[sid]

    def get_session(sid):
        purge_expired()
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(404, f"unknown session {sid}")
        sess.touch()
        return sess

    def load_scene(dataset, scene):
        root = roots.get(dataset)
        if root is None:
            raise HTTPException(404, f"unknown dataset {dataset!r}")
        manifest = load_manifest(os.path.join(root, "manifest.json"))
        if scene not in manifest_files(manifest):
            raise HTTPException(404, f"unknown scene {scene!r}")
        try:
            return load_assembly(os.path.join(root, scene), library)
        except (ParseError, FlattenError, OSError) as e:
            raise HTTPException(404, f"scene {scene!r} unreadable: {e}")

    @app.post("/sessions")
    async def create_session(request: Request):
        purge_expired()
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, "request body must be JSON")
        if not isinstance(body, dict):
            raise HTTPException(400, "request body must be a JSON object")
        cfg_in = body.get("config") or {}
        if not isinstance(cfg_in, dict):
            raise HTTPException(400, "config must be an object")
        allowed = {"max_steps", "table_size", "hand_size"}
        bad = set(cfg_in) - allowed
        if bad:
            raise HTTPException(400, f"unknown config keys {sorted(bad)}")
        try:
            config = EnvConfig(**{k: int(v) for k, v in cfg_in.items()})
        except (TypeError, ValueError) as e:
            raise HTTPException(400, f"bad config: {e}")
        if "dataset" in body:
            if "scene" not in body:
                raise HTTPException(400, "dataset requires a scene")
            target = load_scene(body["dataset"], body["scene"])
        elif "seed" in body and "size" in body:
            try:
                gen = GeneratorConfig(brick_count=int(body["size"]),
                                      seed=int(body["seed"]))
                target = random_assembly(gen, library)
            except Exception as e:
                raise HTTPException(400, f"generation failed: {e}")
        else:
            raise HTTPException(400, "need dataset+scene or seed+size")
        env = BreakAndMakeEnv(library, config)
        try:
            env.reset(target)
        except EnvError as e:
            raise HTTPException(400, str(e))
        sid = secrets.token_hex(16)
        sess = Session(sid, env)
        with registry_lock:
            sessions[sid] = sess
        return _observation_payload(sess)

    @app.get("/sessions/{sid}/frames/{which}.png")
    def get_frame(sid: str, which: str):
        if which not in ("table", "hand"):
            raise HTTPException(404, "frame must be table or hand")
        sess = get_session(sid)
        with sess.lock:
            frame = (sess.env.table_frame if which == "table"
                     else sess.env.hand_frame)
            png = frame_to_png(frame)
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{sid}/snaps")
    def get_snaps(sid: str, workspace: str = "table", polarity: str = "+"):
        if workspace not in ("table", "hand"):
            raise HTTPException(400, "workspace must be table or hand")
        pol = _POLARITY_ALIASES.get(polarity)
        if pol is None:
            raise HTTPException(400, "polarity must be + or -")
        sess = get_session(sid)
        with sess.lock:
            frame = (sess.env.table_frame if workspace == "table"
                     else sess.env.hand_frame)
            grid = frame.snap(pol)
            ys, xs = np.nonzero(grid[:, :, 0])
            lines = [
                f"snap {int(x)} {int(y)} {int(grid[y, x, 0])} {int(grid[y, x, 1])}"
                for y, x in zip(ys.tolist(), xs.tolist())
            ]
        body = "\n".join(lines) + ("\n" if lines else "")
        return Response(content=body, media_type="text/plain")

    @app.post("/sessions/{sid}/action")
    async def post_action(sid: str, request: Request):
        sess = get_session(sid)
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, "request body must be JSON")
        if not isinstance(body, dict):
            raise HTTPException(400, "request body must be a JSON object")
        with sess.lock:
            if sess.terminal:
                raise HTTPException(409, "episode already ended")
            try:
                if "action" in body:
                    action = sess.env.codec.decode(int(body["action"]))
                elif "record" in body:
                    action = ActionCodec.from_record(body["record"])
                else:
                    raise HTTPException(400, "need action or record")
                result = sess.env.step(action)
            except HTTPException:
                raise
            except (EnvError, TypeError, ValueError) as e:
                raise HTTPException(400, f"bad action: {e}")
            sess.terminal = result.terminal
            if result.terminal:
                sess.score = result.score
            payload = {
                "success": result.observation.last_action_success,
                "terminal": result.terminal,
                "phase": sess.env.phase,
                "step_count": sess.env.step_count,
            }
            if result.terminal:
                payload["score"] = _score_payload(result.score)
            return payload

    @app.get("/sessions/{sid}/score")
    def get_score(sid: str):
        sess = get_session(sid)
        with sess.lock:
            if not sess.terminal:
                raise HTTPException(409, "episode not terminal")
            return _score_payload(sess.score)

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        purge_expired()
        with registry_lock:
            if sid not in sessions:
                raise HTTPException(404, f"unknown session {sid}")
            del sessions[sid]
        return {"deleted": sid}

    @app.get("/shapes")
    def get_shapes():
        return [
            {"id": sid, "name": library.canonical_name(sid)}
            for sid in library.shape_ids()
        ]

    @app.get("/colors")
    def get_colors():
        out = []
        for cid in library.colors.ids():
            name, rgb, edge = library.colors.entries[cid]
            out.append({"id": cid, "name": name, "rgb": list(rgb)})
        return out

    return app


def serve(library, bind="127.0.0.1:8000", dataset_roots=None,
          idle_timeout=DEFAULT_IDLE_TIMEOUT):
    """Run the service with uvicorn; blocks until interrupted."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    app = create_app(library, dataset_roots, idle_timeout)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
