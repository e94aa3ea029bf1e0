"""HTTP front door: stroke validation, generation, model metadata.

The server holds one immutable model bundle loaded at startup.  Requests
carry raw strokes straight from a sketch canvas; the server resamples them
to the encoder's point count, so clients never need the resampling code.
Validation is by hand rather than schema-generated: every rejection names
a machine-readable code and the offending field path, which the sketch UI
mirrors for inline feedback.

Response bodies are deterministic functions of the request (seed included),
so wall-clock timing travels in the `X-Generate-Seconds` header instead of
the body.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np
import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from . import checkpoint as ckpt
from . import diffusion as diff
from .corpus import FeatureStats, Vocabulary, UnknownTokenError
from .denoiser import (ConditionEmbedder, ConditionFusionDenoiser,
                       DenoiserConfig, SLOT_NAMES)
from .encoders import StickmanEncoder, TextEncoder
from .sga import NUM_STROKES, POINTS_PER_STROKE, resample_stroke
from .skeleton import NUM_JOINTS
from .workspace import Workspace, sha256_path


class ApiError(Exception):
    """Turned into a 422 with {"error": {code, field, message}}."""

    def __init__(self, code: str, field: str, message: str):
        super().__init__(f"{code} at {field or '<body>'}: {message}")
        self.code = code
        self.field = field
        self.message = message


@dataclass
class ModelBundle:
    """Everything generation needs, loaded once and never mutated."""

    model: ConditionFusionDenoiser
    embedder: ConditionEmbedder
    schedule: diff.NoiseSchedule
    stats: FeatureStats
    vocab: Vocabulary
    fps: int
    length_bounds: tuple[int, int]
    default_length: int
    max_text_len: int
    digests: dict[str, str]


def _sub_state(state: dict, prefix: str) -> dict:
    return {k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)}


def load_bundle(ws: Workspace) -> ModelBundle:
    """Builds the bundle from the self-contained denoiser checkpoint."""
    path = ws.require("denoiser-checkpoint")
    config, state = ckpt.load_checkpoint(path, "denoiser")

    model = ConditionFusionDenoiser(DenoiserConfig(**config["denoiser"]))
    model.load_state_dict(_sub_state(state, "model."))
    model.eval()
    text = TextEncoder(**config["text"])
    text.load_state_dict(_sub_state(state, "text."))
    stick = StickmanEncoder(**config["stick"])
    stick.load_state_dict(_sub_state(state, "stick."))
    embedder = ConditionEmbedder(text, stick)

    schedule = diff.make_schedule(**config["schedule"])
    stats = FeatureStats(mean=state["stats.mean"].numpy().astype(np.float64),
                         std=state["stats.std"].numpy().astype(np.float64))
    vocab = Vocabulary(tuple(config["vocab"]))
    lo, hi = config["length_bounds"]
    return ModelBundle(
        model=model, embedder=embedder, schedule=schedule, stats=stats,
        vocab=vocab, fps=config["fps"], length_bounds=(int(lo), int(hi)),
        default_length=int(config["default_length"]),
        max_text_len=int(config["text"]["max_len"]),
        digests={"model": sha256_path(path),
                 "config": ckpt.config_digest(config)})


# ---------------------------------------------------------------------------
# request parsing


def _parse_strokes(raw, field: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ApiError("STROKE_FORMAT", field, "strokes must be a list")
    if len(raw) != NUM_STROKES:
        raise ApiError("STROKE_COUNT", field,
                       f"expected {NUM_STROKES} strokes, got {len(raw)}")
    out = np.zeros((NUM_STROKES, POINTS_PER_STROKE, 2))
    for j, stroke in enumerate(raw):
        where = f"{field}[{j}]"
        if not isinstance(stroke, list) or len(stroke) < 2:
            raise ApiError("STROKE_FORMAT", where,
                           "each stroke needs at least 2 [x, y] points")
        pts = []
        for p in stroke:
            if (not isinstance(p, (list, tuple)) or len(p) != 2
                    or not all(isinstance(c, (int, float))
                               and not isinstance(c, bool) for c in p)):
                raise ApiError("STROKE_FORMAT", where,
                               "points must be [x, y] number pairs")
            pts.append((float(p[0]), float(p[1])))
        arr = np.array(pts)
        if not np.isfinite(arr).all():
            raise ApiError("STROKE_FORMAT", where, "points must be finite")
        out[j] = arr if len(arr) == POINTS_PER_STROKE else resample_stroke(arr)
    return out


def parse_generate_request(body, bundle: ModelBundle
                           ) -> tuple[diff.GenerationRequest, diff.MixtureConfig, int]:
    if not isinstance(body, dict):
        raise ApiError("BODY_FORMAT", "", "request body must be a JSON object")

    tokens = None
    text = body.get("text")
    if text is not None:
        if not isinstance(text, str):
            raise ApiError("TEXT_FORMAT", "text", "text must be a string")
        try:
            tokens = bundle.vocab.encode(text)
        except UnknownTokenError as e:
            raise ApiError("UNKNOWN_TOKEN", "text", str(e)) from None
        except ValueError as e:
            raise ApiError("TEXT_TOO_LONG", "text", str(e)) from None
        if len(tokens) > bundle.max_text_len:
            raise ApiError("TEXT_TOO_LONG", "text",
                           f"{len(tokens)} tokens exceed the limit "
                           f"of {bundle.max_text_len}")
        if len(tokens) == 0:
            tokens = None

    stickmen: dict[int, np.ndarray] = {}
    raw_stickmen = body.get("stickmen", [])
    if not isinstance(raw_stickmen, list):
        raise ApiError("STICKMAN_FORMAT", "stickmen", "stickmen must be a list")
    for i, entry in enumerate(raw_stickmen):
        where = f"stickmen[{i}]"
        if not isinstance(entry, dict):
            raise ApiError("STICKMAN_FORMAT", where,
                           "each entry needs position and strokes")
        position = entry.get("position")
        if position not in SLOT_NAMES:
            raise ApiError("UNKNOWN_POSITION", f"{where}.position",
                           f"position must be one of {', '.join(SLOT_NAMES)}")
        slot = SLOT_NAMES.index(position)
        if slot in stickmen:
            raise ApiError("DUPLICATE_POSITION", f"{where}.position",
                           f"position {position!r} given more than once")
        stickmen[slot] = _parse_strokes(entry.get("strokes"), f"{where}.strokes")

    length = body.get("length", bundle.default_length)
    if not isinstance(length, int) or isinstance(length, bool):
        raise ApiError("LENGTH_FORMAT", "length", "length must be an integer")
    lo, hi = bundle.length_bounds
    if not (lo <= length <= hi):
        raise ApiError("LENGTH_BOUNDS", "length",
                       f"length {length} outside [{lo}, {hi}]")

    raw_mix = body.get("mixture", {})
    if not isinstance(raw_mix, dict):
        raise ApiError("MIXTURE_INVALID", "mixture", "mixture must be an object")
    try:
        fields = {"w": float(raw_mix.get("w", 2.5)),
                  "p_stick": float(raw_mix.get("p_stick", 0.2))}
        if "final_weights" in raw_mix:
            fields["final_weights"] = tuple(float(v)
                                            for v in raw_mix["final_weights"])
        mixture = diff.MixtureConfig(**fields)
    except (TypeError, ValueError) as e:
        raise ApiError("MIXTURE_INVALID", "mixture", str(e)) from None

    seed = body.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ApiError("SEED_INVALID", "seed",
                       "seed must be a non-negative integer")

    return (diff.GenerationRequest(length=length, tokens=tokens,
                                   stickmen=stickmen), mixture, seed)


# ---------------------------------------------------------------------------
# app


class _Progress:
    """Coarse gauge for the polling endpoint; not part of model state."""

    def __init__(self):
        self._lock = threading.Lock()
        self.active = 0
        self.step = 0
        self.total = 0

    def begin(self, total: int):
        with self._lock:
            self.active += 1
            self.step, self.total = 0, total

    def tick(self, step: int, total: int):
        with self._lock:
            self.step, self.total = step, total

    def end(self):
        with self._lock:
            self.active -= 1

    def snapshot(self) -> dict:
        with self._lock:
            return {"active": self.active, "step": self.step,
                    "total": self.total}


def _softmax(column: np.ndarray) -> np.ndarray:
    shifted = column - column.max()
    e = np.exp(shifted)
    return e / e.sum()


def run_generation(bundle: ModelBundle, request: diff.GenerationRequest,
                   mixture: diff.MixtureConfig, seed: int,
                   on_step=None) -> dict:
    """Generates and shapes the wire payload; shared by server and CLI."""
    result = diff.generate(bundle.model, bundle.embedder, bundle.schedule,
                           bundle.stats, request, mixture, seed,
                           on_step=on_step)
    frames = result.root[:, None, :] + result.joints
    index_scores, argmax = {}, {}
    if result.index_logits is not None:
        for slot, frame in sorted(result.slot_argmax.items()):
            name = SLOT_NAMES[slot]
            scores = _softmax(result.index_logits[:, slot].astype(np.float64))
            index_scores[name] = [float(v) for v in scores]
            argmax[name] = int(frame)
    return {
        "frames": frames.astype(float).tolist(),
        "length": request.length,
        "fps": bundle.fps,
        "seed": seed,
        "index_scores": index_scores,
        "argmax": argmax,
        "digests": bundle.digests,
    }


def create_app(bundle: ModelBundle) -> FastAPI:
    app = FastAPI(title="stickmotion", docs_url=None, redoc_url=None)
    progress = _Progress()

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=422, content={
            "error": {"code": exc.code, "field": exc.field,
                      "message": exc.message}})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/config")
    def config():
        return {
            "joints": NUM_JOINTS,
            "num_strokes": NUM_STROKES,
            "points_per_stroke": POINTS_PER_STROKE,
            "length_bounds": list(bundle.length_bounds),
            "default_length": bundle.default_length,
            "fps": bundle.fps,
            "slots": list(SLOT_NAMES),
            "max_text_len": bundle.max_text_len,
            "vocabulary": list(bundle.vocab.words),
            "mixture_defaults": {"w": 2.5, "p_stick": 0.2},
            "diffusion_steps": bundle.schedule.T,
            "digests": bundle.digests,
        }

    @app.get("/api/progress")
    def progress_view():
        return progress.snapshot()

    @app.post("/api/generate")
    async def generate(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError("BODY_FORMAT", "", "request body is not valid JSON")
        gen_request, mixture, seed = parse_generate_request(body, bundle)
        progress.begin(bundle.schedule.T)
        t0 = time.perf_counter()
        try:
            payload = await run_in_threadpool(
                run_generation, bundle, gen_request, mixture, seed,
                progress.tick)
        finally:
            progress.end()
        elapsed = time.perf_counter() - t0
        return JSONResponse(payload,
                            headers={"X-Generate-Seconds": f"{elapsed:.3f}"})

    return app
