"""HTTP prediction service with keystroke sessions.

Stateless predictions and per-session accumulated histories share one
read-only engine. Sessions hold raw typed text only; every response is
computed from scratch, so a keystroke sequence always matches the
one-shot prediction on the concatenated history.
"""
from __future__ import annotations

from collections import OrderedDict
from threading import Lock

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import BackendTransportError
from .engine import NextCharPredictor
from .text import normalize_history

__all__ = ["build_app", "DEFAULT_TOP_K"]

DEFAULT_TOP_K = 10


class PredictRequest(BaseModel):
    history: str
    top_k: int = DEFAULT_TOP_K


class KeystrokeRequest(BaseModel):
    session_id: str
    char: str


class ResetRequest(BaseModel):
    session_id: str


def build_app(
    engine: NextCharPredictor,
    max_sessions: int = 1000,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="next-character prediction service")
    alphabet = engine.alphabet
    sessions: OrderedDict[str, str] = OrderedDict()
    lock = Lock()

    engine_info = {
        "kind": engine.kind_,
        "lambda": engine.interp_weight,
        "beam": {"size": engine.beam_size, "depth": engine.beam_depth},
    }

    def clean_text(text: str) -> str:
        lowered = text.lower()
        for ch in lowered:
            if ch not in alphabet and not ch.isspace():
                raise HTTPException(
                    status_code=400,
                    detail=f"character {ch!r} is outside the alphabet",
                )
        return lowered

    def ranking_payload(raw_history: str, top_k: int) -> dict:
        history = normalize_history(raw_history, alphabet=alphabet)
        try:
            ranking = engine.rank(history)
        except BackendTransportError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return {
            "ranking": [{"char": c, "prob": p} for c, p in ranking],
            "top_k": min(max(top_k, 1), len(ranking)),
            "history": history,
            "engine": engine_info,
        }

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/predict")
    def predict(req: PredictRequest):
        return ranking_payload(clean_text(req.history), req.top_k)

    @app.post("/v1/session/keystroke")
    def keystroke(req: KeystrokeRequest):
        ch = clean_text(req.char)
        if len(ch) != 1:
            raise HTTPException(
                status_code=400, detail="char must be a single character"
            )
        with lock:
            history = sessions.pop(req.session_id, "") + ch
            sessions[req.session_id] = history
            while len(sessions) > max_sessions:
                sessions.popitem(last=False)
        return ranking_payload(history, DEFAULT_TOP_K)

    @app.post("/v1/session/reset")
    def reset(req: ResetRequest):
        with lock:
            sessions.pop(req.session_id, None)
        return {}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
