"""HTTP API over sessions, corpora, and image assets.

Every state change is one appended event line; restart replays the logs
and reproduces each open session exactly, so the process holds no state
that the store cannot regenerate.  Feedback posts are idempotent: a
replayed (round, body) pair returns the recorded response instead of
advancing the session twice.
"""
from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
import time

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse

from pinview.mkl import CorpusKernels
from pinview.session import (FeedbackEvent, Session, SessionConfig,
                             SessionError, StaleRoundError,
                             UnknownImageError)

from .store import Settings, Store

ASSET_CACHE_HEADERS = {"Cache-Control": "public, max-age=86400, immutable"}


def _canonical_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":"))
        .encode()).hexdigest()


class ApiSession:
    """A live session plus the service-side bookkeeping around it."""

    def __init__(self, session: Session, corpus_name: str,
                 created_at: float, expires_at: float) -> None:
        self.session = session
        self.corpus_name = corpus_name
        self.created_at = created_at
        self.expires_at = expires_at
        self.lock = threading.Lock()
        # round -> (request body hash, response body): idempotent retries
        self.responses: dict[int, tuple[str, dict]] = {}


class ServiceState:
    """Everything the endpoints share: store, corpora cache, sessions."""

    def __init__(self, settings: Settings) -> None:
        self.settings = settings
        self.store = Store(settings.data_dir)
        self.sessions: dict[str, ApiSession] = {}
        self._corpora: dict[str, object] = {}
        self._kernels: dict[str, CorpusKernels] = {}
        self._lock = threading.Lock()
        self._seed_rng = np.random.default_rng(settings.seed)
        self.replay_failures: list[str] = []
        self._recover_sessions()

    # ------------------------------------------------------------- corpora
    def corpus(self, name: str):
        with self._lock:
            cached = self._corpora.get(name)
        if cached is not None:
            return cached
        if name not in self.store.corpus_names():
            raise KeyError(name)
        loaded = self.store.load_corpus(name)
        with self._lock:
            return self._corpora.setdefault(name, loaded)

    def kernels(self, name: str) -> CorpusKernels:
        with self._lock:
            cached = self._kernels.get(name)
        if cached is not None:
            return cached
        built = CorpusKernels(self.corpus(name))
        with self._lock:
            return self._kernels.setdefault(name, built)

    # ------------------------------------------------------------ sessions
    def next_auto_seed(self) -> int:
        with self._lock:
            return int(self._seed_rng.integers(2**31))

    def create_session(self, corpus_name: str,
                       config: SessionConfig) -> tuple[str, ApiSession]:
        corpus = self.corpus(corpus_name)
        predictor = self.store.load_predictor(corpus_name)
        kernels = (self.kernels(corpus_name)
                   if config.modality != "random" else None)
        session_id = secrets.token_hex(16)
        session = Session(corpus, config, predictor=predictor,
                          kernels=kernels, session_id=session_id)
        now = time.time()
        api = ApiSession(session, corpus_name, now,
                         now + self.settings.session_ttl)
        self.store.append_event(session_id, session.event_log()[0])
        self.store.append_event(session_id, {
            "type": "service_meta", "corpus": corpus_name,
            "created_at": now, "expires_at": api.expires_at,
        })
        with self._lock:
            self.sessions[session_id] = api
        return session_id, api

    def get_session(self, session_id: str) -> ApiSession:
        with self._lock:
            api = self.sessions.get(session_id)
        if api is None:
            raise HTTPException(404, "unknown session")
        if time.time() > api.expires_at:
            raise HTTPException(404, "session expired")
        return api

    def _recover_sessions(self) -> None:
        """Replay every stored event log into a live session."""
        for session_id in self.store.session_ids():
            try:
                events = self.store.read_events(session_id)
                meta = next(e for e in events
                            if e.get("type") == "service_meta")
                corpus_name = meta["corpus"]
                corpus = self.corpus(corpus_name)
                config = SessionConfig.from_json(events[0]["config"])
                kernels = (self.kernels(corpus_name)
                           if config.modality != "random" else None)
                session = Session.replay(
                    corpus, events,
                    predictor=self.store.load_predictor(corpus_name),
                    kernels=kernels, session_id=session_id)
                api = ApiSession(session, corpus_name, meta["created_at"],
                                 meta["expires_at"])
                self._rebuild_responses(api, events)
                self.sessions[session_id] = api
            except Exception as exc:  # noqa: BLE001 - keep serving the rest
                self.replay_failures.append(f"{session_id}: {exc}")

    def _rebuild_responses(self, api: ApiSession, events: list) -> None:
        """Regenerate idempotency cache entries from logged feedback."""
        for entry in events:
            if entry.get("type") != "feedback":
                continue
            round_no = entry["round"]
            body_hash = _canonical_hash(entry["event"])
            next_ids = entry.get("next")
            response = _feedback_response(
                api, round_no, entry["scores"], next_ids,
                api.session.summary() if next_ids is None else None)
            api.responses[round_no] = (body_hash, response)


def _collage_payload(api: ApiSession, collage: list) -> dict:
    session = api.session
    layout = session.layout(collage)
    return {
        "images": [
            {"id": cell.image_id,
             "url": f"/assets/{api.corpus_name}/{cell.image_id}",
             "cell": {"x": cell.x, "y": cell.y, "w": cell.w, "h": cell.h}}
            for cell in layout.cells
        ],
        "grid": {"cols": session.config.grid_cols,
                 "rows": session.config.grid_rows,
                 "cell_w": session.config.cell_w,
                 "cell_h": session.config.cell_h},
    }


def _feedback_response(api: ApiSession, round_no: int, scores: dict,
                       next_ids: list | None,
                       summary: dict | None) -> dict:
    response = {
        "round": round_no,
        "next_round": round_no + 1,
        "done": next_ids is None,
        "scores": {k: float(v) for k, v in sorted(scores.items())},
        "collage": (_collage_payload(api, next_ids)
                    if next_ids is not None else None),
        "summary": summary,
    }
    return response


def create_app(settings: Settings | None = None) -> FastAPI:
    """Build the API application bound to one data directory."""
    if settings is None:
        settings = Settings.from_env()
    state = ServiceState(settings)
    app = FastAPI(title="pinview", version="0.1.0")
    app.state.service = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok",
                "corpora": state.store.corpus_names(),
                "sessions": len(state.sessions),
                "replay_failures": len(state.replay_failures)}

    @app.get("/api/corpora")
    def corpora() -> dict:
        out = []
        for name in state.store.corpus_names():
            corpus = state.corpus(name)
            out.append({
                "name": name,
                "images": len(corpus),
                "features": sorted(corpus.feature_names()),
                "categories": sorted(corpus.categories()),
            })
        return {"corpora": out}

    @app.post("/api/sessions", status_code=201)
    def create_session(payload: dict = Body(...)) -> dict:
        corpus_name = payload.get("corpus", "corpus")
        if corpus_name not in state.store.corpus_names():
            raise HTTPException(404, f"unknown corpus {corpus_name!r}")
        fields = {k: v for k, v in payload.items() if k != "corpus"}
        fields.setdefault("seed", state.next_auto_seed())
        try:
            config = SessionConfig(corpus=corpus_name, **fields)
            session_id, api = state.create_session(corpus_name, config)
        except (SessionError, TypeError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return {
            "session_id": session_id,
            "expires_at": api.expires_at,
            "round": 0,
            "rounds": config.rounds,
            "config": config.to_json(),
            "collage": _collage_payload(api, api.session.current_collage),
        }

    @app.get("/api/sessions/{session_id}")
    def session_status(session_id: str) -> dict:
        api = state.get_session(session_id)
        with api.lock:
            session = api.session
            return {
                "session_id": session_id,
                "round": session.round,
                "rounds": session.config.rounds,
                "done": session.done,
                "expires_at": api.expires_at,
                "config": session.config.to_json(),
                "collage": (None if session.done else
                            _collage_payload(api, session.current_collage)),
            }

    @app.post("/api/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, payload: dict = Body(...)):
        api = state.get_session(session_id)
        try:
            event = FeedbackEvent.from_json(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, f"malformed feedback: {exc}") from exc
        body_hash = _canonical_hash(event.to_json())
        with api.lock:
            cached = api.responses.get(event.round)
            if cached is not None and cached[0] == body_hash:
                return JSONResponse(cached[1])
            try:
                outcome = api.session.submit_feedback(event)
            except StaleRoundError as exc:
                raise HTTPException(409, str(exc)) from exc
            except UnknownImageError as exc:
                raise HTTPException(422, str(exc)) from exc
            except SessionError as exc:
                raise HTTPException(409, str(exc)) from exc
            state.store.append_event(session_id, api.session.event_log()[-1])
            response = _feedback_response(api, outcome.round, outcome.scores,
                                          outcome.next_collage,
                                          outcome.summary)
            api.responses[outcome.round] = (body_hash, response)
            return JSONResponse(response)

    @app.get("/api/sessions/{session_id}/summary")
    def session_summary(session_id: str) -> dict:
        api = state.get_session(session_id)
        with api.lock:
            return {"session_id": session_id,
                    "done": api.session.done,
                    "summary": api.session.summary()}

    @app.get("/assets/{corpus_name}/{image_id}")
    def asset(corpus_name: str, image_id: str):
        try:
            corpus = state.corpus(corpus_name)
        except KeyError as exc:
            raise HTTPException(404, f"unknown corpus {corpus_name!r}") from exc
        try:
            record = corpus.record(image_id)
        except KeyError as exc:
            raise HTTPException(404, f"unknown image {image_id!r}") from exc
        if not record.source or not record.source.endswith((".png", ".jpg",
                                                            ".jpeg", ".bmp")):
            raise HTTPException(404, "image has no servable asset")
        path = (state.store.corpus_dir(corpus_name) / record.source
                if not record.source.startswith("/") else record.source)
        if not os.path.isfile(path):
            raise HTTPException(404, "asset file missing")
        return FileResponse(path, headers=ASSET_CACHE_HEADERS)

    return app


def serve(settings: Settings | None = None, host: str = "127.0.0.1") -> None:
    """Run the API under uvicorn (blocking)."""
    import uvicorn

    if settings is None:
        settings = Settings.from_env()
    uvicorn.run(create_app(settings), host=host, port=settings.port)
