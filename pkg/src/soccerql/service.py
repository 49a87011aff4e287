"""HTTP session protocol for the chat UI: create, query, clarify, history."""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .engine import Engine
from .session import Failure, FinalAnswer, NeedsClarification, Session, SessionState, StepResult
from .validator import InvalidChoiceError, PassThrough, SelectedCandidate

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>soccerql</title></head>
<body><h1>soccerql</h1>
<p>The chat UI bundle is not built. Build it under frontend/ or use the JSON API:
POST /sessions, POST /sessions/{id}/query, POST /sessions/{id}/clarify.</p>
</body></html>
"""


def _render(result: StepResult) -> dict:
    if isinstance(result, FinalAnswer):
        return {
            "type": "answer",
            "markdown": result.bundle.rendered_answer,
            "sql": result.bundle.sql,
            "steps": [{"stage": s.stage, "detail": s.detail} for s in result.bundle.step_trace],
        }
    if isinstance(result, NeedsClarification):
        return {
            "type": "clarification",
            "raw_value": result.raw_value,
            "options": [
                {"index": i, "canonical": c.canonical_name}
                for i, c in enumerate(result.candidates)
            ],
            "allow_pass_through": result.allows_pass_through,
        }
    assert isinstance(result, Failure)
    return {"type": "failure", "message": result.user_message}


def create_app(engine: Engine, ui_dir: str | Path | None = "frontend/dist") -> FastAPI:
    app = FastAPI(title="soccerql", version=__version__)
    sessions: dict[str, Session] = {}
    session_locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session | None:
        with registry_lock:
            return sessions.get(session_id)

    @app.post("/sessions")
    async def create_session(request: Request) -> Response:
        body = await request.body()
        if body.strip():
            try:
                payload = json.loads(body)
            except ValueError:
                return JSONResponse({"error": "body must be empty or a JSON object"}, status_code=400)
            if not isinstance(payload, dict):
                return JSONResponse({"error": "body must be empty or a JSON object"}, status_code=400)
        session = engine.orchestrator.create_session(allows_custom=False)
        with registry_lock:
            sessions[session.session_id] = session
            session_locks[session.session_id] = threading.Lock()
        return JSONResponse({"session_id": session.session_id}, status_code=201)

    @app.post("/sessions/{session_id}/query")
    async def submit_query(session_id: str, request: Request) -> Response:
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        try:
            payload = await request.json()
        except ValueError:
            return JSONResponse({"error": "body must be JSON"}, status_code=422)
        text = payload.get("text") if isinstance(payload, dict) else None
        if not isinstance(text, str) or not text.strip():
            return JSONResponse({"error": "text must be a non-blank string"}, status_code=422)
        lock = session_locks[session_id]
        if not lock.acquire(blocking=False):
            return JSONResponse({"error": "session is busy"}, status_code=409)
        try:
            if session.state is not SessionState.IDLE:
                return JSONResponse({"error": "a clarification is pending"}, status_code=409)
            result = engine.orchestrator.submit_query(session, text)
        finally:
            lock.release()
        return JSONResponse(_render(result))

    @app.post("/sessions/{session_id}/clarify")
    async def clarify(session_id: str, request: Request) -> Response:
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        try:
            payload = await request.json()
        except ValueError:
            return JSONResponse({"error": "body must be JSON"}, status_code=422)
        selection = payload.get("selection") if isinstance(payload, dict) else None
        if selection == "pass":
            choice = PassThrough()
        elif isinstance(selection, int) and not isinstance(selection, bool):
            choice = SelectedCandidate(selection)
        else:
            return JSONResponse({"error": "selection must be an index or \"pass\""}, status_code=422)
        lock = session_locks[session_id]
        if not lock.acquire(blocking=False):
            return JSONResponse({"error": "session is busy"}, status_code=409)
        try:
            if session.state is not SessionState.AWAITING_CLARIFICATION:
                return JSONResponse({"error": "no clarification is pending"}, status_code=409)
            try:
                result = engine.orchestrator.resolve_clarification(session, choice)
            except InvalidChoiceError as exc:
                return JSONResponse({"error": str(exc)}, status_code=422)
        finally:
            lock.release()
        return JSONResponse(_render(result))

    @app.get("/sessions/{session_id}/history")
    async def history(session_id: str) -> Response:
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return JSONResponse(
            {"entries": [{"kind": e.kind, "text": e.text} for e in session.history]}
        )

    @app.get("/health")
    async def health() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "tables": engine.handle.table_counts(),
        }

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path is not None and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        async def index() -> str:
            return _FALLBACK_PAGE

    return app
