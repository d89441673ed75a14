"""HTTP/JSON service hosting interactive testing sessions.

Endpoints:
    POST /sessions                {"n": int, "q": float, "mode": "fixed"|"restructuring"}
    GET  /sessions/{id}           full session view
    GET  /sessions/{id}/next      {"test": {"start", "end"}} or {"done": {"positives": [...]}}
    POST /sessions/{id}/result    {"positive": bool}

Errors come back as {"code", "message"} with a matching status code.
Per-session mutation is serialized under the session lock; events are
flushed to the store before any reply.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .executor import NoPendingTest
from .sessions import SessionStore, UnknownSession


class CreateSessionIn(BaseModel):
    n: int = Field(ge=1)
    q: float = Field(ge=0.0, lt=1.0)
    mode: Literal["fixed", "restructuring"] = "fixed"


class ResultIn(BaseModel):
    positive: bool


def create_app(data_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="pooltest session service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.exception_handler(UnknownSession)
    async def unknown_session(_req: Request, exc: UnknownSession):
        return JSONResponse(
            status_code=404,
            content={"code": "unknown_session", "message": f"no session {exc.args[0]}"},
        )

    @app.exception_handler(NoPendingTest)
    async def no_pending(_req: Request, exc: NoPendingTest):
        return JSONResponse(
            status_code=409,
            content={"code": "no_pending_test", "message": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def bad_value(_req: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"code": "invalid_parameters", "message": str(exc)},
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionIn):
        session = store.create(body.n, body.q, body.mode)
        return session.view()

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        return store.get(sid).view()

    @app.get("/sessions/{sid}/next")
    def get_next(sid: str):
        session = store.get(sid)
        with session.lock:
            return session.next_action()

    @app.post("/sessions/{sid}/result")
    def post_result(sid: str, body: ResultIn):
        session = store.get(sid)
        with session.lock:
            event = session.apply_result(body.positive)
            store.record(session, event)
            view = session.view()
            view["replan"] = event.replan
            return view

    console = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if console.is_dir():  # operator console, when built alongside
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=str(console), html=True), name="console")

    return app


def serve(host: str = "127.0.0.1", port: int = 8123, data_dir: Optional[str] = None) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port)
