"""FastAPI wiring for the session service.

Error responses are structured {code, message, legal_actions?}. Nothing
emitted before session close contains a reward, a guesser's target, or a
partner decision; those flow only through /results on closed sessions.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from hintguess.errors import ConfigurationError, CorruptionError, ProtocolError
from hintguess.service import DEFAULT_GAMES, RunStore, SessionManager


class CreateSessionRequest(BaseModel):
    role: str
    checkpoint: Optional[str] = None
    games: int = DEFAULT_GAMES
    seed: Optional[int] = None
    hints_from_session: Optional[str] = None


class ActionRequest(BaseModel):
    game_index: int
    action: str


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def create_app(store_root, static_dir=None) -> FastAPI:
    app = FastAPI(title="hint-guess session service")
    store = RunStore(store_root)
    manager = SessionManager(store)
    app.state.manager = manager

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            session = manager.create_session(
                req.role, req.checkpoint, req.games, req.seed, req.hints_from_session
            )
        except (ConfigurationError, CorruptionError, FileNotFoundError, KeyError) as e:
            return _error(400, "invalid_session_request", str(e))
        return {"session_id": session.session_id, "games": len(session.games), "role": session.role}

    @app.get("/sessions/{session_id}/prompt")
    def prompt(session_id: str):
        try:
            return manager.next_prompt(session_id)
        except KeyError:
            return _error(404, "unknown_session", session_id)

    @app.post("/sessions/{session_id}/actions")
    def act(session_id: str, req: ActionRequest):
        try:
            return manager.submit_action(session_id, req.game_index, req.action)
        except KeyError as e:
            return _error(404, "unknown_session_or_game", str(e))
        except FileExistsError as e:
            return _error(409, "already_answered", str(e))
        except LookupError as e:
            return _error(400, "illegal_action", "action not in your hand", legal_actions=json.loads(str(e)))
        except ProtocolError as e:
            return _error(409, "protocol", str(e))

    @app.post("/sessions/{session_id}/close")
    def close(session_id: str):
        try:
            return manager.close_session(session_id)
        except KeyError:
            return _error(404, "unknown_session", session_id)

    @app.get("/sessions/{session_id}/results")
    def results(session_id: str):
        try:
            return manager.results(session_id)
        except KeyError:
            return _error(404, "unknown_session", session_id)
        except ProtocolError as e:
            return _error(409, "session_open", str(e))

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
