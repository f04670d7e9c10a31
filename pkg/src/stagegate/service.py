"""HTTP session service: the API the web console talks to.

JSON endpoints:

* ``POST /sessions`` ``{"variant": ..., "case_hint": ...}``: create a session
* ``POST /sessions/{id}/turns`` ``{"text": ...}``: one user turn; returns the
  reply plus the public state
* ``GET /sessions/{id}/inspector``: stage, flags, pending offer, cooldown,
  last decision, valid claims, evidence digest
* ``GET /sessions/{id}/transcript``: full turn list
* ``GET /sessions/{id}/events``: server-sent events; ``?replay=1`` first
  replays everything already emitted, ``?live=0`` closes after the replay

Unknown session ids are 404; turns posted to a completed session are 409.
Sessions are independent: requests to different sessions may run
concurrently, while turns within one session serialize on its lock.
"""

from __future__ import annotations

import json
import threading
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .backends import Backend, DemoBackend
from .cognition import ClaimStatus
from .session import (
    Session,
    SessionCompleteError,
    SessionConfig,
    UnknownVariantError,
    handle_user_turn,
    start_session,
)

EVENT_POLL_S = 0.2


class CreateSessionBody(BaseModel):
    variant: str = "lekia"
    case_hint: Optional[str] = None


class TurnBody(BaseModel):
    text: str


def public_state(session: Session) -> dict:
    """The externally visible state: exactly what the inspector renders."""
    state = {
        "session_id": session.id,
        "variant": session.variant,
        "turn_count": session.turn_count,
        "complete": session.complete,
        "pending_update": session.pending_update,
        "stage": None,
        "flags": {},
        "offer_pending": False,
        "cooldown_remaining": 0,
        "last_decision": None,
        "claims": [],
        "evidence_digest": {},
    }
    ctrl = session.control
    if ctrl is not None:
        state.update(
            stage=ctrl.stage.value,
            flags=dict(ctrl.progress),
            offer_pending=ctrl.offer_pending,
            cooldown_remaining=ctrl.cooldown_remaining,
            last_decision=ctrl.decisions[-1].to_dict() if ctrl.decisions else None,
        )
    if session.narrative is not None:
        state["claims"] = [
            {
                "key": c.key,
                "content": c.content,
                "status": c.status.value,
                "source_turn": c.source_turn,
            }
            for c in session.narrative.valid_claims()
            if c.status is ClaimStatus.VALID
        ]
    if session.evidence is not None:
        state["evidence_digest"] = session.evidence.counters
    return state


class _Channel:
    """Per-session public event history plus a wakeup for live streams."""

    def __init__(self) -> None:
        self.events: list[dict] = []
        self.condition = threading.Condition()

    def publish(self, event: dict) -> None:
        with self.condition:
            self.events.append(event)
            self.condition.notify_all()


class SessionHub:
    """In-memory session registry used by the service."""

    def __init__(self, backend_factory=DemoBackend, config: Optional[SessionConfig] = None):
        self._backend_factory = backend_factory
        self._config = config or SessionConfig()
        self._sessions: dict[str, Session] = {}
        self._channels: dict[str, _Channel] = {}
        self._lock = threading.Lock()

    def create(self, variant: str, case_hint: Optional[str] = None) -> Session:
        session = start_session(
            variant, backend=self._backend_factory(), config=self._config, case_hint=case_hint
        )
        channel = _Channel()
        with self._lock:
            self._sessions[session.id] = session
            self._channels[session.id] = channel
        channel.publish({"type": "session_created", "state": public_state(session)})
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def channel(self, session_id: str) -> _Channel:
        with self._lock:
            channel = self._channels.get(session_id)
        if channel is None:
            raise KeyError(session_id)
        return channel

    def post_turn(self, session_id: str, text: str) -> dict:
        session = self.get(session_id)
        reply = handle_user_turn(session, text)
        state = public_state(session)
        self.channel(session_id).publish(
            {
                "type": "turn",
                "turn": session.turn_count,
                "user_text": text,
                "reply": reply.to_dict(),
                "state": state,
            }
        )
        return {"reply": reply.to_dict(), "state": state}


def create_app(hub: Optional[SessionHub] = None) -> FastAPI:
    hub = hub or SessionHub()
    app = FastAPI(title="stagegate session service")
    app.state.hub = hub
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _get_or_404(session_id: str) -> Session:
        try:
            return hub.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        try:
            session = hub.create(body.variant, body.case_hint)
        except UnknownVariantError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"session_id": session.id, "state": public_state(session)}

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnBody) -> dict:
        _get_or_404(session_id)
        try:
            return hub.post_turn(session_id, body.text)
        except SessionCompleteError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/sessions/{session_id}/inspector")
    def inspector(session_id: str) -> dict:
        return public_state(_get_or_404(session_id))

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str) -> dict:
        session = _get_or_404(session_id)
        return {"turns": [t.to_dict() for t in session.transcript]}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, replay: int = 1, live: int = 1) -> StreamingResponse:
        _get_or_404(session_id)
        channel = hub.channel(session_id)

        def stream() -> Iterator[str]:
            cursor = 0
            backlog: list[dict] = []
            if replay:
                with channel.condition:
                    backlog = list(channel.events)
                for event in backlog:
                    yield f"data: {json.dumps(event, ensure_ascii=False)}\n\n"
                cursor = len(backlog)
            if not live:
                return
            if backlog and backlog[-1].get("state", {}).get("complete"):
                return
            while True:
                with channel.condition:
                    while cursor >= len(channel.events):
                        channel.condition.wait(timeout=EVENT_POLL_S)
                    fresh = channel.events[cursor:]
                    cursor = len(channel.events)
                for event in fresh:
                    yield f"data: {json.dumps(event, ensure_ascii=False)}\n\n"
                if fresh and fresh[-1].get("state", {}).get("complete"):
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def serve(host: str = "127.0.0.1", port: int = 8742, hub: Optional[SessionHub] = None) -> None:
    """Run the session service (blocking)."""
    import uvicorn

    uvicorn.run(create_app(hub), host=host, port=port, log_level="info")
