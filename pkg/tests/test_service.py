"""HTTP session service: endpoints, errors, and the public event stream."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from conftest import fast_complete_backend
from stagegate.service import SessionHub, create_app, public_state
from stagegate.session import start_session


@pytest.fixture
def client() -> TestClient:
    hub = SessionHub(backend_factory=fast_complete_backend)
    return TestClient(create_app(hub))


def _sse_events(body: str) -> list[dict]:
    return [json.loads(line[len("data: "):]) for line in body.splitlines() if line.startswith("data: ")]


def test_create_session_starts_clean(client):
    response = client.post("/sessions", json={"variant": "lekia"})
    assert response.status_code == 201
    state = response.json()["state"]
    assert state["stage"] == "Assessment"
    assert state["flags"] == {
        "situation_understood": False,
        "emotion_identified": False,
        "core_conflict_identified": False,
    }
    assert state["cooldown_remaining"] == 0 and not state["offer_pending"]


def test_unknown_variant_rejected(client):
    assert client.post("/sessions", json={"variant": "nope"}).status_code == 422


def test_post_turn_returns_reply_and_state(client):
    sid = client.post("/sessions", json={"variant": "lekia"}).json()["session_id"]
    response = client.post(f"/sessions/{sid}/turns", json={"text": "it's been hard"})
    assert response.status_code == 200
    body = response.json()
    assert body["reply"]["affect"] in {"warm", "curious", "sad", "neutral", "encouraging", "concerned"}
    assert body["state"]["turn_count"] == 1
    assert body["state"]["flags"]["situation_understood"] is True


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope/inspector").status_code == 404
    assert client.post("/sessions/nope/turns", json={"text": "x"}).status_code == 404


def test_turn_on_completed_session_conflicts(client):
    sid = client.post("/sessions", json={"variant": "lekia"}).json()["session_id"]
    for i in range(9):
        assert client.post(f"/sessions/{sid}/turns", json={"text": f"t{i}"}).status_code == 200
    assert client.get(f"/sessions/{sid}/inspector").json()["complete"] is True
    assert client.post(f"/sessions/{sid}/turns", json={"text": "more"}).status_code == 409


def test_transcript_endpoint(client):
    sid = client.post("/sessions", json={"variant": "baseline"}).json()["session_id"]
    client.post(f"/sessions/{sid}/turns", json={"text": "hello"})
    turns = client.get(f"/sessions/{sid}/transcript").json()["turns"]
    assert len(turns) == 1 and turns[0]["user_text"] == "hello"


def test_event_stream_replay_reproduces_inspector(client):
    sid = client.post("/sessions", json={"variant": "lekia"}).json()["session_id"]
    for i in range(4):
        client.post(f"/sessions/{sid}/turns", json={"text": f"turn {i}"})
    response = client.get(f"/sessions/{sid}/events", params={"replay": 1, "live": 0})
    assert response.status_code == 200
    events = _sse_events(response.text)
    assert events[0]["type"] == "session_created"
    assert [e["turn"] for e in events[1:]] == [1, 2, 3, 4]
    final_state = events[-1]["state"]
    assert final_state == client.get(f"/sessions/{sid}/inspector").json()


def test_inspector_exposes_claims_after_background_update():
    backend = fast_complete_backend()
    session = start_session("lekia", backend=backend)
    from stagegate.session import flush_background_updates, handle_user_turn

    handle_user_turn(session, "my manager keeps moving the goalposts")
    flush_background_updates(session)
    state = public_state(session)
    assert state["evidence_digest"]["automatic_thoughts"] == 0
    assert state["pending_update"] == "idle"


def test_sessions_are_independent(client):
    a = client.post("/sessions", json={"variant": "lekia"}).json()["session_id"]
    b = client.post("/sessions", json={"variant": "baseline"}).json()["session_id"]
    client.post(f"/sessions/{a}/turns", json={"text": "hello"})
    assert client.get(f"/sessions/{b}/inspector").json()["turn_count"] == 0


def test_live_stream_closes_for_completed_sessions(client):
    sid = client.post("/sessions", json={"variant": "lekia"}).json()["session_id"]
    for i in range(9):
        client.post(f"/sessions/{sid}/turns", json={"text": f"t{i}"})
    # live subscription after completion replays the history and terminates
    response = client.get(f"/sessions/{sid}/events", params={"replay": 1, "live": 1})
    events = _sse_events(response.text)
    assert events[-1]["state"]["complete"] is True


def test_healthz(client):
    assert client.get("/healthz").json() == {"ok": True}
