"""Pluggable generation backends and the structured calls built on them.

Every model interaction in the system (stage replies, receptivity
classification, cognition extraction, seeker simulation, judging) goes
through one interface, :class:`Backend`, discriminated by a call kind. That
lets a single scripted fixture drive a whole end-to-end trajectory, and lets
the HTTP implementation swap in per deployment without touching the engine.

Call kinds: ``reply``, ``classify``, ``extract``, ``seek``, ``judge``.

Schema totality: every :class:`BackendResponse` either carries a payload that
validated against its named schema or is marked ``parse_failed``; nothing
half-parsed reaches the engine. Classification failure can never yield
``receptive``: failures block.

HTTP wire format (chat-completions style), documented field by field:

Request (POST ``endpoint``, JSON body)::

    {
      "model": "<model name>",            # from backend config
      "messages": [{"role": "...", "content": "..."}, ...],
      "temperature": 0.0,
      "response_format": {"type": "json_object"},   # ask for JSON back
      "response_schema": "<schema name>"  # advisory tag naming the expected shape
    }

Headers: ``Authorization: Bearer <token>`` where the token is read from the
environment variable named in the backend config (default
``STAGEGATE_API_TOKEN``); no other ambient configuration is consulted.

Response (JSON body)::

    {"choices": [{"message": {"content": "<text containing one JSON object>"}}]}

The structured payload is extracted from the first JSON object found in the
content text and validated against the named schema.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Protocol, Sequence

from . import prompts, rubric
from .cognition import (
    ClaimDelta,
    CognitiveUpdate,
    DistortionCue,
    EventEntry,
    ReadinessSignal,
)
from .control import ALL_FLAGS, STAGE_FLAGS, Receptivity, Stage

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 2
DEFAULT_TIMEOUT_S = 30.0
DEFAULT_AUTH_ENV = "STAGEGATE_API_TOKEN"

FALLBACK_REPLY_TEXT = (
    "I'm here with you. Take your time — could you tell me a little more "
    "about what's on your mind?"
)

EventSink = Optional[Callable[[str, dict], None]]

__all__ = [
    "Affect",
    "AffectReply",
    "StageOutput",
    "SituationalContext",
    "BackendRequest",
    "BackendResponse",
    "Backend",
    "BackendError",
    "ScriptExhaustedError",
    "SchemaError",
    "ScriptedBackend",
    "HTTPBackend",
    "DemoBackend",
    "RuleJudgeBackend",
    "parse_structured",
    "serialize_request",
    "generate_stage_reply",
    "generate_free_reply",
    "classify_receptivity",
    "extract_cognition",
    "FALLBACK_REPLY_TEXT",
]


class Affect(Enum):
    """Closed set of expression labels a reply may carry."""

    WARM = "warm"
    CURIOUS = "curious"
    SAD = "sad"
    NEUTRAL = "neutral"
    ENCOURAGING = "encouraging"
    CONCERNED = "concerned"


AFFECT_VALUES = frozenset(a.value for a in Affect)
RECEPTIVITY_VALUES = frozenset(r.value for r in Receptivity)


@dataclass(frozen=True)
class AffectReply:
    """Reply text plus the discrete expression label driving the front end."""

    text: str
    affect: Affect

    def to_dict(self) -> dict:
        return {"text": self.text, "affect": self.affect.value}

    @classmethod
    def from_dict(cls, data: dict) -> "AffectReply":
        return cls(text=data["text"], affect=Affect(data["affect"]))


@dataclass(frozen=True)
class StageOutput:
    """Structured generation result: the reply and its progress indicators."""

    reply: AffectReply
    indicators: Mapping[str, bool]


@dataclass(frozen=True)
class SituationalContext:
    """Pre-assembled context for one generation call.

    Carries only the recent interaction window (never full history), the
    persisted state summary, the current stage, and this turn's behavioral
    constraints. Seeker-side fields never appear here.
    """

    recent_window: tuple[tuple[str, str], ...]
    state_summary: str
    summary_as_of: Optional[int]
    stage: Stage
    behavioral_constraints: tuple[str, ...] = ()
    offer_flag: bool = False


@dataclass(frozen=True)
class BackendRequest:
    kind: str
    messages: tuple[dict, ...]
    schema: Optional[str] = None


@dataclass
class BackendResponse:
    text: str
    payload: Optional[dict]
    parse_failed: bool
    latency_ms: float = 0.0


class BackendError(RuntimeError):
    """Transport-level backend failure (timeout, connection, HTTP error)."""


class ScriptExhaustedError(RuntimeError):
    """A scripted backend ran out of entries for a call kind, which is a test bug."""


class SchemaError(ValueError):
    """A payload did not match its named response schema."""


class Backend(Protocol):
    def complete(self, request: BackendRequest) -> BackendResponse: ...


def serialize_request(request: BackendRequest) -> str:
    """Canonical JSON for a request; blindness audits scan this string."""
    return json.dumps(
        {"kind": request.kind, "schema": request.schema, "messages": list(request.messages)},
        ensure_ascii=False,
        sort_keys=True,
    )


# ---------------------------------------------------------------------------
# Response schemas
# ---------------------------------------------------------------------------


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _validate_reply_common(payload: dict) -> None:
    _require(isinstance(payload.get("text"), str) and payload["text"].strip() != "", "text must be a non-empty string")
    _require(payload.get("affect") in AFFECT_VALUES, f"affect must be one of {sorted(AFFECT_VALUES)}")


def _validate_stage_reply(payload: dict) -> None:
    _validate_reply_common(payload)
    indicators = payload.get("indicators")
    _require(isinstance(indicators, dict), "indicators must be an object")
    for name, value in indicators.items():
        _require(name in ALL_FLAGS, f"unknown indicator {name!r}")
        _require(isinstance(value, bool), f"indicator {name!r} must be a boolean")


def _validate_baseline_reply(payload: dict) -> None:
    _validate_reply_common(payload)


def _validate_receptivity(payload: dict) -> None:
    _require(payload.get("label") in RECEPTIVITY_VALUES, f"label must be one of {sorted(RECEPTIVITY_VALUES)}")


def _validate_utterance(payload: dict) -> None:
    _require(isinstance(payload.get("text"), str) and payload["text"].strip() != "", "text must be a non-empty string")


def _validate_cognition(payload: dict) -> None:
    for claim in payload.get("claims", []):
        _require(isinstance(claim, dict), "claims entries must be objects")
        _require(isinstance(claim.get("key"), str) and claim["key"] != "", "claim key must be a non-empty string")
        _require(isinstance(claim.get("content"), str), "claim content must be a string")
        _require(isinstance(claim.get("source_turn"), int), "claim source_turn must be an integer")
    for event in payload.get("events", []):
        _require(isinstance(event.get("turn"), int), "event turn must be an integer")
        _require(isinstance(event.get("description"), str), "event description must be a string")
    for cue in payload.get("distortion_cues", []):
        _require(isinstance(cue.get("text"), str), "distortion cue text must be a string")
    for signal in payload.get("readiness_signals", []):
        _require(isinstance(signal.get("text"), str), "readiness signal text must be a string")
        _require(isinstance(signal.get("turn"), int), "readiness signal turn must be an integer")


def _validate_stage_verdicts(payload: dict) -> None:
    for key in ("asse", "edu", "int", "hw"):
        _require(isinstance(payload.get(key), bool), f"{key} must be a boolean")


def _validate_transcript_events(payload: dict) -> None:
    for key in ("offers", "refusals", "advances"):
        value = payload.get(key)
        _require(isinstance(value, list) and all(isinstance(v, int) for v in value), f"{key} must be a list of turn numbers")


SCHEMA_VALIDATORS: Mapping[str, Callable[[dict], None]] = {
    "stage_reply": _validate_stage_reply,
    "baseline_reply": _validate_baseline_reply,
    "receptivity": _validate_receptivity,
    "utterance": _validate_utterance,
    "cognition": _validate_cognition,
    "stage_verdicts": _validate_stage_verdicts,
    "transcript_events": _validate_transcript_events,
}

_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def parse_structured(text: str, schema: Optional[str]) -> Optional[dict]:
    """Extract and validate the first JSON object in ``text``.

    Returns the payload, or ``None`` when no object parses or the named
    schema rejects it. A ``None`` schema only requires well-formed JSON.
    """
    match = _JSON_BLOCK.search(text or "")
    if not match:
        return None
    try:
        payload = json.loads(match.group(0))
    except json.JSONDecodeError:
        return None
    if not isinstance(payload, dict):
        return None
    if schema is not None:
        try:
            SCHEMA_VALIDATORS[schema](payload)
        except SchemaError as exc:
            logger.debug("payload failed schema %s: %s", schema, exc)
            return None
    return payload


def validate_payload(payload: dict, schema: str) -> bool:
    try:
        SCHEMA_VALIDATORS[schema](payload)
        return True
    except SchemaError:
        return False


# ---------------------------------------------------------------------------
# Backend implementations
# ---------------------------------------------------------------------------


class ScriptedBackend:
    """Deterministic playback backend for tests and offline runs.

    ``script`` maps a call kind to an ordered list of entries. Each entry is
    a dict with one of:

    * ``payload``: the structured payload to return (validated);
    * ``text``: raw text to run through the normal parser (lets fixtures
      inject parse failures);
    * ``error``: message for a :class:`BackendError` raised instead
      (transport fault injection);

    plus optional ``latency_ms``. Entries replay strictly in order per call
    kind; running past the end raises :class:`ScriptExhaustedError`, which is
    a fixture bug, never a runtime condition. Identical scripts and call
    sequences yield identical outputs. Every request is recorded in
    ``request_log`` for audits.
    """

    def __init__(self, script: Mapping[str, Sequence[Mapping]]):
        self._script = {kind: list(entries) for kind, entries in script.items()}
        self._cursors: dict[str, int] = {kind: 0 for kind in self._script}
        self._lock = threading.Lock()
        self.request_log: list[BackendRequest] = []

    def complete(self, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self.request_log.append(request)
            entries = self._script.get(request.kind)
            cursor = self._cursors.get(request.kind, 0)
            if entries is None or cursor >= len(entries):
                raise ScriptExhaustedError(
                    f"script exhausted for call kind {request.kind!r} "
                    f"(served {cursor} of {len(entries or [])})"
                )
            self._cursors[request.kind] = cursor + 1
            entry = entries[cursor]

        latency = float(entry.get("latency_ms", 0.0))
        if "error" in entry:
            raise BackendError(str(entry["error"]))
        if "payload" in entry:
            payload = entry["payload"]
            ok = request.schema is None or validate_payload(payload, request.schema)
            return BackendResponse(
                text=json.dumps(payload, ensure_ascii=False),
                payload=payload if ok else None,
                parse_failed=not ok,
                latency_ms=latency,
            )
        text = str(entry.get("text", ""))
        payload = parse_structured(text, request.schema)
        return BackendResponse(text=text, payload=payload, parse_failed=payload is None, latency_ms=latency)

    def remaining(self, kind: str) -> int:
        with self._lock:
            return len(self._script.get(kind, [])) - self._cursors.get(kind, 0)


class HTTPBackend:
    """Chat-completions HTTP backend (wire format in the module docstring)."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str = DEFAULT_AUTH_ENV,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        temperature: float = 0.0,
        transport=None,
    ):
        import httpx

        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.temperature = temperature
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def complete(self, request: BackendRequest) -> BackendResponse:
        import httpx

        headers = {}
        token = os.environ.get(self.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": list(request.messages),
            "temperature": self.temperature,
            "response_format": {"type": "json_object"},
            "response_schema": request.schema,
        }
        started = time.perf_counter()
        try:
            response = self._client.post(self.endpoint, json=body, headers=headers)
            response.raise_for_status()
            doc = response.json()
            content = doc["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"backend call failed: {exc}") from exc
        latency_ms = (time.perf_counter() - started) * 1000.0
        payload = parse_structured(content, request.schema)
        return BackendResponse(
            text=content, payload=payload, parse_failed=payload is None, latency_ms=latency_ms
        )

    def close(self) -> None:
        self._client.close()


class RuleJudgeBackend:
    """Deterministic judge backend applying the lexical rubric.

    Reads the turn-numbered transcript block out of the request it receives,
    so, exactly like an LLM judge, it can only ever see what the request
    carries. Handles the ``judge`` call kind for both judge schemas.
    """

    _LINE = re.compile(r"^t(\d+) (\w+): (.*)$")

    def __init__(self) -> None:
        self.request_log: list[BackendRequest] = []
        self._lock = threading.Lock()

    def _transcript(self, request: BackendRequest) -> list[tuple[str, str]]:
        content = "\n".join(m.get("content", "") for m in request.messages)
        _, sep, rest = content.partition("TRANSCRIPT:\n")
        if not sep:
            return []
        block = rest.split("\n\nAnswer with", 1)[0]
        turns = []
        for line in block.splitlines():
            match = self._LINE.match(line.strip())
            if match:
                turns.append((match.group(2), match.group(3)))
        return turns

    def complete(self, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self.request_log.append(request)
        transcript = self._transcript(request)
        if request.schema == "transcript_events":
            payload = rubric.transcript_events(transcript)
        else:
            payload = rubric.stage_event_verdicts(transcript)
        return BackendResponse(
            text=json.dumps(payload, ensure_ascii=False), payload=payload, parse_failed=False
        )


class DemoBackend:
    """Self-contained deterministic backend for interactive demos.

    Produces plausible engine, seeker, and judge behavior from the request
    text alone, with no network and no scripts. Intended for `chat`, `serve`, and
    quick local runs; evaluation fixtures use :class:`ScriptedBackend`.
    """

    _OBJECTIVE = re.compile(r"next objective to work toward: (\w+)")

    _REPLY_TEXT = {
        "situation_understood": "It sounds like this has been weighing on you for a while — thank you for laying it out so honestly.",
        "emotion_identified": "I hear how much heaviness and worry you're feeling underneath all of this.",
        "core_conflict_identified": "It seems like the core of it is that you're torn between protecting yourself and not letting people down.",
        "pattern_pointed": "I notice a pattern here: each time it happens, you keep telling yourself it must be your fault.",
        "advice_given": "Here's a concrete thing you can do: when that thought arrives, write it down and add one kinder alternative next to it.",
        "goal_confirmed": "Let's agree on one small goal for this week: trying that kinder alternative once, in a low-stakes moment.",
        "simulation_completed": "Let's walk through it together right now — imagine the moment it usually starts, and tell me what you'd say this time.",
        "reflection_elicited": "Pausing there — how did that feel just now? What did you notice in yourself?",
        "plan_established": "So between now and next time, you'll keep a small log each day of the thought and your kinder answer to it.",
    }

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: dict[str, int] = {}
        self.request_log: list[BackendRequest] = []

    def _count(self, kind: str) -> int:
        with self._lock:
            self._counters[kind] = self._counters.get(kind, 0) + 1
            return self._counters[kind]

    def complete(self, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self.request_log.append(request)
        content = "\n".join(m.get("content", "") for m in request.messages)
        handler = {
            "reply": self._reply,
            "classify": self._classify,
            "extract": self._extract,
            "seek": self._seek,
            "judge": self._judge,
        }.get(request.kind)
        if handler is None:
            raise BackendError(f"demo backend does not handle call kind {request.kind!r}")
        payload = handler(content, request)
        ok = request.schema is None or validate_payload(payload, request.schema)
        return BackendResponse(
            text=json.dumps(payload, ensure_ascii=False),
            payload=payload if ok else None,
            parse_failed=not ok,
            latency_ms=1.0,
        )

    def _reply(self, content: str, request: BackendRequest) -> dict:
        n = self._count("reply")
        offer = "offer to move" in content
        blocked = "do not move the work forward" in content
        match = self._OBJECTIVE.search(content)
        objective = match.group(1) if match else None

        if blocked:
            text = "That's completely okay — there's no rush at all. Let's stay right here with what you're feeling."
            affect, indicators = Affect.CONCERNED, {}
        elif offer:
            text = "We've covered real ground here. Would you be open to trying the next part of this together?"
            affect, indicators = Affect.ENCOURAGING, {}
        elif objective in self._REPLY_TEXT:
            text = self._REPLY_TEXT[objective]
            affect = Affect.CURIOUS if n % 2 else Affect.WARM
            indicators = {objective: True}
        else:
            text = "I'm listening — tell me more about how that's been for you."
            affect, indicators = Affect.WARM, {}

        payload: dict = {"text": text, "affect": affect.value}
        if request.schema == "stage_reply":
            payload["indicators"] = indicators
        return payload

    def _classify(self, content: str, request: BackendRequest) -> dict:
        _, _, tail = content.partition("Person's reply:")
        reply = tail.strip().lower()
        if rubric.is_refusal(reply):
            label = "refusing"
        elif any(cue in reply for cue in ("yes", "okay", "ok", "sure", "let's", "ready", "sounds good")):
            label = "receptive"
        elif any(cue in reply for cue in ("anyway", "by the way", "different topic", "unrelated")):
            label = "topic_shift"
        else:
            label = "hesitant"
        return {"label": label}

    def _extract(self, content: str, request: BackendRequest) -> dict:
        n = self._count("extract")
        lines = [l.partition(": ")[2] for l in content.splitlines() if l.startswith("seeker: ")]
        claims = []
        if lines:
            claims.append(
                {
                    "key": f"note.t{n}",
                    "content": lines[-1][:80],
                    "source_turn": n,
                    "user_stated": True,
                    "contradicts": False,
                }
            )
        thoughts = [l for l in lines if "always" in l.lower() or "never" in l.lower()]
        return {
            "claims": claims,
            "events": [],
            "stances": [],
            "conflict_structure": None,
            "automatic_thoughts": thoughts[:1],
            "distortion_cues": [],
            "readiness_signals": [],
        }

    def _seek(self, content: str, request: BackendRequest) -> dict:
        n = self._count("seek")
        last_counselor = ""
        for line in reversed(content.splitlines()):
            if line.startswith("counselor: "):
                last_counselor = line.partition(": ")[2]
                break
        high_resistance = "push back" in content or "decline" in content
        if rubric.is_offer(last_counselor) and high_resistance and n < 8:
            text = "I'm not ready for that yet, please don't push me."
        elif rubric.is_offer(last_counselor):
            text = "Okay... yes, I think I'm ready to try that."
        elif n == 1:
            text = "I don't really know where to start, but things have been hard lately."
        else:
            text = "Yeah... that's pretty much how it feels. It keeps happening and I don't know what to do."
        return {"text": text}

    def _judge(self, content: str, request: BackendRequest) -> dict:
        judge = RuleJudgeBackend()
        return judge.complete(request).payload or {}


# ---------------------------------------------------------------------------
# Structured calls on top of a backend
# ---------------------------------------------------------------------------


def _emit(on_event: EventSink, kind: str, data: dict) -> None:
    if on_event is not None:
        on_event(kind, data)


def generate_stage_reply(
    ctx: SituationalContext,
    backend: Backend,
    retries: int = DEFAULT_RETRIES,
    on_event: EventSink = None,
) -> StageOutput:
    """Generate a stage reply with validated indicators and affect label.

    Retries transport failures and schema-invalid payloads up to ``retries``
    times; out-of-stage indicator names count as invalid. When every attempt
    fails, returns the safe fallback reply (neutral affect, all indicators
    false) instead of crashing the turn.
    """
    request = BackendRequest(
        kind="reply",
        messages=tuple(
            prompts.render_stage_reply(
                ctx.stage, ctx.state_summary, ctx.behavioral_constraints, ctx.recent_window
            )
        ),
        schema="stage_reply",
    )
    stage_flags = set(STAGE_FLAGS[ctx.stage])
    latency = 0.0
    for attempt in range(retries + 1):
        try:
            response = backend.complete(request)
        except ScriptExhaustedError:
            raise
        except BackendError as exc:
            _emit(on_event, "generate_retry", {"attempt": attempt, "error": str(exc)})
            continue
        latency += response.latency_ms
        payload = response.payload
        if response.parse_failed or payload is None or not set(payload["indicators"]) <= stage_flags:
            _emit(on_event, "generate_retry", {"attempt": attempt, "error": "schema parse failed"})
            continue
        reply = AffectReply(text=payload["text"], affect=Affect(payload["affect"]))
        indicators = {f: bool(payload["indicators"].get(f, False)) for f in STAGE_FLAGS[ctx.stage]}
        _emit(on_event, "generate_ok", {"attempts": attempt + 1, "latency_ms": latency})
        return StageOutput(reply=reply, indicators=indicators)
    _emit(on_event, "generate_fallback", {"attempts": retries + 1, "latency_ms": latency})
    return StageOutput(
        reply=AffectReply(FALLBACK_REPLY_TEXT, Affect.NEUTRAL),
        indicators={f: False for f in STAGE_FLAGS[ctx.stage]},
    )


def generate_free_reply(
    messages: Sequence[dict],
    backend: Backend,
    retries: int = DEFAULT_RETRIES,
    on_event: EventSink = None,
) -> AffectReply:
    """Unstructured-variant reply: text plus affect, no indicators."""
    request = BackendRequest(kind="reply", messages=tuple(messages), schema="baseline_reply")
    for attempt in range(retries + 1):
        try:
            response = backend.complete(request)
        except ScriptExhaustedError:
            raise
        except BackendError as exc:
            _emit(on_event, "generate_retry", {"attempt": attempt, "error": str(exc)})
            continue
        if response.parse_failed or response.payload is None:
            _emit(on_event, "generate_retry", {"attempt": attempt, "error": "schema parse failed"})
            continue
        _emit(on_event, "generate_ok", {"attempts": attempt + 1, "latency_ms": response.latency_ms})
        return AffectReply(text=response.payload["text"], affect=Affect(response.payload["affect"]))
    _emit(on_event, "generate_fallback", {"attempts": retries + 1})
    return AffectReply(FALLBACK_REPLY_TEXT, Affect.NEUTRAL)


def classify_receptivity(
    user_turn: str,
    ctx: Optional[SituationalContext],
    backend: Backend,
    retries: int = DEFAULT_RETRIES,
    on_event: EventSink = None,
) -> Receptivity:
    """Classify the latest user turn against a pending transition offer.

    Fails safe: any transport or parse failure yields ``hesitant``, which
    blocks advancement; a failure can never read as consent.
    """
    request = BackendRequest(
        kind="classify", messages=tuple(prompts.render_classify(user_turn)), schema="receptivity"
    )
    for attempt in range(retries + 1):
        try:
            response = backend.complete(request)
        except ScriptExhaustedError:
            raise
        except BackendError as exc:
            _emit(on_event, "classify_retry", {"attempt": attempt, "error": str(exc)})
            continue
        if response.parse_failed or response.payload is None:
            _emit(on_event, "classify_retry", {"attempt": attempt, "error": "schema parse failed"})
            continue
        _emit(on_event, "classify_ok", {"attempts": attempt + 1, "latency_ms": response.latency_ms})
        return Receptivity(response.payload["label"])
    _emit(on_event, "classify_fallback", {"label": Receptivity.HESITANT.value})
    return Receptivity.HESITANT


def extract_cognition(
    window: Sequence[tuple[str, str]],
    prior_summary: str,
    backend: Backend,
    on_event: EventSink = None,
) -> CognitiveUpdate:
    """Run one cognition-extraction pass over a recent window.

    Single-shot: a transport or parse failure yields an empty update with an
    ``error`` marker so the turn proceeds regardless.
    """
    request = BackendRequest(
        kind="extract", messages=tuple(prompts.render_extract(window, prior_summary)), schema="cognition"
    )
    try:
        response = backend.complete(request)
    except ScriptExhaustedError:
        raise
    except BackendError as exc:
        _emit(on_event, "extract_failed", {"error": str(exc)})
        return CognitiveUpdate.empty(error=str(exc))
    if response.parse_failed or response.payload is None:
        _emit(on_event, "extract_failed", {"error": "schema parse failed"})
        return CognitiveUpdate.empty(error="schema parse failed")
    payload = response.payload
    return CognitiveUpdate(
        claims=[
            ClaimDelta(
                key=c["key"],
                content=c.get("content", ""),
                source_turn=c["source_turn"],
                user_stated=bool(c.get("user_stated", True)),
                contradicts=bool(c.get("contradicts", False)),
                id=c.get("id"),
            )
            for c in payload.get("claims", [])
        ],
        events=[EventEntry(e["turn"], e["description"]) for e in payload.get("events", [])],
        stances=[s for s in payload.get("stances", []) if isinstance(s, str)],
        conflict_structure=payload.get("conflict_structure"),
        automatic_thoughts=[t for t in payload.get("automatic_thoughts", []) if isinstance(t, str)],
        distortion_cues=[
            DistortionCue(c["text"], c.get("category", "")) for c in payload.get("distortion_cues", [])
        ],
        readiness_signals=[
            ReadinessSignal(s["text"], s["turn"]) for s in payload.get("readiness_signals", [])
        ],
    )
