"""Per-turn orchestration: gates, context assembly, generation, background updates.

One :class:`Session` owns a conversation. For the fully situated variant
(``lekia``) each user turn runs the pipeline:

1. receptivity classification (only when a transition offer is pending)
2. cooldown tick
3. rule-gate evaluation and the advancement decision
4. situational-context assembly from the *last persisted* state summary
   (always stamped at an earlier turn), the recent window, and this turn's
   behavioral constraints
5. structured reply generation
6. progress-flag recording from the reply's indicators
7. background cognition-extraction enqueue (coalescing)
8. turn record append

The foreground path never waits for extraction: enqueued windows are applied
at the start of later turns once their logical delay has elapsed, measured on
the session's event-sequence clock, so reply latency is independent of
extraction cost by construction.

The prompt-only variants are deliberately thinner: ``baseline`` runs a single
global prompt (steps 4-5 only); ``middle_baseline`` switches stage prompts on
a fixed turn schedule and carries its pacing rules **only as prompt text**:
no control state, no flag recording, and nothing structural enforcing its
cooldown wording.

Within a session, turn handling is strictly serialized and at most one
background extraction runs at a time; different sessions are fully
independent.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import cognition, prompts
from .backends import (
    AffectReply,
    Backend,
    SituationalContext,
    classify_receptivity,
    generate_free_reply,
    generate_stage_reply,
)
from .cognition import NarrativeState, ProcessEvidence, StateSummary
from .control import (
    ControlState,
    GateDecision,
    Receptivity,
    Stage,
    decide,
    initial_control_state,
    record_progress,
    rule_gate,
    tick_cooldown,
)
from .trajectory import (
    STATUS_COMPLETE,
    STATUS_MAX_TURNS,
    SessionEvent,
    TrajectoryLog,
    TurnRecord,
)

logger = logging.getLogger(__name__)

VARIANTS = ("lekia", "baseline", "middle_baseline")

SESSION_FILE_VERSION = 1

OFFER_CONSTRAINT = (
    "gently offer to move to the next part of the work together; keep it "
    "low-pressure and explicitly invite them to say no"
)
BLOCK_CONSTRAINT = (
    "do not move the work forward and do not repeat the suggestion; stay "
    "with their feelings and make clear that staying put is welcome"
)

__all__ = [
    "Session",
    "SessionConfig",
    "SessionCompleteError",
    "UnknownVariantError",
    "VARIANTS",
    "start_session",
    "handle_user_turn",
    "flush_background_updates",
    "export_trajectory",
    "save_session",
    "load_session",
]


class SessionCompleteError(RuntimeError):
    """A turn was posted to a session that already completed."""


class UnknownVariantError(ValueError):
    """Session creation asked for a variant that does not exist."""


@dataclass
class SessionConfig:
    """Tunables for one session; defaults match the shipped configuration."""

    recent_window: int = 6
    summary_budget: int = 800
    cooldown_window: int = 3
    retries: int = 2
    extraction_delay_ticks: int = 0
    middle_stage_turns: int = 3

    def to_dict(self) -> dict:
        return {
            "recent_window": self.recent_window,
            "summary_budget": self.summary_budget,
            "cooldown_window": self.cooldown_window,
            "retries": self.retries,
            "extraction_delay_ticks": self.extraction_delay_ticks,
            "middle_stage_turns": self.middle_stage_turns,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        return cls(**data)


@dataclass
class _Extraction:
    """A window waiting for (or undergoing) background extraction."""

    window: list[tuple[str, str]]
    turn: int
    ready_at_seq: Optional[int] = None  # None while queued, set when started


@dataclass
class Session:
    id: str
    variant: str
    config: SessionConfig
    backend: Optional[Backend] = None
    turn_count: int = 0
    complete: bool = False
    control: Optional[ControlState] = None
    narrative: Optional[NarrativeState] = None
    evidence: Optional[ProcessEvidence] = None
    last_summary: Optional[StateSummary] = None
    case_hint: Optional[str] = None
    transcript: list[TurnRecord] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)
    _running: Optional[_Extraction] = field(default=None, repr=False)
    _queued: Optional[_Extraction] = field(default=None, repr=False)
    _seq: int = field(default=0, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def pending_update(self) -> str:
        """Background extraction status: ``idle``, ``running``, or ``queued``."""
        if self._queued is not None:
            return "queued"
        if self._running is not None:
            return "running"
        return "idle"

    @property
    def stage(self) -> Optional[Stage]:
        return self.control.stage if self.control else None

    def emit(self, turn: int, kind: str, data: Optional[dict] = None) -> SessionEvent:
        self._seq += 1
        event = SessionEvent(seq=self._seq, turn=turn, kind=kind, data=data or {})
        self.events.append(event)
        return event

    def visible_window(self, extra_user_text: Optional[str] = None) -> list[tuple[str, str]]:
        """The last ``recent_window`` visible lines, optionally with the
        just-arrived user text appended."""
        lines: list[tuple[str, str]] = []
        for record in self.transcript:
            lines.append(("seeker", record.user_text))
            lines.append(("counselor", record.reply.text))
        if extra_user_text is not None:
            lines.append(("seeker", extra_user_text))
        return lines[-self.config.recent_window :]


def start_session(
    variant: str,
    backend: Optional[Backend] = None,
    config: Optional[SessionConfig] = None,
    session_id: Optional[str] = None,
    case_hint: Optional[str] = None,
) -> Session:
    """Create a session. The situated variant starts at the first stage with
    all flags false and no cooldown; prompt-only variants allocate no control
    state or cognitive state at all."""
    if variant not in VARIANTS:
        raise UnknownVariantError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    config = config or SessionConfig()
    session = Session(
        id=session_id or uuid.uuid4().hex[:12],
        variant=variant,
        config=config,
        backend=backend,
        case_hint=case_hint,
    )
    if variant == "lekia":
        session.control = initial_control_state(cooldown_window=config.cooldown_window)
        session.narrative = NarrativeState()
        session.evidence = ProcessEvidence()
    return session


# ---------------------------------------------------------------------------
# Background extraction
# ---------------------------------------------------------------------------


def _start_queued(session: Session) -> None:
    if session._running is None and session._queued is not None:
        session._running = session._queued
        session._queued = None
        session._running.ready_at_seq = session._seq + session.config.extraction_delay_ticks


def _run_extraction(session: Session, task: _Extraction) -> None:
    prior = session.last_summary.text if session.last_summary else ""
    update = cognition.ingest_window(
        task.window, session.narrative, session.evidence, session.backend, prior_summary=prior
    )
    if update.error is not None:
        session.emit(task.turn, "extraction_failed", {"window_turn": task.turn, "error": update.error})
        return
    cognition.apply_update(session.narrative, session.evidence, update, current_turn=session.turn_count)
    session.emit(
        task.turn,
        "extraction_applied",
        {"window_turn": task.turn, "claims": len(update.claims)},
    )
    session.last_summary = cognition.summarize(
        session.narrative, session.evidence, session.config.summary_budget, as_of_turn=task.turn
    )
    session.emit(task.turn, "summary_persisted", {"as_of_turn": task.turn})


def _drain_background(session: Session, force: bool = False) -> None:
    """Apply every background extraction whose logical delay has elapsed.

    With ``force`` everything outstanding runs regardless of delay (the test
    hook / end-of-run flush).
    """
    if session.variant != "lekia":
        return
    _start_queued(session)
    while session._running is not None and (
        force or session._seq >= (session._running.ready_at_seq or 0)
    ):
        task = session._running
        session._running = None
        _run_extraction(session, task)
        _start_queued(session)


def flush_background_updates(session: Session) -> Session:
    """Test hook: run all enqueued extractions now; leaves status ``idle``."""
    with session._lock:
        _drain_background(session, force=True)
    return session


# ---------------------------------------------------------------------------
# Turn handling
# ---------------------------------------------------------------------------


def handle_user_turn(session: Session, text: str) -> AffectReply:
    """Process one user turn and return the reply.

    Backend hard failures degrade to the safe fallback reply; the turn is
    always recorded. Raises :class:`SessionCompleteError` once the session
    has finished.
    """
    with session._lock:
        if session.complete:
            raise SessionCompleteError(f"session {session.id} is complete")
        session.turn_count += 1
        turn = session.turn_count
        if session.variant == "lekia":
            return _lekia_turn(session, turn, text)
        return _prompt_only_turn(session, turn, text)


def _lekia_turn(session: Session, turn: int, text: str) -> AffectReply:
    config = session.config
    ctrl = session.control
    assert ctrl is not None and session.narrative is not None and session.evidence is not None

    _drain_background(session)

    latency = 0.0

    def sink(kind: str, data: dict) -> None:
        nonlocal latency
        latency += float(data.get("latency_ms", 0.0))
        if kind in ("generate_ok", "classify_ok"):
            return
        session.emit(turn, kind, data)

    # 1. user gate input: classify receptivity only while an offer pends
    receptivity: Optional[Receptivity] = None
    if ctrl.offer_pending:
        receptivity = classify_receptivity(text, None, session.backend, config.retries, sink)
        session.emit(turn, "receptivity_classified", {"label": receptivity.value})

    # 2. cooldown clock
    ctrl = tick_cooldown(ctrl)
    session.emit(turn, "cooldown_ticked", {"cooldown_remaining": ctrl.cooldown_remaining})

    # 3. rule gate + decision
    rule = rule_gate(ctrl.stage, ctrl.progress, session.evidence.counters)
    session.emit(turn, "rule_evaluated", {"stage": ctrl.stage.value, "result": rule})
    ctrl, decision = decide(ctrl, rule, receptivity, turn)
    session.emit(
        turn, "gate_decision", {**decision.to_dict(), "cooldown_remaining": ctrl.cooldown_remaining}
    )

    # 4. situational context from the last *persisted* summary
    constraints = list(prompts.outstanding_objectives(ctrl.stage, ctrl.progress))
    if decision.action.value == "offer":
        constraints.append(OFFER_CONSTRAINT)
    elif decision.action.value == "block_and_cooldown":
        constraints.append(BLOCK_CONSTRAINT)
    summary_text = session.last_summary.text if session.last_summary else cognition.EMPTY_STATE_SUMMARY
    summary_as_of = session.last_summary.as_of_turn if session.last_summary else None
    ctx = SituationalContext(
        recent_window=tuple(session.visible_window(text)),
        state_summary=summary_text,
        summary_as_of=summary_as_of,
        stage=ctrl.stage,
        behavioral_constraints=tuple(constraints),
        offer_flag=decision.action.value == "offer",
    )

    # 5. structured generation
    output = generate_stage_reply(ctx, session.backend, config.retries, sink)
    session.emit(turn, "reply_generated", {"affect": output.reply.affect.value, "stage": ctrl.stage.value})

    # 6. progress recording (monotone OR)
    ctrl = record_progress(ctrl, output.indicators)
    session.emit(
        turn,
        "progress_recorded",
        {"flags": {k: v for k, v in ctrl.progress.items()}},
    )

    # 7. background extraction enqueue (coalescing)
    window = session.visible_window(text) + [("counselor", output.reply.text)]
    window = window[-config.recent_window :]
    superseded = session._queued is not None
    session._queued = _Extraction(window=window, turn=turn)
    session.emit(turn, "extraction_enqueued", {"turn": turn, "superseded": superseded})
    _start_queued(session)

    # 8. record the turn
    session.control = ctrl
    session.transcript.append(
        TurnRecord(
            index=turn,
            user_text=text,
            reply=output.reply,
            decision=decision,
            stage_at_reply=ctrl.stage.value,
            latency_ms=latency,
            summary_as_of=summary_as_of,
        )
    )
    if ctrl.complete:
        session.complete = True
        session.emit(turn, "session_completed", {})
    return output.reply


def _middle_stage_for_turn(turn: int, turns_per_stage: int) -> Stage:
    stages = list(Stage)
    return stages[min(len(stages) - 1, (turn - 1) // max(1, turns_per_stage))]


def _prompt_only_turn(session: Session, turn: int, text: str) -> AffectReply:
    latency = 0.0

    def sink(kind: str, data: dict) -> None:
        nonlocal latency
        latency += float(data.get("latency_ms", 0.0))
        if kind in ("generate_ok", "classify_ok"):
            return
        session.emit(turn, kind, data)

    window = session.visible_window(text)
    if session.variant == "baseline":
        messages = prompts.render_baseline_reply(window)
        stage_label = "global"
    else:
        stage = _middle_stage_for_turn(turn, session.config.middle_stage_turns)
        messages = prompts.render_middle_reply(stage, window)
        stage_label = stage.value
    reply = generate_free_reply(messages, session.backend, session.config.retries, sink)
    session.emit(turn, "reply_generated", {"affect": reply.affect.value, "stage": stage_label})
    session.transcript.append(
        TurnRecord(
            index=turn,
            user_text=text,
            reply=reply,
            decision=None,
            stage_at_reply=stage_label,
            latency_ms=latency,
            summary_as_of=None,
        )
    )
    return reply


# ---------------------------------------------------------------------------
# Export and persistence
# ---------------------------------------------------------------------------


def export_trajectory(
    session: Session, case_id: Optional[str] = None, status: Optional[str] = None
) -> TrajectoryLog:
    """Freeze the session into a self-contained, replayable log."""
    if status is None:
        status = STATUS_COMPLETE if session.complete else STATUS_MAX_TURNS
    return TrajectoryLog(
        case_id=case_id or session.case_hint,
        variant=session.variant,
        status=status,
        turns=list(session.transcript),
        events=list(session.events),
    )


def save_session(session: Session, path: Path) -> None:
    """Persist one session (state snapshot plus transcript) for resume."""
    doc = {
        "version": SESSION_FILE_VERSION,
        "id": session.id,
        "variant": session.variant,
        "config": session.config.to_dict(),
        "turn_count": session.turn_count,
        "complete": session.complete,
        "case_hint": session.case_hint,
        "control": session.control.to_dict() if session.control else None,
        "cognition": (
            cognition.snapshot(session.narrative, session.evidence).decode("utf-8")
            if session.narrative is not None
            else None
        ),
        "last_summary": (
            {
                "text": session.last_summary.text,
                "as_of_turn": session.last_summary.as_of_turn,
                "evidence_digest": session.last_summary.evidence_digest,
            }
            if session.last_summary
            else None
        ),
        "transcript": [t.to_dict() for t in session.transcript],
        "events": [e.to_dict() for e in session.events],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True), encoding="utf-8")


def load_session(path: Path, backend: Optional[Backend] = None) -> Session:
    """Rebuild a persisted session; the backend is re-attached by the caller."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != SESSION_FILE_VERSION:
        raise ValueError(f"unsupported session file version: {doc.get('version')!r}")
    session = Session(
        id=doc["id"],
        variant=doc["variant"],
        config=SessionConfig.from_dict(doc["config"]),
        backend=backend,
        turn_count=doc["turn_count"],
        complete=doc["complete"],
        case_hint=doc["case_hint"],
    )
    if doc["control"] is not None:
        session.control = ControlState.from_dict(doc["control"])
    if doc["cognition"] is not None:
        session.narrative, session.evidence = cognition.restore(doc["cognition"].encode("utf-8"))
    if doc["last_summary"] is not None:
        session.last_summary = StateSummary(
            text=doc["last_summary"]["text"],
            as_of_turn=doc["last_summary"]["as_of_turn"],
            evidence_digest=doc["last_summary"]["evidence_digest"],
        )
    session.transcript = [TurnRecord.from_dict(t) for t in doc["transcript"]]
    session.events = [SessionEvent.from_dict(e) for e in doc["events"]]
    session._seq = session.events[-1].seq if session.events else 0
    return session
