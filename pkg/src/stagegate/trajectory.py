"""Trajectory log schema: the replayable record every metric is computed from.

A trajectory log is self-contained: turn records plus the ordered engine
event stream, serialized with stable field names and deterministic JSON
(sorted keys, fixed separators), so identical runs produce byte-identical
files and all metrics can be recomputed offline from the log alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .backends import AffectReply
from .control import GateDecision

SCHEMA_VERSION = 1

STATUS_COMPLETE = "complete"
STATUS_MAX_TURNS = "max_turns"
STATUS_ABORTED = "aborted"

# Event kinds on the foreground reply path, in pipeline order. Background
# bookkeeping (extraction application, summary persistence) is excluded so
# foreground path length can be compared across extraction-delay settings.
FOREGROUND_EVENT_KINDS = frozenset(
    {
        "receptivity_classified",
        "classify_retry",
        "classify_fallback",
        "cooldown_ticked",
        "rule_evaluated",
        "gate_decision",
        "generate_retry",
        "generate_fallback",
        "reply_generated",
        "progress_recorded",
        "extraction_enqueued",
        "session_completed",
    }
)

BACKGROUND_EVENT_KINDS = frozenset(
    {"extraction_applied", "extraction_failed", "summary_persisted"}
)


@dataclass(frozen=True)
class SessionEvent:
    """One engine event with a session-monotonic sequence number."""

    seq: int
    turn: int
    kind: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"seq": self.seq, "turn": self.turn, "kind": self.kind, "data": self.data}

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEvent":
        return cls(seq=data["seq"], turn=data["turn"], kind=data["kind"], data=data["data"])


@dataclass(frozen=True)
class TurnRecord:
    """One user turn and the reply it produced."""

    index: int
    user_text: str
    reply: AffectReply
    decision: Optional[GateDecision]
    stage_at_reply: str
    latency_ms: float
    summary_as_of: Optional[int]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "user_text": self.user_text,
            "reply": self.reply.to_dict(),
            "decision": self.decision.to_dict() if self.decision else None,
            "stage_at_reply": self.stage_at_reply,
            "latency_ms": self.latency_ms,
            "summary_as_of": self.summary_as_of,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TurnRecord":
        return cls(
            index=data["index"],
            user_text=data["user_text"],
            reply=AffectReply.from_dict(data["reply"]),
            decision=GateDecision.from_dict(data["decision"]) if data["decision"] else None,
            stage_at_reply=data["stage_at_reply"],
            latency_ms=data["latency_ms"],
            summary_as_of=data["summary_as_of"],
        )


@dataclass
class TrajectoryLog:
    """Complete, ordered, self-contained record of one run."""

    case_id: Optional[str]
    variant: str
    status: str
    turns: list[TurnRecord]
    events: list[SessionEvent]
    schema_version: int = SCHEMA_VERSION

    def transcript(self) -> list[tuple[str, str]]:
        """Externally visible view: alternating seeker/counselor lines."""
        out: list[tuple[str, str]] = []
        for record in self.turns:
            out.append(("seeker", record.user_text))
            out.append(("counselor", record.reply.text))
        return out

    def gate_decisions(self) -> list[GateDecision]:
        return [r.decision for r in self.turns if r.decision is not None]

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "case_id": self.case_id,
            "variant": self.variant,
            "status": self.status,
            "turns": [t.to_dict() for t in self.turns],
            "events": [e.to_dict() for e in self.events],
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(
            self.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":")
        ).encode("utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectoryLog":
        return cls(
            case_id=data["case_id"],
            variant=data["variant"],
            status=data["status"],
            turns=[TurnRecord.from_dict(t) for t in data["turns"]],
            events=[SessionEvent.from_dict(e) for e in data["events"]],
            schema_version=data["schema_version"],
        )

    def save(self, path: Path) -> None:
        Path(path).write_bytes(self.to_json_bytes())

    @classmethod
    def load(cls, path: Path) -> "TrajectoryLog":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
