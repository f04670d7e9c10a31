"""External cognitive state: narrative claims, event chain, and process evidence.

The conversation's situational knowledge lives outside the generator in two
structures:

* :class:`NarrativeState`, a compact narrative profile: an ordered event
  chain, the current core conflict, explicitly expressed stances, and a map of
  *claims* (atomic facts keyed by a short subject string, each carrying a
  validity status and the turn it came from);
* :class:`ProcessEvidence`, accumulated progression signals (automatic
  thoughts, distortion cues, readiness signals) consumed by the executive
  layer's gates, never fed directly into generation.

Claim keys are caller-supplied and matched by exact string; contradiction
detection is the extractor's job (it sets a flag on the delta), while this
module only enforces the status transitions. Recency wins: a newer claim for
a key takes the single ``valid`` slot, and the displaced claim is marked
``denied`` when it was user-stated or ``conflict`` when it was inferred.
Backfilled claims (older than the current valid one) never displace it and
are stored as ``conflict``.

Snapshot format (stable, version 1)::

    {
      "version": 1,
      "narrative": {
        "event_chain": [{"turn": int, "description": str}, ...],
        "conflict_structure": str,
        "stances": [str, ...],
        "claims": {key: [{"id", "key", "content", "status",
                          "source_turn", "extracted_at", "user_stated"}, ...]}
      },
      "evidence": {
        "automatic_thoughts": [str, ...],
        "distortion_cues": [{"text": str, "category": str}, ...],
        "readiness_signals": [{"text": str, "turn": int}, ...]
      }
    }
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
DEFAULT_SUMMARY_BUDGET = 800
EMPTY_STATE_SUMMARY = "no established state"

__all__ = [
    "ClaimStatus",
    "Claim",
    "EventEntry",
    "NarrativeState",
    "DistortionCue",
    "ReadinessSignal",
    "ProcessEvidence",
    "StateSummary",
    "ClaimDelta",
    "CognitiveUpdate",
    "ClaimError",
    "DuplicateClaimError",
    "SnapshotError",
    "apply_claim",
    "apply_update",
    "summarize",
    "snapshot",
    "restore",
]


class ClaimStatus(Enum):
    VALID = "valid"
    DENIED = "denied"
    CONFLICT = "conflict"


class ClaimError(ValueError):
    """A claim was malformed or violated store preconditions."""


class DuplicateClaimError(ClaimError):
    """A claim with this id is already in the store."""


class SnapshotError(ValueError):
    """Snapshot bytes could not be decoded into a state."""


@dataclass
class Claim:
    """An atomic narrative fact with a validity status.

    ``user_stated`` distinguishes facts the person said outright from facts
    the extractor inferred; the distinction decides how a claim is marked
    when a newer claim displaces it.
    """

    id: str
    key: str
    content: str
    status: ClaimStatus
    source_turn: int
    extracted_at: int
    user_stated: bool = True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "key": self.key,
            "content": self.content,
            "status": self.status.value,
            "source_turn": self.source_turn,
            "extracted_at": self.extracted_at,
            "user_stated": self.user_stated,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Claim":
        return cls(
            id=data["id"],
            key=data["key"],
            content=data["content"],
            status=ClaimStatus(data["status"]),
            source_turn=data["source_turn"],
            extracted_at=data["extracted_at"],
            user_stated=data["user_stated"],
        )


@dataclass
class EventEntry:
    turn: int
    description: str


@dataclass
class DistortionCue:
    text: str
    category: str


@dataclass
class ReadinessSignal:
    text: str
    turn: int


@dataclass
class NarrativeState:
    """Narrative profile: event chain, core conflict, stances, and claims."""

    event_chain: list[EventEntry] = field(default_factory=list)
    conflict_structure: str = ""
    stances: list[str] = field(default_factory=list)
    claims: dict[str, list[Claim]] = field(default_factory=dict)
    _id_index: set[str] = field(default_factory=set, repr=False)
    _extraction_seq: int = field(default=0, repr=False)

    def valid_claim(self, key: str) -> Optional[Claim]:
        """The single valid claim for ``key``, if any."""
        for claim in self.claims.get(key, ()):
            if claim.status is ClaimStatus.VALID:
                return claim
        return None

    def valid_claims(self) -> list[Claim]:
        """All valid claims, newest source turn first (stable on extraction order)."""
        found = [c for claims in self.claims.values() for c in claims if c.status is ClaimStatus.VALID]
        found.sort(key=lambda c: (-c.source_turn, -c.extracted_at))
        return found

    def next_extraction_seq(self) -> int:
        self._extraction_seq += 1
        return self._extraction_seq

    def add_event(self, entry: EventEntry) -> None:
        """Insert an event keeping the chain's turn indices non-decreasing."""
        pos = len(self.event_chain)
        while pos > 0 and self.event_chain[pos - 1].turn > entry.turn:
            pos -= 1
        self.event_chain.insert(pos, entry)


@dataclass
class ProcessEvidence:
    """Accumulated progression signals; gate fuel, never generation input."""

    automatic_thoughts: list[str] = field(default_factory=list)
    distortion_cues: list[DistortionCue] = field(default_factory=list)
    readiness_signals: list[ReadinessSignal] = field(default_factory=list)

    @property
    def counters(self) -> dict[str, int]:
        """Signal counts, derived so they always equal the list lengths."""
        return {
            "automatic_thoughts": len(self.automatic_thoughts),
            "distortion_cues": len(self.distortion_cues),
            "readiness_signals": len(self.readiness_signals),
        }


@dataclass(frozen=True)
class StateSummary:
    """Bounded text digest of the cognitive state as of a given turn."""

    text: str
    as_of_turn: Optional[int]
    evidence_digest: dict[str, int]


@dataclass
class ClaimDelta:
    """One extracted claim plus the extractor's contradiction verdict."""

    key: str
    content: str
    source_turn: int
    user_stated: bool = True
    contradicts: bool = False
    id: Optional[str] = None


@dataclass
class CognitiveUpdate:
    """Additive delta produced by one extraction pass.

    Updates never mutate prior state themselves; the orchestrator applies
    them through :func:`apply_update`. A failed extraction yields an empty
    update carrying ``error``.
    """

    claims: list[ClaimDelta] = field(default_factory=list)
    events: list[EventEntry] = field(default_factory=list)
    stances: list[str] = field(default_factory=list)
    conflict_structure: Optional[str] = None
    automatic_thoughts: list[str] = field(default_factory=list)
    distortion_cues: list[DistortionCue] = field(default_factory=list)
    readiness_signals: list[ReadinessSignal] = field(default_factory=list)
    error: Optional[str] = None

    @classmethod
    def empty(cls, error: Optional[str] = None) -> "CognitiveUpdate":
        return cls(error=error)

    def is_empty(self) -> bool:
        return not (
            self.claims
            or self.events
            or self.stances
            or self.conflict_structure
            or self.automatic_thoughts
            or self.distortion_cues
            or self.readiness_signals
        )


def apply_claim(
    store: NarrativeState,
    new: Claim,
    *,
    contradicts: bool = False,
    current_turn: Optional[int] = None,
) -> NarrativeState:
    """Insert a claim, enforcing one-valid-per-key and recency dominance.

    In-order claims (source turn at or past the current valid claim's)
    take over the key's valid slot. When the extractor flagged a
    contradiction, the displaced claim becomes ``denied`` if it was
    user-stated, else ``conflict``; a displacement without contradiction is
    a plain revision and the displaced claim is marked ``conflict`` (it was
    superseded, not denied). Backfills (older than the current valid claim)
    never displace it and are stored as ``conflict``.

    Raises :class:`DuplicateClaimError` on a repeated id and
    :class:`ClaimError` on an empty key or an out-of-range source turn.
    """
    if not new.key:
        raise ClaimError("claim key must be a non-empty string")
    if new.id in store._id_index:
        raise DuplicateClaimError(f"claim id {new.id!r} already present")
    if new.source_turn < 0:
        raise ClaimError(f"claim source_turn must be >= 0, got {new.source_turn}")
    if current_turn is not None and new.source_turn > current_turn:
        raise ClaimError(
            f"claim source_turn {new.source_turn} exceeds session turn {current_turn}"
        )

    current = store.valid_claim(new.key)
    if current is None:
        new.status = ClaimStatus.VALID
    elif new.source_turn >= current.source_turn:
        if contradicts and current.user_stated:
            current.status = ClaimStatus.DENIED
        else:
            current.status = ClaimStatus.CONFLICT
        new.status = ClaimStatus.VALID
    else:
        # Backfill: an older claim may enrich history but never displaces.
        new.status = ClaimStatus.CONFLICT

    store.claims.setdefault(new.key, []).append(new)
    store._id_index.add(new.id)
    return store


def ingest_window(
    window: list[tuple[str, str]],
    narrative: NarrativeState,
    evidence: ProcessEvidence,
    backend,
    *,
    prior_summary: str = "",
    on_event=None,
) -> CognitiveUpdate:
    """Extract an additive delta for a recent window; never mutates priors.

    The heavy lifting is a structured backend call; any backend failure
    degrades to an empty update carrying ``error`` so the turn can proceed.
    The caller applies the returned delta via :func:`apply_update`.
    """
    if not window:
        raise ValueError("ingest_window requires a non-empty window")
    from .backends import extract_cognition  # local import: layering, not cycle

    return extract_cognition(window, prior_summary, backend, on_event=on_event)


def apply_update(
    narrative: NarrativeState,
    evidence: ProcessEvidence,
    update: CognitiveUpdate,
    *,
    current_turn: Optional[int] = None,
) -> None:
    """Fold an extraction delta into the state (single-writer side)."""
    for delta in update.claims:
        seq = narrative.next_extraction_seq()
        claim = Claim(
            id=delta.id or f"c{seq:04d}",
            key=delta.key,
            content=delta.content,
            status=ClaimStatus.VALID,
            source_turn=delta.source_turn,
            extracted_at=seq,
            user_stated=delta.user_stated,
        )
        try:
            apply_claim(narrative, claim, contradicts=delta.contradicts, current_turn=current_turn)
        except ClaimError as exc:
            logger.warning("dropping claim %s: %s", delta.key, exc)
    for entry in update.events:
        narrative.add_event(entry)
    for stance in update.stances:
        if stance not in narrative.stances:
            narrative.stances.append(stance)
    if update.conflict_structure is not None:
        narrative.conflict_structure = update.conflict_structure
    evidence.automatic_thoughts.extend(update.automatic_thoughts)
    evidence.distortion_cues.extend(update.distortion_cues)
    evidence.readiness_signals.extend(update.readiness_signals)


def summarize(
    narrative: NarrativeState,
    evidence: ProcessEvidence,
    budget: int = DEFAULT_SUMMARY_BUDGET,
    as_of_turn: Optional[int] = None,
) -> StateSummary:
    """Render a deterministic text digest within ``budget`` characters.

    The digest carries the core conflict, stances, every valid claim key
    with its content (newest first), and the evidence counters. When the
    budget is tight, claims are dropped oldest-turn first; the conflict
    structure is never dropped, though the final text is hard-capped at the
    budget. Claims newer than ``as_of_turn`` are excluded so a summary
    stamped for turn *t* only reflects turns up to *t*. Denied and
    conflicted claims never appear.
    """
    if budget <= 0:
        raise ValueError(f"summary budget must be positive, got {budget}")

    claims = narrative.valid_claims()
    if as_of_turn is not None:
        claims = [c for c in claims if c.source_turn <= as_of_turn]
    digest = dict(evidence.counters)

    if not claims and not narrative.conflict_structure and not narrative.stances and not any(
        digest.values()
    ):
        return StateSummary(EMPTY_STATE_SUMMARY, as_of_turn, digest)

    def render(kept: list[Claim]) -> str:
        parts = []
        if narrative.conflict_structure:
            parts.append(f"core conflict: {narrative.conflict_structure}")
        if narrative.stances:
            parts.append("stances: " + "; ".join(narrative.stances))
        if kept:
            parts.append(
                "facts: " + "; ".join(f"{c.key}={c.content} (t{c.source_turn})" for c in kept)
            )
        parts.append(
            "signals: thoughts={automatic_thoughts} cues={distortion_cues} "
            "readiness={readiness_signals}".format(**digest)
        )
        return " | ".join(parts)

    kept = list(claims)  # newest first; drop from the tail (oldest turn)
    text = render(kept)
    while len(text) > budget and kept:
        kept.pop()
        text = render(kept)
    if len(text) > budget:
        text = text[:budget]
    return StateSummary(text, as_of_turn, digest)


def snapshot(narrative: NarrativeState, evidence: ProcessEvidence) -> bytes:
    """Serialize the full cognitive state to versioned JSON bytes."""
    doc = {
        "version": SNAPSHOT_VERSION,
        "narrative": {
            "event_chain": [{"turn": e.turn, "description": e.description} for e in narrative.event_chain],
            "conflict_structure": narrative.conflict_structure,
            "stances": list(narrative.stances),
            "claims": {
                key: [c.to_dict() for c in claims] for key, claims in sorted(narrative.claims.items())
            },
            "extraction_seq": narrative._extraction_seq,
        },
        "evidence": {
            "automatic_thoughts": list(evidence.automatic_thoughts),
            "distortion_cues": [{"text": c.text, "category": c.category} for c in evidence.distortion_cues],
            "readiness_signals": [{"text": s.text, "turn": s.turn} for s in evidence.readiness_signals],
        },
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True).encode("utf-8")


def restore(data: bytes) -> tuple[NarrativeState, ProcessEvidence]:
    """Rebuild a cognitive state from :func:`snapshot` output.

    Raises :class:`SnapshotError` on anything that does not decode to the
    documented schema, including truncated bytes and version mismatches.
    """
    try:
        doc = json.loads(data.decode("utf-8"))
        if doc.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version: {doc.get('version')!r}")
        nar = doc["narrative"]
        ev = doc["evidence"]
        narrative = NarrativeState(
            event_chain=[EventEntry(e["turn"], e["description"]) for e in nar["event_chain"]],
            conflict_structure=nar["conflict_structure"],
            stances=list(nar["stances"]),
            claims={
                key: [Claim.from_dict(c) for c in claims] for key, claims in nar["claims"].items()
            },
        )
        narrative._extraction_seq = nar.get("extraction_seq", 0)
        narrative._id_index = {c.id for claims in narrative.claims.values() for c in claims}
        evidence = ProcessEvidence(
            automatic_thoughts=list(ev["automatic_thoughts"]),
            distortion_cues=[DistortionCue(c["text"], c["category"]) for c in ev["distortion_cues"]],
            readiness_signals=[ReadinessSignal(s["text"], s["turn"]) for s in ev["readiness_signals"]],
        )
        return narrative, evidence
    except SnapshotError:
        raise
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise SnapshotError(f"could not decode state snapshot: {exc}") from exc
