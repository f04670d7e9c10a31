"""State-blind seeker simulation and the blindness audit.

The simulated help-seeker sees exactly two things: the visible transcript
(reply text and its own prior turns) and its own case profile. Engine
internals (stage names, progress flags, pending offers, cooldown state)
never reach a seeker request by construction, and :func:`find_reserved_tokens`
audits serialized requests to prove it. The same audit applies to judge
requests, which see only the transcript.
"""

from __future__ import annotations

import re
from typing import Optional, Sequence

from .. import prompts
from ..backends import Backend, BackendError, BackendRequest
from ..control import STAGE_FLAGS, Stage
from .cases import CaseProfile

Turn = tuple[str, str]

# Engine-internal vocabulary that must never appear in a seeker or judge
# request. Stage identifiers are matched case-sensitively (the engine's
# labels are capitalized; ordinary lowercase words in conversation are not
# leaks), everything else case-insensitively on word boundaries.
_STAGE_TOKENS = tuple(stage.value for stage in Stage)
_FLAG_TOKENS = tuple(flag for flags in STAGE_FLAGS.values() for flag in flags)
_CONTROL_TOKENS = ("cooldown", "gate", "rule_gate", "user_gate", "offer_pending")

RESERVED_INTERNAL_TOKENS = _STAGE_TOKENS + _FLAG_TOKENS + _CONTROL_TOKENS

_RESERVED_PATTERNS = [
    (token, re.compile(rf"\b{re.escape(token)}\b")) for token in _STAGE_TOKENS
] + [
    (token, re.compile(rf"\b{re.escape(token)}\b", re.IGNORECASE))
    for token in _FLAG_TOKENS + _CONTROL_TOKENS
]

_RESISTANCE_DIRECTIVES = {
    "low": (
        "you are open to it when you feel heard; agree once the counselor "
        "has clearly understood you"
    ),
    "moderate": (
        "you need patience: the first time they suggest it, you decline or "
        "hesitate; if they back off and stay with you, you may agree later"
    ),
    "high": (
        "you push back firmly: decline whenever they suggest it, and only "
        "soften if they have given you real room for several of your turns"
    ),
}


def find_reserved_tokens(serialized: str) -> list[str]:
    """Reserved internal tokens present in a serialized request, if any."""
    return [token for token, pattern in _RESERVED_PATTERNS if pattern.search(serialized)]


def resistance_directive(case: CaseProfile) -> str:
    directive = _RESISTANCE_DIRECTIVES[case.resistance_profile]
    if case.refusal_trigger:
        directive += f"; you react especially strongly when {case.refusal_trigger}"
    return directive


def build_seeker_request(case: CaseProfile, visible_transcript: Sequence[Turn]) -> BackendRequest:
    """Assemble the seeker call from the case profile and visible text only."""
    messages = prompts.render_seeker(
        narrative_anchor=case.narrative_anchor,
        emotion_label=case.emotion_label,
        resistance_directive=resistance_directive(case),
        visible_transcript=visible_transcript,
    )
    return BackendRequest(kind="seek", messages=tuple(messages), schema="utterance")


def seeker_respond(
    case: CaseProfile, visible_transcript: Sequence[Turn], backend: Backend
) -> str:
    """Produce the seeker's next utterance.

    Backend failures propagate as :class:`BackendError`; the trajectory
    runner aborts the run and marks the log incomplete rather than patching
    over a broken simulation.
    """
    request = build_seeker_request(case, visible_transcript)
    response = backend.complete(request)
    if response.parse_failed or response.payload is None:
        raise BackendError("seeker backend returned an unparseable utterance")
    return response.payload["text"]
