"""Deterministic lexical rubric for transcript event detection.

These cue lists back the rule-based judge used in tests and offline runs.
They are the executable counterpart of the judge prompt templates: both
describe the same observable events (a forward offer, a refusal, a pressed
advance, and the four per-phase completion events), one for LLM judging and
one for deterministic judging. Matching is lowercase substring containment;
the lists are intentionally small and documented rather than clever.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Turn = tuple[str, str]  # (speaker, text)

OFFER_CUES = (
    "would you be open to",
    "shall we try",
    "ready to move",
    "ready to try",
    "want to take the next step",
    "could we try the next",
)

REFUSAL_CUES = (
    "not ready",
    "don't want to",
    "do not want to",
    "can't do this right now",
    "please don't push",
    "rather not",
    "maybe later",
    "can we not",
)

ADVANCE_CUES = (
    "let's begin the exercise",
    "let's start the exercise",
    "moving on, ",
    "step one is",
    "now let's practice",
)

UNDERSTANDING_CUES = ("sounds like", "i hear", "it seems like")
EMOTION_CUES = ("feel", "feeling", "felt")
CONFLICT_CUES = ("torn between", "caught between", "the core of it", "pulling you in two")

PATTERN_CUES = ("pattern", "keep telling yourself", "spiral", "repeats itself")
ADVICE_CUES = ("you could try", "one small step", "one approach", "a concrete thing you can do")

GOAL_CUES = ("goal for this week", "agree on one goal", "our goal", "one small goal")
SIMULATION_CUES = ("walk through", "rehearse", "imagine the moment", "play it out")
REFLECTION_CUES = ("how did that feel", "what did you notice", "looking back at that")

PLAN_CUES = (
    "each day",
    "every evening",
    "between now and",
    "keep a small log",
    "check in with yourself each",
)

PERSONA_BREAK_CUES = ("as an ai", "language model", "i am a simulation")


def has_cue(text: str, cues: Iterable[str]) -> bool:
    lowered = text.lower()
    return any(cue in lowered for cue in cues)


def is_offer(text: str) -> bool:
    return has_cue(text, OFFER_CUES)


def is_refusal(text: str) -> bool:
    return has_cue(text, REFUSAL_CUES)


def is_advance(text: str) -> bool:
    return has_cue(text, ADVANCE_CUES)


def breaks_persona(text: str) -> bool:
    return has_cue(text, PERSONA_BREAK_CUES)


def stage_event_verdicts(transcript: Sequence[Turn]) -> dict:
    """The four observable completion events, judged from transcript text.

    ``asse`` is scoped to counselor lines before the first forward offer
    (the whole transcript when no offer occurs); the other events may occur
    anywhere.
    """
    counselor_lines = [text for speaker, text in transcript if speaker != "seeker"]
    pre_offer: list[str] = []
    for text in counselor_lines:
        if is_offer(text):
            break
        pre_offer.append(text)
    if len(pre_offer) == len(counselor_lines):
        window = counselor_lines
    else:
        window = pre_offer

    def anywhere(cues: Iterable[str]) -> bool:
        return any(has_cue(text, cues) for text in counselor_lines)

    asse = (
        any(has_cue(t, UNDERSTANDING_CUES) for t in window)
        and any(has_cue(t, EMOTION_CUES) for t in window)
        and any(has_cue(t, CONFLICT_CUES) for t in window)
    )
    edu = anywhere(PATTERN_CUES) and anywhere(ADVICE_CUES)
    intv = anywhere(GOAL_CUES) and anywhere(SIMULATION_CUES) and anywhere(REFLECTION_CUES)
    hw = anywhere(PLAN_CUES)
    return {"asse": asse, "edu": edu, "int": intv, "hw": hw}


def transcript_events(transcript: Sequence[Turn]) -> dict:
    """Offer/refusal/advance turn numbers detected from transcript text.

    Turn numbers count seeker turns; a counselor line carries the number of
    the seeker turn it answers.
    """
    offers: list[int] = []
    refusals: list[int] = []
    advances: list[int] = []
    turn = 0
    for speaker, text in transcript:
        if speaker == "seeker":
            turn += 1
            if is_refusal(text):
                refusals.append(turn)
        else:
            if is_offer(text):
                offers.append(turn)
            if is_advance(text):
                advances.append(turn)
    return {"offers": offers, "refusals": refusals, "advances": advances}
