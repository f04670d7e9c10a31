"""Shared fixtures: compact scripted timelines used across test modules."""

from __future__ import annotations

import pytest

from stagegate.backends import ScriptedBackend


def reply_entry(text, affect="warm", indicators=None, latency_ms=0.0):
    payload = {"text": text, "affect": affect}
    if indicators is not None:
        payload["indicators"] = indicators
    entry = {"payload": payload}
    if latency_ms:
        entry["latency_ms"] = latency_ms
    return entry


def classify_entry(label):
    return {"payload": {"label": label}}


def extract_entry(**fields):
    return {"payload": fields}


# A lekia engine script that completes the full loop in 9 turns:
# T1 all assessment flags; offers at T2/T4/T6/T8; advances at T3/T5/T7/T9.
FAST_COMPLETE_SCRIPT = {
    "reply": [
        reply_entry(
            "It sounds like a lot; I hear how hard you feel it, caught between two pulls.",
            indicators={
                "situation_understood": True,
                "emotion_identified": True,
                "core_conflict_identified": True,
            },
        ),
        reply_entry("Would you be open to trying the next part together?", "encouraging", {}),
        reply_entry(
            "I see a pattern here, and here's one small step you could try.",
            indicators={"pattern_pointed": True, "advice_given": True},
        ),
        reply_entry("Shall we try the next piece?", "encouraging", {}),
        reply_entry(
            "Let's agree on one small goal, walk through it, and notice how did that feel.",
            indicators={
                "goal_confirmed": True,
                "simulation_completed": True,
                "reflection_elicited": True,
            },
        ),
        reply_entry("Ready to move to the last part?", "encouraging", {}),
        reply_entry(
            "Between now and next time, keep a small log each day.",
            indicators={"plan_established": True},
        ),
        reply_entry("Would you be open to wrapping up here?", "encouraging", {}),
        reply_entry("Then take good care until next time.", "warm", {}),
    ],
    "classify": [classify_entry("receptive")] * 4,
    "extract": [extract_entry() for _ in range(9)],
}


def fast_complete_backend() -> ScriptedBackend:
    return ScriptedBackend(
        {kind: list(entries) for kind, entries in FAST_COMPLETE_SCRIPT.items()}
    )


@pytest.fixture
def fast_engine() -> ScriptedBackend:
    return fast_complete_backend()
