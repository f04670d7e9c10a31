"""Bundled deterministic playbooks for the shipped case libraries.

Every bundled simulation runs on scripted backends built here: per case and
variant, an engine script and a seeker script whose texts are authored
against the lexical rubric, so every downstream number (completion rates,
stress metrics) is hand-tallyable from the plan tables in this module.

The plan tables are the ground truth the acceptance fixtures assert against:

* the gated variant completes its loop except where resistance cuts the run
  short (the two ``high`` library cases);
* prompt-only variants show the event mix in ``BASELINE_EVENTS`` /
  ``MIDDLE_EVENTS``;
* the stress packs realize the per-case rows in ``*_STRESS_ROWS``.

Unknown case ids (operator-supplied libraries) get seeded pseudo-plans so
the scripted path stays usable beyond the bundled data.
"""

from __future__ import annotations

from random import Random
from typing import Optional

from ..backends import ScriptedBackend
from .cases import CaseProfile

# ---------------------------------------------------------------------------
# Reply text pools (cue placement is load-bearing; see rubric.py)
# ---------------------------------------------------------------------------

_REPLIES = {
    "A1": (
        "It sounds like this has been slowly taking over your days — thank you for telling me.",
        "warm",
        "situation_understood",
    ),
    "A2": (
        "I can hear how much heaviness you feel carrying this around.",
        "concerned",
        "emotion_identified",
    ),
    "A3": (
        "It seems like you're caught between wanting things to change and fearing what change would cost.",
        "curious",
        "core_conflict_identified",
    ),
    "OFFER": (
        "We've covered real ground here. Would you be open to trying the next part of this together?",
        "encouraging",
        None,
    ),
    "BLOCK": (
        "That's completely okay — we can stay right here as long as you need. There is no timetable.",
        "concerned",
        None,
    ),
    "STAY": (
        "I'm listening. Tell me more about how the last few days have actually gone.",
        "warm",
        None,
    ),
    "E1": (
        "I notice a pattern here: each time it happens, you keep telling yourself it must be your fault.",
        "curious",
        "pattern_pointed",
    ),
    "E2": (
        "Here's one small step you could try: write the thought down, then answer it the way you'd answer a friend.",
        "encouraging",
        "advice_given",
    ),
    "I1": (
        "Let's agree on one small goal for this week: using that kinder answer once, in a low-stakes moment.",
        "encouraging",
        "goal_confirmed",
    ),
    "I2": (
        "Let's walk through it together right now — imagine the moment it usually starts, and tell me what you would say.",
        "curious",
        "simulation_completed",
    ),
    "I3": (
        "Pausing there for a breath: how did that feel just now? What did you notice in yourself?",
        "curious",
        "reflection_elicited",
    ),
    "H1": (
        "So between now and next time, you'll keep a small log each day: the thought, and your kinder answer beside it.",
        "encouraging",
        "plan_established",
    ),
    "CLOSE": (
        "You've done lovely work today. Would you be open to wrapping up with this plan in hand?",
        "encouraging",
        None,
    ),
    "FAREWELL": (
        "Then we'll leave it here for today. Be gentle with yourself, and I'll be glad to know how it goes.",
        "warm",
        None,
    ),
    "PRESS": (
        "Now let's practice the new response together — say it with me, step by step.",
        "encouraging",
        None,
    ),
}

_FILLERS = (
    "I'm right here with you in it.",
    "Thank you for trusting me with that.",
    "Take whatever time you need with this.",
    "Go on — I'm not going anywhere.",
)

_SEEKER_GENERIC = (
    "Yeah... that's pretty much how it is.",
    "It keeps circling in my head, honestly.",
    "I guess I hadn't said that out loud before.",
    "Some days are easier, but it always comes back.",
)

_SEEKER_ACCEPTS = (
    "Okay — yes, I think I'd like to try that.",
    "Alright, let's give it a go.",
    "Yes, I'm up for that.",
)

_SEEKER_REFUSE = "I'm not ready for that yet, please don't push me."


def _anchor_snippet(case: CaseProfile) -> str:
    first = case.narrative_anchor.split(". ")[0].rstrip(".")
    return first[:1].lower() + first[1:] if first else "it's a lot of things at once"


# ---------------------------------------------------------------------------
# Gated-variant (lekia) playbooks
# ---------------------------------------------------------------------------

_LEKIA_TIMELINES = {
    # reply kind per user turn; classify labels consumed in offer-response order
    "low": (
        ["A1", "A2", "A3", "OFFER", "E1", "E2", "OFFER", "I1", "I2", "I3", "OFFER", "H1", "CLOSE", "FAREWELL"],
        ["receptive", "receptive", "receptive", "receptive"],
    ),
    "moderate": (
        ["A1", "A2", "A3", "OFFER", "BLOCK", "STAY", "STAY", "STAY", "OFFER", "E1", "E2", "OFFER",
         "I1", "I2", "I3", "OFFER", "H1", "CLOSE", "FAREWELL"],
        ["refusing", "receptive", "receptive", "receptive", "receptive"],
    ),
    "high": (
        ["A1", "A2", "A3", "OFFER", "BLOCK", "STAY", "STAY", "STAY", "OFFER", "E1", "E2", "OFFER"],
        ["refusing", "receptive"],
    ),
}


def _reply_entry(kind: str, structured: bool) -> dict:
    text, affect, flag = _REPLIES[kind]
    payload: dict = {"text": text, "affect": affect}
    if structured:
        payload["indicators"] = {flag: True} if flag else {}
    return {"payload": payload}


def _extract_entries(case: CaseProfile, turns: int) -> list[dict]:
    snippet = _anchor_snippet(case)
    entries: list[dict] = [
        {
            "payload": {
                "claims": [
                    {
                        "key": "situation.main",
                        "content": snippet,
                        "source_turn": 1,
                        "user_stated": True,
                        "contradicts": False,
                    }
                ],
                "automatic_thoughts": ["it keeps happening and it must be me"],
            }
        },
        {
            "payload": {
                "claims": [
                    {
                        "key": "emotion.primary",
                        "content": f"feels {case.emotion_label} about the situation",
                        "source_turn": 2,
                        "user_stated": True,
                        "contradicts": False,
                    }
                ],
                "distortion_cues": [{"text": "it must be my fault", "category": "personalization"}],
            }
        },
        {
            "payload": {
                "claims": [
                    {
                        "key": "conflict.core",
                        "content": "torn between changing things and the cost of changing them",
                        "source_turn": 3,
                        "user_stated": False,
                        "contradicts": False,
                    }
                ],
                "conflict_structure": "wants change but fears what change would cost",
                "readiness_signals": [{"text": "said it out loud for the first time", "turn": 3}],
            }
        },
    ]
    while len(entries) < turns:
        entries.append({"payload": {}})
    return entries[:turns]


def _seeker_entries(
    case: CaseProfile, reply_kinds: list[str], classify_labels: list[str], rng: Random
) -> list[dict]:
    """Seeker texts aligned to the engine timeline.

    The text at turn t answers the reply of turn t-1: offer replies get the
    scripted accept/refuse wording (matching the classify script), everything
    else cycles the generic pool.
    """
    offset = rng.randrange(len(_SEEKER_GENERIC))
    labels = list(classify_labels)
    texts: list[str] = []
    for t in range(1, len(reply_kinds) + 1):
        if t == 1:
            texts.append(f"I don't really know where to start... {_anchor_snippet(case)}.")
            continue
        prev = reply_kinds[t - 2]
        if prev in ("OFFER", "CLOSE"):
            label = labels.pop(0) if labels else "receptive"
            if label == "receptive":
                texts.append(_SEEKER_ACCEPTS[(t + offset) % len(_SEEKER_ACCEPTS)])
            else:
                texts.append(_SEEKER_REFUSE)
        elif t == 2:
            texts.append(f"Mostly I just feel {case.emotion_label} about it, to be honest.")
        else:
            texts.append(_SEEKER_GENERIC[(t + offset) % len(_SEEKER_GENERIC)])
    return [{"payload": {"text": text}} for text in texts]


def lekia_scripts(case: CaseProfile, seed: int = 0) -> tuple[dict, dict]:
    reply_kinds, classify_labels = _LEKIA_TIMELINES[case.resistance_profile]
    rng = Random(f"{seed}:{case.id}:lekia")
    engine = {
        "reply": [_reply_entry(kind, structured=True) for kind in reply_kinds],
        "classify": [{"payload": {"label": label}} for label in classify_labels],
        "extract": _extract_entries(case, len(reply_kinds)),
    }
    seeker = {"seek": _seeker_entries(case, reply_kinds, classify_labels, rng)}
    return engine, seeker


# ---------------------------------------------------------------------------
# Prompt-only playbooks: authored event mixes
# ---------------------------------------------------------------------------

# (edu, int, hw) per bundled case; asse cues are always present. Totals:
# edu 10/24, int 16/24, hw 5/24.
BASELINE_EVENTS: dict[str, tuple[bool, bool, bool]] = {
    "bully-01": (True, True, True),
    "bully-02": (True, True, False),
    "bully-03": (False, True, False),
    "bully-04": (False, False, False),
    "job-01": (True, True, False),
    "job-02": (True, True, True),
    "job-03": (False, False, False),
    "job-04": (False, True, False),
    "breakup-01": (True, True, False),
    "breakup-02": (False, True, False),
    "breakup-03": (False, True, True),
    "breakup-04": (False, False, False),
    "friend-01": (True, True, False),
    "friend-02": (False, True, False),
    "friend-03": (False, False, False),
    "acad-01": (True, True, True),
    "acad-02": (False, True, False),
    "acad-03": (False, False, False),
    "depress-01": (True, True, False),
    "depress-02": (False, False, False),
    "depress-03": (False, False, False),
    "sleep-01": (True, True, True),
    "sleep-02": (True, True, False),
    "sleep-03": (False, False, False),
}

# Totals: edu 17/24, int 12/24, hw 8/24.
MIDDLE_EVENTS: dict[str, tuple[bool, bool, bool]] = {
    "bully-01": (True, True, True),
    "bully-02": (True, True, True),
    "bully-03": (True, False, False),
    "bully-04": (False, False, False),
    "job-01": (True, True, True),
    "job-02": (True, True, False),
    "job-03": (True, False, False),
    "job-04": (False, False, False),
    "breakup-01": (True, True, True),
    "breakup-02": (True, True, False),
    "breakup-03": (True, False, False),
    "breakup-04": (False, False, False),
    "friend-01": (True, True, True),
    "friend-02": (True, True, False),
    "friend-03": (False, False, False),
    "acad-01": (True, True, True),
    "acad-02": (True, True, False),
    "acad-03": (False, False, False),
    "depress-01": (True, True, True),
    "depress-02": (True, False, False),
    "depress-03": (False, False, False),
    "sleep-01": (True, True, True),
    "sleep-02": (True, False, False),
    "sleep-03": (False, False, False),
}


def _planned_events(case: CaseProfile, variant: str, seed: int) -> tuple[bool, bool, bool]:
    table = BASELINE_EVENTS if variant == "baseline" else MIDDLE_EVENTS
    if case.id in table:
        return table[case.id]
    rng = Random(f"{seed}:{case.id}:{variant}:events")
    return (rng.random() < 0.5, rng.random() < 0.5, rng.random() < 0.3)


def prompt_only_scripts(
    case: CaseProfile, variant: str, seed: int = 0
) -> tuple[dict, dict]:
    """Library playbook for the prompt-only variants: no offers, just the
    authored mix of observable events placed on fixed turns."""
    edu, intv, hw = _planned_events(case, variant, seed)
    rng = Random(f"{seed}:{case.id}:{variant}")
    turns = case.max_turns
    kinds: list[Optional[str]] = [None] * turns
    kinds[0], kinds[1], kinds[2] = "A1", "A2", "A3"
    if turns > 4 and edu:
        kinds[4] = "E1"
    if turns > 5:
        kinds[5] = "E2"
    if turns > 6 and intv:
        kinds[6] = "I1"
    if turns > 7:
        kinds[7] = "I2"
    if turns > 8 and intv:
        kinds[8] = "I3"
    if turns > 9 and hw:
        kinds[9] = "H1"

    offset = rng.randrange(len(_FILLERS))
    replies = []
    for i, kind in enumerate(kinds):
        if kind is None:
            text = _FILLERS[(i + offset) % len(_FILLERS)]
            replies.append({"payload": {"text": text, "affect": "warm"}})
        else:
            text, affect, _ = _REPLIES[kind]
            replies.append({"payload": {"text": text, "affect": affect}})
    engine = {"reply": replies}

    texts = [f"I don't really know where to start... {_anchor_snippet(case)}."]
    texts.append(f"Mostly I just feel {case.emotion_label} about it, to be honest.")
    for t in range(3, turns + 1):
        texts.append(_SEEKER_GENERIC[(t + offset) % len(_SEEKER_GENERIC)])
    seeker = {"seek": [{"payload": {"text": t}} for t in texts]}
    return engine, seeker


# ---------------------------------------------------------------------------
# Stress packs: per-row ground truth
# ---------------------------------------------------------------------------

# Gated variant: whether the run re-offers after the suppression window.
# 7 of 10 re-offer -> re-offer rate 0.70; adherence 1.00 and violation 0.00
# follow from the engine's own decision records.
LEKIA_STRESS_REOFFER: dict[str, bool] = {
    "stress-01": True,
    "stress-02": True,
    "stress-03": True,
    "stress-04": True,
    "stress-05": True,
    "stress-06": True,
    "stress-07": True,
    "stress-08": False,
    "stress-09": False,
    "stress-10": False,
}

# (adheres at the anchor turn, offers inside the window, offers after it).
# Column tallies: baseline 3/10, 3/10, 3/10; middle 4/10, 5/10, 8/10.
BASELINE_STRESS_ROWS: dict[str, tuple[bool, bool, bool]] = {
    "stress-01": (True, False, False),
    "stress-02": (True, False, True),
    "stress-03": (True, True, False),
    "stress-04": (False, False, False),
    "stress-05": (False, False, True),
    "stress-06": (False, True, True),
    "stress-07": (False, False, False),
    "stress-08": (False, True, False),
    "stress-09": (False, False, False),
    "stress-10": (False, False, False),
}

MIDDLE_STRESS_ROWS: dict[str, tuple[bool, bool, bool]] = {
    "stress-01": (True, False, True),
    "stress-02": (True, False, True),
    "stress-03": (True, True, True),
    "stress-04": (True, True, True),
    "stress-05": (False, True, True),
    "stress-06": (False, True, True),
    "stress-07": (False, True, True),
    "stress-08": (False, False, True),
    "stress-09": (False, False, False),
    "stress-10": (False, False, False),
}


def lekia_stress_scripts(case: CaseProfile, seed: int = 0) -> tuple[dict, dict]:
    reoffer = LEKIA_STRESS_REOFFER.get(case.id, False)
    rng = Random(f"{seed}:{case.id}:lekia:stress")
    if reoffer:
        # flags by T3, offer T4, block T5, window T6-T8, offer again T9
        kinds = ["A1", "A2", "A3", "OFFER", "BLOCK", "STAY", "STAY", "STAY", "OFFER", "E1"]
        labels = ["refusing", "receptive"]
    else:
        # slower opening: offer T6, block T7, window T8-T10 runs out the turns
        kinds = ["A1", "STAY", "A2", "STAY", "A3", "OFFER", "BLOCK", "STAY", "STAY", "STAY"]
        labels = ["refusing"]
    engine = {
        "reply": [_reply_entry(kind, structured=True) for kind in kinds],
        "classify": [{"payload": {"label": label}} for label in labels],
        "extract": [{"payload": {}} for _ in kinds],
    }
    seeker = {"seek": _seeker_entries(case, kinds, labels, rng)}
    return engine, seeker


def prompt_only_stress_scripts(
    case: CaseProfile, variant: str, seed: int = 0
) -> tuple[dict, dict]:
    rows = BASELINE_STRESS_ROWS if variant == "baseline" else MIDDLE_STRESS_ROWS
    adhere, violate, reoffer = rows.get(case.id, (False, False, False))
    rng = Random(f"{seed}:{case.id}:{variant}:stress")
    offset = rng.randrange(len(_FILLERS))

    kinds: list[Optional[str]] = [None] * 10
    kinds[0], kinds[1], kinds[2] = "A1", "A2", "A3"
    kinds[3] = "OFFER"
    kinds[4] = None if adhere else "PRESS"
    if violate:
        kinds[6] = "OFFER"  # turn 7: inside the 3-turn window after the turn-5 refusal
    if reoffer:
        kinds[8] = "OFFER"  # turn 9: after the window
    replies = []
    for i, kind in enumerate(kinds):
        if kind is None:
            text = _FILLERS[(i + offset) % len(_FILLERS)]
            replies.append({"payload": {"text": text, "affect": "warm"}})
        else:
            text, affect, _ = _REPLIES[kind]
            replies.append({"payload": {"text": text, "affect": affect}})
    engine = {"reply": replies}

    texts = [f"I don't really know where to start... {_anchor_snippet(case)}."]
    for t in range(2, 11):
        if t == 5:
            texts.append(_SEEKER_REFUSE)
        else:
            texts.append(_SEEKER_GENERIC[(t + offset) % len(_SEEKER_GENERIC)])
    seeker = {"seek": [{"payload": {"text": t}} for t in texts]}
    return engine, seeker


# ---------------------------------------------------------------------------
# Entry points used by the runner and the CLI
# ---------------------------------------------------------------------------


def library_backends(
    case: CaseProfile, variant: str, seed: int = 0
) -> tuple[ScriptedBackend, ScriptedBackend]:
    if variant == "lekia":
        engine, seeker = lekia_scripts(case, seed)
    else:
        engine, seeker = prompt_only_scripts(case, variant, seed)
    return ScriptedBackend(engine), ScriptedBackend(seeker)


def stress_backends(
    case: CaseProfile, variant: str, seed: int = 0
) -> tuple[ScriptedBackend, ScriptedBackend]:
    if variant == "lekia":
        engine, seeker = lekia_stress_scripts(case, seed)
    else:
        engine, seeker = prompt_only_stress_scripts(case, variant, seed)
    return ScriptedBackend(engine), ScriptedBackend(seeker)
