"""Default prompt templates, shipped as data files.

Template wording is tunable operator configuration, not engine logic: the
engine's behavior is carried by its state machine and structured outputs,
and these files only shape how backends phrase things. Renderers return
role-tagged message lists ready for a backend call.
"""

from __future__ import annotations

from importlib import resources
from typing import Mapping, Sequence

from ..control import STAGE_FLAGS, Stage

Message = dict
Turn = tuple[str, str]  # (speaker, text)

# The pacing instruction embedded in the stage-prompt variant that relies on
# prompt text alone. It is deliberately *only* text: nothing enforces it.
MIDDLE_COOLDOWN_INSTRUCTION = (
    "If they decline or hesitate, drop the suggestion entirely and do not "
    "bring up moving forward again for at least their next 3 turns."
)

_MIDDLE_STAGE_GUIDANCE: Mapping[Stage, str] = {
    Stage.ASSESSMENT: "listen, ask, and understand the situation, the feeling, and the dilemma.",
    Stage.EDUCATION: "point out the recurring pattern and offer one concrete piece of guidance.",
    Stage.INTERVENTION: "agree a practice goal, rehearse it together, and reflect on it.",
    Stage.HOMEWORK: "agree one concrete plan the person will follow on their own.",
}

_STAGE_TEMPLATE_FILES: Mapping[Stage, str] = {
    Stage.ASSESSMENT: "stage_assessment.txt",
    Stage.EDUCATION: "stage_education.txt",
    Stage.INTERVENTION: "stage_intervention.txt",
    Stage.HOMEWORK: "stage_homework.txt",
}


def load_template(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def render_transcript(turns: Sequence[Turn], numbered: bool = False) -> str:
    """Render (speaker, text) pairs one per line, optionally turn-numbered.

    Numbering counts seeker turns: a seeker line and the reply that answers
    it share the same turn number, which is what the event-audit format
    expects.
    """
    if not turns:
        return "(conversation just started)"
    lines = []
    turn_no = 0
    for speaker, text in turns:
        if speaker == "seeker":
            turn_no += 1
        if numbered:
            lines.append(f"t{turn_no:02d} {speaker}: {text}")
        else:
            lines.append(f"{speaker}: {text}")
    return "\n".join(lines)


def _window_text(window: Sequence[Turn]) -> str:
    if not window:
        return "(conversation just started)"
    return "\n".join(f"{speaker}: {text}" for speaker, text in window)


def render_stage_reply(
    stage: Stage,
    summary_text: str,
    constraints: Sequence[str],
    window: Sequence[Turn],
) -> list[Message]:
    template = load_template(_STAGE_TEMPLATE_FILES[stage])
    system = template.format(
        summary=summary_text,
        constraints="\n".join(f"- {c}" for c in constraints) or "- none",
    )
    user = f"Recent conversation:\n{_window_text(window)}\n\nRespond now."
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def render_baseline_reply(window: Sequence[Turn]) -> list[Message]:
    system = load_template("baseline_global.txt").format()
    user = f"Recent conversation:\n{_window_text(window)}\n\nRespond now."
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def render_middle_reply(stage: Stage, window: Sequence[Turn]) -> list[Message]:
    system = load_template("middle_stage.txt").format(
        stage_label=stage.value,
        stage_guidance=_MIDDLE_STAGE_GUIDANCE[stage],
        cooldown_instruction=MIDDLE_COOLDOWN_INSTRUCTION,
    )
    user = f"Recent conversation:\n{_window_text(window)}\n\nRespond now."
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def render_classify(user_turn: str) -> list[Message]:
    system = load_template("classify_receptivity.txt").format(user_turn=user_turn)
    return [{"role": "system", "content": system}]


def render_extract(window: Sequence[Turn], prior_summary: str) -> list[Message]:
    system = load_template("extract_cognition.txt").format(
        prior_summary=prior_summary or "(none yet)",
        window=_window_text(window),
    )
    return [{"role": "system", "content": system}]


def render_seeker(
    narrative_anchor: str,
    emotion_label: str,
    resistance_directive: str,
    visible_transcript: Sequence[Turn],
) -> list[Message]:
    system = load_template("seeker.txt").format(
        narrative_anchor=narrative_anchor,
        emotion_label=emotion_label,
        resistance_directive=resistance_directive,
        transcript=render_transcript(visible_transcript),
    )
    return [{"role": "system", "content": system}]


def render_judge_stage_events(transcript: Sequence[Turn]) -> list[Message]:
    system = load_template("judge_stage_events.txt").format(
        transcript=render_transcript(transcript, numbered=True)
    )
    return [{"role": "system", "content": system}]


def render_judge_transcript_events(transcript: Sequence[Turn]) -> list[Message]:
    system = load_template("judge_transcript_events.txt").format(
        transcript=render_transcript(transcript, numbered=True)
    )
    return [{"role": "system", "content": system}]


def outstanding_objectives(stage: Stage, progress: Mapping[str, bool]) -> list[str]:
    """Constraint lines naming the stage indicators still unmet."""
    open_flags = [f for f in STAGE_FLAGS[stage] if not progress.get(f, False)]
    if not open_flags:
        return ["all objectives for this phase are met; consolidate, do not rush ahead"]
    return [f"next objective to work toward: {open_flags[0]}"] + [
        f"still open afterwards: {f}" for f in open_flags[1:]
    ]
