"""Case library: seeker profiles the dynamic evaluation is anchored to."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

# The seven distress types every bundled case uses. The taxonomy is
# configuration: evaluations over broader libraries extend it via the
# ``taxonomy`` argument of :func:`load_case_library`.
DEFAULT_DISTRESS_TYPES = (
    "school bullying",
    "job crisis",
    "breakup",
    "friend conflict",
    "academic pressure",
    "depression",
    "sleep problems",
)

RESISTANCE_LEVELS = ("low", "moderate", "high")

DEFAULT_MAX_TURNS = 30


class CaseValidationError(ValueError):
    """A case library entry failed schema validation."""


@dataclass(frozen=True)
class CaseProfile:
    """One simulated help-seeker: dilemma framing plus resistance tendency."""

    id: str
    distress_type: str
    emotion_label: str
    narrative_anchor: str
    resistance_profile: str
    refusal_trigger: Optional[str] = None
    max_turns: int = DEFAULT_MAX_TURNS

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "distress_type": self.distress_type,
            "emotion_label": self.emotion_label,
            "narrative_anchor": self.narrative_anchor,
            "resistance_profile": self.resistance_profile,
            "refusal_trigger": self.refusal_trigger,
            "max_turns": self.max_turns,
        }


def _validate_case(data: dict, taxonomy: Sequence[str], line_no: int) -> CaseProfile:
    for field_name in ("id", "distress_type", "emotion_label", "narrative_anchor", "resistance_profile"):
        value = data.get(field_name)
        if not isinstance(value, str) or not value.strip():
            raise CaseValidationError(f"line {line_no}: {field_name!r} must be a non-empty string")
    if data["distress_type"] not in taxonomy:
        raise CaseValidationError(
            f"line {line_no}: unknown distress_type {data['distress_type']!r}; "
            f"known: {sorted(taxonomy)}"
        )
    if data["resistance_profile"] not in RESISTANCE_LEVELS:
        raise CaseValidationError(
            f"line {line_no}: resistance_profile must be one of {RESISTANCE_LEVELS}"
        )
    max_turns = data.get("max_turns", DEFAULT_MAX_TURNS)
    if not isinstance(max_turns, int) or max_turns < 1:
        raise CaseValidationError(f"line {line_no}: max_turns must be a positive integer")
    refusal_trigger = data.get("refusal_trigger")
    if refusal_trigger is not None and not isinstance(refusal_trigger, str):
        raise CaseValidationError(f"line {line_no}: refusal_trigger must be a string or null")
    return CaseProfile(
        id=data["id"],
        distress_type=data["distress_type"],
        emotion_label=data["emotion_label"],
        narrative_anchor=data["narrative_anchor"],
        resistance_profile=data["resistance_profile"],
        refusal_trigger=refusal_trigger,
        max_turns=max_turns,
    )


def load_case_library(
    path: Path, taxonomy: Optional[Sequence[str]] = None
) -> list[CaseProfile]:
    """Load a JSON-lines case library (one case object per line).

    Validates every entry against the schema and the distress-type taxonomy;
    duplicate ids are rejected. An empty file is allowed but warned about.
    """
    taxonomy = tuple(taxonomy) if taxonomy else DEFAULT_DISTRESS_TYPES
    cases: list[CaseProfile] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CaseValidationError(f"line {line_no}: invalid JSON: {exc}") from exc
        case = _validate_case(data, taxonomy, line_no)
        if case.id in seen:
            raise CaseValidationError(f"line {line_no}: duplicate case id {case.id!r}")
        seen.add(case.id)
        cases.append(case)
    if not cases:
        logger.warning("case library %s is empty", path)
    return cases


def save_case_library(cases: Sequence[CaseProfile], path: Path) -> None:
    lines = [json.dumps(c.to_dict(), ensure_ascii=False, sort_keys=True) for c in cases]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
