"""Executive stage control: progress flags, dual gates, offers, and cooldown.

The engine moves a support conversation through four ordered stages. Within a
stage it tracks boolean progress flags; a transition happens only when two
sequential checks agree:

* the **rule gate**, a pure predicate over the stage's progress flags that
  says the stage's substantive work is done, so a transition *may* be offered;
* the **user gate**, a receptivity read of the latest user turn that says the
  person actually *wants* to move on right now.

A passing rule gate produces a low-pressure transition offer. If the user is
not receptive, the offer is withdrawn and a cooldown window (default 3 user
turns) suppresses any further offer. All decisions are recorded as
:class:`GateDecision` values, which serialize into trajectory logs with stable
field names; the stress metrics are computed from those records alone.

State values here are immutable snapshots: every operation returns a new
:class:`ControlState`, so snapshots are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Optional

__all__ = [
    "Stage",
    "STAGE_FLAGS",
    "Receptivity",
    "Action",
    "GateDecision",
    "ControlState",
    "ProtocolError",
    "StageMismatchError",
    "initial_control_state",
    "rule_gate",
    "user_gate",
    "decide",
    "tick_cooldown",
    "record_progress",
]

DEFAULT_COOLDOWN_WINDOW = 3


class Stage(Enum):
    """The four ordered stages of a support session."""

    ASSESSMENT = "Assessment"
    EDUCATION = "Education"
    INTERVENTION = "Intervention"
    HOMEWORK = "Homework"

    @property
    def index(self) -> int:
        return _STAGE_ORDER.index(self)

    @property
    def next(self) -> Optional["Stage"]:
        """Following stage, or ``None`` for the terminal stage."""
        i = self.index
        return _STAGE_ORDER[i + 1] if i + 1 < len(_STAGE_ORDER) else None


_STAGE_ORDER = (Stage.ASSESSMENT, Stage.EDUCATION, Stage.INTERVENTION, Stage.HOMEWORK)

# Stage-local progress flags. Each stage's rule gate is the conjunction of its
# flags; flag names double as the indicator names replies may set.
STAGE_FLAGS: Mapping[Stage, tuple[str, ...]] = MappingProxyType(
    {
        Stage.ASSESSMENT: (
            "situation_understood",
            "emotion_identified",
            "core_conflict_identified",
        ),
        Stage.EDUCATION: ("pattern_pointed", "advice_given"),
        Stage.INTERVENTION: (
            "goal_confirmed",
            "simulation_completed",
            "reflection_elicited",
        ),
        Stage.HOMEWORK: ("plan_established",),
    }
)

ALL_FLAGS: frozenset[str] = frozenset(f for flags in STAGE_FLAGS.values() for f in flags)


class Receptivity(Enum):
    """How the latest user turn responds to a pending transition offer."""

    RECEPTIVE = "receptive"
    HESITANT = "hesitant"
    REFUSING = "refusing"
    TOPIC_SHIFT = "topic_shift"

    @property
    def blocking(self) -> bool:
        return self is not Receptivity.RECEPTIVE


class Action(Enum):
    """Outcome of one advancement decision."""

    STAY = "stay"
    OFFER = "offer"
    ADVANCE = "advance"
    BLOCK_AND_COOLDOWN = "block_and_cooldown"


class ProtocolError(RuntimeError):
    """A control operation was called out of protocol order."""


class StageMismatchError(ValueError):
    """A progress indicator does not belong to the current stage."""


@dataclass(frozen=True)
class GateDecision:
    """One advancement decision, recorded per user turn it was evaluated on."""

    turn: int
    rule_gate: bool
    user_gate: Optional[Receptivity]
    action: Action
    reason: str

    def to_dict(self) -> dict:
        """Stable serialization used by trajectory logs."""
        return {
            "turn": self.turn,
            "rule_gate": self.rule_gate,
            "user_gate": self.user_gate.value if self.user_gate is not None else None,
            "action": self.action.value,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GateDecision":
        return cls(
            turn=data["turn"],
            rule_gate=data["rule_gate"],
            user_gate=Receptivity(data["user_gate"]) if data["user_gate"] else None,
            action=Action(data["action"]),
            reason=data["reason"],
        )


@dataclass(frozen=True)
class ControlState:
    """Immutable snapshot of the executive layer.

    Invariants (checked at construction):

    * ``0 <= cooldown_remaining <= cooldown_window``
    * ``cooldown_remaining > 0`` implies no offer is pending
    * ``progress`` holds exactly the current stage's flags

    ``cooldown_primed`` marks a window that was set this very turn: the
    suppressed window counts the *following* ``cooldown_window`` user turns,
    so the first tick after a block arms the window instead of consuming it.
    """

    stage: Stage = Stage.ASSESSMENT
    progress: Mapping[str, bool] = field(default_factory=dict)
    offer_pending: bool = False
    cooldown_remaining: int = 0
    cooldown_primed: bool = False
    cooldown_window: int = DEFAULT_COOLDOWN_WINDOW
    last_offer_turn: Optional[int] = None
    complete: bool = False
    decisions: tuple[GateDecision, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.cooldown_remaining <= self.cooldown_window:
            raise ValueError(
                f"cooldown_remaining={self.cooldown_remaining} outside "
                f"[0, {self.cooldown_window}]"
            )
        if self.cooldown_remaining > 0 and self.offer_pending:
            raise ValueError("an offer cannot be pending during a cooldown window")
        expected = STAGE_FLAGS[self.stage]
        if set(self.progress) != set(expected):
            object.__setattr__(
                self,
                "progress",
                MappingProxyType(
                    {f: bool(self.progress.get(f, False)) for f in expected}
                ),
            )
        elif not isinstance(self.progress, MappingProxyType):
            object.__setattr__(self, "progress", MappingProxyType(dict(self.progress)))

    def flag(self, name: str) -> bool:
        return self.progress[name]

    def to_dict(self) -> dict:
        return {
            "stage": self.stage.value,
            "progress": dict(self.progress),
            "offer_pending": self.offer_pending,
            "cooldown_remaining": self.cooldown_remaining,
            "cooldown_primed": self.cooldown_primed,
            "cooldown_window": self.cooldown_window,
            "last_offer_turn": self.last_offer_turn,
            "complete": self.complete,
            "decisions": [d.to_dict() for d in self.decisions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlState":
        return cls(
            stage=Stage(data["stage"]),
            progress=data["progress"],
            offer_pending=data["offer_pending"],
            cooldown_remaining=data["cooldown_remaining"],
            cooldown_primed=data["cooldown_primed"],
            cooldown_window=data["cooldown_window"],
            last_offer_turn=data["last_offer_turn"],
            complete=data["complete"],
            decisions=tuple(GateDecision.from_dict(d) for d in data["decisions"]),
        )


def initial_control_state(cooldown_window: int = DEFAULT_COOLDOWN_WINDOW) -> ControlState:
    """Fresh control state: first stage, all flags false, no cooldown."""
    return ControlState(stage=Stage.ASSESSMENT, cooldown_window=cooldown_window)


def rule_gate(
    stage: Stage,
    progress: Mapping[str, bool],
    evidence_counters: Optional[Mapping[str, int]] = None,
    evidence_thresholds: Optional[Mapping[str, int]] = None,
) -> bool:
    """Whether the stage's advancement conditions are met.

    The predicate is the conjunction of the stage's progress flags. Evidence
    counters are accepted so callers can surface them, and optional minimum
    thresholds over those counters can be configured; by default no threshold
    applies and the counters do not affect the outcome.
    """
    flags_ok = all(bool(progress.get(f, False)) for f in STAGE_FLAGS[stage])
    if not flags_ok:
        return False
    if evidence_thresholds:
        counters = evidence_counters or {}
        return all(counters.get(name, 0) >= minimum for name, minimum in evidence_thresholds.items())
    return True


def user_gate(receptivity: Receptivity) -> bool:
    """Whether the user is receptive to advancing right now.

    Hesitation, refusal, and topic shifts all block; only an explicitly
    receptive turn opens the gate. Callers must only consult the user gate
    while a transition offer is pending; :func:`decide` enforces that.
    """
    return receptivity is Receptivity.RECEPTIVE


def decide(
    ctrl: ControlState,
    rule_result: bool,
    receptivity: Optional[Receptivity],
    turn: int,
) -> tuple[ControlState, GateDecision]:
    """Run the advancement decision table for one user turn.

    Exactly one action results from every reachable state:

    * no offer pending, rule gate failed            -> ``stay``
    * no offer pending, rule passed, in cooldown    -> ``stay`` ("cooldown")
    * no offer pending, rule passed, cooldown clear -> ``offer``
    * offer pending, user receptive                 -> ``advance``
    * offer pending, user not receptive             -> ``block_and_cooldown``

    Advancing from the terminal stage marks the session complete instead of
    moving to a further stage. ``receptivity`` must be supplied exactly when
    an offer is pending; anything else is a :class:`ProtocolError`.
    """
    if ctrl.complete:
        raise ProtocolError("session already complete; no further decisions")
    if ctrl.offer_pending and receptivity is None:
        raise ProtocolError("an offer is pending: a receptivity read is required")
    if not ctrl.offer_pending and receptivity is not None:
        raise ProtocolError("receptivity supplied without a pending offer")

    if ctrl.offer_pending:
        if user_gate(receptivity):  # type: ignore[arg-type]
            nxt = ctrl.stage.next
            if nxt is None:
                new = replace(
                    ctrl,
                    offer_pending=False,
                    complete=True,
                )
                decision = GateDecision(turn, True, receptivity, Action.ADVANCE, "session complete")
            else:
                new = ControlState(
                    stage=nxt,
                    progress={f: False for f in STAGE_FLAGS[nxt]},
                    offer_pending=False,
                    cooldown_remaining=0,
                    cooldown_window=ctrl.cooldown_window,
                    last_offer_turn=ctrl.last_offer_turn,
                    decisions=ctrl.decisions,
                )
                decision = GateDecision(
                    turn, True, receptivity, Action.ADVANCE, f"advanced to {nxt.value}"
                )
        else:
            new = replace(
                ctrl,
                offer_pending=False,
                cooldown_remaining=ctrl.cooldown_window,
                cooldown_primed=True,
            )
            decision = GateDecision(
                turn,
                True,
                receptivity,
                Action.BLOCK_AND_COOLDOWN,
                f"blocked: user {receptivity.value}",  # type: ignore[union-attr]
            )
    elif not rule_result:
        new = ctrl
        decision = GateDecision(turn, False, None, Action.STAY, "stage objectives incomplete")
    elif ctrl.cooldown_remaining > 0:
        new = ctrl
        decision = GateDecision(turn, True, None, Action.STAY, "cooldown")
    else:
        new = replace(ctrl, offer_pending=True, last_offer_turn=turn)
        decision = GateDecision(turn, True, None, Action.OFFER, "offering transition")

    new = replace(new, decisions=new.decisions + (decision,))
    return new, decision


def tick_cooldown(ctrl: ControlState) -> ControlState:
    """Advance the cooldown clock by one completed user turn.

    The suppressed window covers the ``cooldown_window`` user turns *after*
    the turn that triggered the block, so the first tick following a block
    only arms the window; later ticks decrement it toward zero.
    """
    if ctrl.cooldown_primed:
        return replace(ctrl, cooldown_primed=False)
    if ctrl.cooldown_remaining > 0:
        return replace(ctrl, cooldown_remaining=ctrl.cooldown_remaining - 1)
    return ctrl


def record_progress(ctrl: ControlState, indicators: Mapping[str, bool]) -> ControlState:
    """OR the given indicators into the current stage's progress flags.

    Flags are monotone while the session occupies a stage: a true flag stays
    true even if a later indicator reports false. Indicator names must belong
    to the current stage; names from another stage (or unknown names) raise
    :class:`StageMismatchError`.
    """
    own = set(STAGE_FLAGS[ctrl.stage])
    for name in indicators:
        if name in own:
            continue
        owner = next((s for s, flags in STAGE_FLAGS.items() if name in flags), None)
        if owner is not None:
            raise StageMismatchError(
                f"indicator {name!r} belongs to stage {owner.value}, "
                f"not current stage {ctrl.stage.value}"
            )
        raise StageMismatchError(f"unknown progress indicator {name!r}")
    merged = {f: ctrl.progress[f] or bool(indicators.get(f, False)) for f in STAGE_FLAGS[ctrl.stage]}
    return replace(ctrl, progress=merged)
