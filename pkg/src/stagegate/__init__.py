"""stagegate: a staged supportive-dialogue engine with dual-gated advancement.

The engine keeps the conversation's situational knowledge in an external
cognitive state, drives intervention progression through a four-stage state
machine whose transitions pass a rule gate and a user gate, and enforces a
cooldown after any declined transition offer. The companion harness activates
a static case library into dynamic multi-turn runs against a state-blind
seeker simulator and scores the resulting trajectory logs with blind event
judgments.
"""

from .backends import (
    Affect,
    AffectReply,
    Backend,
    BackendError,
    DemoBackend,
    HTTPBackend,
    RuleJudgeBackend,
    ScriptedBackend,
    StageOutput,
)
from .cognition import Claim, ClaimStatus, NarrativeState, ProcessEvidence, StateSummary
from .control import (
    ControlState,
    GateDecision,
    Receptivity,
    Stage,
    decide,
    rule_gate,
    tick_cooldown,
    user_gate,
)
from .session import (
    Session,
    SessionConfig,
    export_trajectory,
    flush_background_updates,
    handle_user_turn,
    start_session,
)
from .trajectory import TrajectoryLog

__version__ = "0.1.0"

__all__ = [
    "Affect",
    "AffectReply",
    "Backend",
    "BackendError",
    "DemoBackend",
    "HTTPBackend",
    "RuleJudgeBackend",
    "ScriptedBackend",
    "StageOutput",
    "Claim",
    "ClaimStatus",
    "NarrativeState",
    "ProcessEvidence",
    "StateSummary",
    "ControlState",
    "GateDecision",
    "Receptivity",
    "Stage",
    "decide",
    "rule_gate",
    "tick_cooldown",
    "user_gate",
    "Session",
    "SessionConfig",
    "export_trajectory",
    "flush_background_updates",
    "handle_user_turn",
    "start_session",
    "TrajectoryLog",
    "__version__",
]
