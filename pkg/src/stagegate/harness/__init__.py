"""Static-to-dynamic evaluation harness.

Takes a static case library, activates it into live multi-turn runs against
a state-blind seeker simulator, judges the resulting trajectory logs with
blind event verdicts, and aggregates completion and resistance metrics.
"""

from .cases import (
    DEFAULT_DISTRESS_TYPES,
    CaseProfile,
    CaseValidationError,
    load_case_library,
    save_case_library,
)
from .judge import detect_transcript_events, judge_trajectory
from .kappa import cohen_kappa
from .metrics import (
    AggregateReport,
    StageMetrics,
    StressMetrics,
    StressReport,
    aggregate,
    render_rate_table,
    render_stress_table,
    stress_metrics,
)
from .runner import filter_trajectories, run_trajectory
from .seeker import (
    RESERVED_INTERNAL_TOKENS,
    build_seeker_request,
    find_reserved_tokens,
    seeker_respond,
)

__all__ = [
    "DEFAULT_DISTRESS_TYPES",
    "CaseProfile",
    "CaseValidationError",
    "load_case_library",
    "save_case_library",
    "judge_trajectory",
    "detect_transcript_events",
    "cohen_kappa",
    "AggregateReport",
    "StageMetrics",
    "StressMetrics",
    "StressReport",
    "aggregate",
    "render_rate_table",
    "render_stress_table",
    "stress_metrics",
    "run_trajectory",
    "filter_trajectories",
    "RESERVED_INTERNAL_TOKENS",
    "build_seeker_request",
    "find_reserved_tokens",
    "seeker_respond",
]
