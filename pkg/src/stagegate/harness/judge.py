"""Trajectory judging: blind event verdicts over transcript text.

The judge, whether LLM-backed or the deterministic rule judge, receives only the
transcript rendered into its request; engine events never reach it, mirroring
the seeker's blindness. Verdicts are observable event judgments (did a
concrete plan get established?), never style scores.
"""

from __future__ import annotations

import logging
from typing import Optional

from .. import prompts
from ..backends import Backend, BackendError, BackendRequest
from ..trajectory import TrajectoryLog
from .metrics import StageMetrics

logger = logging.getLogger(__name__)


def build_judge_request(log: TrajectoryLog) -> BackendRequest:
    messages = prompts.render_judge_stage_events(log.transcript())
    return BackendRequest(kind="judge", messages=tuple(messages), schema="stage_verdicts")


def judge_trajectory(log: TrajectoryLog, judge_backend: Backend) -> Optional[StageMetrics]:
    """Four event verdicts for one trajectory, or ``None`` when unjudgeable.

    Unjudged trajectories are excluded from aggregate denominators; the
    aggregation reports how many were excluded.
    """
    request = build_judge_request(log)
    try:
        response = judge_backend.complete(request)
    except BackendError as exc:
        logger.warning("judge call failed for case %s: %s", log.case_id, exc)
        return None
    if response.parse_failed or response.payload is None:
        logger.warning("judge verdict unparseable for case %s", log.case_id)
        return None
    payload = response.payload
    return StageMetrics(
        asse=payload["asse"], edu=payload["edu"], intv=payload["int"], hw=payload["hw"]
    )


def build_event_request(log: TrajectoryLog) -> BackendRequest:
    messages = prompts.render_judge_transcript_events(log.transcript())
    return BackendRequest(kind="judge", messages=tuple(messages), schema="transcript_events")


def detect_transcript_events(log: TrajectoryLog, judge_backend: Backend) -> Optional[dict]:
    """Offer/refusal/advance turn numbers judged from transcript text.

    Used for variants that record no gate decisions, so their stress events
    can only be recovered from what the conversation shows.
    """
    request = build_event_request(log)
    try:
        response = judge_backend.complete(request)
    except BackendError as exc:
        logger.warning("event detection failed for case %s: %s", log.case_id, exc)
        return None
    if response.parse_failed or response.payload is None:
        return None
    return response.payload
