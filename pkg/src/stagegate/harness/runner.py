"""Trajectory runner: alternate seeker and system until done, then freeze a log."""

from __future__ import annotations

import logging
from typing import Optional

from .. import rubric
from ..backends import Backend, BackendError
from ..session import (
    SessionConfig,
    export_trajectory,
    flush_background_updates,
    handle_user_turn,
    start_session,
)
from ..trajectory import STATUS_ABORTED, STATUS_COMPLETE, STATUS_MAX_TURNS, TrajectoryLog
from .cases import CaseProfile
from .seeker import seeker_respond

logger = logging.getLogger(__name__)

Turn = tuple[str, str]


def run_trajectory(
    variant: str,
    case: CaseProfile,
    engine_backend: Backend,
    seeker_backend: Backend,
    max_turns: Optional[int] = None,
    config: Optional[SessionConfig] = None,
) -> TrajectoryLog:
    """Run one seeker/system conversation and export its log.

    The seeker opens; turns alternate until the session completes or the
    turn cap (the case's own cap unless overridden) is reached. Under
    scripted backends the result is fully deterministic. A seeker backend
    failure aborts the trajectory: the log is kept but marked so it can be
    filtered out of any "complete runs only" analysis.
    """
    cap = max_turns if max_turns is not None else case.max_turns
    session = start_session(
        variant, backend=engine_backend, config=config, session_id=f"{case.id}:{variant}", case_hint=case.id
    )
    visible: list[Turn] = []
    status = STATUS_MAX_TURNS
    for _ in range(cap):
        try:
            user_text = seeker_respond(case, visible, seeker_backend)
        except BackendError as exc:
            logger.warning("trajectory %s/%s aborted: %s", case.id, variant, exc)
            status = STATUS_ABORTED
            break
        visible.append(("seeker", user_text))
        reply = handle_user_turn(session, user_text)
        visible.append(("counselor", reply.text))
        if session.complete:
            status = STATUS_COMPLETE
            break
    flush_background_updates(session)
    return export_trajectory(session, case_id=case.id, status=status)


def filter_trajectories(
    logs: list[TrajectoryLog],
) -> tuple[list[TrajectoryLog], list[tuple[TrajectoryLog, str]]]:
    """Keep complete, in-persona runs; return the dropped ones with reasons.

    A run is dropped when it aborted mid-flight or when any seeker turn
    breaks persona (the lightweight lexical check); every drop reason is
    logged so filtering stays auditable.
    """
    kept: list[TrajectoryLog] = []
    dropped: list[tuple[TrajectoryLog, str]] = []
    for log in logs:
        if log.status == STATUS_ABORTED:
            reason = "aborted backend call"
        elif any(rubric.breaks_persona(t.user_text) for t in log.turns):
            reason = "seeker broke persona"
        else:
            kept.append(log)
            continue
        logger.info("filtered trajectory %s/%s: %s", log.case_id, log.variant, reason)
        dropped.append((log, reason))
    return kept, dropped
