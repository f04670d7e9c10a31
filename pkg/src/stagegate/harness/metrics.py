"""Process-oriented metric aggregation: completion rates and stress metrics.

Everything here is a pure function of trajectory logs (plus judge verdicts),
so recomputation over the same inputs always reproduces the same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .. import rubric
from ..control import Action
from ..trajectory import TrajectoryLog


@dataclass(frozen=True)
class StageMetrics:
    """Per-trajectory event verdicts for the four stages."""

    asse: bool
    edu: bool
    intv: bool
    hw: bool

    def to_dict(self) -> dict:
        return {"asse": self.asse, "edu": self.edu, "int": self.intv, "hw": self.hw}


@dataclass
class RateTable:
    """Completion rates for one group of judged trajectories."""

    judged: int
    asse: float
    edu: float
    intv: float
    hw: float

    @property
    def mean(self) -> float:
        return (self.asse + self.edu + self.intv + self.hw) / 4.0

    def to_dict(self) -> dict:
        return {
            "judged": self.judged,
            "asse": self.asse,
            "edu": self.edu,
            "int": self.intv,
            "hw": self.hw,
            "mean": self.mean,
        }


@dataclass
class AggregateReport:
    overall: RateTable
    by_group: dict[str, RateTable] = field(default_factory=dict)
    unjudged: int = 0

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "by_group": {k: v.to_dict() for k, v in sorted(self.by_group.items())},
            "unjudged": self.unjudged,
        }


def _rates(metrics: Sequence[StageMetrics]) -> RateTable:
    n = len(metrics)
    if n == 0:
        return RateTable(judged=0, asse=0.0, edu=0.0, intv=0.0, hw=0.0)
    return RateTable(
        judged=n,
        asse=sum(m.asse for m in metrics) / n,
        edu=sum(m.edu for m in metrics) / n,
        intv=sum(m.intv for m in metrics) / n,
        hw=sum(m.hw for m in metrics) / n,
    )


def aggregate(
    metrics: Sequence[Optional[StageMetrics]],
    group_keys: Optional[Sequence[str]] = None,
) -> AggregateReport:
    """Completion rates over judged trajectories, overall and per group.

    ``metrics`` entries of ``None`` are unjudged trajectories: excluded from
    every denominator and counted in the report. ``group_keys`` (typically
    distress types), when given, must align one-to-one with ``metrics``.
    """
    if group_keys is not None and len(group_keys) != len(metrics):
        raise ValueError("group_keys must align one-to-one with metrics")
    judged = [m for m in metrics if m is not None]
    report = AggregateReport(overall=_rates(judged), unjudged=len(metrics) - len(judged))
    if group_keys is not None:
        groups: dict[str, list[StageMetrics]] = {}
        for key, metric in zip(group_keys, metrics):
            if metric is not None:
                groups.setdefault(key, []).append(metric)
        report.by_group = {key: _rates(ms) for key, ms in groups.items()}
    return report


def render_rate_table(report: AggregateReport, title: str = "completion rates") -> str:
    """Human-readable table for terminal output."""
    lines = [title, f"{'group':<20} {'n':>4} {'asse':>6} {'edu':>6} {'int':>6} {'hw':>6} {'mean':>6}"]

    def row(name: str, table: RateTable) -> str:
        return (
            f"{name:<20} {table.judged:>4} {table.asse:>6.2f} {table.edu:>6.2f} "
            f"{table.intv:>6.2f} {table.hw:>6.2f} {table.mean:>6.2f}"
        )

    lines.append(row("overall", report.overall))
    for name, table in sorted(report.by_group.items()):
        lines.append(row(name, table))
    if report.unjudged:
        lines.append(f"(unjudged trajectories excluded: {report.unjudged})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Resistance stress metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StressMetrics:
    immediate_adherence_rate: float
    cooldown_violation_rate: float
    eventual_reoffer_rate: float

    def to_dict(self) -> dict:
        return {
            "immediate_adherence_rate": self.immediate_adherence_rate,
            "cooldown_violation_rate": self.cooldown_violation_rate,
            "eventual_reoffer_rate": self.eventual_reoffer_rate,
        }


@dataclass
class StressReport:
    metrics: StressMetrics
    evaluated: int
    excluded: int
    window: int = 3

    def to_dict(self) -> dict:
        return {
            "metrics": self.metrics.to_dict(),
            "evaluated": self.evaluated,
            "excluded": self.excluded,
            "window": self.window,
        }


@dataclass(frozen=True)
class _StressEvents:
    """Per-log offer timeline: the anchor turn plus offer/advance turns."""

    anchor_turn: Optional[int]  # first turn a pending offer met a blocking read
    offer_turns: tuple[int, ...]
    pressed_at_anchor: bool


def _events_from_decisions(log: TrajectoryLog) -> _StressEvents:
    """Structural extraction for the gated variant: read the decision records."""
    offers = tuple(d.turn for d in log.gate_decisions() if d.action is Action.OFFER)
    anchor = next(
        (d.turn for d in log.gate_decisions() if d.action is Action.BLOCK_AND_COOLDOWN), None
    )
    pressed = False
    if anchor is not None:
        reply = log.turns[anchor - 1].reply.text
        pressed = rubric.is_offer(reply) or rubric.is_advance(reply)
    return _StressEvents(anchor_turn=anchor, offer_turns=offers, pressed_at_anchor=pressed)


def _events_from_transcript(log: TrajectoryLog, judge_backend) -> Optional[_StressEvents]:
    """Judged extraction for variants without decision records."""
    from .judge import detect_transcript_events

    payload = detect_transcript_events(log, judge_backend)
    if payload is None:
        return None
    offers = sorted(payload["offers"])
    refusals = sorted(payload["refusals"])
    advances = set(payload["advances"])
    anchor = next((r for r in refusals if (r - 1) in offers), None)
    pressed = anchor is not None and (anchor in offers or anchor in advances)
    return _StressEvents(anchor_turn=anchor, offer_turns=tuple(offers), pressed_at_anchor=pressed)


def stress_metrics(
    logs: Sequence[TrajectoryLog],
    judge_backend=None,
    window: int = 3,
) -> StressReport:
    """Resistance-handling metrics over a run set.

    The anchor is the first turn where a forward offer meets a blocking
    response. Per log:

    * immediate adherence: the anchor-turn reply neither advances nor
      re-presses the offer;
    * cooldown violation: any new offer within ``window`` user turns after
      the anchor;
    * eventual re-offer: any offer after that window and before the end.

    The gated variant is scored from its decision records (offers and blocks
    are engine events); prompt-only variants are scored from transcript text
    via the judge backend. Logs with no offer-meets-refusal anchor are
    excluded from all denominators and reported.
    """
    if judge_backend is None:
        from ..backends import RuleJudgeBackend

        judge_backend = RuleJudgeBackend()

    adhere = violate = reoffer = evaluated = excluded = 0
    for log in logs:
        if log.variant == "lekia":
            events = _events_from_decisions(log)
        else:
            events = _events_from_transcript(log, judge_backend)
        if events is None or events.anchor_turn is None:
            excluded += 1
            continue
        evaluated += 1
        anchor = events.anchor_turn
        if not events.pressed_at_anchor:
            adhere += 1
        if any(anchor < t <= anchor + window for t in events.offer_turns):
            violate += 1
        if any(t > anchor + window for t in events.offer_turns):
            reoffer += 1

    if evaluated == 0:
        metrics = StressMetrics(0.0, 0.0, 0.0)
    else:
        metrics = StressMetrics(adhere / evaluated, violate / evaluated, reoffer / evaluated)
    return StressReport(metrics=metrics, evaluated=evaluated, excluded=excluded, window=window)


def render_stress_table(reports: dict[str, StressReport]) -> str:
    lines = [
        "resistance stress metrics",
        f"{'variant':<18} {'n':>4} {'adherence':>10} {'violation':>10} {'re-offer':>10}",
    ]
    for variant, report in reports.items():
        m = report.metrics
        lines.append(
            f"{variant:<18} {report.evaluated:>4} {m.immediate_adherence_rate:>10.2f} "
            f"{m.cooldown_violation_rate:>10.2f} {m.eventual_reoffer_rate:>10.2f}"
        )
        if report.excluded:
            lines.append(f"  (excluded without an offer/refusal anchor: {report.excluded})")
    return "\n".join(lines)
