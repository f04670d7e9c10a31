"""Acceptance gate: every shipped guarantee, exercised end to end.

Each test covers one acceptance criterion, runs entirely on scripted
backends (no network), and prints one PASS line on success (shown with
``pytest -s`` or in the captured output section on failure). The whole
module is budgeted to finish in well under two minutes.
"""

from __future__ import annotations

import time
from random import Random

import pytest

from conftest import fast_complete_backend
from stagegate.backends import (
    RuleJudgeBackend,
    ScriptedBackend,
    serialize_request,
)
from stagegate.config import bundled_library_path, bundled_stress_library_path
from stagegate.control import (
    STAGE_FLAGS,
    Action,
    ControlState,
    ProtocolError,
    Receptivity,
    Stage,
    decide,
    initial_control_state,
    record_progress,
    rule_gate,
    tick_cooldown,
)
from stagegate.cognition import ClaimStatus, NarrativeState, apply_claim
from stagegate.harness import (
    aggregate,
    cohen_kappa,
    find_reserved_tokens,
    judge_trajectory,
    load_case_library,
    run_trajectory,
    stress_metrics,
)
from stagegate.harness.demo import library_backends, stress_backends
from stagegate.prompts import MIDDLE_COOLDOWN_INSTRUCTION, render_middle_reply
from stagegate.session import SessionConfig, flush_background_updates, handle_user_turn, start_session
from stagegate.trajectory import FOREGROUND_EVENT_KINDS

VARIANTS = ("lekia", "baseline", "middle_baseline")


def _passed(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# shared fixture: one full scripted sweep of the bundled libraries
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def bundle():
    """Two complete runs of the 24-case library and one stress sweep,
    with every scripted backend kept for request audits."""
    cases = load_case_library(bundled_library_path())
    stress_cases = load_case_library(bundled_stress_library_path())

    def library_sweep():
        logs, backends = {}, []
        for case in cases:
            for variant in VARIANTS:
                engine, seeker = library_backends(case, variant, seed=0)
                log = run_trajectory(variant, case, engine, seeker)
                logs[(case.id, variant)] = log
                backends.extend([engine, seeker])
        return logs, backends

    first_logs, first_backends = library_sweep()
    second_logs, _ = library_sweep()

    stress_logs, stress_backends_used = {}, []
    for case in stress_cases:
        for variant in VARIANTS:
            engine, seeker = stress_backends(case, variant, seed=0)
            stress_logs[(case.id, variant)] = run_trajectory(variant, case, engine, seeker)
            stress_backends_used.extend([engine, seeker])

    return {
        "cases": cases,
        "stress_cases": stress_cases,
        "logs": first_logs,
        "logs_rerun": second_logs,
        "stress_logs": stress_logs,
        "scripted_backends": first_backends + stress_backends_used,
    }


# ---------------------------------------------------------------------------
# 1. gate transition exhaustiveness
# ---------------------------------------------------------------------------


def test_gate_transition_exhaustiveness():
    started = time.perf_counter()
    receptivities = [None] + list(Receptivity)
    checked = 0
    for stage in Stage:
        flags = STAGE_FLAGS[stage]
        for bits in range(2 ** len(flags)):
            progress = {f: bool(bits >> i & 1) for i, f in enumerate(flags)}
            rule = rule_gate(stage, progress)
            for pending in (False, True):
                for cooldown in range(4):
                    if pending and cooldown > 0:
                        continue  # unreachable by state invariant
                    ctrl = ControlState(
                        stage=stage,
                        progress=progress,
                        offer_pending=pending,
                        cooldown_remaining=cooldown,
                    )
                    for receptivity in receptivities:
                        if (receptivity is not None) != pending:
                            with pytest.raises(ProtocolError):
                                decide(ctrl, rule, receptivity, turn=9)
                            continue
                        _, decision = decide(ctrl, rule, receptivity, turn=9)
                        checked += 1
                        assert isinstance(decision.action, Action)
                        if decision.action is Action.OFFER:
                            assert decision.rule_gate and cooldown == 0 and not pending
                        if decision.action is Action.ADVANCE:
                            assert pending and receptivity is Receptivity.RECEPTIVE
                        if decision.action is Action.BLOCK_AND_COOLDOWN:
                            assert pending and receptivity is not Receptivity.RECEPTIVE
    elapsed = time.perf_counter() - started
    assert checked == sum(2 ** len(STAGE_FLAGS[s]) for s in Stage) * (4 + 4)
    assert elapsed < 1.0, f"enumeration took {elapsed:.3f}s"
    _passed("gate-transition-exhaustiveness")


# ---------------------------------------------------------------------------
# 2. cooldown hard guarantee
# ---------------------------------------------------------------------------


def test_cooldown_hard_guarantee(bundle):
    rng = Random(20240817)
    receptivities = list(Receptivity)
    sequences = 10_000
    for _ in range(sequences):
        ctrl = initial_control_state()
        blocks, offers = [], []
        for turn in range(1, rng.randint(2, 28)):
            receptivity = None
            if ctrl.offer_pending:
                receptivity = receptivities[rng.randrange(len(receptivities))]
            ctrl = tick_cooldown(ctrl)
            ctrl, decision = decide(ctrl, rule_gate(ctrl.stage, ctrl.progress), receptivity, turn)
            if decision.action is Action.BLOCK_AND_COOLDOWN:
                blocks.append(turn)
            elif decision.action is Action.OFFER:
                offers.append(turn)
            if ctrl.complete:
                break
            flags = STAGE_FLAGS[ctrl.stage]
            ctrl = record_progress(
                ctrl, {f: bool(rng.getrandbits(1)) for f in flags}
            )
        for b in blocks:
            assert not any(b < o <= b + 3 for o in offers), (blocks, offers)

    # and over every scripted run set: violation rate exactly 0.00
    gated_logs = [log for (cid, variant), log in bundle["logs"].items() if variant == "lekia"]
    gated_stress = [log for (cid, v), log in bundle["stress_logs"].items() if v == "lekia"]
    for logs in (gated_logs, gated_stress):
        report = stress_metrics(logs)
        if report.evaluated:
            assert report.metrics.cooldown_violation_rate == 0.0
    _passed("cooldown-hard-guarantee")


# ---------------------------------------------------------------------------
# 3. claim store oracle
# ---------------------------------------------------------------------------


def _reference_statuses(history):
    statuses, valid = {}, {}
    for cid, key, turn, user_stated, contradicts in history:
        cur = valid.get(key)
        if cur is None:
            statuses[cid] = ClaimStatus.VALID
            valid[key] = (cid, turn, user_stated)
        elif turn >= cur[1]:
            statuses[cur[0]] = (
                ClaimStatus.DENIED if contradicts and cur[2] else ClaimStatus.CONFLICT
            )
            statuses[cid] = ClaimStatus.VALID
            valid[key] = (cid, turn, user_stated)
        else:
            statuses[cid] = ClaimStatus.CONFLICT
    return statuses


def test_claim_store_oracle():
    from stagegate.cognition import Claim

    rng = Random(4242)
    for round_no in range(200):
        store = NarrativeState()
        history = []
        for step in range(rng.randint(1, 50)):
            cid = f"r{round_no}s{step}"
            entry = (cid, f"k{rng.randrange(10)}", rng.randrange(25),
                     rng.random() < 0.7, rng.random() < 0.3)
            history.append(entry)
            apply_claim(
                store,
                Claim(id=cid, key=entry[1], content="x", status=ClaimStatus.VALID,
                      source_turn=entry[2], extracted_at=step, user_stated=entry[3]),
                contradicts=entry[4],
            )
            expected = _reference_statuses(history)
            actual = {c.id: c.status for cs in store.claims.values() for c in cs}
            assert actual == expected
            for claims in store.claims.values():
                assert sum(c.status is ClaimStatus.VALID for c in claims) <= 1
                valids = [c for c in claims if c.status is ClaimStatus.VALID]
                stated = [c.source_turn for c in claims if c.user_stated]
                if valids and stated:
                    assert valids[0].source_turn >= max(stated)
    _passed("claim-store-oracle")


# ---------------------------------------------------------------------------
# 4. async causality and foreground independence
# ---------------------------------------------------------------------------


def test_async_causality(bundle):
    for (cid, variant), log in {**bundle["logs"], **bundle["stress_logs"]}.items():
        for record in log.turns:
            if record.summary_as_of is not None:
                assert record.summary_as_of <= record.index - 1, (cid, variant, record.index)

    def run(delay):
        session = start_session(
            "lekia",
            backend=fast_complete_backend(),
            config=SessionConfig(extraction_delay_ticks=delay),
        )
        for i in range(9):
            handle_user_turn(session, f"turn {i + 1}")
        flush_background_updates(session)
        return session

    fast, slow = run(0), run(5)
    for turn in range(1, 10):
        fg_fast = [e.kind for e in fast.events if e.turn == turn and e.kind in FOREGROUND_EVENT_KINDS]
        fg_slow = [e.kind for e in slow.events if e.turn == turn and e.kind in FOREGROUND_EVENT_KINDS]
        assert fg_fast == fg_slow, f"foreground path changed at turn {turn}"
    _passed("async-causality")


# ---------------------------------------------------------------------------
# 5. end-to-end determinism and exact evaluation rates
# ---------------------------------------------------------------------------


def test_end_to_end_determinism(bundle):
    for key, log in bundle["logs"].items():
        assert log.to_json_bytes() == bundle["logs_rerun"][key].to_json_bytes(), key

    judge = RuleJudgeBackend()
    type_of = {case.id: case.distress_type for case in bundle["cases"]}
    expected = {
        "lekia": (1.0, 1.0, 22 / 24, 22 / 24),
        "baseline": (1.0, 10 / 24, 16 / 24, 5 / 24),
        "middle_baseline": (1.0, 17 / 24, 12 / 24, 8 / 24),
    }
    for variant, (asse, edu, intv, hw) in expected.items():
        logs = [log for (cid, v), log in bundle["logs"].items() if v == variant]
        metrics = [judge_trajectory(log, judge) for log in logs]
        report = aggregate(metrics, group_keys=[type_of[log.case_id] for log in logs])
        table = report.overall
        assert report.unjudged == 0
        assert (table.asse, table.edu, table.intv, table.hw) == (asse, edu, intv, hw), variant
    _passed("end-to-end-determinism")


# ---------------------------------------------------------------------------
# 6. stress oracle
# ---------------------------------------------------------------------------


def test_stress_oracle(bundle):
    judge = RuleJudgeBackend()
    expected = {
        "lekia": (1.0, 0.0, 0.7),
        "baseline": (0.3, 0.3, 0.3),
        "middle_baseline": (0.4, 0.5, 0.8),
    }
    seen = {}
    for variant, values in expected.items():
        logs = [log for (cid, v), log in bundle["stress_logs"].items() if v == variant]
        report = stress_metrics(logs, judge_backend=judge)
        metrics = report.metrics
        got = (
            metrics.immediate_adherence_rate,
            metrics.cooldown_violation_rate,
            metrics.eventual_reoffer_rate,
        )
        assert report.evaluated == 10 and report.excluded == 0, variant
        assert got == values, (variant, got)
        seen[variant] = got
    assert len(set(seen.values())) == 3, "stress metrics must distinguish the variants"
    _passed("stress-oracle")


# ---------------------------------------------------------------------------
# 7. kappa correctness
# ---------------------------------------------------------------------------


def test_kappa_correctness():
    rng = Random(11)
    labels = [rng.choice("abcd") for _ in range(200)]
    assert cohen_kappa(labels, labels) == 1.0
    assert abs(cohen_kappa([1, 1, 0, 0], [1, 0, 0, 1]) - 0.0) <= 1e-12
    for _ in range(1000):
        n = rng.randint(1, 50)
        a = [rng.choice("xyz") for _ in range(n)]
        b = [rng.choice("xyz") for _ in range(n)]
        assert cohen_kappa(a, b) == pytest.approx(cohen_kappa(b, a), abs=1e-12)
    _passed("kappa-correctness")


# ---------------------------------------------------------------------------
# 8. blindness
# ---------------------------------------------------------------------------


def test_blindness(bundle):
    audited = 0
    for backend in bundle["scripted_backends"]:
        for request in backend.request_log:
            if request.kind in ("seek", "judge"):
                leaks = find_reserved_tokens(serialize_request(request))
                assert leaks == [], (request.kind, leaks)
                audited += 1
    judge = RuleJudgeBackend()
    for log in bundle["logs"].values():
        judge_trajectory(log, judge)
    for request in judge.request_log:
        leaks = find_reserved_tokens(serialize_request(request))
        assert leaks == [], leaks
        audited += 1
    assert audited > 300
    _passed("blindness")


# ---------------------------------------------------------------------------
# 9. variant fidelity
# ---------------------------------------------------------------------------


def test_variant_fidelity(bundle):
    all_logs = {**bundle["logs"], **bundle["stress_logs"]}
    for (cid, variant), log in all_logs.items():
        if variant == "lekia":
            continue
        assert log.gate_decisions() == [], (cid, variant)
        assert not [e for e in log.events if e.kind == "gate_decision"], (cid, variant)

    # the stage-prompt variant carries its pacing rule as text only
    messages = render_middle_reply(Stage.EDUCATION, [("seeker", "hi")])
    prompt = "\n".join(m["content"] for m in messages)
    assert MIDDLE_COOLDOWN_INSTRUCTION in prompt
    session = start_session("middle_baseline", backend=ScriptedBackend({"reply": []}))
    assert session.control is None  # nothing structural to enforce a cooldown with
    _passed("variant-fidelity")
