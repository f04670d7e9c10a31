"""Cognitive state: claim store semantics, summaries, snapshots, ingestion."""

from __future__ import annotations

from random import Random

import pytest

from stagegate.backends import ScriptedBackend
from stagegate.cognition import (
    Claim,
    ClaimDelta,
    ClaimError,
    ClaimStatus,
    CognitiveUpdate,
    DistortionCue,
    DuplicateClaimError,
    EventEntry,
    NarrativeState,
    ProcessEvidence,
    ReadinessSignal,
    SnapshotError,
    apply_claim,
    apply_update,
    ingest_window,
    restore,
    snapshot,
    summarize,
)


def claim(cid, key, turn, content="fact", user_stated=True) -> Claim:
    return Claim(
        id=cid,
        key=key,
        content=content,
        status=ClaimStatus.VALID,
        source_turn=turn,
        extracted_at=0,
        user_stated=user_stated,
    )


# ---------------------------------------------------------------------------
# apply_claim
# ---------------------------------------------------------------------------


def test_insert_into_empty_store():
    store = NarrativeState()
    apply_claim(store, claim("c1", "job", 2))
    assert store.valid_claim("job").id == "c1"


def test_newer_user_statement_supersedes():
    store = NarrativeState()
    apply_claim(store, claim("c1", "job", 2))
    apply_claim(store, claim("c2", "job", 5), contradicts=True)
    old, new = store.claims["job"]
    assert old.status is ClaimStatus.DENIED
    assert new.status is ClaimStatus.VALID


def test_backfill_never_displaces():
    store = NarrativeState()
    apply_claim(store, claim("c1", "job", 5))
    apply_claim(store, claim("c2", "job", 2), contradicts=True)
    assert store.valid_claim("job").id == "c1"
    assert store.claims["job"][1].status is ClaimStatus.CONFLICT


def test_status_table_over_order_and_flag():
    # hand-tabled outcomes for every (order, contradiction, origin) case
    cases = [
        # (new_turn, contradicts, old_user_stated, expect_old, expect_new)
        (5, True, True, ClaimStatus.DENIED, ClaimStatus.VALID),
        (5, True, False, ClaimStatus.CONFLICT, ClaimStatus.VALID),
        (5, False, True, ClaimStatus.CONFLICT, ClaimStatus.VALID),
        (5, False, False, ClaimStatus.CONFLICT, ClaimStatus.VALID),
        (1, True, True, ClaimStatus.VALID, ClaimStatus.CONFLICT),
        (1, False, True, ClaimStatus.VALID, ClaimStatus.CONFLICT),
    ]
    for new_turn, contradicts, old_user, expect_old, expect_new in cases:
        store = NarrativeState()
        apply_claim(store, claim("old", "k", 3, user_stated=old_user))
        apply_claim(store, claim("new", "k", new_turn), contradicts=contradicts)
        old, new = store.claims["k"]
        assert old.status is expect_old, (new_turn, contradicts, old_user)
        assert new.status is expect_new, (new_turn, contradicts, old_user)


def test_duplicate_id_rejected_distinctly():
    store = NarrativeState()
    apply_claim(store, claim("c1", "job", 1))
    with pytest.raises(DuplicateClaimError):
        apply_claim(store, claim("c1", "job", 2))


def test_malformed_key_rejected():
    store = NarrativeState()
    with pytest.raises(ClaimError):
        apply_claim(store, claim("c1", "", 1))


def test_source_turn_beyond_session_rejected():
    store = NarrativeState()
    with pytest.raises(ClaimError):
        apply_claim(store, claim("c1", "job", 9), current_turn=4)


# ---------------------------------------------------------------------------
# brute-force oracle: recompute statuses from scratch per step
# ---------------------------------------------------------------------------


def _reference_statuses(history):
    """Independent reference: replay the whole history from nothing.

    ``history`` is the ordered list of (claim_id, key, turn, user_stated,
    contradicts). Returns {claim_id: status} computed from scratch.
    """
    statuses: dict[str, ClaimStatus] = {}
    valid: dict[str, tuple[str, int, bool]] = {}  # key -> (id, turn, user_stated)
    for cid, key, turn, user_stated, contradicts in history:
        cur = valid.get(key)
        if cur is None:
            statuses[cid] = ClaimStatus.VALID
            valid[key] = (cid, turn, user_stated)
        elif turn >= cur[1]:
            if contradicts and cur[2]:
                statuses[cur[0]] = ClaimStatus.DENIED
            else:
                statuses[cur[0]] = ClaimStatus.CONFLICT
            statuses[cid] = ClaimStatus.VALID
            valid[key] = (cid, turn, user_stated)
        else:
            statuses[cid] = ClaimStatus.CONFLICT
    return statuses


def test_incremental_store_matches_scratch_recomputation():
    rng = Random(99)
    for round_no in range(60):
        store = NarrativeState()
        history = []
        for step in range(rng.randint(1, 50)):
            cid = f"c{round_no}-{step}"
            key = f"k{rng.randrange(10)}"
            turn = rng.randrange(30)
            user_stated = rng.random() < 0.7
            contradicts = rng.random() < 0.3
            history.append((cid, key, turn, user_stated, contradicts))
            apply_claim(
                store,
                claim(cid, key, turn, user_stated=user_stated),
                contradicts=contradicts,
            )
            expected = _reference_statuses(history)
            actual = {c.id: c.status for cs in store.claims.values() for c in cs}
            assert actual == expected
            # one-valid-per-key
            for key_, claims_ in store.claims.items():
                assert sum(c.status is ClaimStatus.VALID for c in claims_) <= 1
            # recency dominance: the valid claim is at least as new as every
            # user-stated claim for its key
            for key_, claims_ in store.claims.items():
                valid_claims = [c for c in claims_ if c.status is ClaimStatus.VALID]
                if valid_claims:
                    newest_stated = max(
                        (c.source_turn for c in claims_ if c.user_stated), default=-1
                    )
                    assert valid_claims[0].source_turn >= newest_stated


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def test_summary_of_empty_state():
    summary = summarize(NarrativeState(), ProcessEvidence(), budget=500)
    assert summary.text == "no established state"


def test_summary_contains_all_keys_when_budget_allows():
    store = NarrativeState()
    for i, key in enumerate(["job", "family", "sleep"]):
        apply_claim(store, claim(f"c{i}", key, i + 1))
    summary = summarize(store, ProcessEvidence(), budget=500)
    for key in ("job", "family", "sleep"):
        assert key in summary.text
    assert len(summary.text) <= 500


def test_summary_drops_oldest_claims_first():
    store = NarrativeState()
    for i in range(50):
        apply_claim(store, claim(f"c{i}", f"k{i:02d}", turn=i, content=f"fact number {i}"))
    summary = summarize(store, ProcessEvidence(), budget=200)
    assert len(summary.text) <= 200
    present = [i for i in range(50) if f"k{i:02d}=" in summary.text]
    # kept claims must be exactly the newest block (hand-sorted turn order)
    assert present == sorted(present)
    assert present and present == list(range(min(present), 50))


def test_summary_respects_as_of_turn():
    store = NarrativeState()
    apply_claim(store, claim("c1", "early", 2))
    apply_claim(store, claim("c2", "late", 9))
    summary = summarize(store, ProcessEvidence(), budget=400, as_of_turn=5)
    assert "early" in summary.text and "late" not in summary.text
    assert summary.as_of_turn == 5


def test_summary_excludes_denied_claims():
    store = NarrativeState()
    apply_claim(store, claim("c1", "job", 1, content="loves the job"))
    apply_claim(store, claim("c2", "job", 4, content="quit the job"), contradicts=True)
    summary = summarize(store, ProcessEvidence(), budget=400)
    assert "quit the job" in summary.text and "loves the job" not in summary.text


def test_summary_counts_match_evidence():
    evidence = ProcessEvidence(
        automatic_thoughts=["t1", "t2"],
        distortion_cues=[DistortionCue("x", "catastrophizing")],
        readiness_signals=[],
    )
    summary = summarize(NarrativeState(), evidence, budget=300)
    assert "thoughts=2" in summary.text and "cues=1" in summary.text
    assert summary.evidence_digest == evidence.counters


def test_summary_budget_must_be_positive():
    with pytest.raises(ValueError):
        summarize(NarrativeState(), ProcessEvidence(), budget=0)


# ---------------------------------------------------------------------------
# snapshot / restore
# ---------------------------------------------------------------------------


def _populated_state():
    store = NarrativeState(
        event_chain=[EventEntry(1, "lost job"), EventEntry(3, "argued with partner")],
        conflict_structure="fears being a burden",
        stances=["will not move back home"],
    )
    apply_claim(store, claim("c1", "job", 1, content="was laid off"))
    apply_claim(store, claim("c2", "job", 4, content="interviewing again"), contradicts=True)
    evidence = ProcessEvidence(
        automatic_thoughts=["I ruin everything"],
        distortion_cues=[DistortionCue("always my fault", "personalization")],
        readiness_signals=[ReadinessSignal("asked what to do next", 4)],
    )
    return store, evidence


def test_snapshot_roundtrip_empty():
    narrative, evidence = restore(snapshot(NarrativeState(), ProcessEvidence()))
    assert narrative.claims == {} and evidence.counters["automatic_thoughts"] == 0


def test_snapshot_roundtrip_populated():
    store, evidence = _populated_state()
    narrative2, evidence2 = restore(snapshot(store, evidence))
    assert snapshot(narrative2, evidence2) == snapshot(store, evidence)
    assert narrative2.valid_claim("job").content == "interviewing again"


def test_restore_rejects_truncated_bytes():
    data = snapshot(*_populated_state())
    with pytest.raises(SnapshotError):
        restore(data[: len(data) // 2])


def test_restore_rejects_wrong_version():
    with pytest.raises(SnapshotError):
        restore(b'{"version": 99, "narrative": {}, "evidence": {}}')


def test_restored_store_still_enforces_duplicate_ids():
    store, evidence = _populated_state()
    narrative2, _ = restore(snapshot(store, evidence))
    with pytest.raises(DuplicateClaimError):
        apply_claim(narrative2, claim("c1", "job", 6))


# ---------------------------------------------------------------------------
# ingest_window
# ---------------------------------------------------------------------------


def test_ingest_returns_scripted_delta_without_mutating():
    backend = ScriptedBackend(
        {
            "extract": [
                {
                    "payload": {
                        "claims": [
                            {"key": "job", "content": "was laid off", "source_turn": 1,
                             "user_stated": True, "contradicts": False},
                            {"key": "family", "content": "sister helps out", "source_turn": 1,
                             "user_stated": True, "contradicts": False},
                        ]
                    }
                }
            ]
        }
    )
    narrative, evidence = NarrativeState(), ProcessEvidence()
    update = ingest_window([("seeker", "hi")], narrative, evidence, backend)
    assert len(update.claims) == 2 and update.error is None
    assert narrative.claims == {} and evidence.counters["automatic_thoughts"] == 0


def test_ingest_carries_contradiction_flags():
    backend = ScriptedBackend(
        {
            "extract": [
                {
                    "payload": {
                        "claims": [
                            {"key": "job", "content": "found a new role", "source_turn": 6,
                             "user_stated": True, "contradicts": True}
                        ]
                    }
                }
            ]
        }
    )
    update = ingest_window([("seeker", "hi")], NarrativeState(), ProcessEvidence(), backend)
    assert update.claims[0].contradicts is True


def test_ingest_error_injection_yields_empty_update():
    backend = ScriptedBackend({"extract": [{"error": "timeout"}]})
    update = ingest_window([("seeker", "hi")], NarrativeState(), ProcessEvidence(), backend)
    assert update.is_empty() and update.error == "timeout"


def test_ingest_requires_window():
    with pytest.raises(ValueError):
        ingest_window([], NarrativeState(), ProcessEvidence(), None)


def test_apply_update_folds_everything_in():
    narrative, evidence = NarrativeState(), ProcessEvidence()
    update = CognitiveUpdate(
        claims=[ClaimDelta(key="job", content="was laid off", source_turn=1)],
        events=[EventEntry(1, "layoff call")],
        stances=["will not relocate"],
        conflict_structure="security versus pride",
        automatic_thoughts=["I should have seen it"],
        distortion_cues=[DistortionCue("always me", "personalization")],
        readiness_signals=[ReadinessSignal("asked about options", 1)],
    )
    apply_update(narrative, evidence, update, current_turn=2)
    assert narrative.valid_claim("job") is not None
    assert narrative.conflict_structure == "security versus pride"
    assert evidence.counters == {
        "automatic_thoughts": 1,
        "distortion_cues": 1,
        "readiness_signals": 1,
    }


def test_event_chain_keeps_turns_non_decreasing():
    narrative = NarrativeState()
    narrative.add_event(EventEntry(5, "b"))
    narrative.add_event(EventEntry(2, "a"))
    narrative.add_event(EventEntry(7, "c"))
    assert [e.turn for e in narrative.event_chain] == [2, 5, 7]
