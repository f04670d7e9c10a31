"""Backend layer: scripting, parsing, retries, fallbacks, HTTP wire format."""

from __future__ import annotations

import json
import os

import httpx
import pytest

from stagegate.backends import (
    Affect,
    BackendError,
    BackendRequest,
    DemoBackend,
    HTTPBackend,
    RuleJudgeBackend,
    ScriptedBackend,
    ScriptExhaustedError,
    SituationalContext,
    classify_receptivity,
    extract_cognition,
    generate_free_reply,
    generate_stage_reply,
    parse_structured,
    serialize_request,
    FALLBACK_REPLY_TEXT,
)
from stagegate.control import STAGE_FLAGS, Receptivity, Stage


def ctx_for(stage=Stage.EDUCATION, offer=False) -> SituationalContext:
    return SituationalContext(
        recent_window=(("seeker", "it keeps happening"),),
        state_summary="no established state",
        summary_as_of=None,
        stage=stage,
        behavioral_constraints=("listen first",),
        offer_flag=offer,
    )


def stage_reply_entry(text="ok", affect="warm", indicators=None):
    return {"payload": {"text": text, "affect": affect, "indicators": indicators or {}}}


# ---------------------------------------------------------------------------
# parsing and schemas
# ---------------------------------------------------------------------------


def test_parse_structured_extracts_embedded_json():
    text = 'Sure!\n{"label": "receptive"}\nthanks'
    assert parse_structured(text, "receptivity") == {"label": "receptive"}


@pytest.mark.parametrize(
    "text",
    [
        "no json here",
        '{"label": "maybe"}',  # bad enum
        '{"text": "", "affect": "warm"}',  # empty reply text
        '{"text": "hi", "affect": "cheery"}',  # bad affect
        '{"text": "hi", "affect": "warm", "indicators": {"bogus": true}}',
    ],
)
def test_parse_structured_rejects_bad_payloads(text):
    schema = "receptivity" if "label" in text else "stage_reply"
    assert parse_structured(text, schema) is None


def test_every_backend_response_is_total():
    backend = ScriptedBackend({"reply": [{"text": "not { json"}]})
    response = backend.complete(BackendRequest("reply", (), "stage_reply"))
    assert response.parse_failed and response.payload is None


# ---------------------------------------------------------------------------
# scripted backend
# ---------------------------------------------------------------------------


def test_scripted_backend_replays_in_order_per_kind():
    backend = ScriptedBackend(
        {
            "classify": [{"payload": {"label": "receptive"}}, {"payload": {"label": "refusing"}}],
            "seek": [{"payload": {"text": "hello"}}],
        }
    )
    first = backend.complete(BackendRequest("classify", (), "receptivity"))
    mid = backend.complete(BackendRequest("seek", (), "utterance"))
    second = backend.complete(BackendRequest("classify", (), "receptivity"))
    assert first.payload["label"] == "receptive"
    assert mid.payload["text"] == "hello"
    assert second.payload["label"] == "refusing"


def test_scripted_backend_exhaustion_is_loud():
    backend = ScriptedBackend({"classify": []})
    with pytest.raises(ScriptExhaustedError):
        backend.complete(BackendRequest("classify", (), "receptivity"))


def test_scripted_determinism_bit_for_bit():
    script = {"reply": [stage_reply_entry("hello", "warm", {"pattern_pointed": True})] * 3}
    outputs = []
    for _ in range(2):
        backend = ScriptedBackend({k: list(v) for k, v in script.items()})
        run = [
            backend.complete(BackendRequest("reply", (), "stage_reply")).text for _ in range(3)
        ]
        outputs.append(json.dumps(run))
    assert outputs[0] == outputs[1]


# ---------------------------------------------------------------------------
# generate_stage_reply
# ---------------------------------------------------------------------------


def test_generate_scripted_playback_exact():
    backend = ScriptedBackend(
        {"reply": [stage_reply_entry("I see a pattern.", "curious", {"pattern_pointed": True})]}
    )
    out = generate_stage_reply(ctx_for(), backend)
    assert out.reply.text == "I see a pattern."
    assert out.reply.affect is Affect.CURIOUS
    assert out.indicators == {"pattern_pointed": True, "advice_given": False}


def test_generate_retries_then_succeeds():
    backend = ScriptedBackend(
        {
            "reply": [
                {"text": "garbled"},
                {"text": "still garbled"},
                stage_reply_entry("third time lucky", "warm", {}),
            ]
        }
    )
    events = []
    out = generate_stage_reply(ctx_for(), backend, retries=2, on_event=lambda k, d: events.append(k))
    assert out.reply.text == "third time lucky"
    assert events.count("generate_retry") == 2


def test_generate_falls_back_after_exhausted_retries():
    backend = ScriptedBackend({"reply": [{"text": "junk"}] * 3})
    events = []
    out = generate_stage_reply(ctx_for(), backend, retries=2, on_event=lambda k, d: events.append(k))
    assert out.reply.text == FALLBACK_REPLY_TEXT
    assert out.reply.affect is Affect.NEUTRAL
    assert out.indicators == {f: False for f in STAGE_FLAGS[Stage.EDUCATION]}
    assert "generate_fallback" in events


def test_generate_rejects_out_of_stage_indicators():
    backend = ScriptedBackend(
        {
            "reply": [
                stage_reply_entry("hm", "warm", {"goal_confirmed": True}),  # wrong stage
                stage_reply_entry("ok", "warm", {"advice_given": True}),
            ]
        }
    )
    out = generate_stage_reply(ctx_for(stage=Stage.EDUCATION), backend)
    assert out.indicators["advice_given"] is True


def test_generate_survives_transport_errors():
    backend = ScriptedBackend({"reply": [{"error": "boom"}, stage_reply_entry("ok", "warm", {})]})
    out = generate_stage_reply(ctx_for(), backend, retries=2)
    assert out.reply.text == "ok"


def test_generate_free_reply_for_prompt_only_variants():
    backend = ScriptedBackend({"reply": [{"payload": {"text": "hello there", "affect": "sad"}}]})
    reply = generate_free_reply([{"role": "system", "content": "be kind"}], backend)
    assert reply.text == "hello there" and reply.affect is Affect.SAD


# ---------------------------------------------------------------------------
# classify_receptivity
# ---------------------------------------------------------------------------


def test_classify_scripted_label_table():
    table = [("receptive", Receptivity.RECEPTIVE), ("refusing", Receptivity.REFUSING),
             ("hesitant", Receptivity.HESITANT), ("topic_shift", Receptivity.TOPIC_SHIFT)]
    backend = ScriptedBackend({"classify": [{"payload": {"label": l}} for l, _ in table]})
    for text, expected in table:
        assert classify_receptivity(text, None, backend) is expected


def test_classify_parse_failure_defaults_to_hesitant():
    backend = ScriptedBackend({"classify": [{"text": "???"}] * 3})
    assert classify_receptivity("um", None, backend, retries=2) is Receptivity.HESITANT


def test_classification_failure_never_yields_receptive():
    # fail-safe blocking over a mix of transport and parse failures
    for entries in ([{"error": "down"}] * 3, [{"text": "not json"}] * 3,
                    [{"error": "down"}, {"text": "junk"}, {"error": "down"}]):
        backend = ScriptedBackend({"classify": list(entries)})
        assert classify_receptivity("x", None, backend, retries=2) is not Receptivity.RECEPTIVE


# ---------------------------------------------------------------------------
# extract_cognition
# ---------------------------------------------------------------------------


def test_extract_parse_failure_is_empty_update():
    backend = ScriptedBackend({"extract": [{"text": "mangled"}]})
    update = extract_cognition([("seeker", "hi")], "", backend)
    assert update.is_empty() and update.error is not None


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------


def _completions_transport(captured, content='{"label": "receptive"}', status=200):
    def handler(request: httpx.Request) -> httpx.Response:
        captured.append(request)
        if status != 200:
            return httpx.Response(status, json={"error": "nope"})
        return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

    return httpx.MockTransport(handler)


def test_http_backend_wire_format(monkeypatch):
    monkeypatch.setenv("STAGEGATE_API_TOKEN", "sekrit")
    captured: list = []
    backend = HTTPBackend(
        "https://models.example/v1/chat/completions",
        model="support-1",
        transport=_completions_transport(captured),
    )
    request = BackendRequest(
        "classify", ({"role": "system", "content": "classify this"},), "receptivity"
    )
    response = backend.complete(request)
    assert response.payload == {"label": "receptive"}
    sent = json.loads(captured[0].content)
    assert sent["model"] == "support-1"
    assert sent["messages"] == [{"role": "system", "content": "classify this"}]
    assert sent["response_format"] == {"type": "json_object"}
    assert sent["response_schema"] == "receptivity"
    assert captured[0].headers["authorization"] == "Bearer sekrit"


def test_http_backend_raises_backend_error_on_http_failure():
    backend = HTTPBackend(
        "https://models.example/v1/chat/completions",
        model="support-1",
        transport=_completions_transport([], status=500),
    )
    with pytest.raises(BackendError):
        backend.complete(BackendRequest("classify", (), "receptivity"))


def test_http_backend_marks_unparseable_content():
    backend = HTTPBackend(
        "https://models.example/v1/chat/completions",
        model="support-1",
        transport=_completions_transport([], content="no json at all"),
    )
    response = backend.complete(BackendRequest("classify", (), "receptivity"))
    assert response.parse_failed


def test_http_backend_omits_auth_header_without_token(monkeypatch):
    monkeypatch.delenv("STAGEGATE_API_TOKEN", raising=False)
    captured: list = []
    backend = HTTPBackend(
        "https://models.example/v1",
        model="m",
        transport=_completions_transport(captured),
    )
    backend.complete(BackendRequest("classify", (), "receptivity"))
    assert "authorization" not in captured[0].headers


# ---------------------------------------------------------------------------
# demo and rule-judge backends
# ---------------------------------------------------------------------------


def test_demo_backend_is_deterministic():
    req = BackendRequest(
        "classify",
        ({"role": "system", "content": "Person's reply:\nokay, sure, let's try"},),
        "receptivity",
    )
    assert DemoBackend().complete(req).payload == DemoBackend().complete(req).payload


def test_rule_judge_reads_only_its_request():
    transcript = (
        "t01 seeker: things are bad\n"
        "t01 counselor: It sounds like a lot; I hear how you feel, caught between two pulls.\n"
        "t02 seeker: yes\n"
        "t02 counselor: So between now and next time, keep a small log each day.\n"
    )
    request = BackendRequest(
        "judge",
        ({"role": "system", "content": f"TRANSCRIPT:\n{transcript}\n\nAnswer with strict JSON"},),
        "stage_verdicts",
    )
    payload = RuleJudgeBackend().complete(request).payload
    assert payload["asse"] is True and payload["hw"] is True and payload["edu"] is False


def test_serialize_request_is_stable():
    request = BackendRequest("seek", ({"role": "system", "content": "hi"},), "utterance")
    assert serialize_request(request) == serialize_request(request)
    assert "utterance" in serialize_request(request)
