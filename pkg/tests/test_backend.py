"""Chat backends: remote retry behavior, capture, and scripted replay."""

from __future__ import annotations

import json

import httpx
import pytest

from kgcollab import (
    BackendConfig,
    Completion,
    FallbackRule,
    RemoteBackend,
    ScriptedBackend,
    complete,
)
from kgcollab.errors import (
    AuthError,
    BackendError,
    MalformedResponse,
    MissingScript,
    RateLimited,
    Timeout,
)

MESSAGES = [{"role": "user", "content": "extract entities"}]
URL = "https://api.example.test/v1/chat/completions"


def ok_payload(text: str = "[(PER, Alice)]") -> dict:
    return {"choices": [{"message": {"content": text}}]}


def make_backend(handler, monkeypatch, *, sleeps=None, capture_path=None, **config_kwargs):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    config = BackendConfig(URL, "gpt-3.5-turbo", **config_kwargs)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    sleep = sleeps.append if sleeps is not None else lambda s: None
    return RemoteBackend(config, client=client, capture_path=capture_path, sleep=sleep)


def test_success_single_attempt(monkeypatch):
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers["authorization"]
        seen["payload"] = json.loads(request.content)
        return httpx.Response(200, json=ok_payload())

    backend = make_backend(handler, monkeypatch, temperature=0.25)
    got = backend.complete(MESSAGES, agent_id="ner", round=0)
    assert got == Completion("[(PER, Alice)]", attempts=1)
    assert seen["auth"] == "Bearer sk-test"
    assert seen["payload"]["model"] == "gpt-3.5-turbo"
    assert seen["payload"]["temperature"] == 0.25
    assert seen["payload"]["messages"] == MESSAGES


def test_config_validation():
    with pytest.raises(ValueError):
        BackendConfig("", "model")
    with pytest.raises(ValueError):
        BackendConfig(URL, "")
    with pytest.raises(ValueError):
        BackendConfig(URL, "model", temperature=-0.1)
    with pytest.raises(ValueError):
        BackendConfig(URL, "model", max_retries=-1)
    with pytest.raises(ValueError):
        BackendConfig(URL, "model", timeout=0)


def test_missing_key_fails_before_any_request(monkeypatch):
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(request)
        return httpx.Response(200, json=ok_payload())

    backend = make_backend(handler, monkeypatch)
    monkeypatch.delenv("OPENAI_API_KEY")
    with pytest.raises(AuthError) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 0
    assert "OPENAI_API_KEY" in str(info.value)
    assert calls == []


def test_auth_failure_is_not_retried(monkeypatch):
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(request)
        return httpx.Response(401, json={"error": "bad key"})

    backend = make_backend(handler, monkeypatch)
    with pytest.raises(AuthError) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 1
    assert len(calls) == 1


def test_client_error_is_immediate(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(404, text="no such route")

    backend = make_backend(handler, monkeypatch)
    with pytest.raises(BackendError, match="404"):
        backend.complete(MESSAGES, agent_id="a", round=0)


def test_rate_limit_retried_with_backoff(monkeypatch):
    responses = [httpx.Response(429, text="slow down"), httpx.Response(200, json=ok_payload())]
    sleeps: list[float] = []

    def handler(request: httpx.Request) -> httpx.Response:
        return responses.pop(0)

    backend = make_backend(handler, monkeypatch, sleeps=sleeps)
    got = backend.complete(MESSAGES, agent_id="a", round=0)
    assert got.attempts == 2
    assert sleeps == [0.5]


def test_persistent_rate_limit_raises(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(429, text="slow down")

    backend = make_backend(handler, monkeypatch, max_retries=0)
    with pytest.raises(RateLimited) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 1


def test_persistent_server_error_exhausts_retries(monkeypatch):
    sleeps: list[float] = []
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(request)
        return httpx.Response(500, text="boom")

    backend = make_backend(handler, monkeypatch, sleeps=sleeps, max_retries=2)
    with pytest.raises(BackendError) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 3
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]


def test_timeout_is_retried(monkeypatch):
    state = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        state["n"] += 1
        if state["n"] == 1:
            raise httpx.ConnectTimeout("slow")
        return httpx.Response(200, json=ok_payload())

    backend = make_backend(handler, monkeypatch)
    assert backend.complete(MESSAGES, agent_id="a", round=0).attempts == 2

    def always(request: httpx.Request) -> httpx.Response:
        raise httpx.ReadTimeout("never")

    backend = make_backend(always, monkeypatch, max_retries=1)
    with pytest.raises(Timeout) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 2


def test_malformed_payload_is_retried_then_raised(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, text="not json at all")

    backend = make_backend(handler, monkeypatch, max_retries=1)
    with pytest.raises(MalformedResponse) as info:
        backend.complete(MESSAGES, agent_id="a", round=0)
    assert info.value.attempts == 2


def test_non_string_content_is_malformed(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"choices": [{"message": {"content": 7}}]})

    backend = make_backend(handler, monkeypatch, max_retries=0)
    with pytest.raises(MalformedResponse):
        backend.complete(MESSAGES, agent_id="a", round=0)


def test_empty_messages_rejected(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=ok_payload())

    backend = make_backend(handler, monkeypatch)
    with pytest.raises(ValueError):
        backend.complete([], agent_id="a", round=0)


def test_capture_file_replays_through_scripted_backend(tmp_path, monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json=ok_payload("[(LOC, Geneva)]"))

    capture = tmp_path / "capture.jsonl"
    backend = make_backend(handler, monkeypatch, capture_path=capture)
    backend.complete(MESSAGES, agent_id="ner", round=0)
    backend.complete(MESSAGES, agent_id="ner", round=1)

    lines = [json.loads(line) for line in capture.read_text(encoding="utf-8").splitlines()]
    assert [entry["round"] for entry in lines] == [0, 1]
    assert lines[0]["agent_id"] == "ner"
    assert lines[0]["request"]["messages"] == MESSAGES
    assert lines[0]["response_text"] == "[(LOC, Geneva)]"

    replay = ScriptedBackend.from_capture(capture)
    got = replay.complete(MESSAGES, agent_id="ner", round=1)
    assert got.text == "[(LOC, Geneva)]"


def test_one_shot_helper_requires_key(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    with pytest.raises(AuthError):
        complete(BackendConfig(URL, "gpt-3.5-turbo"), MESSAGES)


# --- scripted backend ---------------------------------------------------------------


def test_scripted_exact_key_wins_over_fallback():
    backend = ScriptedBackend(
        {("a", 0): "exact"},
        fallbacks=[FallbackRule(pattern="extract", text="fallback")],
    )
    assert backend.complete(MESSAGES, agent_id="a", round=0).text == "exact"
    assert backend.complete(MESSAGES, agent_id="a", round=1).text == "fallback"


def test_scripted_fallback_order_and_agent_filter():
    backend = ScriptedBackend(
        {},
        fallbacks=[
            FallbackRule(pattern="extract", text="for-b", agent_id="b"),
            FallbackRule(pattern="extract", text="first-match"),
            FallbackRule(pattern="extract", text="unreached"),
        ],
    )
    assert backend.complete(MESSAGES, agent_id="b", round=0).text == "for-b"
    assert backend.complete(MESSAGES, agent_id="a", round=0).text == "first-match"


def test_scripted_fallback_searches_joined_contents():
    messages = [
        {"role": "system", "content": "first part"},
        {"role": "user", "content": "second part"},
    ]
    backend = ScriptedBackend({}, fallbacks=[FallbackRule(pattern="part\nsecond", text="hit")])
    assert backend.complete(messages, agent_id="a", round=0).text == "hit"


def test_scripted_miss_raises():
    backend = ScriptedBackend({("a", 0): "only"})
    with pytest.raises(MissingScript, match="agent 'a', round 3"):
        backend.complete(MESSAGES, agent_id="a", round=3)


def test_scripted_from_file(tmp_path, data_dir):
    backend = ScriptedBackend.from_file(data_dir / "border_crossing_script.json")
    got = backend.complete(MESSAGES, agent_id="ner", round=0)
    assert got.text == "(LOC, Palestinian section of the border crossing)"

    bad = tmp_path / "script.json"
    bad.write_text(json.dumps({"script_version": 2, "responses": []}), encoding="utf-8")
    with pytest.raises(ValueError, match="unsupported script"):
        ScriptedBackend.from_file(bad)
