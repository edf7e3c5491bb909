"""Completion backends: a remote chat-completions client and a scripted
stand-in for deterministic runs.

Both expose ``complete(messages, agent_id=..., round=...)`` returning a
Completion. The identity arguments let scripted backends key their lookup;
the remote backend ignores them. Message lists are never mutated.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import httpx

from .errors import (
    AuthError,
    BackendError,
    MalformedResponse,
    MissingScript,
    RateLimited,
    Timeout,
)

logger = logging.getLogger(__name__)

Message = dict[str, str]

SCRIPT_VERSION = 1


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for an OpenAI-compatible chat completions endpoint.

    The API key is read from the environment variable named by api_key_env,
    never stored here.
    """

    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if not self.endpoint_url:
            raise ValueError("endpoint_url must be non-empty")
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be >= 0")


@dataclass(frozen=True)
class Completion:
    text: str
    attempts: int = 1


class Backend(Protocol):
    def complete(
        self, messages: Sequence[Message], *, agent_id: str = "", round: int = 0
    ) -> Completion: ...


class RemoteBackend:
    """HTTP client with exponential backoff on transient failures.

    Transport errors, timeouts, HTTP 429, HTTP 5xx, and undecodable payloads
    are retried up to max_retries times (so at most max_retries + 1 requests
    go out). Authentication failures are never retried. When a capture path
    is set, each successful exchange is appended as a JSON line, which
    ScriptedBackend.from_capture can replay offline.
    """

    def __init__(
        self,
        config: BackendConfig,
        *,
        client: httpx.Client | None = None,
        capture_path: str | Path | None = None,
        sleep=time.sleep,
    ):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)
        self._capture_path = Path(capture_path) if capture_path else None
        self._sleep = sleep

    def complete(
        self, messages: Sequence[Message], *, agent_id: str = "", round: int = 0
    ) -> Completion:
        if not messages:
            raise ValueError("messages must be non-empty")
        config = self.config
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise AuthError(
                f"environment variable {config.api_key_env} is not set", attempts=0
            )
        payload = {
            "model": config.model_name,
            "messages": [dict(m) for m in messages],
            "temperature": config.temperature,
        }
        headers = {"Authorization": f"Bearer {key}"}
        attempts = 0
        while True:
            attempts += 1
            error: BackendError
            try:
                response = self._client.post(
                    config.endpoint_url, json=payload, headers=headers
                )
            except httpx.TimeoutException as exc:
                error = Timeout(f"request timed out: {exc}", attempts=attempts)
            except httpx.HTTPError as exc:
                error = BackendError(f"transport failure: {exc}", attempts=attempts)
            else:
                status = response.status_code
                if status in (401, 403):
                    raise AuthError(
                        f"endpoint rejected credentials (HTTP {status})",
                        attempts=attempts,
                    )
                if status == 429:
                    error = RateLimited(
                        "endpoint rate-limited the request", attempts=attempts
                    )
                elif status >= 500:
                    error = BackendError(
                        f"endpoint failed with HTTP {status}", attempts=attempts
                    )
                elif status != 200:
                    raise BackendError(
                        f"endpoint answered HTTP {status}", attempts=attempts
                    )
                else:
                    try:
                        text = self._extract_text(response)
                    except MalformedResponse as exc:
                        exc.attempts = attempts
                        error = exc
                    else:
                        self._capture(agent_id, round, payload, text)
                        return Completion(text=text, attempts=attempts)
            if attempts > config.max_retries:
                raise error
            delay = config.backoff_base * (2 ** (attempts - 1))
            logger.debug(
                "attempt %d failed (%s); retrying in %.2fs", attempts, error, delay
            )
            self._sleep(delay)

    @staticmethod
    def _extract_text(response: httpx.Response) -> str:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"undecodable completion payload: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponse("completion content is not a string")
        return text

    def _capture(self, agent_id: str, round: int, payload: dict, text: str) -> None:
        if self._capture_path is None:
            return
        record = {
            "agent_id": agent_id,
            "round": round,
            "request": payload,
            "response_text": text,
        }
        with self._capture_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def complete(config: BackendConfig, messages: Sequence[Message]) -> str:
    """One-shot remote completion with the default client."""
    return RemoteBackend(config).complete(messages).text


# --- scripted backend ----------------------------------------------------------


@dataclass(frozen=True)
class FallbackRule:
    """Regex rule applied to the joined message contents, optionally
    restricted to one agent."""

    pattern: str
    text: str
    agent_id: str | None = None


class ScriptedBackend:
    """Deterministic backend answering from a response table.

    Lookup order: exact (agent_id, round) key, then fallback rules in file
    order. A miss raises MissingScript; silence is never an answer.
    """

    def __init__(
        self,
        responses: Mapping[tuple[str, int], str] | None = None,
        fallbacks: Sequence[FallbackRule] = (),
    ):
        self._responses = dict(responses or {})
        self._fallbacks = [
            (rule, re.compile(rule.pattern, re.DOTALL)) for rule in fallbacks
        ]

    def complete(
        self, messages: Sequence[Message], *, agent_id: str = "", round: int = 0
    ) -> Completion:
        key = (agent_id, round)
        if key in self._responses:
            return Completion(text=self._responses[key], attempts=1)
        joined = "\n".join(m.get("content", "") for m in messages)
        for rule, compiled in self._fallbacks:
            if rule.agent_id is not None and rule.agent_id != agent_id:
                continue
            if compiled.search(joined):
                return Completion(text=rule.text, attempts=1)
        raise MissingScript(
            f"no scripted response for agent {agent_id!r}, round {round}"
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        """Load a script document:

        {"script_version": 1,
         "responses": [{"agent_id": ..., "round": ..., "text": ...}, ...],
         "fallbacks": [{"pattern": ..., "text": ..., "agent_id"?: ...}, ...]}
        """
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict) or doc.get("script_version") != SCRIPT_VERSION:
            raise ValueError(f"{path}: unsupported script document")
        responses = {
            (str(r["agent_id"]), int(r["round"])): str(r["text"])
            for r in doc.get("responses", ())
        }
        fallbacks = [
            FallbackRule(
                pattern=str(r["pattern"]),
                text=str(r["text"]),
                agent_id=str(r["agent_id"]) if r.get("agent_id") is not None else None,
            )
            for r in doc.get("fallbacks", ())
        ]
        return cls(responses, fallbacks)

    @classmethod
    def from_capture(cls, path: str | Path) -> "ScriptedBackend":
        """Replay a capture file written by RemoteBackend."""
        responses: dict[tuple[str, int], str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            key = (str(record["agent_id"]), int(record["round"]))
            responses[key] = str(record["response_text"])
        return cls(responses)
