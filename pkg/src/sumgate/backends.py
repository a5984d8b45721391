"""Generator/judge backend abstraction.

Two kinds of backend sit behind one ``complete()`` call: an HTTP
chat-completion client for live models, and a deterministic scripted mock
for tests and offline runs. Transient HTTP failures (5xx, timeouts) are
retried with exponential backoff; 4xx responses are rejected outright.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import requests

from .prompts import PromptBundle

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "CHALLENGE_API_KEY"


class BackendError(Exception):
    """Base class for backend call failures."""


class BackendUnavailableError(BackendError):
    """Retries exhausted against a transient failure."""

    def __init__(self, message: str, last_status: int | None = None):
        super().__init__(message)
        self.last_status = last_status


class RequestRejectedError(BackendError):
    """Non-retryable rejection (4xx) or an unusable response body."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


class MockExhaustedError(BackendError):
    """A scripted mock was called with an empty response queue."""


@dataclass
class CompletionRequest:
    system_text: str
    user_text: str
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


class ScriptedMock:
    """FIFO queue of canned responses with an append-only call log.

    Each ``pop`` consumes exactly one queued response. Queue access is
    serialized so a mock can be shared across concurrent workers.
    """

    def __init__(self, responses=()):
        self._responses = deque(responses)
        self.call_log: list[CompletionRequest] = []
        self._lock = threading.Lock()

    def pop(self, request: CompletionRequest) -> str:
        with self._lock:
            self.call_log.append(request)
            if not self._responses:
                raise MockExhaustedError("scripted mock has no responses left")
            return self._responses.popleft()

    def remaining(self) -> int:
        with self._lock:
            return len(self._responses)


@dataclass
class BackendSpec:
    """Configuration for one generator or evaluator backend."""

    kind: str  # "http_chat" | "scripted_mock"
    endpoint_url: str = ""
    model_name: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0
    max_output_tokens: int = 1024
    api_key_env: str = DEFAULT_API_KEY_ENV
    backoff_base: float = 1.0  # seconds before the first retry, doubled per attempt
    max_concurrency: int | None = None
    mock: ScriptedMock | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("http_chat", "scripted_mock"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http_chat" and (not self.endpoint_url or not self.model_name):
            raise ValueError("http_chat backends need endpoint_url and model_name")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


def _extract_message_content(body: str) -> str:
    try:
        payload = json.loads(body)
        content = payload["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise RequestRejectedError(
            f"response body lacks choices[0].message.content: {exc}", body=body
        ) from exc
    if not isinstance(content, str):
        raise RequestRejectedError("message content is not text", body=body)
    return content


def _http_complete(spec: BackendSpec, request: CompletionRequest) -> str:
    messages = []
    if request.system_text:
        messages.append({"role": "system", "content": request.system_text})
    messages.append({"role": "user", "content": request.user_text})
    payload = {
        "model": spec.model_name,
        "messages": messages,
        "temperature": spec.temperature,
        "max_tokens": request.max_output_tokens,
    }
    headers = {}
    token = os.environ.get(spec.api_key_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    attempts = spec.max_retries + 1
    last_status: int | None = None
    last_error = "no attempt made"
    for attempt in range(attempts):
        if attempt > 0:
            delay = spec.backoff_base * (2 ** (attempt - 1))
            logger.warning(
                "retrying %s in %.1fs (%s)", spec.endpoint_url, delay, last_error
            )
            time.sleep(delay)
        try:
            response = requests.post(
                spec.endpoint_url, json=payload, headers=headers, timeout=spec.timeout
            )
        except requests.RequestException as exc:
            last_error = f"transport error: {exc}"
            last_status = None
            continue
        if 200 <= response.status_code < 300:
            return _extract_message_content(response.text)
        if response.status_code >= 500:
            last_status = response.status_code
            last_error = f"server error {response.status_code}"
            continue
        raise RequestRejectedError(
            f"request rejected with status {response.status_code}",
            status=response.status_code,
            body=response.text,
        )
    raise BackendUnavailableError(
        f"backend unavailable after {attempts} attempt(s): {last_error}",
        last_status=last_status,
    )


def complete(spec: BackendSpec, request: CompletionRequest) -> str:
    """Send one completion request and return the backend's text output."""
    if spec.kind == "scripted_mock":
        if spec.mock is None:
            raise ValueError("scripted_mock backend has no script attached")
        return spec.mock.pop(request)
    return _http_complete(spec, request)


def generate_summary(spec: BackendSpec, prompt: PromptBundle, source: str) -> str:
    """Generate a candidate summary for ``source`` under a composed prompt."""
    if not source:
        raise ValueError("source must be non-empty")
    request = CompletionRequest(
        system_text=prompt.composed,
        user_text=source,
        max_output_tokens=spec.max_output_tokens,
    )
    return complete(spec, request).strip()
