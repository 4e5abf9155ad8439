"""Text-generation provider clients: a chat-completions HTTP client and a
file-backed stub with the same contract, used for hermetic tests and dry runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .exceptions import ProviderError


@dataclass(frozen=True)
class ProviderRequest:
    prompt: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 2048


@dataclass(frozen=True)
class ProviderResponse:
    """Raw provider output, preserved verbatim for audit."""

    text: str
    finish_reason: str = "stop"
    prompt_tokens: int = 0
    completion_tokens: int = 0


class Provider(Protocol):
    def complete(self, request: ProviderRequest) -> ProviderResponse: ...


class HttpChatProvider:
    """Client for a chat-completions-style endpoint.

    Sends ``{"model", "messages", "temperature", "max_tokens"}`` and reads
    the generated text from ``choices[0].message.content``. The API key is
    read from the environment variable named by ``credential_env`` (never
    from config values or flags).
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        credential_env: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.credential_env = credential_env
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        headers = {"Content-Type": "application/json"}
        if self.credential_env:
            key = os.environ.get(self.credential_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": request.model or self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            resp = self._session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"transport failure: {exc}", retryable=True) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderError(f"HTTP {resp.status_code} from provider", retryable=True)
        if resp.status_code >= 400:
            raise ProviderError(f"HTTP {resp.status_code} from provider", retryable=False)
        try:
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
            usage = payload.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider reply: {exc}", retryable=False) from exc
        return ProviderResponse(
            text=text,
            finish_reason=finish,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


class StubProvider:
    """Lemma -> reply lookup table behind the provider contract.

    The stub reads the lemma lines back out of the prompt (the batch block
    is the trailing run of non-empty lines, as laid out by the default
    template) and concatenates the table's reply block for each. Lemmas
    missing from the table are simply omitted from the reply, which the
    response parser then records as failures.
    """

    def __init__(self, replies: dict[str, str]):
        self.replies = dict(replies)
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "StubProvider":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ProviderError(f"stub replies file {path} must hold a JSON object", retryable=False)
        return cls({str(k): str(v) for k, v in data.items()})

    @staticmethod
    def batch_lemmas(prompt: str) -> list[str]:
        lines = prompt.rstrip().splitlines()
        block: list[str] = []
        for line in reversed(lines):
            if not line.strip():
                break
            block.append(line.strip())
        block.reverse()
        # instruction headers end with ':'; lemma lines never do
        return [line.split(" — ")[0].strip() for line in block if not line.endswith(":")]

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        self.calls += 1
        parts = []
        for lemma in self.batch_lemmas(request.prompt):
            reply = self.replies.get(lemma)
            if reply is not None:
                parts.append(reply.rstrip("\n"))
        text = "\n".join(parts)
        return ProviderResponse(
            text=text,
            prompt_tokens=len(request.prompt.split()),
            completion_tokens=len(text.split()),
        )
