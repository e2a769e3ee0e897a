"""OpenAI-compatible model client, request recording/replay and mock models."""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from rulecomp.errors import (
    AuthError,
    ConfigError,
    EmptyCompletion,
    EndpointUnreachable,
    RetriesExhausted,
)
from rulecomp.prompts import CHAT, FIM, ModelProfile, PromptBundle

COMPLETION = "completion"
MAX_ATTEMPTS = 5
_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str
    model: str
    api_key_env: str | None = None
    temperature: float = 0.0
    max_tokens: int = 512
    mode: str = CHAT  # chat or completion
    fim_profile: str | None = None
    stop: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in (CHAT, COMPLETION):
            raise ConfigError(f"model mode must be chat or completion, not {self.mode!r}")
        if self.fim_profile and self.mode != COMPLETION:
            raise ConfigError("a FIM profile needs completion mode")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")

    @classmethod
    def from_profile(cls, profile: ModelProfile, mode: str, endpoint: str | None = None) -> "ModelConfig":
        wire = COMPLETION if mode == FIM else CHAT
        return cls(
            endpoint=endpoint or profile.endpoint,
            model=profile.model or profile.name,
            api_key_env=profile.api_key_env,
            temperature=profile.temperature,
            max_tokens=profile.max_tokens,
            mode=wire,
            fim_profile=profile.name if mode == FIM else None,
            stop=profile.stop if mode == FIM else (),
        )


@dataclass
class Generation:
    text: str
    latency_ms: float = 0.0
    usage: dict = field(default_factory=dict)
    attempts: int = 1
    request_key: str = ""


def request_key(path: str, body: bytes) -> str:
    """Stable identity of a request, used to look it up in a recording."""
    try:
        canon = json.dumps(json.loads(body), sort_keys=True, ensure_ascii=False)
    except ValueError:
        canon = body.decode("utf-8", "replace")
    return hashlib.sha256(f"{path}\n{canon}".encode("utf-8")).hexdigest()


class RecordingTransport(httpx.BaseTransport):
    """Passes requests to ``inner`` and appends each exchange to a JSONL file."""

    def __init__(self, inner: httpx.BaseTransport, path: str | os.PathLike):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        body = request.read()
        response = self.inner.handle_request(request)
        content = response.read()
        row = {
            "key": request_key(request.url.path, body),
            "request": {"path": request.url.path, "body": body.decode("utf-8")},
            "response": {"status": response.status_code, "body": content.decode("utf-8", "replace")},
        }
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        return httpx.Response(response.status_code, headers=response.headers, content=content)


class ReplayTransport(httpx.BaseTransport):
    """Answers requests from a recording; unknown requests fail as unreachable.

    When a request was recorded several times (e.g. retries), the last
    recorded response is used.
    """

    def __init__(self, path: str | os.PathLike):
        self.responses: dict[str, tuple[int, str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    self.responses[row["key"]] = (row["response"]["status"], row["response"]["body"])

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        key = request_key(request.url.path, request.read())
        if key not in self.responses:
            raise httpx.ConnectError("request not present in the replay recording", request=request)
        status, body = self.responses[key]
        return httpx.Response(status, content=body.encode("utf-8"),
                              headers={"content-type": "application/json"})


class LLMClient:
    """Sends prompt bundles to an OpenAI-compatible endpoint.

    HTTP 429 and 5xx responses are retried with exponential backoff, up to
    ``max_attempts`` attempts in total.
    """

    def __init__(self, config: ModelConfig, transport: httpx.BaseTransport | None = None,
                 max_attempts: int = MAX_ATTEMPTS, backoff: float = 0.5, sleep=time.sleep,
                 timeout: float = 120.0):
        self.config = config
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.sleep = sleep
        headers = {"content-type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if key:
                headers["authorization"] = f"Bearer {key}"
        self.client = httpx.Client(transport=transport, headers=headers, timeout=timeout)

    def close(self) -> None:
        self.client.close()

    def _payload(self, bundle: PromptBundle) -> tuple[str, dict]:
        cfg = self.config
        body: dict = {"model": cfg.model, "temperature": cfg.temperature, "max_tokens": cfg.max_tokens}
        if bundle.mode == CHAT:
            if cfg.mode != CHAT:
                raise ConfigError("chat prompt sent to a completion-mode model")
            body["messages"] = [{"role": r, "content": t} for r, t in bundle.chat_messages]
            return "/chat/completions", body
        if cfg.mode != COMPLETION:
            raise ConfigError("FIM prompt sent to a chat-mode model")
        body["prompt"] = bundle.fim_text
        if cfg.stop:
            body["stop"] = list(cfg.stop)
        return "/completions", body

    def generate(self, bundle: PromptBundle) -> Generation:
        path, body = self._payload(bundle)
        url = self.config.endpoint.rstrip("/") + path
        raw = json.dumps(body, ensure_ascii=False).encode("utf-8")
        key = request_key(path, raw)
        t0 = time.monotonic()
        last = ""
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self.client.post(url, content=raw)
            except httpx.TransportError as exc:
                raise EndpointUnreachable(f"{url}: {exc}") from exc
            if resp.status_code in (401, 403):
                raise AuthError(f"{url}: HTTP {resp.status_code} (check ${self.config.api_key_env})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                if attempt < self.max_attempts:
                    self.sleep(self.backoff * (2 ** (attempt - 1)))
                continue
            if resp.status_code >= 400:
                raise EndpointUnreachable(f"{url}: HTTP {resp.status_code}: {resp.text[:500]}")
            text = _response_text(resp, bundle.mode)
            usage = {}
            try:
                usage = resp.json().get("usage") or {}
            except ValueError:
                pass
            return Generation(text, (time.monotonic() - t0) * 1000.0, usage, attempt, key)
        raise RetriesExhausted(f"{url}: gave up after {self.max_attempts} attempts ({last})")


def _response_text(resp: httpx.Response, mode: str) -> str:
    try:
        choice = resp.json()["choices"][0]
        if mode == CHAT:
            return choice["message"]["content"] or ""
        return choice["text"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise EndpointUnreachable(f"unexpected response shape: {resp.text[:500]}") from exc


class OracleModel:
    """Test double answering every prompt with the task's ground truth."""

    def __init__(self, answers: dict[str, str]):
        self.answers = answers

    def generate(self, bundle: PromptBundle) -> Generation:
        return Generation(self.answers[bundle.task_id])


class ConstantModel:
    """Test double answering every prompt with the same text."""

    def __init__(self, text: str = "assign y = 1'b0;"):
        self.text = text

    def generate(self, bundle: PromptBundle) -> Generation:
        return Generation(self.text)


def generate(bundle: PromptBundle, config: ModelConfig, transport: httpx.BaseTransport | None = None) -> Generation:
    client = LLMClient(config, transport)
    try:
        return client.generate(bundle)
    finally:
        client.close()


def extract_code(response: str, mode: str, stop_tokens=()) -> str:
    """Pull the completion out of a raw model response.

    Chat responses yield their first fenced code block, or the whole trimmed
    text; completion responses are cut at the earliest stop token.
    """
    if mode == CHAT:
        m = _FENCE.search(response)
        text = m.group(1).strip() if m else response.strip()
    else:
        cut = len(response)
        for tok in stop_tokens:
            i = response.find(tok)
            if i != -1:
                cut = min(cut, i)
        text = response[:cut]
    if not text.strip():
        raise EmptyCompletion("model returned no code")
    return text
