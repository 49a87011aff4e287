"""Single choke-point for model calls: live HTTP, plus record/replay cassettes.

Every request is fingerprinted over a canonical serialization of
(model, messages, schema). Record mode appends fingerprint-keyed JSONL
records to a cassette; replay mode answers from the cassette and never
touches the network. An optional local interaction log keeps cost/history
visibility without any external tracing service.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import requests

from .config import EngineConfig, GatewayMode

DEFAULT_BASE_URL = "https://api.openai.com/v1"
MAX_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 0.5
BACKOFF_CAP_SECONDS = 2.0


class GatewayError(Exception):
    pass


class NetworkError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class RateLimitedError(GatewayError):
    pass


class ReplayMissError(GatewayError):
    def __init__(self, fingerprint: str, hint: str = ""):
        self.fingerprint = fingerprint
        super().__init__(f"no cassette entry for fingerprint {fingerprint}{hint}")


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class CompletionRequest:
    model_name: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    structured_output_schema: str | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a completion request needs at least one message")
        if any(m.role == "system" for m in self.messages) and self.messages[0].role != "system":
            raise ValueError("the system message must come first")

    def fingerprint(self) -> str:
        payload = {
            "model": self.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "schema": self.structured_output_schema,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class CompletionRecord:
    fingerprint: str
    response_text: str
    timestamp: str
    token_usage: dict | None = None


# transport: (request) -> (response_text, token_usage or None)
Transport = Callable[[CompletionRequest], tuple[str, dict | None]]


class HttpChatTransport:
    """Chat-completions client for any OpenAI-compatible endpoint."""

    def __init__(self, api_key: str, base_url: str = DEFAULT_BASE_URL, timeout: float = 60.0):
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def __call__(self, request: CompletionRequest) -> tuple[str, dict | None]:
        body = {
            "model": request.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
        }
        if request.structured_output_schema is not None:
            body["response_format"] = {"type": "json_object"}
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise NetworkError(str(exc)) from None
        if response.status_code == 401:
            raise AuthError("authentication rejected (401)")
        if response.status_code == 429:
            raise RateLimitedError("rate limited (429)")
        if response.status_code >= 400:
            raise NetworkError(f"endpoint returned {response.status_code}: {response.text[:200]}")
        payload = response.json()
        text = payload["choices"][0]["message"]["content"]
        return text, payload.get("usage")


class CompletionGateway:
    """Mode-aware completion client; shareable across threads."""

    def __init__(
        self,
        mode: GatewayMode,
        *,
        transport: Transport | None = None,
        cassette_path: str | Path | None = None,
        tracing_enabled: bool = False,
        tracing_project: str = "SoccerRag",
        interaction_log_path: str | Path = "logs/interactions.jsonl",
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.mode = mode
        self.transport = transport
        self.cassette_path = Path(cassette_path) if cassette_path else None
        self.tracing_enabled = tracing_enabled
        self.tracing_project = tracing_project
        self.interaction_log_path = Path(interaction_log_path)
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self._cassette_index: dict[str, CompletionRecord] = {}
        if mode in (GatewayMode.RECORD, GatewayMode.REPLAY):
            if self.cassette_path is None:
                raise ValueError(f"{mode.value} mode needs a cassette path")
            self._load_cassette()
        if mode in (GatewayMode.LIVE, GatewayMode.RECORD) and self.transport is None:
            raise ValueError(f"{mode.value} mode needs a transport")

    @classmethod
    def from_config(cls, config: EngineConfig, transport: Transport | None = None) -> "CompletionGateway":
        if transport is None and config.gateway_mode in (GatewayMode.LIVE, GatewayMode.RECORD):
            transport = HttpChatTransport(config.openai_api_key)
        return cls(
            config.gateway_mode,
            transport=transport,
            cassette_path=config.cassette_path,
            tracing_enabled=config.tracing_enabled,
            tracing_project=config.tracing_project,
        )

    def _load_cassette(self) -> None:
        if not self.cassette_path.is_file():
            if self.mode is GatewayMode.REPLAY:
                raise ValueError(f"cassette file not found: {self.cassette_path}")
            return
        for line in self.cassette_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            record = CompletionRecord(
                fingerprint=entry["fingerprint"],
                response_text=entry["response_text"],
                timestamp=entry["timestamp"],
                token_usage=entry.get("token_usage"),
            )
            self._cassette_index[record.fingerprint] = record

    def _append_cassette(self, record: CompletionRecord, request: CompletionRequest) -> None:
        self.cassette_path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "fingerprint": record.fingerprint,
            "response_text": record.response_text,
            "timestamp": record.timestamp,
            "token_usage": record.token_usage,
            "request": {
                "model": request.model_name,
                "messages": [{"role": m.role, "content": m.content} for m in request.messages],
                "schema": request.structured_output_schema,
            },
        }
        with open(self.cassette_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def _log_interaction(self, request: CompletionRequest, fingerprint: str,
                         response_text: str, token_usage: dict | None) -> None:
        if not self.tracing_enabled:
            return
        entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "project": self.tracing_project,
            "mode": self.mode.value,
            "fingerprint": fingerprint,
            "model": request.model_name,
            "message_count": len(request.messages),
            "response_chars": len(response_text),
            "token_usage": token_usage,
        }
        self.interaction_log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.interaction_log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def _call_live(self, request: CompletionRequest) -> tuple[str, dict | None]:
        for attempt in range(MAX_ATTEMPTS):
            try:
                return self.transport(request)
            except RateLimitedError:
                if attempt == MAX_ATTEMPTS - 1:
                    raise
                self._sleeper(min(BACKOFF_CAP_SECONDS, BACKOFF_BASE_SECONDS * (2 ** attempt)))
        raise RateLimitedError("retry budget exhausted")  # pragma: no cover

    def complete(self, request: CompletionRequest) -> str:
        fingerprint = request.fingerprint()

        if self.mode is GatewayMode.REPLAY:
            record = self._cassette_index.get(fingerprint)
            if record is None:
                last_user = next(
                    (m.content for m in reversed(request.messages) if m.role == "user"), ""
                )
                raise ReplayMissError(fingerprint, f" (last user message: {last_user[:80]!r})")
            with self._lock:
                self._log_interaction(request, fingerprint, record.response_text, record.token_usage)
            return record.response_text

        if self.mode is GatewayMode.RECORD:
            with self._lock:
                cached = self._cassette_index.get(fingerprint)
            if cached is not None:
                # fingerprint dedupe: identical requests reuse the recorded reply
                with self._lock:
                    self._log_interaction(request, fingerprint, cached.response_text, cached.token_usage)
                return cached.response_text

        text, usage = self._call_live(request)
        record = CompletionRecord(
            fingerprint=fingerprint,
            response_text=text,
            timestamp=datetime.now(timezone.utc).isoformat(),
            token_usage=usage,
        )
        with self._lock:
            if self.mode is GatewayMode.RECORD and fingerprint not in self._cassette_index:
                self._cassette_index[fingerprint] = record
                self._append_cassette(record, request)
            self._log_interaction(request, fingerprint, text, usage)
        return text
