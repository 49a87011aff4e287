"""Runtime configuration loaded from environment variables and an optional .env file."""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

DEFAULT_MODEL = "gpt-3.5-turbo-0125"
DEFAULT_DATABASE_URL = "./data/games.db"
DEFAULT_TRACING_PROJECT = "SoccerRag"
DEFAULT_FEW_SHOT = 3
DEFAULT_CASSETTE_PATH = "fixtures/cassettes/default.jsonl"
DEFAULT_INTERACTION_LOG = "logs/interactions.jsonl"


class ConfigError(Exception):
    """A configuration value is missing or unusable."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(message)


class MissingKeyError(ConfigError):
    def __init__(self, key: str):
        super().__init__(key, f"missing mandatory configuration key: {key}")


class InvalidValueError(ConfigError):
    def __init__(self, key: str, value: str, expected: str):
        self.value = value
        super().__init__(key, f"invalid value for {key}: {value!r} (expected {expected})")


class GatewayMode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


@dataclass(frozen=True)
class EngineConfig:
    """Immutable runtime settings; safe to share across threads."""

    openai_api_key: str
    model_name: str = DEFAULT_MODEL
    database_url: str = DEFAULT_DATABASE_URL
    tracing_enabled: bool = False
    tracing_api_key: str | None = None
    tracing_project: str = DEFAULT_TRACING_PROJECT
    few_shot: int = DEFAULT_FEW_SHOT
    gateway_mode: GatewayMode = GatewayMode.LIVE
    cassette_path: str = DEFAULT_CASSETTE_PATH

    def to_env(self) -> dict[str, str]:
        """Serialize back to the env-key mapping accepted by load_config."""
        env = {
            "OPENAI_API_KEY": self.openai_api_key,
            "OPENAI_MODEL": self.model_name,
            "DATABASE_URL": self.database_url,
            "LANGSMITH": "True" if self.tracing_enabled else "False",
            "LANGSMITH_PROJECT": self.tracing_project,
            "FEW_SHOT": str(self.few_shot),
            "GATEWAY_MODE": self.gateway_mode.value,
            "GATEWAY_CASSETTE": self.cassette_path,
        }
        if self.tracing_api_key is not None:
            env["LANGSMITH_API_KEY"] = self.tracing_api_key
        return env


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise InvalidValueError(key, raw, "True or False")


def _parse_positive_int(key: str, raw: str) -> int:
    try:
        value = int(raw.strip())
    except ValueError:
        raise InvalidValueError(key, raw, "a positive integer") from None
    if value < 1:
        raise InvalidValueError(key, raw, "a positive integer")
    return value


def load_config(env: Mapping[str, str]) -> EngineConfig:
    """Build an EngineConfig from an env-style mapping.

    Absent optional keys take their documented defaults; unknown keys are
    ignored. Raises MissingKeyError/InvalidValueError on violations.
    """
    mode_raw = env.get("GATEWAY_MODE", GatewayMode.LIVE.value)
    try:
        mode = GatewayMode(mode_raw.strip().lower())
    except ValueError:
        raise InvalidValueError("GATEWAY_MODE", mode_raw, "live, record or replay") from None

    api_key = env.get("OPENAI_API_KEY", "")
    if mode in (GatewayMode.LIVE, GatewayMode.RECORD) and not api_key:
        raise MissingKeyError("OPENAI_API_KEY")

    tracing_enabled = _parse_bool("LANGSMITH", env.get("LANGSMITH", "False"))
    tracing_api_key = env.get("LANGSMITH_API_KEY")
    if tracing_enabled and not tracing_api_key:
        raise MissingKeyError("LANGSMITH_API_KEY")

    return EngineConfig(
        openai_api_key=api_key,
        model_name=env.get("OPENAI_MODEL", DEFAULT_MODEL),
        database_url=env.get("DATABASE_URL", DEFAULT_DATABASE_URL),
        tracing_enabled=tracing_enabled,
        tracing_api_key=tracing_api_key,
        tracing_project=env.get("LANGSMITH_PROJECT", DEFAULT_TRACING_PROJECT),
        few_shot=_parse_positive_int("FEW_SHOT", env.get("FEW_SHOT", str(DEFAULT_FEW_SHOT))),
        gateway_mode=mode,
        cassette_path=env.get("GATEWAY_CASSETTE", DEFAULT_CASSETTE_PATH),
    )


def read_env_file(path: str | Path) -> dict[str, str]:
    """Parse a minimal KEY=VALUE .env file; '#' starts a comment line."""
    values: dict[str, str] = {}
    path = Path(path)
    if not path.is_file():
        return values
    for line in path.read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip().strip('"').strip("'")
    return values


def load_config_from_environment(cwd: str | Path = ".") -> EngineConfig:
    """Merge .env (if present) with the process environment; real env wins."""
    merged = read_env_file(Path(cwd) / ".env")
    merged.update(os.environ)
    return load_config(merged)
