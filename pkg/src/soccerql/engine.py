"""Assemble config, database, gateway and orchestrator into one engine."""

from __future__ import annotations

from dataclasses import dataclass

from .config import EngineConfig
from .database import DatabaseHandle
from .gateway import CompletionGateway, Transport
from .session import Orchestrator


@dataclass
class Engine:
    config: EngineConfig
    handle: DatabaseHandle
    gateway: CompletionGateway
    orchestrator: Orchestrator

    @classmethod
    def from_config(
        cls,
        config: EngineConfig,
        *,
        transport: Transport | None = None,
        validator_enabled: bool = True,
    ) -> "Engine":
        handle = DatabaseHandle(config.database_url)
        gateway = CompletionGateway.from_config(config, transport=transport)
        orchestrator = Orchestrator(handle, gateway, config, validator_enabled=validator_enabled)
        return cls(config=config, handle=handle, gateway=gateway, orchestrator=orchestrator)
