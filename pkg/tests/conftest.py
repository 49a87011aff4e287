import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from soccerql.config import GatewayMode, load_config
from soccerql.database import build_database
from soccerql.dataset import generate_fixture
from soccerql.gateway import CompletionGateway
from soccerql.session import Orchestrator

REPO_ROOT = Path(__file__).parent.parent
CASSETTE_PATH = REPO_ROOT / "fixtures" / "cassettes" / "default.jsonl"
FIXTURE_SEED = 7


@pytest.fixture(scope="session")
def bundle():
    return generate_fixture(seed=FIXTURE_SEED)


@pytest.fixture(scope="session")
def db_handle(bundle, tmp_path_factory):
    path = tmp_path_factory.mktemp("db") / "games.db"
    return build_database(bundle, path)


@pytest.fixture(scope="session")
def replay_config():
    return load_config({"GATEWAY_MODE": "replay", "GATEWAY_CASSETTE": str(CASSETTE_PATH)})


@pytest.fixture()
def replay_gateway(replay_config):
    return CompletionGateway.from_config(replay_config)


@pytest.fixture()
def orchestrator(db_handle, replay_gateway, replay_config):
    return Orchestrator(db_handle, replay_gateway, replay_config)
