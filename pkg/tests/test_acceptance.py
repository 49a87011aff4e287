"""Acceptance gate: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL lines.
Everything runs offline against the frozen cassettes.
"""

import os
import random
import socket
import string
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

import corpus
import oracles
from conftest import CASSETTE_PATH, FIXTURE_SEED, REPO_ROOT
from soccerql.agent import AgentError, CleanedQuery, answer, guard_sql
from soccerql.config import InvalidValueError, MissingKeyError, load_config
from soccerql.database import build_database
from soccerql.dataset import generate_fixture
from soccerql.extractor import ExtractedProperty
from soccerql.session import (
    Failure,
    FinalAnswer,
    NeedsClarification,
    Orchestrator,
    OutOfTurnError,
    SessionState,
)
from soccerql.validator import (
    CustomString,
    InvalidChoiceError,
    PassThrough,
    Resolved,
    SelectedCandidate,
    normalize,
    score_candidates,
    similarity,
    validate_property,
)

Q = corpus.DEMO_QUERY_BY_ID


@contextmanager
def criterion(name: str):
    started = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name} ({time.monotonic() - started:.1f}s)")


# --- 1. config fidelity -------------------------------------------------------


def test_criterion_config_fidelity():
    with criterion("config fidelity: documented defaults and mandatory keys"):
        started = time.monotonic()
        defaults = load_config({"OPENAI_API_KEY": "k"})
        expected = {
            "model_name": "gpt-3.5-turbo-0125",
            "database_url": "./data/games.db",
            "tracing_enabled": False,
            "tracing_api_key": None,
            "tracing_project": "SoccerRag",
            "few_shot": 3,
        }
        for field_name, value in expected.items():
            assert getattr(defaults, field_name) == value, field_name

        with pytest.raises(MissingKeyError) as missing_api:
            load_config({})
        assert missing_api.value.key == "OPENAI_API_KEY"
        with pytest.raises(MissingKeyError) as missing_tracing:
            load_config({"OPENAI_API_KEY": "k", "LANGSMITH": "True"})
        assert missing_tracing.value.key == "LANGSMITH_API_KEY"
        with pytest.raises(InvalidValueError):
            load_config({"OPENAI_API_KEY": "k", "FEW_SHOT": "many"})
        assert time.monotonic() - started < 1.0


# --- 2. oracle equivalence -----------------------------------------------------


def test_criterion_oracle_equivalence(tmp_path):
    with criterion("oracle equivalence: SQL vs brute-force aggregation on 100 bundles"):
        started = time.monotonic()
        db_path = tmp_path / "oracle.db"
        for i in range(100):
            rng = random.Random(10_000 + i)
            bundle = generate_fixture(
                seed=20_000 + i,
                sizes={
                    "leagues": rng.randint(2, 3),
                    "teams": rng.randint(6, 10),
                    "players": rng.randint(4, 20),
                    "games": rng.randint(8, 50),
                },
            )
            handle = build_database(bundle, db_path)

            def cell(sql: str):
                return handle.execute_readonly(sql, row_cap=5).rows[0][0]

            team = rng.choice(bundle.teams).team_key
            player = rng.choice(bundle.players).player_key
            season = rng.choice(bundle.games).season
            game = rng.choice(bundle.games).game_key
            league = rng.choice(bundle.leagues).league_key
            label = rng.choice(bundle.events).label if bundle.events else "Goal"

            checks = [
                ("SELECT COUNT(*) FROM games", len(bundle.games)),
                (
                    f"SELECT COUNT(*) FROM games WHERE season = '{season}'",
                    oracles.games_in_season(bundle, season),
                ),
                (
                    f"SELECT COUNT(*) FROM games WHERE home_team_key = '{team}' "
                    f"OR away_team_key = '{team}'",
                    oracles.games_for_team(bundle, team),
                ),
                (
                    f"SELECT COUNT(*) FROM events WHERE label = '{label}'",
                    oracles.count_events(bundle, label=label),
                ),
                (
                    f"SELECT COUNT(*) FROM events WHERE label = 'Yellow card' "
                    f"AND player_key = '{player}'",
                    oracles.count_events(bundle, label="Yellow card", player_key=player),
                ),
                (
                    "SELECT COUNT(*) FROM events e JOIN games g ON g.game_key = e.game_key "
                    f"WHERE e.player_key = '{player}' AND g.season = '{season}'",
                    oracles.count_events(bundle, player_key=player, season=season),
                ),
                (
                    f"SELECT COUNT(*) FROM events WHERE team_key = '{team}'",
                    oracles.count_events(bundle, team_key=team),
                ),
                (
                    "SELECT COALESCE(SUM(home_score + away_score), 0) FROM games "
                    f"WHERE season = '{season}'",
                    oracles.goals_scored_in_season(bundle, season),
                ),
                (
                    f"SELECT COUNT(*) FROM captions WHERE game_key = '{game}'",
                    oracles.captions_for_game(bundle, game),
                ),
                (
                    f"SELECT COUNT(*) FROM games WHERE league_key = '{league}' "
                    f"AND season = '{season}'",
                    oracles.games_in_league(bundle, league, season),
                ),
            ]
            for sql, expected in checks:
                assert cell(sql) == expected, (i, sql)
        assert time.monotonic() - started < 60.0


# --- 3. validator properties ----------------------------------------------------


def test_criterion_validator_properties(db_handle):
    with criterion("validator properties: metric laws, oracle ranking, named lookups"):
        started = time.monotonic()
        rng = random.Random(555)
        alphabet = string.ascii_lowercase + "  "

        def random_text(max_len: int) -> str:
            return "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, max_len))).strip()

        for _ in range(10_000):
            a, b = random_text(14), random_text(14)
            s = similarity(a, b)
            assert s == similarity(b, a)
            assert 0.0 <= s <= 1.0
            assert similarity(a, a) == 1.0
            assert (s == 1.0) == (a == b)

        for _ in range(1_000):
            count = rng.randrange(1, 51)
            candidates = [
                (f"k{j}", random_text(16) or "x") for j in range(count)
            ]
            raw = random_text(12) or "q"
            ranked = score_candidates(raw, candidates)
            expected = sorted(
                [
                    (name, oracles.reference_similarity(normalize(raw), normalize(name)))
                    for _pk, name in candidates
                ],
                key=lambda item: (-item[1], item[0]),
            )
            assert [(c.canonical_name, c.score) for c in ranked] == expected

        from soccerql.database import EntityKind

        players = db_handle.list_candidates(EntityKind.PLAYER)
        teams = db_handle.list_candidates(EntityKind.TEAM)
        messi = validate_property(ExtractedProperty(EntityKind.PLAYER, "messi"), players, 3)
        assert isinstance(messi, Resolved) and messi.canonical_name == "Lionel Messi"
        manu = validate_property(ExtractedProperty(EntityKind.TEAM, "ManU"), teams, 3)
        assert isinstance(manu, Resolved) and manu.canonical_name == "Manchester United"
        lionel = validate_property(ExtractedProperty(EntityKind.PLAYER, "Lionel"), players, 3)
        assert not isinstance(lionel, Resolved)
        assert len(lionel.candidates) == 2
        assert time.monotonic() - started < 30.0


# --- 4. SQL guard ---------------------------------------------------------------


ADVERSARIAL_STATEMENTS = [
    "DROP TABLE games",
    "DROP TABLE IF EXISTS games",
    "DELETE FROM games",
    "DELETE FROM games WHERE 1 = 1",
    "INSERT INTO games VALUES (1)",
    "INSERT INTO games SELECT * FROM games",
    "UPDATE games SET venue = 'x'",
    "UPDATE games SET home_score = 0 WHERE 1 = 1",
    "REPLACE INTO games VALUES (1)",
    "ALTER TABLE games ADD COLUMN hacked TEXT",
    "ALTER TABLE games RENAME TO pwned",
    "CREATE TABLE pwned (x)",
    "CREATE INDEX idx ON games(venue)",
    "CREATE TRIGGER t AFTER INSERT ON games BEGIN DELETE FROM games; END",
    "CREATE VIEW v AS SELECT * FROM games",
    "TRUNCATE TABLE games",
    "PRAGMA journal_mode = DELETE",
    "PRAGMA writable_schema = ON",
    "pragma foreign_keys = off",
    "ATTACH DATABASE '/tmp/x.db' AS other",
    "attach ':memory:' as mem",
    "DETACH DATABASE other",
    "VACUUM",
    "REINDEX",
    "ANALYZE",
    "BEGIN TRANSACTION",
    "BEGIN; DROP TABLE games; COMMIT",
    "COMMIT",
    "ROLLBACK",
    "SAVEPOINT sp1",
    "RELEASE sp1",
    "SELECT 1; DELETE FROM games",
    "SELECT 1; SELECT 2",
    "SELECT * FROM games; DROP TABLE games",
    "SELECT * FROM games;DROP TABLE games",
    "SELECT * FROM games ;\nDROP TABLE games",
    "SELECT 1;;DELETE FROM games",
    "WITH t AS (SELECT 1) DELETE FROM games",
    "WITH t AS (SELECT 1) INSERT INTO games SELECT * FROM t",
    "WITH t AS (SELECT 1) UPDATE games SET venue = 'x'",
    "```sql\nDROP TABLE games\n```",
    "```\nDELETE FROM games\n```",
    "```sql\nSELECT 1; DELETE FROM games\n```",
    "  \n\t ",
    "",
    "EXPLAIN QUERY PLAN SELECT * FROM games",
    "DELETE FROM games -- SELECT 1",
    "/* SELECT */ DROP TABLE games",
    "UPDATE games SET venue = 'SELECT safe'",
    "INSERT INTO games(venue) VALUES ('SELECT 1')",
    "SELECT 1; ATTACH DATABASE 'x' AS y",
]

VALID_STATEMENTS = [
    "SELECT * FROM games",
    "SELECT COUNT(*) FROM games",
    "select name from teams",
    "SELECT DISTINCT season FROM games ORDER BY season",
    "SELECT * FROM games WHERE season = '2015-2016'",
    "SELECT home_team_key, COUNT(*) FROM games GROUP BY home_team_key",
    "SELECT * FROM games LIMIT 10",
    "SELECT * FROM games ORDER BY date DESC LIMIT 5",
    "WITH t AS (SELECT * FROM games) SELECT COUNT(*) FROM t",
    "WITH RECURSIVE c(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM c WHERE n < 5) SELECT n FROM c",
    "SELECT 'DROP TABLE games' AS text_value",
    "SELECT \"delete\" FROM teams",
    "SELECT * FROM pragma_table_info('games')",
    "-- count the games\nSELECT COUNT(*) FROM games",
    "SELECT /* inline comment */ COUNT(*) FROM events",
    "SELECT g.venue, SUM(g.attendance) FROM games g GROUP BY g.venue HAVING SUM(g.attendance) > 0",
    "SELECT name FROM teams UNION SELECT full_name FROM players",
    "SELECT e.label, COUNT(*) FROM events e JOIN games g ON g.game_key = e.game_key GROUP BY e.label",
    "```sql\nSELECT name FROM teams\n```",
    "SELECT CASE WHEN home_score > away_score THEN 'home' ELSE 'other' END FROM games",
]


def test_criterion_sql_guard(db_handle, replay_gateway):
    with criterion("sql guard: zero false accepts/rejects, checksum stable under fuzz"):
        assert len(ADVERSARIAL_STATEMENTS) >= 50
        assert len(VALID_STATEMENTS) >= 20
        false_accepts = [s for s in ADVERSARIAL_STATEMENTS if guard_sql(s, 100).allowed]
        assert false_accepts == []
        false_rejects = [
            (s, guard_sql(s, 100).reason) for s in VALID_STATEMENTS if not guard_sql(s, 100).allowed
        ]
        assert false_rejects == []

        before = db_handle.content_fingerprint()
        schema_text = db_handle.schema_description()
        for case_id, _first, _second in corpus.ADVERSARIAL_CASES:
            cq = CleanedQuery(corpus.adversarial_question(case_id), (), schema_text)
            with pytest.raises(AgentError):
                answer(replay_gateway, db_handle, cq, model_name="gpt-3.5-turbo-0125")
        assert db_handle.content_fingerprint() == before


# --- 5. end-to-end replay -------------------------------------------------------


E2E_CHOICES = {
    "ui4_lionel_yellow": [SelectedCandidate(1)],          # Lionel Messi
    "cli2_lionel_henry": [SelectedCandidate(1), SelectedCandidate(1)],  # Messi, Thierry Henry
}


def _markdown_body_rows(answer_text: str, header_token: str) -> list[str]:
    return [
        line
        for line in answer_text.splitlines()
        if line.startswith("|") and "---" not in line and header_token not in line
    ]


def test_criterion_end_to_end_replay(orchestrator, bundle, monkeypatch):
    with criterion("end-to-end replay: documented walkthrough queries, offline"):
        started = time.monotonic()

        def no_sockets(*args, **kwargs):
            raise AssertionError("network socket opened during replay")

        monkeypatch.setattr(socket, "socket", no_sockets)

        results = {}
        for demo in corpus.DEMO_QUERIES:
            session = orchestrator.create_session(allows_custom=True)
            result = orchestrator.submit_query(session, demo.question)
            rounds = 0
            for choice in E2E_CHOICES.get(demo.query_id, []):
                assert isinstance(result, NeedsClarification), demo.query_id
                result = orchestrator.resolve_clarification(session, choice)
                rounds += 1
            assert isinstance(result, FinalAnswer), demo.query_id
            assert rounds == demo.clarifications, demo.query_id
            results[demo.query_id] = result.bundle

        # numeric answers must agree with brute-force aggregation over the bundle
        advantage = oracles.home_advantage(bundle, "t_realmadrid", "2015-2016")
        assert str(advantage) in results["ui1_home_advantage"].rendered_answer

        messi_yellows = oracles.count_events(
            bundle, label="Yellow card", player_key="p_messi",
            season="2015-2016", home_only=True,
        )
        assert str(messi_yellows) in results["ui2_messi_yellow"].rendered_answer

        manu_answer = results["ui3_manu_table"].rendered_answer
        assert "| HomeTeam | AwayTeam | Score | Venue | Attendance | Date |" in manu_answer
        assert len(_markdown_body_rows(manu_answer, "HomeTeam")) == oracles.games_for_team(
            bundle, "t_manutd", "2016-2017"
        )

        lionel_answer = results["ui4_lionel_yellow"].rendered_answer
        assert "| GameId | HomeTeam | AwayTeam | Score | Date |" in lionel_answer
        assert len(_markdown_body_rows(lionel_answer, "GameId")) == len(
            oracles.games_with_yellow_card_for_player(bundle, "p_messi")
        )

        carded = set()
        for game in bundle.games:
            if {game.home_team_key, game.away_team_key} == {"t_chelsea", "t_burnley"} \
                    and game.season == "2014-2015":
                carded |= oracles.yellow_carded_player_names(bundle, game.game_key)
        assert carded
        for name in carded:
            assert name in results["cli1_chelsea_burnley"].rendered_answer

        teams = oracles.teams_played_for(bundle, "p_messi") | oracles.teams_played_for(
            bundle, "p_henry"
        )
        for team in teams:
            assert team in results["cli2_lionel_henry"].rendered_answer

        goals = oracles.goals_for_team_in_season(bundle, "t_arsenal", "2015-2016")
        assert str(goals) in results["quickstart_arsenal"].rendered_answer
        assert time.monotonic() - started < 30.0


# --- 6. state machine ------------------------------------------------------------


def test_criterion_state_machine(orchestrator):
    with criterion("state machine: 10,000 randomized calls, no undefined transition"):
        rng = random.Random(777)
        pool = [q.question for q in corpus.DEMO_QUERIES] + [
            m.question for m in corpus.MISSPELLED_QUERIES
        ]
        session = orchestrator.create_session(allows_custom=False)
        expected_state = "idle"
        pending_options = 0

        for step in range(10_000):
            op = rng.choices(
                ["submit", "submit_blank", "resolve_valid", "resolve_pass",
                 "resolve_invalid", "resolve_custom"],
                weights=[30, 15, 20, 10, 15, 10],
            )[0]

            if op in ("submit", "submit_blank"):
                text = "" if op == "submit_blank" else rng.choice(pool)
                if expected_state == "awaiting":
                    with pytest.raises(OutOfTurnError):
                        orchestrator.submit_query(session, text)
                else:
                    result = orchestrator.submit_query(session, text)
                    if isinstance(result, NeedsClarification):
                        expected_state = "awaiting"
                        pending_options = len(result.candidates)
                    else:
                        assert isinstance(result, (FinalAnswer, Failure))
                        expected_state = "idle"
            else:
                if op == "resolve_valid":
                    choice = SelectedCandidate(rng.randrange(pending_options or 1))
                elif op == "resolve_pass":
                    choice = PassThrough()
                elif op == "resolve_invalid":
                    choice = SelectedCandidate(99)
                else:
                    choice = CustomString("anything")
                if expected_state != "awaiting":
                    with pytest.raises(OutOfTurnError):
                        orchestrator.resolve_clarification(session, choice)
                elif op in ("resolve_invalid", "resolve_custom"):
                    with pytest.raises(InvalidChoiceError):
                        orchestrator.resolve_clarification(session, choice)
                else:
                    result = orchestrator.resolve_clarification(session, choice)
                    if isinstance(result, NeedsClarification):
                        expected_state = "awaiting"
                        pending_options = len(result.candidates)
                    else:
                        assert isinstance(result, (FinalAnswer, Failure))
                        expected_state = "idle"

            actual = session.state
            assert actual is (
                SessionState.AWAITING_CLARIFICATION
                if expected_state == "awaiting"
                else SessionState.IDLE
            ), f"step {step}: model={expected_state} actual={actual}"
            assert (session.pending is not None) == (expected_state == "awaiting")


# --- 7. hit-rate direction --------------------------------------------------------


def _resolution_hits(orch: Orchestrator) -> int:
    hits = 0
    for miss in corpus.MISSPELLED_QUERIES:
        session = orch.create_session()
        orch.submit_query(session, miss.question)
        for entry in session.history:
            if entry.kind != "step" or not entry.data or "properties" not in entry.data:
                continue
            for record in entry.data["properties"]:
                if (
                    record.get("kind") == miss.target_kind
                    and record.get("raw") == miss.target_raw
                    and record.get("status") == "resolved"
                    and record.get("primary_key") == miss.expected_pk
                ):
                    hits += 1
    return hits


def test_criterion_hit_rate_direction(db_handle, replay_gateway, replay_config):
    with criterion("hit-rate direction: validator on vs bypassed over misspelled corpus"):
        enabled = Orchestrator(db_handle, replay_gateway, replay_config, validator_enabled=True)
        bypassed = Orchestrator(db_handle, replay_gateway, replay_config, validator_enabled=False)
        enabled_hits = _resolution_hits(enabled)
        bypassed_hits = _resolution_hits(bypassed)
        print(f"  resolved with validator: {enabled_hits}/10, bypassed: {bypassed_hits}/10")
        assert enabled_hits > bypassed_hits
        assert enabled_hits >= 6
        assert bypassed_hits <= 2


# --- 8. CLI golden transcripts ------------------------------------------------------


def test_criterion_cli_golden_transcripts(tmp_path):
    with criterion("cli golden transcripts: byte-identical replay runs"):
        env = dict(os.environ)
        env.update(
            GATEWAY_MODE="replay",
            GATEWAY_CASSETTE=str(CASSETTE_PATH),
            DATABASE_URL=str(tmp_path / "games.db"),
            PYTHONPATH=str(REPO_ROOT / "src"),
        )
        env.pop("OPENAI_API_KEY", None)

        def run(args, stdin=""):
            return subprocess.run(
                [sys.executable, "-m", "soccerql", *args],
                input=stdin.encode(),
                capture_output=True,
                env=env,
                cwd=REPO_ROOT,
            )

        setup = run(["setup", "--fixture", str(FIXTURE_SEED)])
        assert setup.returncode == 0, setup.stderr

        golden_dir = Path(__file__).parent / "golden"
        one_step = run(
            [
                "query",
                "-q",
                "In the game between Chelsea and Burnley in the 2014-15 season, "
                "did anyone get a yellow card? If yes, who.",
            ]
        )
        assert one_step.returncode == 0, one_step.stderr
        assert one_step.stdout == (golden_dir / "cli_one_step.txt").read_bytes()

        two_step = run(
            [
                "query",
                "-q",
                "Is Lionel or Henry in the database \\n What teams have they played for?",
            ],
            stdin="2\nThierry Henry\n",
        )
        assert two_step.returncode == 0, two_step.stderr
        assert two_step.stdout == (golden_dir / "cli_two_step.txt").read_bytes()
