#!/usr/bin/env python3
"""Record the completion cassettes and CLI golden transcripts.

Runs every documented flow against a deterministic scripted model through the
gateway's record mode, freezing fingerprint-keyed replies into
fixtures/cassettes/default.jsonl. The test suite then replays those files with
the network disabled. Rerun after changing prompts, the fixture generator, or
the corpus.
"""

from __future__ import annotations

import json
import os
import re
import subprocess
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))  # corpus.py
sys.path.insert(0, str(REPO_ROOT / "src"))

import corpus
from soccerql.agent import AgentError, CleanedQuery, answer
from soccerql.config import GatewayMode, load_config
from soccerql.database import build_database
from soccerql.dataset import generate_fixture
from soccerql.extractor import extract
from soccerql.gateway import CompletionGateway, CompletionRequest
from soccerql.session import FinalAnswer, NeedsClarification, Orchestrator
from soccerql.validator import CustomString, PassThrough, SelectedCandidate

CASSETTE_PATH = REPO_ROOT / "fixtures" / "cassettes" / "default.jsonl"
GOLDEN_DIR = REPO_ROOT / "tests" / "golden"
FIXTURE_SEED = 7
MODEL_NAME = "gpt-3.5-turbo-0125"

_ENTITY_RE = re.compile(
    r"- kind=(\w+) raw='([^']*)'(?: -> canonical='([^']*)' key='([^']*)')?"
)


def parse_user_block(text: str) -> tuple[str, list[dict]]:
    """Split the SQL-agent user message into question text and entity dicts."""
    question, _, tail = text.partition("\n\nValidated entities:\n")
    question = question.removeprefix("Question:\n")
    entities = []
    for kind, raw, canonical, pk in _ENTITY_RE.findall(tail):
        entities.append(
            {"kind": kind, "raw": raw, "canonical": canonical or None, "pk": pk or None}
        )
    return question, entities


def ent(entities: list[dict], kind: str, index: int = 0) -> dict | None:
    found = [e for e in entities if e["kind"] == kind]
    return found[index] if index < len(found) else None


def season_of(entities: list[dict]) -> str | None:
    e = ent(entities, "season")
    return e["pk"] if e and e["pk"] else None


def sql_quote(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def team_filter(entity: dict, alias: str = "g") -> str:
    """Key-based filter when validated, LIKE fallback when passed through."""
    if entity["pk"]:
        key = sql_quote(entity["pk"])
        return f"({alias}.home_team_key = {key} OR {alias}.away_team_key = {key})"
    pattern = sql_quote(f"%{entity['raw'].lower()}%")
    return (
        f"({alias}.home_team_key IN (SELECT team_key FROM teams WHERE LOWER(name) LIKE {pattern})"
        f" OR {alias}.away_team_key IN (SELECT team_key FROM teams WHERE LOWER(name) LIKE {pattern}))"
    )


def player_filter(entity: dict, column: str = "e.player_key") -> str:
    if entity["pk"]:
        return f"{column} = {sql_quote(entity['pk'])}"
    pattern = sql_quote(f"%{entity['raw'].lower()}%")
    return f"{column} IN (SELECT player_key FROM players WHERE LOWER(full_name) LIKE {pattern})"


# --- per-question SQL, written the way the recorded model answered -----------


def sql_home_advantage(entities):
    team = ent(entities, "team")["pk"]
    season = season_of(entities)
    return (
        "SELECT (SELECT COALESCE(SUM(home_score), 0) FROM games "
        f"WHERE home_team_key = {sql_quote(team)} AND season = {sql_quote(season)})\n"
        "     - (SELECT COALESCE(SUM(away_score), 0) FROM games "
        f"WHERE away_team_key = {sql_quote(team)} AND season = {sql_quote(season)}) AS home_advantage"
    )


def sql_messi_yellow(entities):
    player = ent(entities, "player")
    season = season_of(entities)
    label = ent(entities, "event_label")["pk"]
    return (
        "SELECT COUNT(*) AS yellow_cards\n"
        "FROM events e JOIN games g ON g.game_key = e.game_key\n"
        f"WHERE {player_filter(player)} AND e.label = {sql_quote(label)}\n"
        f"  AND g.season = {sql_quote(season)} AND e.team_key = g.home_team_key"
    )


def sql_manu_table(entities):
    team = ent(entities, "team")
    season = season_of(entities)
    return (
        "SELECT ht.name AS HomeTeam, at.name AS AwayTeam,\n"
        "       g.home_score || '-' || g.away_score AS Score,\n"
        "       g.venue AS Venue, g.attendance AS Attendance, g.date AS Date\n"
        "FROM games g\n"
        "JOIN teams ht ON ht.team_key = g.home_team_key\n"
        "JOIN teams at ON at.team_key = g.away_team_key\n"
        f"WHERE {team_filter(team)} AND g.season = {sql_quote(season)}\n"
        "ORDER BY g.date"
    )


def sql_lionel_yellow_games(entities):
    player = ent(entities, "player")
    label = ent(entities, "event_label")["pk"]
    return (
        "SELECT DISTINCT g.game_key AS GameId, ht.name AS HomeTeam, at.name AS AwayTeam,\n"
        "       g.home_score || '-' || g.away_score AS Score, g.date AS Date\n"
        "FROM events e\n"
        "JOIN games g ON g.game_key = e.game_key\n"
        "JOIN teams ht ON ht.team_key = g.home_team_key\n"
        "JOIN teams at ON at.team_key = g.away_team_key\n"
        f"WHERE {player_filter(player)} AND e.label = {sql_quote(label)}\n"
        "ORDER BY g.date"
    )


def sql_chelsea_burnley(entities):
    first = ent(entities, "team", 0)["pk"]
    second = ent(entities, "team", 1)["pk"]
    season = season_of(entities)
    label = ent(entities, "event_label")["pk"]
    return (
        "SELECT DISTINCT p.full_name AS player\n"
        "FROM events e\n"
        "JOIN games g ON g.game_key = e.game_key\n"
        "JOIN players p ON p.player_key = e.player_key\n"
        f"WHERE e.label = {sql_quote(label)} AND g.season = {sql_quote(season)}\n"
        f"  AND ((g.home_team_key = {sql_quote(first)} AND g.away_team_key = {sql_quote(second)})\n"
        f"    OR (g.home_team_key = {sql_quote(second)} AND g.away_team_key = {sql_quote(first)}))\n"
        "ORDER BY p.full_name"
    )


def sql_lionel_henry_teams(entities):
    filters = " OR ".join(player_filter(e, "a.player_key") for e in entities if e["kind"] == "player")
    return (
        "SELECT DISTINCT p.full_name AS player, t.name AS team\n"
        "FROM player_affiliations a\n"
        "JOIN players p ON p.player_key = a.player_key\n"
        "JOIN teams t ON t.team_key = a.team_key\n"
        f"WHERE {filters}\n"
        "ORDER BY p.full_name, t.name"
    )


def sql_arsenal_goals(entities):
    team = ent(entities, "team")["pk"]
    season = season_of(entities)
    return (
        "SELECT (SELECT COALESCE(SUM(home_score), 0) FROM games "
        f"WHERE home_team_key = {sql_quote(team)} AND season = {sql_quote(season)})\n"
        "     + (SELECT COALESCE(SUM(away_score), 0) FROM games "
        f"WHERE away_team_key = {sql_quote(team)} AND season = {sql_quote(season)}) AS goals"
    )


def sql_generic(entities):
    """Count-style statement for the misspelling corpus."""
    team = ent(entities, "team")
    player = ent(entities, "player")
    season = season_of(entities)
    venue = ent(entities, "venue")
    label = ent(entities, "event_label")
    if player is not None:
        where = [player_filter(player)]
        if label is not None and label["pk"]:
            where.append(f"e.label = {sql_quote(label['pk'])}")
        return "SELECT COUNT(*) AS matches FROM events e WHERE " + " AND ".join(where)
    where = [team_filter(ent_) for ent_ in [team] if ent_ is not None]
    if season:
        where.append(f"g.season = {sql_quote(season)}")
    if venue is not None and venue["pk"]:
        where.append(f"g.venue = {sql_quote(venue['pk'])}")
    clause = " AND ".join(where) if where else "1 = 1"
    return f"SELECT COUNT(*) AS matches FROM games g WHERE {clause}"


Q = corpus.DEMO_QUERY_BY_ID
SQL_BUILDERS = {
    Q["ui1_home_advantage"].question: sql_home_advantage,
    Q["ui2_messi_yellow"].question: sql_messi_yellow,
    Q["ui3_manu_table"].question: sql_manu_table,
    Q["ui4_lionel_yellow"].question: sql_lionel_yellow_games,
    Q["cli1_chelsea_burnley"].question: sql_chelsea_burnley,
    Q["cli2_lionel_henry"].question: sql_lionel_henry_teams,
    Q["quickstart_arsenal"].question: sql_arsenal_goals,
}
for m in corpus.MISSPELLED_QUERIES:
    SQL_BUILDERS[m.question] = sql_generic


def markdown_table(columns, rows) -> str:
    header = "| " + " | ".join(str(c) for c in columns) + " |"
    separator = "| " + " | ".join("---" for _ in columns) + " |"
    body = ["| " + " | ".join(str(v) for v in row) + " |" for row in rows]
    return "\n".join([header, separator] + body)


def render_summary(question: str, result: dict) -> str:
    columns, rows, truncated = result["columns"], result["rows"], result["truncated"]
    note = "\n(The listing was cut at the row cap.)" if truncated else ""
    if "markdown" in question.lower():
        lead = f"Here are the {len(rows)} matching games:"
        return f"{lead}\n\n{markdown_table(columns, rows)}{note}"
    if question == Q["cli1_chelsea_burnley"].question:
        if not rows:
            return "No, nobody got a yellow card in that game."
        names = ", ".join(str(r[0]) for r in rows)
        return f"Yes. Yellow cards went to: {names}.{note}"
    if question == Q["cli2_lionel_henry"].question:
        if not rows:
            return "Neither player appears in the database."
        lines = [f"- {r[0]}: {r[1]}" for r in rows]
        return "Yes, they are in the database. Teams played for:\n" + "\n".join(lines) + note
    if len(rows) == 1 and len(columns) == 1:
        return f"The answer is {rows[0][0]}.{note}"
    if not rows:
        return "The query returned no rows."
    listed = "; ".join(", ".join(str(v) for v in row) for row in rows[:10])
    return f"The query returned {len(rows)} row(s): {listed}.{note}"


class ScriptedModel:
    """Deterministic stand-in for the chat model during recording."""

    def __call__(self, request: CompletionRequest) -> tuple[str, dict | None]:
        system = request.messages[0].content
        usage = {"prompt_tokens": 50, "completion_tokens": 20, "total_tokens": 70}
        if system.startswith("You extract typed properties"):
            return self._extraction(request), usage
        if system.startswith("You translate a user's question"):
            return self._sql(request), usage
        if system.startswith("You write the final reply"):
            return self._summary(request), usage
        raise RuntimeError(f"unexpected system prompt: {system[:60]!r}")

    def _extraction(self, request) -> str:
        question = request.messages[1].content
        if question == corpus.GIBBERISH_QUESTION:
            # prose on the first pass and on the corrective retry
            if len(request.messages) == 2:
                return "I am not sure what you want me to extract from that."
            return "Still prose, sorry."
        return json.dumps(corpus.EXTRACTIONS[question], ensure_ascii=False)

    def _sql(self, request) -> str:
        question, entities = parse_user_block(request.messages[1].content)
        for case_id, first, second in corpus.ADVERSARIAL_CASES:
            if question == corpus.adversarial_question(case_id):
                return first if len(request.messages) == 2 else second
        return SQL_BUILDERS[question](entities)

    def _summary(self, request) -> str:
        text = request.messages[1].content
        question = text.removeprefix("Question:\n").partition("\n\nSQL:\n")[0]
        result = json.loads(text.partition("\nResult (JSON):\n")[2])
        return render_summary(question, result)


def choice_options(result: NeedsClarification):
    options = [SelectedCandidate(i) for i in range(len(result.candidates))]
    options.append(PassThrough())
    return options


def explore_all_resolutions(orch: Orchestrator, question: str) -> int:
    """Record every reachable clarification outcome for one question."""
    leaves = 0
    stack: list[list] = [[]]
    while stack:
        path = stack.pop()
        session = orch.create_session(allows_custom=True)
        result = orch.submit_query(session, question)
        for choice in path:
            assert isinstance(result, NeedsClarification)
            result = orch.resolve_clarification(session, choice)
        if isinstance(result, NeedsClarification):
            for option in choice_options(result):
                stack.append(path + [option])
        else:
            leaves += 1
    return leaves


def build_cassette(db_path: Path) -> None:
    CASSETTE_PATH.parent.mkdir(parents=True, exist_ok=True)
    if CASSETTE_PATH.exists():
        CASSETTE_PATH.unlink()

    config = load_config(
        {
            "OPENAI_API_KEY": "recorded-offline",
            "GATEWAY_MODE": "record",
            "GATEWAY_CASSETTE": str(CASSETTE_PATH),
            "DATABASE_URL": str(db_path),
        }
    )
    gateway = CompletionGateway.from_config(config, transport=ScriptedModel())
    from soccerql.database import DatabaseHandle

    handle = DatabaseHandle(db_path)
    orch = Orchestrator(handle, gateway, config)

    total = 0
    for demo in corpus.DEMO_QUERIES:
        total += explore_all_resolutions(orch, demo.question)
    for miss in corpus.MISSPELLED_QUERIES:
        total += explore_all_resolutions(orch, miss.question)

    # the CLI walkthrough answers the second clarification with a custom value
    session = orch.create_session(allows_custom=True)
    result = orch.submit_query(session, Q["cli2_lionel_henry"].question)
    result = orch.resolve_clarification(session, SelectedCandidate(1))
    result = orch.resolve_clarification(session, CustomString("Thierry Henry"))
    assert isinstance(result, FinalAnswer)

    # validator bypassed: raw strings forwarded straight to the SQL stage
    bypass = Orchestrator(handle, gateway, config, validator_enabled=False)
    for miss in corpus.MISSPELLED_QUERIES:
        session = bypass.create_session()
        bypass.submit_query(session, miss.question)

    # extraction-only and failure-path recordings
    extract(gateway, "hello", config.model_name)
    failing = orch.create_session()
    orch.submit_query(failing, corpus.GIBBERISH_QUESTION)

    # hostile SQL baits for the answer() fuzz
    schema_text = handle.schema_description()
    for case_id, _first, _second in corpus.ADVERSARIAL_CASES:
        cq = CleanedQuery(corpus.adversarial_question(case_id), (), schema_text)
        try:
            answer(gateway, handle, cq, model_name=config.model_name)
        except AgentError:
            pass

    lines = len(CASSETTE_PATH.read_text().splitlines())
    print(f"recorded {lines} cassette entries ({total} pipeline flows)")


def build_golden_transcripts(db_path: Path) -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    env = dict(os.environ)
    env.update(
        GATEWAY_MODE="replay",
        GATEWAY_CASSETTE=str(CASSETTE_PATH),
        DATABASE_URL=str(db_path),
        PYTHONPATH=str(REPO_ROOT / "src"),
    )
    env.pop("OPENAI_API_KEY", None)

    def run(args: list[str], stdin: str = "") -> bytes:
        proc = subprocess.run(
            [sys.executable, "-m", "soccerql", *args],
            input=stdin.encode(),
            capture_output=True,
            env=env,
            cwd=REPO_ROOT,
        )
        if proc.returncode != 0:
            raise RuntimeError(f"CLI failed: {proc.stderr.decode()}")
        return proc.stdout

    one_step = run(
        [
            "query",
            "-q",
            "In the game between Chelsea and Burnley in the 2014-15 season, "
            "did anyone get a yellow card? If yes, who.",
        ]
    )
    (GOLDEN_DIR / "cli_one_step.txt").write_bytes(one_step)

    two_step = run(
        [
            "query",
            "-q",
            "Is Lionel or Henry in the database \\n What teams have they played for?",
        ],
        stdin="2\nThierry Henry\n",
    )
    (GOLDEN_DIR / "cli_two_step.txt").write_bytes(two_step)
    print(f"wrote golden transcripts to {GOLDEN_DIR}")


def main() -> None:
    bundle = generate_fixture(seed=FIXTURE_SEED)
    with tempfile.TemporaryDirectory() as tmp:
        db_path = Path(tmp) / "games.db"
        build_database(bundle, db_path)
        build_cassette(db_path)
        build_golden_transcripts(db_path)


if __name__ == "__main__":
    main()
