"""Embedded SQLite store for a DatasetBundle, with guarded read-only access."""

from __future__ import annotations

import hashlib
import os
import sqlite3
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .dataset import DatasetBundle

DEFAULT_ROW_CAP = 100


class StorageError(Exception):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"storage error at {path}: {reason}")


class DbError(Exception):
    """SQL execution failed; message comes from the engine."""


class EntityKind(str, Enum):
    LEAGUE = "league"
    TEAM = "team"
    PLAYER = "player"
    SEASON = "season"
    EVENT_LABEL = "event_label"
    VENUE = "venue"


# Lookup table/column pair per entity kind (key column, display column, table).
_LOOKUP_SQL = {
    EntityKind.LEAGUE: "SELECT league_key, name FROM leagues ORDER BY name, league_key",
    EntityKind.TEAM: "SELECT team_key, name FROM teams ORDER BY name, team_key",
    EntityKind.PLAYER: "SELECT player_key, full_name FROM players ORDER BY full_name, player_key",
    EntityKind.SEASON: "SELECT DISTINCT season, season FROM games ORDER BY season",
    EntityKind.EVENT_LABEL: "SELECT DISTINCT label, label FROM events ORDER BY label",
    EntityKind.VENUE: "SELECT DISTINCT venue, venue FROM games ORDER BY venue",
}

_SCHEMA = """
CREATE TABLE leagues (
    league_key TEXT PRIMARY KEY,
    name TEXT NOT NULL UNIQUE
);
CREATE TABLE teams (
    team_key TEXT PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    league_key TEXT NOT NULL REFERENCES leagues(league_key)
);
CREATE TABLE players (
    player_key TEXT PRIMARY KEY,
    full_name TEXT NOT NULL UNIQUE
);
CREATE TABLE player_affiliations (
    player_key TEXT NOT NULL REFERENCES players(player_key),
    team_key TEXT NOT NULL REFERENCES teams(team_key),
    season TEXT NOT NULL,
    PRIMARY KEY (player_key, team_key, season)
);
CREATE TABLE games (
    game_key TEXT PRIMARY KEY,
    season TEXT NOT NULL,
    league_key TEXT NOT NULL REFERENCES leagues(league_key),
    home_team_key TEXT NOT NULL REFERENCES teams(team_key),
    away_team_key TEXT NOT NULL REFERENCES teams(team_key),
    home_score INTEGER NOT NULL CHECK (home_score >= 0),
    away_score INTEGER NOT NULL CHECK (away_score >= 0),
    date TEXT NOT NULL,
    venue TEXT NOT NULL,
    attendance INTEGER NOT NULL CHECK (attendance >= 0),
    CHECK (home_team_key <> away_team_key)
);
CREATE TABLE events (
    event_key TEXT PRIMARY KEY,
    game_key TEXT NOT NULL REFERENCES games(game_key),
    label TEXT NOT NULL,
    half INTEGER NOT NULL CHECK (half IN (1, 2)),
    clock TEXT NOT NULL,
    team_key TEXT NOT NULL REFERENCES teams(team_key),
    player_key TEXT REFERENCES players(player_key)
);
CREATE TABLE captions (
    caption_key TEXT PRIMARY KEY,
    game_key TEXT NOT NULL REFERENCES games(game_key),
    start_time REAL NOT NULL CHECK (start_time >= 0),
    text TEXT NOT NULL
);
"""

TABLES = ("leagues", "teams", "players", "player_affiliations", "games", "events", "captions")

_TABLE_PK = {
    "leagues": "league_key",
    "teams": "team_key",
    "players": "player_key",
    "player_affiliations": "player_key, team_key, season",
    "games": "game_key",
    "events": "event_key",
    "captions": "caption_key",
}


@dataclass(frozen=True)
class ResultTable:
    column_names: tuple[str, ...]
    rows: tuple[tuple, ...]
    truncated: bool

    def to_json_payload(self) -> dict:
        return {
            "columns": list(self.column_names),
            "rows": [list(r) for r in self.rows],
            "truncated": self.truncated,
        }


class DatabaseHandle:
    """Read-side handle to a built database file; concurrent readers are fine."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        if not Path(self.path).is_file():
            raise StorageError(self.path, "database file not found (run setup first)")

    def _connect_readonly(self) -> sqlite3.Connection:
        # mode=ro blocks writes at the storage layer, independent of the SQL guard
        uri = f"file:{self.path}?mode=ro"
        return sqlite3.connect(uri, uri=True)

    def list_candidates(self, kind: EntityKind) -> list[tuple[str, str]]:
        """Full distinct (primary_key, canonical_name) set for one entity kind."""
        with self._connect_readonly() as conn:
            return [(str(k), str(n)) for k, n in conn.execute(_LOOKUP_SQL[kind])]

    def execute_readonly(self, sql: str, row_cap: int = DEFAULT_ROW_CAP) -> ResultTable:
        """Run one already-guarded statement; truncate rows at row_cap."""
        if row_cap < 1:
            raise ValueError("row_cap must be >= 1")
        try:
            with self._connect_readonly() as conn:
                cursor = conn.execute(sql)
                columns = tuple(d[0] for d in cursor.description or ())
                rows = cursor.fetchmany(row_cap + 1)
        except sqlite3.Error as exc:
            raise DbError(str(exc)) from None
        truncated = len(rows) > row_cap
        return ResultTable(columns, tuple(tuple(r) for r in rows[:row_cap]), truncated)

    def table_counts(self) -> dict[str, int]:
        with self._connect_readonly() as conn:
            return {
                t: conn.execute(f"SELECT COUNT(*) FROM {t}").fetchone()[0] for t in TABLES
            }

    def schema_description(self) -> str:
        """Deterministic textual schema with 3 sample rows per table."""
        lines = ["Tables (SQLite):"]
        with self._connect_readonly() as conn:
            for table in TABLES:
                cols = conn.execute(f"PRAGMA table_info({table})").fetchall()
                col_text = ", ".join(f"{c[1]} {c[2]}" for c in cols)
                fks = conn.execute(f"PRAGMA foreign_key_list({table})").fetchall()
                fk_text = "".join(
                    f"\n    fk: {fk[3]} -> {fk[2]}({fk[4]})" for fk in sorted(fks, key=lambda f: f[3])
                )
                count = conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]
                lines.append(f"\n  {table} ({col_text}){fk_text}")
                lines.append(f"    {count} rows")
                sample = conn.execute(
                    f"SELECT * FROM {table} ORDER BY {_TABLE_PK[table]} LIMIT 3"
                ).fetchall()
                for row in sample:
                    lines.append(f"    sample: {tuple(row)!r}")
        return "\n".join(lines)

    def content_fingerprint(self) -> str:
        """Hash of every row of every table; detects any mutation."""
        digest = hashlib.sha256()
        with self._connect_readonly() as conn:
            for table in TABLES:
                digest.update(table.encode())
                for row in conn.execute(f"SELECT * FROM {table} ORDER BY {_TABLE_PK[table]}"):
                    digest.update(repr(tuple(row)).encode())
        return digest.hexdigest()


def build_database(bundle: DatasetBundle, db_path: str | Path) -> DatabaseHandle:
    """Materialize the bundle into a fresh database file, replacing atomically."""
    db_path = Path(db_path)
    try:
        db_path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(suffix=".db", dir=db_path.parent)
        os.close(fd)
    except OSError as exc:
        raise StorageError(str(db_path), str(exc)) from None
    try:
        conn = sqlite3.connect(tmp_name)
        try:
            conn.execute("PRAGMA foreign_keys = ON")
            conn.executescript(_SCHEMA)
            conn.executemany(
                "INSERT INTO leagues VALUES (?, ?)",
                [(r.league_key, r.name) for r in bundle.leagues],
            )
            conn.executemany(
                "INSERT INTO teams VALUES (?, ?, ?)",
                [(r.team_key, r.name, r.league_key) for r in bundle.teams],
            )
            conn.executemany(
                "INSERT INTO players VALUES (?, ?)",
                [(r.player_key, r.full_name) for r in bundle.players],
            )
            conn.executemany(
                "INSERT INTO player_affiliations VALUES (?, ?, ?)",
                [
                    (p.player_key, team_key, season)
                    for p in bundle.players
                    for team_key, season in p.affiliations
                ],
            )
            conn.executemany(
                "INSERT INTO games VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                [
                    (
                        r.game_key, r.season, r.league_key, r.home_team_key, r.away_team_key,
                        r.home_score, r.away_score, r.date, r.venue, r.attendance,
                    )
                    for r in bundle.games
                ],
            )
            conn.executemany(
                "INSERT INTO events VALUES (?, ?, ?, ?, ?, ?, ?)",
                [
                    (r.event_key, r.game_key, r.label, r.half, r.clock, r.team_key, r.player_key)
                    for r in bundle.events
                ],
            )
            conn.executemany(
                "INSERT INTO captions VALUES (?, ?, ?, ?)",
                [(r.caption_key, r.game_key, r.start_time, r.text) for r in bundle.captions],
            )
            conn.commit()
        finally:
            conn.close()
        os.replace(tmp_name, db_path)
    except (sqlite3.Error, OSError) as exc:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise StorageError(str(db_path), str(exc)) from None
    return DatabaseHandle(db_path)
