"""Textual soccer archive: record types, JSONL ingest, and synthetic fixtures.

On-disk layout is one JSON-Lines file per entity kind under a data directory:
leagues.jsonl, teams.jsonl, players.jsonl, games.jsonl, events.jsonl,
captions.jsonl. Real archive exports can be adapted by emitting the same
fields; the fixture generator writes the identical layout.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

ENTITY_FILES = ("leagues", "teams", "players", "games", "events", "captions")


class IngestError(Exception):
    """Base error for dataset parsing and validation."""


class MissingFileError(IngestError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing dataset file: {name}")


class MalformedRecordError(IngestError):
    def __init__(self, file: str, line: int, reason: str):
        self.file = file
        self.line = line
        self.reason = reason
        super().__init__(f"{file}:{line}: {reason}")


class DanglingReferenceError(IngestError):
    def __init__(self, kind: str, key: str, problems: list[str] | None = None):
        self.kind = kind
        self.key = key
        self.problems = problems or [f"{kind}: {key}"]
        super().__init__(
            f"unresolved reference to {kind} {key!r}"
            + (f" (and {len(self.problems) - 1} more)" if len(self.problems) > 1 else "")
        )


@dataclass(frozen=True)
class LeagueRecord:
    league_key: str
    name: str


@dataclass(frozen=True)
class TeamRecord:
    team_key: str
    name: str
    league_key: str


@dataclass(frozen=True)
class PlayerRecord:
    player_key: str
    full_name: str
    # (team_key, season) pairs, possibly empty
    affiliations: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class GameRecord:
    game_key: str
    season: str
    league_key: str
    home_team_key: str
    away_team_key: str
    home_score: int
    away_score: int
    date: str
    venue: str
    attendance: int


@dataclass(frozen=True)
class EventRecord:
    event_key: str
    game_key: str
    label: str
    half: int
    clock: str  # "mm:ss"
    team_key: str
    player_key: str | None = None


@dataclass(frozen=True)
class CaptionRecord:
    caption_key: str
    game_key: str
    start_time: float
    text: str


@dataclass(frozen=True)
class DatasetBundle:
    leagues: tuple[LeagueRecord, ...]
    teams: tuple[TeamRecord, ...]
    players: tuple[PlayerRecord, ...]
    games: tuple[GameRecord, ...]
    events: tuple[EventRecord, ...]
    captions: tuple[CaptionRecord, ...]

    def counts(self) -> dict[str, int]:
        return {
            "leagues": len(self.leagues),
            "teams": len(self.teams),
            "players": len(self.players),
            "games": len(self.games),
            "events": len(self.events),
            "captions": len(self.captions),
        }


def validate_bundle(bundle: DatasetBundle) -> None:
    """Check key uniqueness and that every cross-reference resolves."""
    problems: list[tuple[str, str, str]] = []  # (kind, key, where)

    def check_unique(kind: str, keys: list[str]) -> set[str]:
        seen: set[str] = set()
        for k in keys:
            if k in seen:
                problems.append((kind, k, "duplicate key"))
            seen.add(k)
        return seen

    league_keys = check_unique("league", [r.league_key for r in bundle.leagues])
    team_keys = check_unique("team", [r.team_key for r in bundle.teams])
    player_keys = check_unique("player", [r.player_key for r in bundle.players])
    game_keys = check_unique("game", [r.game_key for r in bundle.games])
    check_unique("event", [r.event_key for r in bundle.events])
    check_unique("caption", [r.caption_key for r in bundle.captions])

    for name_kind, names in (
        ("league", [r.name for r in bundle.leagues]),
        ("team", [r.name for r in bundle.teams]),
        ("player", [r.full_name for r in bundle.players]),
    ):
        seen_names: set[str] = set()
        for n in names:
            if not n:
                problems.append((name_kind, n, "empty canonical name"))
            if n in seen_names:
                problems.append((name_kind, n, "duplicate canonical name"))
            seen_names.add(n)

    for team in bundle.teams:
        if team.league_key not in league_keys:
            problems.append(("league", team.league_key, f"team {team.team_key}"))
    for player in bundle.players:
        for team_key, _season in player.affiliations:
            if team_key not in team_keys:
                problems.append(("team", team_key, f"player {player.player_key}"))
    for game in bundle.games:
        if game.league_key not in league_keys:
            problems.append(("league", game.league_key, f"game {game.game_key}"))
        for tk in (game.home_team_key, game.away_team_key):
            if tk not in team_keys:
                problems.append(("team", tk, f"game {game.game_key}"))
        if game.home_team_key == game.away_team_key:
            problems.append(("game", game.game_key, "home and away team identical"))
        try:
            date.fromisoformat(game.date)
        except ValueError:
            problems.append(("game", game.game_key, f"bad date {game.date!r}"))
        if game.home_score < 0 or game.away_score < 0 or game.attendance < 0:
            problems.append(("game", game.game_key, "negative score or attendance"))
    for event in bundle.events:
        if event.game_key not in game_keys:
            problems.append(("game", event.game_key, f"event {event.event_key}"))
        if event.team_key not in team_keys:
            problems.append(("team", event.team_key, f"event {event.event_key}"))
        if event.player_key is not None and event.player_key not in player_keys:
            problems.append(("player", event.player_key, f"event {event.event_key}"))
        if event.half not in (1, 2):
            problems.append(("event", event.event_key, f"bad half {event.half}"))
        else:
            minutes = event.clock.split(":", 1)[0]
            if not minutes.isdigit() or not 0 <= int(minutes) <= 130:
                problems.append(("event", event.event_key, f"bad clock {event.clock!r}"))
    for caption in bundle.captions:
        if caption.game_key not in game_keys:
            problems.append(("game", caption.game_key, f"caption {caption.caption_key}"))
        if caption.start_time < 0:
            problems.append(("caption", caption.caption_key, "negative start_time"))
        if not caption.text:
            problems.append(("caption", caption.caption_key, "empty text"))

    if problems:
        kind, key, _ = problems[0]
        raise DanglingReferenceError(kind, key, [f"{k} {v!r} ({w})" for k, v, w in problems])


_FIELD_TYPES = {
    "leagues": LeagueRecord,
    "teams": TeamRecord,
    "players": PlayerRecord,
    "games": GameRecord,
    "events": EventRecord,
    "captions": CaptionRecord,
}


def _record_to_json(record) -> dict:
    if isinstance(record, PlayerRecord):
        return {
            "player_key": record.player_key,
            "full_name": record.full_name,
            "affiliations": [{"team_key": t, "season": s} for t, s in record.affiliations],
        }
    return dict(record.__dict__)


def _record_from_json(name: str, payload: dict):
    cls = _FIELD_TYPES[name]
    if cls is PlayerRecord:
        affiliations = tuple(
            (a["team_key"], a["season"]) for a in payload.get("affiliations", [])
        )
        return PlayerRecord(payload["player_key"], payload["full_name"], affiliations)
    return cls(**payload)


def write_dataset(bundle: DatasetBundle, root: str | Path) -> None:
    """Write one JSONL file per entity kind under root."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for name in ENTITY_FILES:
        records = getattr(bundle, name)
        with open(root / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(_record_to_json(record), ensure_ascii=False) + "\n")


def parse_dataset(root: str | Path) -> DatasetBundle:
    """Read the JSONL layout at root into a validated bundle."""
    root = Path(root)
    if not root.is_dir():
        raise MissingFileError(str(root))
    parsed: dict[str, list] = {}
    for name in ENTITY_FILES:
        path = root / f"{name}.jsonl"
        if not path.is_file():
            raise MissingFileError(name)
        records = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                records.append(_record_from_json(name, payload))
            except (json.JSONDecodeError, TypeError, KeyError) as exc:
                raise MalformedRecordError(f"{name}.jsonl", lineno, str(exc)) from None
        parsed[name] = records
    bundle = DatasetBundle(**{name: tuple(parsed[name]) for name in ENTITY_FILES})
    validate_bundle(bundle)
    return bundle


# --- synthetic fixtures -----------------------------------------------------

SEASONS = ("2014-2015", "2015-2016", "2016-2017")

_CORE_LEAGUES = (("l_epl", "Premier League"), ("l_laliga", "La Liga"))

# (key, name, league, venue)
_CORE_TEAMS = (
    ("t_manutd", "Manchester United", "l_epl", "Old Trafford"),
    ("t_arsenal", "Arsenal", "l_epl", "Emirates Stadium"),
    ("t_chelsea", "Chelsea", "l_epl", "Stamford Bridge"),
    ("t_burnley", "Burnley", "l_epl", "Turf Moor"),
    ("t_realmadrid", "Real Madrid", "l_laliga", "Santiago Bernabeu"),
    ("t_barcelona", "FC Barcelona", "l_laliga", "Camp Nou"),
)

# (key, name, home team) - two players named Lionel and two named Henry so
# that single-name references stay ambiguous, as real rosters make them.
_CORE_PLAYERS = (
    ("p_messi", "Lionel Messi", "t_barcelona"),
    ("p_carole", "Lionel Carole", "t_burnley"),
    ("p_henry", "Thierry Henry", "t_arsenal"),
    ("p_onyekuru", "Henry Onyekuru", "t_chelsea"),
)

_EXTRA_TEAM_NAMES = (
    "Crimson Rovers", "Harbor City", "Northfield Athletic", "Westgate Wanderers",
    "Southport Town", "Eastvale Rangers", "Silverbrook", "Bridgewater Albion",
    "Kingsford Park", "Oakmont Villa", "Redcliffe County", "Stonegate Dynamo",
)

_EXTRA_FIRST_NAMES = (
    "Marcus", "David", "James", "Paulo", "Sergio", "Kevin", "Raheem", "Hugo",
    "Victor", "Pedro", "Thomas", "Andre", "Gareth", "Cesar", "Juan", "Bruno",
)

_EXTRA_LAST_NAMES = (
    "Walker", "Fuentes", "Brandt", "Okafor", "Silva", "Mendez", "Turner",
    "Vargas", "Dubois", "Costa", "Richter", "Moreau", "Santos", "Berg",
)

_EVENT_LABELS = ("Goal", "Yellow card", "Red card", "Substitution", "Corner", "Penalty")

_CAPTION_TEMPLATES = (
    "A driven effort from the edge of the box forces a fine save.",
    "The referee waves play on after a strong challenge in midfield.",
    "A sweeping move down the left ends with a cross into the area.",
    "The keeper claims the corner under pressure.",
    "A patient spell of possession draws the crowd into the game.",
)


@dataclass(frozen=True)
class FixtureSizes:
    """Requested record counts; must cover the built-in core entities."""

    leagues: int = 2
    teams: int = 8
    players: int = 24
    games: int = 40

    @classmethod
    def from_mapping(cls, sizes: dict[str, int]) -> "FixtureSizes":
        defaults = cls()
        return cls(
            leagues=sizes.get("leagues", defaults.leagues),
            teams=sizes.get("teams", defaults.teams),
            players=sizes.get("players", defaults.players),
            games=sizes.get("games", defaults.games),
        )


def _season_dates(season: str) -> tuple[date, date]:
    start_year = int(season[:4])
    return date(start_year, 8, 1), date(start_year + 1, 5, 31)


def generate_fixture(seed: int, sizes: FixtureSizes | dict[str, int] | None = None) -> DatasetBundle:
    """Deterministic synthetic archive; identical output for identical inputs.

    Always contains the core leagues/teams/players plus at least one
    "Yellow card" event per season, so the documented demo questions have
    data behind them.
    """
    if isinstance(sizes, dict):
        sizes = FixtureSizes.from_mapping(sizes)
    sizes = sizes or FixtureSizes()
    if sizes.leagues < len(_CORE_LEAGUES):
        raise ValueError(f"need at least {len(_CORE_LEAGUES)} leagues")
    if sizes.teams < len(_CORE_TEAMS):
        raise ValueError(f"need at least {len(_CORE_TEAMS)} teams")
    if sizes.players < len(_CORE_PLAYERS):
        raise ValueError(f"need at least {len(_CORE_PLAYERS)} players")
    if sizes.games < 8:
        raise ValueError("need at least 8 games to seat the built-in matchups")

    rng = random.Random(seed)

    leagues = [LeagueRecord(k, n) for k, n in _CORE_LEAGUES]
    for i in range(sizes.leagues - len(leagues)):
        leagues.append(LeagueRecord(f"l_x{i:02d}", f"Division {i + 1}"))

    venues: dict[str, str] = {}
    teams = []
    for key, name, league, venue in _CORE_TEAMS:
        teams.append(TeamRecord(key, name, league))
        venues[key] = venue
    for i in range(sizes.teams - len(teams)):
        name = _EXTRA_TEAM_NAMES[i % len(_EXTRA_TEAM_NAMES)]
        if i >= len(_EXTRA_TEAM_NAMES):
            name = f"{name} {i // len(_EXTRA_TEAM_NAMES) + 2}"
        key = f"t_x{i:02d}"
        teams.append(TeamRecord(key, name, leagues[i % len(leagues)].league_key))
        venues[key] = f"{name} Ground"

    # Roster: every player keeps one club across all seasons; enough for
    # affiliation questions without a transfer model.
    roster: dict[str, list[str]] = {t.team_key: [] for t in teams}
    players = []
    for key, name, team_key in _CORE_PLAYERS:
        players.append(PlayerRecord(key, name, tuple((team_key, s) for s in SEASONS)))
        roster[team_key].append(key)
    extra_needed = sizes.players - len(players)
    name_pool = [f"{f} {l}" for f in _EXTRA_FIRST_NAMES for l in _EXTRA_LAST_NAMES]
    for i in range(extra_needed):
        full_name = name_pool[i % len(name_pool)]
        if i >= len(name_pool):
            full_name = f"{full_name} {i // len(name_pool) + 2}"
        key = f"p_x{i:03d}"
        team_key = teams[i % len(teams)].team_key
        players.append(PlayerRecord(key, full_name, tuple((team_key, s) for s in SEASONS)))
        roster[team_key].append(key)

    games: list[GameRecord] = []
    events: list[EventRecord] = []
    captions: list[CaptionRecord] = []
    league_of = {t.team_key: t.league_key for t in teams}

    def add_game(home: str, away: str, season: str, when: date | None = None) -> GameRecord:
        start, end = _season_dates(season)
        if when is None:
            when = start + timedelta(days=rng.randrange((end - start).days + 1))
        game = GameRecord(
            game_key=f"g{len(games) + 1:04d}",
            season=season,
            league_key=league_of[home],
            home_team_key=home,
            away_team_key=away,
            home_score=rng.randrange(0, 6),
            away_score=rng.randrange(0, 6),
            date=when.isoformat(),
            venue=venues[home],
            attendance=rng.randrange(8000, 80000),
        )
        games.append(game)
        return game

    def add_event(game: GameRecord, label: str, team_key: str, player_key: str | None) -> None:
        half = rng.choice((1, 2))
        minute = rng.randrange(0, 48) if half == 1 else rng.randrange(45, 96)
        events.append(
            EventRecord(
                event_key=f"e{len(events) + 1:05d}",
                game_key=game.game_key,
                label=label,
                half=half,
                clock=f"{minute:02d}:{rng.randrange(60):02d}",
                team_key=team_key,
                player_key=player_key,
            )
        )

    def random_player(team_key: str) -> str | None:
        pool = roster[team_key]
        return rng.choice(pool) if pool else None

    # Seated matchups behind the documented demo questions.
    g = add_game("t_chelsea", "t_burnley", "2014-2015", date(2015, 2, 21))
    add_event(g, "Yellow card", "t_chelsea", random_player("t_chelsea"))
    add_event(g, "Yellow card", "t_burnley", "p_carole")
    add_game("t_burnley", "t_chelsea", "2014-2015", date(2014, 10, 4))

    g = add_game("t_barcelona", "t_realmadrid", "2015-2016", date(2016, 4, 2))
    add_event(g, "Yellow card", "t_barcelona", "p_messi")
    add_event(g, "Goal", "t_barcelona", "p_messi")
    g = add_game("t_barcelona", "t_arsenal", "2015-2016", date(2015, 11, 14))
    add_event(g, "Yellow card", "t_barcelona", "p_messi")
    g = add_game("t_realmadrid", "t_barcelona", "2015-2016", date(2015, 11, 21))
    add_event(g, "Yellow card", "t_realmadrid", random_player("t_realmadrid"))

    g = add_game("t_manutd", "t_arsenal", "2016-2017", date(2016, 11, 19))
    add_event(g, "Yellow card", "t_manutd", random_player("t_manutd"))
    add_game("t_chelsea", "t_manutd", "2016-2017", date(2017, 3, 18))
    g = add_game("t_burnley", "t_arsenal", "2016-2017", date(2017, 1, 14))
    add_event(g, "Yellow card", "t_burnley", "p_carole")

    seeded = len(games)
    for i in range(sizes.games - seeded):
        season = SEASONS[i % len(SEASONS)]
        home, away = rng.sample(teams, 2)
        add_game(home.team_key, away.team_key, season)

    # Random event noise on top of the seated ones.
    for game in games[seeded:]:
        for _ in range(rng.randrange(0, 5)):
            side = rng.choice((game.home_team_key, game.away_team_key))
            label = rng.choice(_EVENT_LABELS)
            add_event(game, label, side, random_player(side))

    for game in games:
        for _ in range(rng.randrange(0, 3)):
            captions.append(
                CaptionRecord(
                    caption_key=f"c{len(captions) + 1:05d}",
                    game_key=game.game_key,
                    start_time=float(rng.randrange(0, 6000)),
                    text=rng.choice(_CAPTION_TEMPLATES),
                )
            )

    bundle = DatasetBundle(
        leagues=tuple(leagues),
        teams=tuple(teams),
        players=tuple(players),
        games=tuple(games),
        events=tuple(events),
        captions=tuple(captions),
    )
    validate_bundle(bundle)
    return bundle
