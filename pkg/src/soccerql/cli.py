"""Command-line surface: setup, query, serve."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config_from_environment
from .database import StorageError, build_database
from .dataset import FixtureSizes, IngestError, generate_fixture, parse_dataset
from .engine import Engine
from .session import Failure, FinalAnswer, NeedsClarification
from .validator import CustomString, PassThrough, SelectedCandidate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soccerql", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    setup = sub.add_parser("setup", help="ingest a dataset (or a fixture) and build the database")
    source = setup.add_mutually_exclusive_group()
    source.add_argument("--data-dir", help="directory with the JSONL dataset files")
    source.add_argument("--fixture", type=int, metavar="SEED", help="generate a synthetic fixture")

    query = sub.add_parser("query", help="answer one natural-language question")
    query.add_argument("-q", required=True, metavar="QUERY", help="the question (quote it); \\n inserts a linebreak")

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    return parser


def cmd_setup(args: argparse.Namespace) -> int:
    try:
        config = load_config_from_environment()
        if args.fixture is not None:
            bundle = generate_fixture(seed=args.fixture, sizes=FixtureSizes())
        else:
            data_dir = args.data_dir or "./data"
            bundle = parse_dataset(data_dir)
        handle = build_database(bundle, config.database_url)
    except (ConfigError, IngestError, StorageError, ValueError) as exc:
        print(f"setup failed: {exc}", file=sys.stderr)
        return 2
    print(f"built database at {config.database_url}")
    for table, count in handle.table_counts().items():
        print(f"  {table}: {count}")
    return 0


def _prompt_choice(result: NeedsClarification) -> SelectedCandidate | PassThrough | CustomString | None:
    print(f"clarify {result.kind} '{result.raw_value}': which value did you mean?")
    for i, candidate in enumerate(result.candidates, start=1):
        print(f"  {i}. {candidate.canonical_name}")
    print("  p. keep the original text")
    if result.allows_custom:
        print("or type a replacement value.")
    while True:
        print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            return None  # EOF
        line = line.strip()
        if not line:
            continue
        if line.lower() == "p":
            return PassThrough()
        if line.isdigit():
            index = int(line) - 1
            if 0 <= index < len(result.candidates):
                return SelectedCandidate(index)
            print(f"pick a number between 1 and {len(result.candidates)}")
            continue
        if result.allows_custom:
            return CustomString(line)
        print("pick a number or p")


def cmd_query(args: argparse.Namespace) -> int:
    question = args.q.replace("\\n", "\n")
    try:
        config = load_config_from_environment()
        engine = Engine.from_config(config)
    except (ConfigError, StorageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    session = engine.orchestrator.create_session(allows_custom=True)
    printed = 0

    def flush_steps() -> None:
        nonlocal printed
        for entry in session.history[printed:]:
            if entry.kind == "step":
                print(f"[{entry.text}]")
        printed = len(session.history)

    result = engine.orchestrator.submit_query(session, question)
    flush_steps()
    while isinstance(result, NeedsClarification):
        choice = _prompt_choice(result)
        if choice is None:
            print("aborted", file=sys.stderr)
            return 1
        result = engine.orchestrator.resolve_clarification(session, choice)
        flush_steps()
    if isinstance(result, Failure):
        print(f"error: {result.user_message}", file=sys.stderr)
        return 1
    assert isinstance(result, FinalAnswer)
    print(f"sql: {result.bundle.sql}")
    print("answer:")
    print(result.bundle.rendered_answer)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    try:
        config = load_config_from_environment()
        engine = Engine.from_config(config)
    except (ConfigError, StorageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    app = create_app(engine)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "setup":
        return cmd_setup(args)
    if args.command == "query":
        return cmd_query(args)
    return cmd_serve(args)


def entrypoint() -> None:
    sys.exit(main())
