"""Generate SQL for a cleaned question, guard it, run it, and word the answer.

The guard is an allow-list: exactly one statement whose only top-level verb
is SELECT (a leading WITH is fine). Everything else - mutations, DDL,
PRAGMA/ATTACH, stacked statements - is rejected before it can reach the
database, which is additionally opened read-only.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from .database import DEFAULT_ROW_CAP, DatabaseHandle, DbError, ResultTable
from .extractor import ExtractedProperty
from .gateway import CompletionGateway, CompletionRequest, GatewayError, Message
from .prompts import load_template

logger = logging.getLogger(__name__)

GENERATION_ATTEMPTS = 2

# Any of these at statement position makes the statement non-read-only.
_FORBIDDEN_TOP_LEVEL = {
    "insert", "update", "delete", "drop", "alter", "create", "replace", "truncate",
    "pragma", "attach", "detach", "vacuum", "reindex", "analyze",
    "begin", "commit", "rollback", "savepoint", "release", "grant", "revoke",
}


class AgentError(Exception):
    """Answer pipeline failed after its retry budget."""

    def __init__(self, reason: str, detail: str):
        self.reason = reason  # guard_rejected | execution_failed | gateway
        self.detail = detail
        super().__init__(f"{reason}: {detail}")


@dataclass(frozen=True)
class CleanedQuery:
    original_text: str
    properties: tuple[ExtractedProperty, ...]
    schema_text: str


@dataclass(frozen=True)
class GuardVerdict:
    allowed: bool
    normalized_sql: str
    reason: str | None = None


@dataclass(frozen=True)
class StepEvent:
    stage: str  # extraction | validation | generation | execution
    detail: str
    data: dict | None = None


@dataclass(frozen=True)
class AnswerBundle:
    sql: str
    result_table: ResultTable
    rendered_answer: str
    step_trace: tuple[StepEvent, ...]


def _strip_fences(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = stripped.splitlines()
        if lines and lines[0].startswith("```"):
            lines = lines[1:]
        if lines and lines[-1].strip() == "```":
            lines = lines[:-1]
        stripped = "\n".join(lines).strip()
    return stripped


def _scan_statement(sql: str) -> tuple[list[str], bool]:
    """Top-level (paren depth 0) word tokens, plus an interior-semicolon flag.

    String literals, quoted identifiers and comments are skipped, so hostile
    payloads cannot hide keywords inside them or smuggle a second statement.
    """
    tokens: list[str] = []
    interior_semicolon = False
    depth = 0
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch in "'\"`":
            quote = ch
            i += 1
            while i < n:
                if sql[i] == quote:
                    if i + 1 < n and sql[i + 1] == quote:  # doubled quote escape
                        i += 2
                        continue
                    break
                i += 1
            i += 1
            continue
        if ch == "[":  # bracket-quoted identifier
            end = sql.find("]", i + 1)
            i = n if end == -1 else end + 1
            continue
        if ch == "-" and sql.startswith("--", i):
            end = sql.find("\n", i)
            i = n if end == -1 else end + 1
            continue
        if ch == "/" and sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            i = n if end == -1 else end + 2
            continue
        if ch == "(":
            depth += 1
            i += 1
            continue
        if ch == ")":
            depth = max(0, depth - 1)
            i += 1
            continue
        if ch == ";":
            if depth == 0 and sql[i + 1 :].strip(" \t\r\n;"):
                interior_semicolon = True
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (sql[i].isalnum() or sql[i] == "_"):
                i += 1
            if depth == 0:
                tokens.append(sql[start:i].lower())
            continue
        i += 1
    return tokens, interior_semicolon


def _has_top_level_limit(sql: str) -> bool:
    tokens, _ = _scan_statement(sql)
    return "limit" in tokens


def guard_sql(sql_text: str, row_cap: int = DEFAULT_ROW_CAP) -> GuardVerdict:
    """Decide whether a model-produced statement may run, and normalize it."""
    cleaned = _strip_fences(sql_text).strip().rstrip(";").strip()
    if not cleaned:
        return GuardVerdict(False, "", "empty statement")
    tokens, interior_semicolon = _scan_statement(cleaned)
    if interior_semicolon:
        return GuardVerdict(False, cleaned, "multiple statements")
    if not tokens or tokens[0] not in ("select", "with"):
        return GuardVerdict(False, cleaned, "statement must start with SELECT or WITH")
    for token in tokens:
        if token in _FORBIDDEN_TOP_LEVEL:
            return GuardVerdict(False, cleaned, f"non-read-only statement (token '{token}')")
    normalized = cleaned
    if "limit" not in tokens:
        normalized = f"{cleaned}\nLIMIT {row_cap}"
    return GuardVerdict(True, normalized)


def render_entities_block(properties: tuple[ExtractedProperty, ...]) -> str:
    if not properties:
        return "(none)"
    lines = []
    for prop in properties:
        if prop.resolved is not None:
            pk, canonical = prop.resolved
            lines.append(
                f"- kind={prop.kind.value} raw={prop.raw_value!r} -> "
                f"canonical={canonical!r} key={pk!r}"
            )
        else:
            lines.append(f"- kind={prop.kind.value} raw={prop.raw_value!r} (unvalidated)")
    return "\n".join(lines)


def build_sql_prompt(cq: CleanedQuery, model_name: str, row_cap: int = DEFAULT_ROW_CAP) -> CompletionRequest:
    if not cq.schema_text:
        raise ValueError("schema_text must be non-empty")
    system = load_template("sql_system.txt").format(schema=cq.schema_text, row_cap=row_cap)
    user = (
        f"Question:\n{cq.original_text}\n\n"
        f"Validated entities:\n{render_entities_block(cq.properties)}"
    )
    return CompletionRequest(model_name=model_name, messages=(Message("system", system), Message("user", user)))


def build_summary_prompt(
    cq: CleanedQuery, sql: str, result: ResultTable, model_name: str
) -> CompletionRequest:
    user = (
        f"Question:\n{cq.original_text}\n\n"
        f"SQL:\n{sql}\n\n"
        f"Result (JSON):\n{json.dumps(result.to_json_payload(), ensure_ascii=False)}"
    )
    return CompletionRequest(
        model_name=model_name,
        messages=(Message("system", load_template("summary_system.txt")), Message("user", user)),
    )


def answer(
    gateway: CompletionGateway,
    handle: DatabaseHandle,
    cq: CleanedQuery,
    *,
    model_name: str,
    row_cap: int = DEFAULT_ROW_CAP,
    prior_steps: tuple[StepEvent, ...] = (),
) -> AnswerBundle:
    """SQL generation -> guard -> execution -> worded answer.

    A rejected or failing statement earns one corrective regeneration with
    the error appended; after that the pipeline gives up with AgentError.
    """
    base = build_sql_prompt(cq, model_name, row_cap)
    messages = base.messages
    steps: list[StepEvent] = list(prior_steps)
    last_failure = ("guard_rejected", "no attempt made")
    result: ResultTable | None = None
    sql = ""
    try:
        for attempt in range(1, GENERATION_ATTEMPTS + 1):
            request = CompletionRequest(model_name=model_name, messages=messages)
            raw_sql = gateway.complete(request)
            verdict = guard_sql(raw_sql, row_cap)
            if not verdict.allowed:
                logger.info("guard rejected generated SQL: %s", verdict.reason)
                last_failure = ("guard_rejected", verdict.reason or "rejected")
                messages = messages + (
                    Message("assistant", raw_sql),
                    Message(
                        "user",
                        f"That statement was rejected: {verdict.reason}. "
                        "Reply with one read-only SELECT statement.",
                    ),
                )
                continue
            sql = verdict.normalized_sql
            try:
                result = handle.execute_readonly(sql, row_cap)
            except DbError as exc:
                last_failure = ("execution_failed", str(exc))
                messages = messages + (
                    Message("assistant", raw_sql),
                    Message(
                        "user",
                        f"That statement failed to execute: {exc}. "
                        "Reply with one corrected read-only SELECT statement.",
                    ),
                )
                continue
            steps.append(
                StepEvent(
                    "generation",
                    f"generated SQL in {attempt} attempt(s)",
                    {"sql": sql, "attempts": attempt},
                )
            )
            break
        if result is None:
            raise AgentError(*last_failure)
        steps.append(
            StepEvent(
                "execution",
                f"query returned {len(result.rows)} row(s)"
                + (" (truncated)" if result.truncated else ""),
                {"row_count": len(result.rows), "truncated": result.truncated},
            )
        )
        rendered = gateway.complete(build_summary_prompt(cq, sql, result, model_name))
    except GatewayError as exc:
        raise AgentError("gateway", str(exc)) from exc
    return AnswerBundle(sql=sql, result_table=result, rendered_answer=rendered, step_trace=tuple(steps))
