"""Ask the model which typed entities a question mentions, parse its reply."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .database import EntityKind
from .gateway import CompletionGateway, CompletionRequest, Message
from .prompts import load_template

logger = logging.getLogger(__name__)

# Compact JSON schema descriptor; part of the request fingerprint.
EXTRACTION_SCHEMA = json.dumps(
    {
        "type": "array",
        "items": {
            "type": "object",
            "properties": {"kind": {"type": "string"}, "value": {"type": "string"}},
            "required": ["kind", "value"],
        },
    },
    separators=(",", ":"),
)

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


class ExtractError(Exception):
    """The model reply was not the documented structured payload."""


@dataclass(frozen=True)
class ExtractedProperty:
    kind: EntityKind
    raw_value: str
    # (primary_key, canonical_name) attached by the validator, never here
    resolved: tuple[str, str] | None = None


def build_extraction_prompt(user_query: str, model_name: str) -> CompletionRequest:
    if not user_query.strip():
        raise ValueError("user_query must be non-empty")
    return CompletionRequest(
        model_name=model_name,
        messages=(
            Message("system", load_template("extraction_system.txt")),
            Message("user", user_query),
        ),
        structured_output_schema=EXTRACTION_SCHEMA,
    )


def parse_structured_payload(response_text: str) -> list[ExtractedProperty]:
    """Parse the documented array-of-{kind,value} payload.

    Unknown kinds are dropped with a warning; duplicate (kind, value) pairs
    keep their first occurrence.
    """
    text = response_text.strip()
    fenced = _FENCE_RE.match(text)
    if fenced:
        text = fenced.group(1).strip()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExtractError(f"reply is not valid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise ExtractError("reply must be a JSON array")

    properties: list[ExtractedProperty] = []
    seen: set[tuple[str, str]] = set()
    for item in payload:
        if not isinstance(item, dict) or "kind" not in item or "value" not in item:
            raise ExtractError(f"array element is not a {{kind, value}} object: {item!r}")
        kind_raw = str(item["kind"])
        value = str(item["value"]).strip()
        if not value:
            logger.warning("dropping property with empty value (kind=%s)", kind_raw)
            continue
        try:
            kind = EntityKind(kind_raw)
        except ValueError:
            logger.warning("dropping property with unknown kind %r (value=%r)", kind_raw, value)
            continue
        if (kind.value, value) in seen:
            continue
        seen.add((kind.value, value))
        properties.append(ExtractedProperty(kind=kind, raw_value=value))
    return properties


def extract(gateway: CompletionGateway, user_query: str, model_name: str) -> list[ExtractedProperty]:
    """One model round-trip, with a single corrective retry on a bad payload."""
    request = build_extraction_prompt(user_query, model_name)
    reply = gateway.complete(request)
    try:
        return parse_structured_payload(reply)
    except ExtractError as first_error:
        retry = CompletionRequest(
            model_name=request.model_name,
            messages=request.messages
            + (
                Message("assistant", reply),
                Message(
                    "user",
                    f"That reply could not be parsed: {first_error}. "
                    "Reply again with only the JSON array in the documented format.",
                ),
            ),
            structured_output_schema=request.structured_output_schema,
        )
        return parse_structured_payload(gateway.complete(retry))
