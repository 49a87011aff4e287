"""Per-session orchestration of the extract -> validate -> answer pipeline.

A query either completes in one step or parks the session in
AWAITING_CLARIFICATION with a queue of ambiguous entities; each
clarification answer consumes one queue entry until the answer can run.
"""

from __future__ import annotations

import logging
import uuid
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .agent import AgentError, AnswerBundle, CleanedQuery, StepEvent, answer
from .config import EngineConfig
from .database import DatabaseHandle
from .extractor import ExtractedProperty, ExtractError, extract
from .gateway import CompletionGateway, GatewayError
from .validator import (
    Ambiguous,
    Candidate,
    CustomString,
    InvalidChoiceError,
    PassThrough,
    Resolved,
    SelectedCandidate,
    apply_user_choice,
    validate_property,
)

logger = logging.getLogger(__name__)


class OutOfTurnError(Exception):
    """Operation not legal in the session's current state."""


class SessionState(Enum):
    IDLE = "idle"
    AWAITING_CLARIFICATION = "awaiting_clarification"
    PROCESSING = "processing"


@dataclass(frozen=True)
class HistoryEntry:
    kind: str  # user | step | clarification | answer | failure
    text: str
    data: dict | None = None


@dataclass
class PendingQuery:
    original_text: str
    settled: list[ExtractedProperty]
    queue: deque  # of (ExtractedProperty, Ambiguous)
    steps: list[StepEvent]


@dataclass
class Session:
    session_id: str
    allows_custom: bool = False
    state: SessionState = SessionState.IDLE
    pending: PendingQuery | None = None
    history: list[HistoryEntry] = field(default_factory=list)


@dataclass(frozen=True)
class FinalAnswer:
    bundle: AnswerBundle


@dataclass(frozen=True)
class NeedsClarification:
    kind: str
    raw_value: str
    candidates: tuple[Candidate, ...]
    allows_pass_through: bool
    allows_custom: bool


@dataclass(frozen=True)
class Failure:
    error: Exception
    user_message: str


StepResult = FinalAnswer | NeedsClarification | Failure


class Orchestrator:
    """Drives sessions against one database handle and one gateway."""

    def __init__(
        self,
        handle: DatabaseHandle,
        gateway: CompletionGateway,
        config: EngineConfig,
        validator_enabled: bool = True,
    ):
        self.handle = handle
        self.gateway = gateway
        self.config = config
        self.validator_enabled = validator_enabled
        self._schema_text = handle.schema_description()

    def create_session(self, allows_custom: bool = False) -> Session:
        return Session(session_id=uuid.uuid4().hex, allows_custom=allows_custom)

    # -- internals ------------------------------------------------------

    def _candidates_for(self, kind) -> list[tuple[str, str]]:
        return self.handle.list_candidates(kind)

    def _clarification(self, session: Session) -> NeedsClarification:
        prop, outcome = session.pending.queue[0]
        options = ", ".join(c.canonical_name for c in outcome.candidates)
        session.history.append(
            HistoryEntry(
                "clarification",
                f"which {prop.kind.value} did you mean by '{outcome.raw_value}'? options: {options}",
                {"kind": prop.kind.value, "raw_value": outcome.raw_value},
            )
        )
        return NeedsClarification(
            kind=prop.kind.value,
            raw_value=outcome.raw_value,
            candidates=outcome.candidates,
            allows_pass_through=True,
            allows_custom=session.allows_custom,
        )

    def _fail(self, session: Session, error: Exception, user_message: str) -> Failure:
        logger.warning("query failed: %s", error)
        session.history.append(HistoryEntry("failure", user_message))
        session.pending = None
        session.state = SessionState.IDLE
        return Failure(error, user_message)

    def _run_answer(self, session: Session) -> StepResult:
        pending = session.pending
        cq = CleanedQuery(
            original_text=pending.original_text,
            properties=tuple(pending.settled),
            schema_text=self._schema_text,
        )
        try:
            bundle = answer(
                self.gateway,
                self.handle,
                cq,
                model_name=self.config.model_name,
                prior_steps=tuple(pending.steps),
            )
        except (AgentError, GatewayError) as exc:
            return self._fail(session, exc, f"could not answer the question ({exc})")
        for step in bundle.step_trace[len(pending.steps):]:
            session.history.append(HistoryEntry("step", f"{step.stage}: {step.detail}", step.data))
        session.history.append(HistoryEntry("answer", bundle.rendered_answer, {"sql": bundle.sql}))
        session.pending = None
        session.state = SessionState.IDLE
        return FinalAnswer(bundle)

    # -- public surface --------------------------------------------------

    def submit_query(self, session: Session, user_text: str) -> StepResult:
        if session.state is not SessionState.IDLE:
            raise OutOfTurnError("a clarification is pending; answer it first")
        if not user_text.strip():
            return self._fail(session, ValueError("blank input"), "empty query")

        session.state = SessionState.PROCESSING
        session.history.append(HistoryEntry("user", user_text))
        try:
            properties = extract(self.gateway, user_text, self.config.model_name)
        except (ExtractError, GatewayError) as exc:
            return self._fail(session, exc, f"could not understand the question ({exc})")
        extracted_note = (
            ", ".join(f"{p.kind.value} '{p.raw_value}'" for p in properties) or "none"
        )
        steps = [
            StepEvent(
                "extraction",
                f"extracted {len(properties)} properties: {extracted_note}",
                {"properties": [{"kind": p.kind.value, "raw": p.raw_value} for p in properties]},
            )
        ]
        session.history.append(HistoryEntry("step", f"extraction: {steps[0].detail}", steps[0].data))

        settled: list[ExtractedProperty] = []
        ambiguous: list[tuple[ExtractedProperty, Ambiguous]] = []
        validation_data = []
        notes = []
        for prop in properties:
            if not self.validator_enabled:
                settled.append(prop)
                validation_data.append(
                    {"kind": prop.kind.value, "raw": prop.raw_value, "status": "pass_through"}
                )
                notes.append(f"{prop.kind.value} '{prop.raw_value}' passed through")
                continue
            outcome = validate_property(prop, self._candidates_for(prop.kind), self.config.few_shot)
            if isinstance(outcome, Resolved):
                settled.append(replace(prop, resolved=(outcome.primary_key, outcome.canonical_name)))
                validation_data.append(
                    {
                        "kind": prop.kind.value,
                        "raw": prop.raw_value,
                        "status": "resolved",
                        "primary_key": outcome.primary_key,
                        "canonical": outcome.canonical_name,
                        "score": outcome.score,
                    }
                )
                notes.append(
                    f"{prop.kind.value} '{prop.raw_value}' -> {outcome.canonical_name} "
                    f"[{outcome.primary_key}] (score {outcome.score:.2f})"
                )
            elif isinstance(outcome, Ambiguous):
                ambiguous.append((prop, outcome))
                validation_data.append(
                    {
                        "kind": prop.kind.value,
                        "raw": prop.raw_value,
                        "status": "ambiguous",
                        "options": [c.canonical_name for c in outcome.candidates],
                    }
                )
                notes.append(
                    f"{prop.kind.value} '{prop.raw_value}' is ambiguous "
                    f"({len(outcome.candidates)} options)"
                )
            else:
                settled.append(prop)
                validation_data.append(
                    {"kind": prop.kind.value, "raw": prop.raw_value, "status": "unmatched"}
                )
                notes.append(f"no match for {prop.kind.value} '{prop.raw_value}' (passing through)")
        validation_step = StepEvent(
            "validation",
            "; ".join(notes) if notes else "nothing to validate",
            {"properties": validation_data},
        )
        steps.append(validation_step)
        session.history.append(
            HistoryEntry("step", f"validation: {validation_step.detail}", validation_step.data)
        )

        session.pending = PendingQuery(
            original_text=user_text,
            settled=settled,
            queue=deque(ambiguous),
            steps=steps,
        )
        if ambiguous:
            session.state = SessionState.AWAITING_CLARIFICATION
            return self._clarification(session)
        return self._run_answer(session)

    def resolve_clarification(
        self, session: Session, choice: SelectedCandidate | PassThrough | CustomString
    ) -> StepResult:
        if session.state is not SessionState.AWAITING_CLARIFICATION:
            raise OutOfTurnError("no clarification is pending")
        if isinstance(choice, CustomString) and not session.allows_custom:
            raise InvalidChoiceError("custom values are not allowed in this session")

        session.state = SessionState.PROCESSING
        pending = session.pending
        prop, outcome = pending.queue[0]
        try:
            settled_prop = apply_user_choice(
                prop,
                outcome,
                choice,
                all_candidates=self._candidates_for(prop.kind),
                few_shot=self.config.few_shot,
            )
        except InvalidChoiceError:
            session.state = SessionState.AWAITING_CLARIFICATION
            raise
        pending.queue.popleft()
        pending.settled.append(settled_prop)
        if settled_prop.resolved is not None:
            pk, canonical = settled_prop.resolved
            note = f"clarified {prop.kind.value} '{outcome.raw_value}' -> {canonical} [{pk}]"
        else:
            note = (
                f"clarified {prop.kind.value} '{outcome.raw_value}' -> "
                f"'{settled_prop.raw_value}' passed through"
            )
        step = StepEvent("validation", note, None)
        pending.steps.append(step)
        session.history.append(HistoryEntry("step", f"validation: {note}"))

        if pending.queue:
            session.state = SessionState.AWAITING_CLARIFICATION
            return self._clarification(session)
        return self._run_answer(session)
