"""Match extracted entities against database lookup tables with string similarity.

Scores combine a normalized Levenshtein ratio with a token/abbreviation
component, so one-letter typos, partial names ("messi") and compact
abbreviations ("ManU") all land on the right row. Tuning knobs:

  AUTO_ACCEPT_THRESHOLD  score needed to resolve without asking the user
  CANDIDATE_FLOOR        minimum score to be offered as an option at all
  SEPARATION_MARGIN      lead over the runner-up required to auto-resolve
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from fractions import Fraction

from .extractor import ExtractedProperty

AUTO_ACCEPT_THRESHOLD = 0.90
CANDIDATE_FLOOR = 0.40
SEPARATION_MARGIN = 0.10

# Token component never reaches 1.0: only literal equality scores 1.0.
_TOKEN_MATCH_SCORE = Fraction(19, 20)  # 0.95
_ABBREVIATION_SCORE = Fraction(23, 25)  # 0.92

_WS_RE = re.compile(r"\s+")


class InvalidChoiceError(Exception):
    """User selection index outside the offered candidate list."""


@dataclass(frozen=True)
class Candidate:
    primary_key: str
    canonical_name: str
    score: float


@dataclass(frozen=True)
class Resolved:
    primary_key: str
    canonical_name: str
    score: float


@dataclass(frozen=True)
class Ambiguous:
    candidates: tuple[Candidate, ...]
    raw_value: str


@dataclass(frozen=True)
class Unmatched:
    raw_value: str


ValidationOutcome = Resolved | Ambiguous | Unmatched


# User replies to an Ambiguous outcome.
@dataclass(frozen=True)
class SelectedCandidate:
    index: int


@dataclass(frozen=True)
class PassThrough:
    pass


@dataclass(frozen=True)
class CustomString:
    text: str


def normalize(s: str) -> str:
    """Lowercase, strip diacritics and punctuation, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", s.lower())
    kept = []
    for ch in decomposed:
        if unicodedata.combining(ch):
            continue
        if ch.isalnum() or ch.isspace():
            kept.append(ch)
    return _WS_RE.sub(" ", "".join(kept)).strip()


def levenshtein(a: str, b: str) -> int:
    """Edit distance, two-row DP."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def _prefix_cover_pieces(word: str, tokens: tuple[str, ...]) -> int | None:
    """Fewest nonempty prefixes of an ordered token subsequence spelling `word`.

    "manu" over ("manchester", "united") -> 2 ("man" + "u"). None when no cover.
    """
    best: dict[int, int] = {0: 0}
    for token in tokens:
        advanced = dict(best)
        for pos, pieces in best.items():
            limit = min(len(token), len(word) - pos)
            for length in range(1, limit + 1):
                if word[pos + length - 1] != token[length - 1]:
                    break
                landing = pos + length
                if advanced.get(landing, 1 << 30) > pieces + 1:
                    advanced[landing] = pieces + 1
        best = advanced
    return best.get(len(word))


def _coverage(x_tokens: tuple[str, ...], y_tokens: tuple[str, ...]) -> Fraction:
    """Length-weighted fraction of x's tokens found in y (exact or as a prefix)."""
    total = sum(len(t) for t in x_tokens)
    if total == 0:
        return Fraction(0)
    y_set = set(y_tokens)
    covered = Fraction(0)
    for tx in x_tokens:
        if tx in y_set:
            covered += len(tx)
            continue
        best = Fraction(0)
        for ty in y_tokens:
            if ty.startswith(tx):
                ratio = Fraction(len(tx), len(ty))
                if ratio > best:
                    best = ratio
        covered += len(tx) * best
    return covered / total


def _token_component(a: str, b: str) -> Fraction:
    a_tokens = tuple(a.split())
    b_tokens = tuple(b.split())
    score = max(_coverage(a_tokens, b_tokens), _coverage(b_tokens, a_tokens))
    score *= _TOKEN_MATCH_SCORE
    for word, tokens in ((a.replace(" ", ""), b_tokens), (b.replace(" ", ""), a_tokens)):
        if len(word) >= 3 and len(tokens) >= 2:
            pieces = _prefix_cover_pieces(word, tokens)
            if pieces is not None and pieces >= 2:
                score = max(score, _ABBREVIATION_SCORE)
    return score


def similarity(a: str, b: str) -> float:
    """Similarity in [0, 1] over already-normalized strings; 1.0 iff equal."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    lev = Fraction(1) - Fraction(levenshtein(a, b), max(len(a), len(b)))
    return float(max(lev, _token_component(a, b)))


_SEASON_RE = re.compile(r"\b(\d{4}|\d{2})\s*[-/]\s*(\d{4}|\d{2})\b")
_SEASON_SINGLE_RE = re.compile(r"\b(\d{4})\b")


def _expand_year(two_or_four: str, century_hint: int | None = None) -> int:
    if len(two_or_four) == 4:
        return int(two_or_four)
    short = int(two_or_four)
    if century_hint is not None:
        return (century_hint // 100) * 100 + short
    return 1900 + short if short >= 90 else 2000 + short


def normalize_season(raw: str) -> str | None:
    """Deterministic season spellings -> "YYYY-YYYY", else None.

    Accepts "2015-2016", "2015-16", "2015/16", "15-16", "16/17 season",
    and a bare starting year ("2015").
    """
    match = _SEASON_RE.search(raw)
    if match:
        first = _expand_year(match.group(1))
        second = _expand_year(match.group(2), century_hint=first)
        if second == first + 1:
            return f"{first}-{second}"
        return None
    match = _SEASON_SINGLE_RE.search(raw)
    if match:
        first = int(match.group(1))
        return f"{first}-{first + 1}"
    return None


def score_candidates(raw_value: str, candidates: list[tuple[str, str]]) -> list[Candidate]:
    """All candidates scored against raw_value, best first, ties by name."""
    query = normalize(raw_value)
    scored = [
        Candidate(pk, name, similarity(query, normalize(name))) for pk, name in candidates
    ]
    scored.sort(key=lambda c: (-c.score, c.canonical_name))
    return scored


def validate_property(
    prop: ExtractedProperty,
    candidates: list[tuple[str, str]],
    few_shot: int,
) -> ValidationOutcome:
    """Resolve, shortlist, or pass through one extracted property."""
    if few_shot < 1:
        raise ValueError("few_shot must be >= 1")
    if not candidates:
        return Unmatched(prop.raw_value)

    raw = prop.raw_value
    if prop.kind.value == "season":
        season = normalize_season(raw)
        if season is not None:
            for pk, name in candidates:
                if name == season:
                    return Resolved(pk, name, 1.0)
            raw = season  # fall back to fuzzy scoring on the normalized spelling

    scored = score_candidates(raw, candidates)
    top = scored[0]
    separated = len(scored) == 1 or top.score - scored[1].score >= SEPARATION_MARGIN
    if top.score >= AUTO_ACCEPT_THRESHOLD and separated:
        return Resolved(top.primary_key, top.canonical_name, top.score)
    qualifying = [c for c in scored if c.score >= CANDIDATE_FLOOR]
    if qualifying:
        return Ambiguous(tuple(qualifying[:few_shot]), prop.raw_value)
    return Unmatched(prop.raw_value)


def apply_user_choice(
    prop: ExtractedProperty,
    outcome: Ambiguous,
    choice: SelectedCandidate | PassThrough | CustomString,
    *,
    all_candidates: list[tuple[str, str]],
    few_shot: int,
) -> ExtractedProperty:
    """Turn the user's answer to a clarification into a final property.

    A CustomString is re-validated once; if it is still ambiguous it is
    passed through untranslated.
    """
    if isinstance(choice, SelectedCandidate):
        if not 0 <= choice.index < len(outcome.candidates):
            raise InvalidChoiceError(
                f"choice {choice.index} out of range 0..{len(outcome.candidates) - 1}"
            )
        picked = outcome.candidates[choice.index]
        return replace(prop, resolved=(picked.primary_key, picked.canonical_name))
    if isinstance(choice, PassThrough):
        return replace(prop, resolved=None)
    retried = replace(prop, raw_value=choice.text, resolved=None)
    second = validate_property(retried, all_candidates, few_shot)
    if isinstance(second, Resolved):
        return replace(retried, resolved=(second.primary_key, second.canonical_name))
    return retried
