"""Rule-based auditing of risk predictions against the source text.

A lexicon scan finds symptom mentions, a NegEx-style window marks negated
ones, a text-level check flags missing time anchors, and a hallucination
guard flags high-risk predictions that no surviving mention supports.
Reports only annotate; they never change the prediction itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .forest import Prediction
from .tokenizer import normalize

# A negation cue suppresses symptom mentions starting within this many
# tokens after it, unless a scope terminator intervenes.
NEGATION_WINDOW = 5

ADVISORY_CONSISTENT = "consistent"
ADVISORY_REVIEW = "review_recommended"


class LexiconError(ValueError):
    """Lexicon file violates the schema."""


@dataclass(frozen=True)
class SymptomEntry:
    name: str
    phrases: tuple[str, ...]
    weight: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise LexiconError("symptom name must be nonempty")
        if not self.phrases:
            raise LexiconError(f"symptom {self.name!r} has no surface phrases")
        for phrase in self.phrases:
            if not phrase or phrase != phrase.lower():
                raise LexiconError(f"symptom {self.name!r}: phrase {phrase!r} must be lowercase and nonempty")
        if not 0.0 < self.weight <= 1.0:
            raise LexiconError(f"symptom {self.name!r}: weight must be in (0, 1], got {self.weight}")


@dataclass(frozen=True)
class Lexicon:
    symptoms: tuple[SymptomEntry, ...]
    negation_cues: tuple[str, ...]
    temporal_anchors: tuple[str, ...]
    scope_terminators: tuple[str, ...]

    @classmethod
    def from_dict(cls, obj: dict) -> "Lexicon":
        try:
            symptoms = tuple(
                SymptomEntry(
                    name=s["name"],
                    phrases=tuple(s["phrases"]),
                    weight=float(s.get("weight", 1.0)),
                )
                for s in obj["symptoms"]
            )
            return cls(
                symptoms=symptoms,
                negation_cues=tuple(obj["negation_cues"]),
                temporal_anchors=tuple(obj["temporal_anchors"]),
                scope_terminators=tuple(obj["scope_terminators"]),
            )
        except (KeyError, TypeError) as exc:
            raise LexiconError(f"lexicon is missing or mistypes a field: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "Lexicon":
        raw = resources.files("cardiotriage").joinpath("data/default_lexicon.json").read_text("utf-8")
        return cls.from_dict(json.loads(raw))


@dataclass
class SymptomMatch:
    """One lexicon hit: token span [start, end) in the normalized text."""

    symptom: str
    span: tuple[int, int]
    phrase: str
    weight: float
    negated: bool = False
    temporally_anchored: bool = False

    def to_dict(self) -> dict:
        return {
            "symptom": self.symptom,
            "span": list(self.span),
            "phrase": self.phrase,
            "weight": self.weight,
            "negated": self.negated,
            "temporally_anchored": self.temporally_anchored,
        }


@dataclass(frozen=True)
class VerificationReport:
    matches: tuple[SymptomMatch, ...]
    temporal_ambiguity: bool
    hallucination_flag: bool
    advisory: str

    def to_dict(self) -> dict:
        return {
            "matches": [m.to_dict() for m in self.matches],
            "temporal_ambiguity": self.temporal_ambiguity,
            "hallucination_flag": self.hallucination_flag,
            "advisory": self.advisory,
        }


def _phrase_tokens(lex: Lexicon) -> list[tuple[tuple[str, ...], SymptomEntry]]:
    # longest phrase first so the scanner is longest-match; ties keep
    # lexicon order for determinism
    items = []
    for entry in lex.symptoms:
        for phrase in entry.phrases:
            items.append((tuple(phrase.split()), entry))
    items.sort(key=lambda it: -len(it[0]))
    return items


def match_symptoms(text: str, lex: Lexicon) -> list[SymptomMatch]:
    """Longest-match-first scan for symptom phrases over normalized tokens;
    matches never overlap."""
    tokens = normalize(text).split()
    phrases = _phrase_tokens(lex)
    matches: list[SymptomMatch] = []
    i = 0
    while i < len(tokens):
        hit = None
        for phrase, entry in phrases:
            if tuple(tokens[i : i + len(phrase)]) == phrase:
                hit = (phrase, entry)
                break
        if hit is None:
            i += 1
            continue
        phrase, entry = hit
        matches.append(
            SymptomMatch(
                symptom=entry.name,
                span=(i, i + len(phrase)),
                phrase=" ".join(phrase),
                weight=entry.weight,
            )
        )
        i += len(phrase)
    return matches


def _find_phrase_positions(tokens: list[str], phrases: tuple[str, ...]) -> list[tuple[int, int]]:
    """All (start, end) spans where any of the phrases occurs."""
    split_phrases = sorted((tuple(p.split()) for p in phrases), key=len, reverse=True)
    spans = []
    for i in range(len(tokens)):
        for phrase in split_phrases:
            if phrase and tuple(tokens[i : i + len(phrase)]) == phrase:
                spans.append((i, i + len(phrase)))
                break
    return spans


def detect_negation(text: str, matches: list[SymptomMatch], lex: Lexicon) -> list[SymptomMatch]:
    """Flag matches preceded by a negation cue within NEGATION_WINDOW tokens
    and no scope terminator in between. Cues only act forward."""
    tokens = normalize(text).split()
    cue_spans = _find_phrase_positions(tokens, lex.negation_cues)
    terminators = set(lex.scope_terminators)
    for match in matches:
        start = match.span[0]
        negated = False
        for cue_start, cue_end in cue_spans:
            if cue_end <= start and start - cue_end < NEGATION_WINDOW:
                between = tokens[cue_end:start]
                if not any(tok in terminators for tok in between):
                    negated = True
                    break
        match.negated = negated
    return matches


def _has_temporal_anchor(text: str, lex: Lexicon) -> bool:
    tokens = normalize(text).split()
    return bool(_find_phrase_positions(tokens, lex.temporal_anchors))


def detect_temporal_ambiguity(text: str, matches: list[SymptomMatch], lex: Lexicon) -> bool:
    """True iff some non-negated symptom mention exists but the text carries
    no time anchor at all. Expects negation-flagged matches."""
    anchored = _has_temporal_anchor(text, lex)
    for match in matches:
        match.temporally_anchored = anchored
    return any(not m.negated for m in matches) and not anchored


def verify_prediction(text: str, pred: Prediction, lex: Lexicon) -> VerificationReport:
    """Audit one prediction against its source text.

    The hallucination flag fires only for high-risk predictions with no
    surviving (non-negated) symptom mention. The report is advisory: the
    prediction object is never modified.
    """
    matches = detect_negation(text, match_symptoms(text, lex), lex)
    ambiguous = detect_temporal_ambiguity(text, matches, lex)
    supported = any(not m.negated for m in matches)
    hallucination = pred.label == 1 and not supported
    advisory = ADVISORY_REVIEW if (hallucination or ambiguous) else ADVISORY_CONSISTENT
    return VerificationReport(
        matches=tuple(matches),
        temporal_ambiguity=ambiguous,
        hallucination_flag=hallucination,
        advisory=advisory,
    )
