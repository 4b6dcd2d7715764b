"""Lexicon detection of doubt and fake expressions in raw post text.

Matching happens on RAW text, before any normalization: the textprep
pipeline strips punctuation and would erase the question-mark doubt
signal. Phrases match case-insensitively at token boundaries, never as
substrings ("not" must not fire on "nothing").
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

QUESTION_MARK = "?"

_WORD_RE = re.compile(r"\w+")


def _split_phrase(phrase: str) -> tuple[str, ...]:
    return tuple(phrase.split())


@dataclass(frozen=True)
class TraceLexicon:
    """Doubt and fake phrase corpora, lowercase and single-spaced."""

    doubt_phrases: tuple[str, ...]
    fake_phrases: tuple[str, ...]
    question_mark_is_doubt: bool = True

    def __post_init__(self) -> None:
        for phrase in (*self.doubt_phrases, *self.fake_phrases):
            if not phrase or phrase != " ".join(phrase.split()) or phrase != phrase.lower():
                raise ValueError(f"bad lexicon phrase: {phrase!r}")


@dataclass(frozen=True)
class TraceResult:
    db: int
    uns: int
    matched_phrases: tuple[str, ...] = ()


def _load_packaged_lexicon(name: str) -> tuple[str, ...]:
    text = resources.files("veritrace.data").joinpath(name).read_text("utf-8")
    return tuple(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


def load_phrase_file(path: str) -> tuple[str, ...]:
    """Read a one-phrase-per-line lexicon file (# comments allowed)."""
    with open(path, encoding="utf-8") as fh:
        return tuple(
            line.strip().lower() for line in fh
            if line.strip() and not line.lstrip().startswith("#")
        )


def default_lexicon() -> TraceLexicon:
    """The frozen phrase corpora shipped with the package."""
    return TraceLexicon(
        doubt_phrases=_load_packaged_lexicon("doubt.lex"),
        fake_phrases=_load_packaged_lexicon("fake.lex"),
    )


def load_lexicon(doubt_path: str, fake_path: str, question_mark_is_doubt: bool = True) -> TraceLexicon:
    return TraceLexicon(
        doubt_phrases=load_phrase_file(doubt_path),
        fake_phrases=load_phrase_file(fake_path),
        question_mark_is_doubt=question_mark_is_doubt,
    )


def _phrase_in_tokens(tokens: list[str], phrase: tuple[str, ...]) -> bool:
    n = len(phrase)
    if n == 0 or n > len(tokens):
        return False
    first = phrase[0]
    return any(
        tokens[i] == first and tuple(tokens[i:i + n]) == phrase
        for i in range(len(tokens) - n + 1)
    )


def detect(text: str, lexicon: TraceLexicon) -> TraceResult:
    """Fire the doubt (db) and fake (uns) flags on raw text.

    A phrase of n words fires iff its token sequence appears contiguously
    in the word-tokenized text; a literal question mark anywhere fires db
    when the lexicon enables it.
    """
    tokens = _WORD_RE.findall(text.lower())
    matched: list[str] = []
    db = 0
    if lexicon.question_mark_is_doubt and QUESTION_MARK in text:
        db = 1
        matched.append(QUESTION_MARK)
    for phrase in lexicon.doubt_phrases:
        if _phrase_in_tokens(tokens, _split_phrase(phrase)):
            db = 1
            matched.append(phrase)
    uns = 0
    for phrase in lexicon.fake_phrases:
        if _phrase_in_tokens(tokens, _split_phrase(phrase)):
            uns = 1
            matched.append(phrase)
    return TraceResult(db=db, uns=uns, matched_phrases=tuple(matched))


def uncertainty_score(db: int, uns: int, mode: str = "sum") -> int:
    """Combine the two indicators: arithmetic sum in {0,1,2} by default,
    saturating OR in {0,1} when mode="or"."""
    if db not in (0, 1) or uns not in (0, 1):
        raise ValueError(f"db and uns must be 0 or 1, got ({db}, {uns})")
    if mode == "sum":
        return db + uns
    if mode == "or":
        return max(db, uns)
    raise ValueError(f"unknown mode: {mode!r}")
