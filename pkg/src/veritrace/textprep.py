"""Deterministic text normalization and sequence encoding.

The pipeline feeding the recurrent classifier (and the built-in lexical
similarity scorer) is: lowercase, remove URLs, strip punctuation,
whitespace-tokenize, drop stop-words, suffix-stem. Trace detection
(veritrace.traces) runs on RAW text before any of this: stripping
punctuation would destroy the question-mark doubt signal.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

PAD_ID = 0
UNK_ID = 1
DEFAULT_MAX_LEN = 50

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")


def _load_packaged_stopwords() -> frozenset[str]:
    text = resources.files("veritrace.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


STOPWORDS: frozenset[str] = _load_packaged_stopwords()


# ---------------------------------------------------------------------------
# Porter-style suffix stripper
# ---------------------------------------------------------------------------

def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in "aeiou":
        return False
    if ch == "y":
        # y after a consonant acts as a vowel (syzygy), else consonant (toy)
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem_part: str) -> int:
    """Number of vowel->consonant transitions: the m of [C](VC)^m[V]."""
    n = 0
    i = 0
    length = len(stem_part)
    while i < length and _is_cons(stem_part, i):
        i += 1
    while i < length:
        while i < length and not _is_cons(stem_part, i):
            i += 1
        if i >= length:
            break
        n += 1
        while i < length and _is_cons(stem_part, i):
            i += 1
    return n


def _has_vowel(stem_part: str) -> bool:
    return any(not _is_cons(stem_part, i) for i in range(len(stem_part)))


def _ends_double_cons(w: str) -> bool:
    return len(w) >= 2 and w[-1] == w[-2] and _is_cons(w, len(w) - 1)


def _ends_cvc(w: str) -> bool:
    if len(w) < 3:
        return False
    return (
        _is_cons(w, len(w) - 3)
        and not _is_cons(w, len(w) - 2)
        and _is_cons(w, len(w) - 1)
        and w[-1] not in "wxy"
    )


# (suffix, replacement) pairs; longest suffix wins, condition m > 0
_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

# bare suffixes dropped when m > 1; "ion" additionally needs a stem ending s/t
_STEP4 = (
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion",
    "ism", "ate", "iti", "ous", "ive", "ize", "al", "er", "ic", "ou",
)


def _step1b_fixup(w: str) -> str:
    if w.endswith(("at", "bl", "iz")):
        return w + "e"
    if _ends_double_cons(w) and w[-1] not in "lsz":
        return w[:-1]
    if _measure(w) == 1 and _ends_cvc(w):
        return w + "e"
    return w


def stem(word: str) -> str:
    """Strip common English suffixes (Porter's rule table, steps 1-5)."""
    if len(word) <= 2:
        return word
    w = word

    # step 1a: plurals
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b: -eed / -ed / -ing
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w = _step1b_fixup(w[:-2])
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = _step1b_fixup(w[:-3])

    # step 1c: trailing y -> i
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # steps 2 and 3: map derivational suffixes when m > 0
    for table in (_STEP2, _STEP3):
        for suffix, replacement in sorted(table, key=lambda p: -len(p[0])):
            if w.endswith(suffix):
                base = w[: -len(suffix)]
                if _measure(base) > 0:
                    w = base + replacement
                break

    # step 4: drop residual suffixes when m > 1
    for suffix in sorted(_STEP4, key=len, reverse=True):
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if _measure(base) > 1 and (suffix != "ion" or base.endswith(("s", "t"))):
                w = base
            break

    # step 5a: trailing e
    if w.endswith("e"):
        base = w[:-1]
        m = _measure(base)
        if m > 1 or (m == 1 and not _ends_cvc(base)):
            w = base

    # step 5b: -ll -> -l when m > 1
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w


# ---------------------------------------------------------------------------
# Normalization pipeline
# ---------------------------------------------------------------------------

def _strip_punct(text: str) -> str:
    return "".join(ch if ch.isalnum() else " " for ch in text)


def normalize(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lowercase, drop URLs and punctuation, tokenize, drop stop-words, stem.

    The stop-word-drop + stem stage is iterated to a fixed point so the
    result is idempotent (a stem may itself be a stop-word, e.g.
    willing -> will, and Porter's +e fixup can feed a later e-deletion).
    Empty input yields an empty list.
    """
    lowered = _URL_RE.sub(" ", text.lower())
    tokens = _strip_punct(lowered).split()
    while True:
        reduced = [stem(t) for t in tokens if t not in stopwords]
        if reduced == tokens:
            return tokens
        tokens = reduced


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vocab:
    """Token -> id mapping. Ids 0 and 1 are reserved for PAD and UNK."""

    token_to_id: Mapping[str, int]
    min_freq: int = 1
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self) -> None:
        ids = sorted(self.token_to_id.values())
        if ids and (ids[0] < 2 or ids != list(range(2, 2 + len(ids)))):
            raise ValueError("vocab ids must be dense in [2, size)")

    @property
    def size(self) -> int:
        return len(self.token_to_id) + 2

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"min_freq={self.min_freq} max_len={self.max_len}\n".encode())
        for token, idx in sorted(self.token_to_id.items(), key=lambda kv: kv[1]):
            h.update(f"{token}\t{idx}\n".encode())
        return h.hexdigest()


def build_vocab(
    streams: Iterable[list[str]],
    min_freq: int = 1,
    max_len: int = DEFAULT_MAX_LEN,
) -> Vocab:
    """Index every token with corpus frequency >= min_freq.

    Ids are assigned in descending frequency, ties broken lexicographically,
    so the result is independent of stream order.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for s in streams:
        counts.update(s)
    ranked = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    return Vocab({t: i + 2 for i, t in enumerate(ranked)}, min_freq, max_len)


def encode(stream: list[str], vocab: Vocab, max_len: int | None = None) -> list[int]:
    """Map tokens to ids, truncate at the tail, right-pad with PAD."""
    if max_len is None:
        max_len = vocab.max_len
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.id_of(t) for t in stream[:max_len]]
    return ids + [PAD_ID] * (max_len - len(ids))


def save_vocab(vocab: Vocab, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"#veritrace-vocab\tsize={vocab.size}"
            f"\tmin_freq={vocab.min_freq}\tmax_len={vocab.max_len}\n"
        )
        for token, idx in sorted(vocab.token_to_id.items(), key=lambda kv: kv[1]):
            fh.write(f"{token}\t{idx}\n")


def load_vocab(path: str) -> Vocab:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#veritrace-vocab"):
            raise ValueError(f"{path}: not a veritrace vocab file")
        meta = dict(kv.split("=", 1) for kv in header.split("\t")[1:])
        mapping = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            token, idx = line.split("\t")
            mapping[token] = int(idx)
    return Vocab(mapping, int(meta["min_freq"]), int(meta["max_len"]))


def load_stopwords(path: str) -> frozenset[str]:
    """Read a one-token-per-line stop-word file (# comments allowed)."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            line.strip() for line in fh
            if line.strip() and not line.lstrip().startswith("#")
        )
