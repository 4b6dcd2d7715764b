"""Query-title semantic similarity on a [0,5] scale and fake-case logic.

Two scorers share one interface: a self-contained lexical scorer
(5 x cosine over stemmed-token count vectors) and a file-backed scorer
that serves precomputed pair scores, which is how externally computed
model scores enter the pipeline without a model dependency.
"""

from __future__ import annotations

import enum
import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from typing import Protocol

from . import textprep, traces

DEFAULT_THRESHOLD = 1.3


class Scorer(Protocol):
    kind: str

    def score(self, query: str, title: str) -> float:
        """Similarity of one pair on the [0, 5] scale."""
        ...


class SimilarityCase(enum.Enum):
    CONTEXT_MISMATCH = "context_mismatch"
    QUERY_FAKE_ONLY = "query_fake_only"
    TITLE_FAKE_ONLY = "title_fake_only"
    BOTH_FAKE = "both_fake"
    NO_FAKE_SIGNAL = "no_fake_signal"


class ScoreLookupError(KeyError):
    """A (query, title) pair is absent from an external scores file."""


def hash_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class LexicalScorer:
    """5 x cosine similarity of stemmed-token count vectors."""

    kind = "lexical_builtin"

    def __init__(self, stopwords: frozenset[str] = textprep.STOPWORDS) -> None:
        self._stopwords = stopwords

    def score(self, query: str, title: str) -> float:
        q = textprep.normalize(query, self._stopwords)
        t = textprep.normalize(title, self._stopwords)
        if not q or not t:
            return 0.0
        qc, tc = Counter(q), Counter(t)
        # integer dot/norms keep score(a, a) exactly 5.0
        dot = sum(c * tc.get(tok, 0) for tok, c in qc.items())
        if dot == 0:
            return 0.0
        nq = sum(c * c for c in qc.values())
        nt = sum(c * c for c in tc.values())
        s = 5.0 * (dot / math.sqrt(nq * nt))
        return min(5.0, max(0.0, s))


class ExternalFileScorer:
    """Serve precomputed pair scores from a TSV keyed by sha256 hashes.

    missing="error" raises ScoreLookupError on unknown pairs;
    missing="builtin" falls back to the lexical scorer.
    """

    kind = "external_file"

    def __init__(self, path: str, missing: str = "error") -> None:
        if missing not in ("error", "builtin"):
            raise ValueError(f"missing policy must be 'error' or 'builtin', got {missing!r}")
        self._path = path
        self._missing = missing
        self._fallback = LexicalScorer() if missing == "builtin" else None
        self._table: dict[tuple[str, str], float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
                qh, th, raw = parts
                value = float(raw)
                if not 0.0 <= value <= 5.0 or not math.isfinite(value):
                    raise ValueError(f"{path}:{lineno}: score {raw} outside [0,5]")
                self._table[(qh, th)] = value

    def score(self, query: str, title: str) -> float:
        if not textprep.normalize(query) or not textprep.normalize(title):
            return 0.0
        key = (hash_text(query), hash_text(title))
        if key in self._table:
            return self._table[key]
        if self._fallback is not None:
            return self._fallback.score(query, title)
        raise ScoreLookupError(
            f"no precomputed score for pair ({key[0][:12]}..., {key[1][:12]}...)"
        )


def write_scores_file(path: str, pairs) -> int:
    """Write (query, title, score) triples as a hash-keyed scores TSV."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for query, title, value in pairs:
            if not 0.0 <= value <= 5.0:
                raise ValueError(f"score {value} outside [0,5]")
            fh.write(f"{hash_text(query)}\t{hash_text(title)}\t{value:.9g}\n")
            n += 1
    return n


def classify_case(
    s: float,
    query_uns: int,
    title_uns: int,
    threshold: float = DEFAULT_THRESHOLD,
) -> SimilarityCase:
    """Map a score and the two fake flags to one case.

    Below the threshold the pair is a context mismatch regardless of flags;
    the boundary s == threshold counts as same-context.
    """
    if not 0.0 <= s <= 5.0:
        raise ValueError(f"score {s} outside [0,5]")
    if not 0.0 <= threshold <= 5.0:
        raise ValueError(f"threshold {threshold} outside [0,5]")
    if query_uns not in (0, 1) or title_uns not in (0, 1):
        raise ValueError("fake flags must be 0 or 1")
    if s < threshold:
        return SimilarityCase.CONTEXT_MISMATCH
    if query_uns and title_uns:
        return SimilarityCase.BOTH_FAKE
    if query_uns:
        return SimilarityCase.QUERY_FAKE_ONLY
    if title_uns:
        return SimilarityCase.TITLE_FAKE_ONLY
    return SimilarityCase.NO_FAKE_SIGNAL


@dataclass(frozen=True)
class PostSimilaritySummary:
    s_max: float
    s_mean: float
    title_uns_frac: float
    title_db_frac: float
    cases: tuple[SimilarityCase, ...]
    scores: tuple[float, ...] = ()


def aggregate_post(
    scorer: Scorer,
    query: str,
    titles: list[str],
    lexicon: traces.TraceLexicon,
    threshold: float = DEFAULT_THRESHOLD,
) -> PostSimilaritySummary:
    """Score the query against every title and fold into one summary."""
    if not titles:
        return PostSimilaritySummary(0.0, 0.0, 0.0, 0.0, ())
    query_uns = traces.detect(query, lexicon).uns
    scores = []
    cases = []
    uns_hits = 0
    db_hits = 0
    for title in titles:
        hit = traces.detect(title, lexicon)
        uns_hits += hit.uns
        db_hits += hit.db
        s = scorer.score(query, title)
        scores.append(s)
        cases.append(classify_case(s, query_uns, hit.uns, threshold))
    n = len(titles)
    return PostSimilaritySummary(
        s_max=max(scores),
        s_mean=sum(scores) / n,
        title_uns_frac=uns_hits / n,
        title_db_frac=db_hits / n,
        cases=tuple(cases),
        scores=tuple(scores),
    )
