"""The five-feature representation of a post given its image evidence.

Feature order is fixed and load-bearing: model files and CSVs all use
(uns_query, uns_titles, db_query, db_titles, s).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Post, label_to_int
from .evidence import EvidenceStore, get_titles
from .similarity import DEFAULT_THRESHOLD, Scorer, aggregate_post
from .traces import TraceLexicon, default_lexicon, detect

log = logging.getLogger(__name__)

FEATURE_NAMES = ("uns_query", "uns_titles", "db_query", "db_titles", "s")
TITLE_REDUCERS = ("fraction", "any")


@dataclass(frozen=True)
class FeatureVector:
    uns_query: float
    uns_titles: float
    db_query: float
    db_titles: float
    s: float
    low_evidence: bool = False

    def __post_init__(self) -> None:
        for name in ("uns_query", "uns_titles", "db_query", "db_titles"):
            v = getattr(self, name)
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be finite in [0,1], got {v!r}")
        if not np.isfinite(self.s) or not 0.0 <= self.s <= 5.0:
            raise ValueError(f"s must be finite in [0,5], got {self.s!r}")

    def values(self) -> tuple[float, float, float, float, float]:
        return (self.uns_query, self.uns_titles, self.db_query, self.db_titles, self.s)


def featurize(
    post: Post,
    store: EvidenceStore,
    engine: str,
    scorer: Scorer,
    lexicon: TraceLexicon | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = 10,
    title_trace_reduce: str = "fraction",
) -> FeatureVector:
    """Build one feature vector from raw post text and stored evidence.

    Trace detection runs on the raw tweet text (punctuation still intact,
    so "?" can fire). A post whose image has no stored titles gets zero
    title features and the low_evidence flag.
    """
    if post.media_kind != "image":
        raise ValueError(f"featurize expects image posts, got media_kind={post.media_kind!r}")
    if title_trace_reduce not in TITLE_REDUCERS:
        raise ValueError(f"title_trace_reduce must be one of {TITLE_REDUCERS}")
    lexicon = lexicon or default_lexicon()

    q = detect(post.text, lexicon)
    uns_query = float(q.uns)
    db_query = float(q.db)

    titles = get_titles(store, post.image_id, engine, k)
    if not titles:
        return FeatureVector(uns_query, 0.0, db_query, 0.0, 0.0, low_evidence=True)

    summary = aggregate_post(scorer, post.text, titles, lexicon, threshold=threshold)
    if title_trace_reduce == "any":
        uns_titles = 1.0 if summary.title_uns_frac > 0 else 0.0
        db_titles = 1.0 if summary.title_db_frac > 0 else 0.0
    else:
        uns_titles = summary.title_uns_frac
        db_titles = summary.title_db_frac
    return FeatureVector(uns_query, uns_titles, db_query, db_titles, summary.s_max)


@dataclass(frozen=True)
class FeatureTable:
    post_ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    low_evidence: tuple[bool, ...]

    def __post_init__(self) -> None:
        if self.X.shape != (len(self.post_ids), len(FEATURE_NAMES)):
            raise ValueError(f"X must be n x {len(FEATURE_NAMES)}, got {self.X.shape}")
        if self.y.shape != (len(self.post_ids),):
            raise ValueError("y length must match post_ids")

    def __len__(self) -> int:
        return len(self.post_ids)

    def subset(self, post_ids: set[str]) -> "FeatureTable":
        keep = [i for i, pid in enumerate(self.post_ids) if pid in post_ids]
        return FeatureTable(
            post_ids=tuple(self.post_ids[i] for i in keep),
            X=self.X[keep].copy() if keep else np.zeros((0, len(FEATURE_NAMES))),
            y=self.y[keep].copy() if keep else np.zeros((0,), dtype=np.int64),
            low_evidence=tuple(self.low_evidence[i] for i in keep),
        )


def featurize_corpus(
    corpus: Corpus,
    store: EvidenceStore,
    engine: str,
    scorer: Scorer,
    lexicon: TraceLexicon | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = 10,
    title_trace_reduce: str = "fraction",
) -> FeatureTable:
    """Feature rows in corpus order; rows that fail are skipped with a
    logged diagnostic rather than poisoning the whole table."""
    lexicon = lexicon or default_lexicon()
    post_ids: list[str] = []
    rows: list[tuple[float, ...]] = []
    labels: list[int] = []
    flags: list[bool] = []
    for post in corpus.posts:
        try:
            fv = featurize(post, store, engine, scorer, lexicon,
                           threshold=threshold, k=k,
                           title_trace_reduce=title_trace_reduce)
        except (ValueError, KeyError) as exc:
            log.warning("skipped post %s: %s", post.post_id, exc)
            continue
        post_ids.append(post.post_id)
        rows.append(fv.values())
        labels.append(label_to_int(post.label))
        flags.append(fv.low_evidence)
    X = np.array(rows, dtype=np.float64) if rows else np.zeros((0, len(FEATURE_NAMES)))
    y = np.array(labels, dtype=np.int64)
    return FeatureTable(tuple(post_ids), X, y, tuple(flags))


def save_features(table: FeatureTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("post_id",) + FEATURE_NAMES + ("label",))
        for i, pid in enumerate(table.post_ids):
            writer.writerow(
                [pid] + [f"{v:.9g}" for v in table.X[i]] + [int(table.y[i])]
            )


def load_features(path: str) -> FeatureTable:
    expected = ("post_id",) + FEATURE_NAMES + ("label",)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != expected:
            raise ValueError(f"{path}: header mismatch: expected {expected}, got {header}")
        post_ids: list[str] = []
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise ValueError(f"{path}: line {lineno}: expected {len(expected)} cells")
            post_ids.append(row[0])
            rows.append([float(v) for v in row[1:-1]])
            labels.append(int(row[-1]))
    X = np.array(rows, dtype=np.float64) if rows else np.zeros((0, len(FEATURE_NAMES)))
    # low-evidence flags are not persisted; reconstruct from all-zero title features
    flags = tuple(bool(x[1] == 0.0 and x[3] == 0.0 and x[4] == 0.0) for x in rows)
    return FeatureTable(tuple(post_ids), X, np.array(labels, dtype=np.int64), flags)
