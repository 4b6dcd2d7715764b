"""Post corpus ingestion, validation, media filtering, and stratified splits.

Two interchange formats: a TSV with a fixed header (tab/newline/backslash
characters inside fields are backslash-escaped so round-trips are exact)
and a JSONL fixture format with one post object per line.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from typing import Iterable

log = logging.getLogger(__name__)

LABELS = ("real", "fake")
MEDIA_KINDS = ("image", "video")

TSV_COLUMNS = ("post_id", "text", "user_id", "image_id", "event", "label", "media_kind")
# a trailing lang column is accepted and ignored: text arrives pre-translated
TSV_COLUMNS_WITH_LANG = TSV_COLUMNS + ("lang",)


class CorpusError(Exception):
    pass


class CorpusFormatError(CorpusError):
    def __init__(self, path: str, problems: list[tuple[int, str]]):
        self.path = path
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems[:20])
        extra = "" if len(problems) <= 20 else f" (+{len(problems) - 20} more)"
        super().__init__(f"{path}: {lines}{extra}")


def label_to_int(label: str) -> int:
    return 1 if label == "fake" else 0


@dataclass(frozen=True)
class Post:
    post_id: str
    text: str
    user_id: str
    image_id: str
    event: str
    label: str
    media_kind: str

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.media_kind not in MEDIA_KINDS:
            raise ValueError(f"media_kind must be one of {MEDIA_KINDS}, got {self.media_kind!r}")

    @property
    def y(self) -> int:
        return label_to_int(self.label)


@dataclass(frozen=True)
class Corpus:
    posts: tuple[Post, ...]

    @property
    def events(self) -> set[str]:
        return {p.event for p in self.posts}

    def __len__(self) -> int:
        return len(self.posts)

    def label_counts(self) -> dict[str, int]:
        counts = {"real": 0, "fake": 0}
        for p in self.posts:
            counts[p.label] += 1
        return counts

    def degenerate_ids(self) -> tuple[str, ...]:
        """Posts with empty text, flagged rather than rejected."""
        return tuple(p.post_id for p in self.posts if not p.text)

    def event_table(self) -> list[tuple[str, int, int, int, int]]:
        """Per-event (real images, real posts, fake images, fake posts) rows."""
        events: dict[str, tuple[set, int, set, int]] = {}
        for p in self.posts:
            ri, rc, fi, fc = events.setdefault(p.event, (set(), 0, set(), 0))
            if p.label == "real":
                ri.add(p.image_id)
                rc += 1
            else:
                fi.add(p.image_id)
                fc += 1
            events[p.event] = (ri, rc, fi, fc)
        return [
            (event, len(ri), rc, len(fi), fc)
            for event, (ri, rc, fi, fc) in sorted(events.items())
        ]


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float
    val_frac: float
    test_frac: float
    seed: int

    def __post_init__(self) -> None:
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0.0 < f < 1.0 for f in fracs):
            raise ValueError(f"each fraction must be in (0,1), got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(fracs)}")


# ---------------------------------------------------------------------------
# TSV escaping: exact round-trips for fields containing \t, \n, \r, \\
# ---------------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _escape(field: str) -> str:
    if not any(ch in field for ch in _ESCAPES):
        return field
    return "".join(_ESCAPES.get(ch, ch) for ch in field)


def _unescape(field: str) -> str:
    if "\\" not in field:
        return field
    out = []
    i = 0
    while i < len(field):
        ch = field[i]
        if ch == "\\":
            if i + 1 >= len(field) or field[i + 1] not in _UNESCAPES:
                raise ValueError(f"bad escape in field: {field!r}")
            out.append(_UNESCAPES[field[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _post_from_fields(fields: dict[str, str]) -> Post:
    return Post(
        post_id=fields["post_id"],
        text=fields["text"],
        user_id=fields["user_id"],
        image_id=fields["image_id"],
        event=fields["event"],
        label=fields["label"],
        media_kind=fields["media_kind"],
    )


def load_corpus(path: str, format: str, strict: bool = True) -> Corpus:
    """Read a corpus file.

    Malformed rows are reported with their line numbers: in strict mode
    (default) as a CorpusFormatError, otherwise as warnings while the rest
    of the file is materialized. Header mismatches and duplicate post_ids
    always raise.
    """
    if format == "vmu_tsv":
        posts, problems = _load_tsv(path)
    elif format == "fixture_jsonl":
        posts, problems = _load_jsonl(path)
    else:
        raise ValueError(f"unknown corpus format: {format!r}")

    if problems:
        if strict:
            raise CorpusFormatError(path, problems)
        for lineno, msg in problems:
            log.warning("%s: skipped line %d: %s", path, lineno, msg)

    seen: dict[str, int] = {}
    for p in posts:
        if p.post_id in seen:
            raise CorpusError(f"{path}: duplicate post_id {p.post_id!r}")
        seen[p.post_id] = 1
    return Corpus(tuple(posts))


def _load_tsv(path: str) -> tuple[list[Post], list[tuple[int, str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        raw = fh.read()
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusError(f"{path}: empty file, expected a header row")
    header = tuple(lines[0].split("\t"))
    if header == TSV_COLUMNS:
        n_cols = len(TSV_COLUMNS)
    elif header == TSV_COLUMNS_WITH_LANG:
        n_cols = len(TSV_COLUMNS_WITH_LANG)
    else:
        raise CorpusError(
            f"{path}: header mismatch: expected {list(TSV_COLUMNS)}, got {list(header)}"
        )
    posts: list[Post] = []
    problems: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != n_cols:
            problems.append((lineno, f"expected {n_cols} columns, got {len(cells)}"))
            continue
        try:
            fields = {
                name: _unescape(cell)
                for name, cell in zip(TSV_COLUMNS, cells)
            }
            posts.append(_post_from_fields(fields))
        except ValueError as exc:
            problems.append((lineno, str(exc)))
    return posts, problems


def _load_jsonl(path: str) -> tuple[list[Post], list[tuple[int, str]]]:
    posts: list[Post] = []
    problems: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                missing = [c for c in TSV_COLUMNS if c not in obj]
                if missing:
                    raise ValueError(f"missing fields: {missing}")
                posts.append(_post_from_fields({c: str(obj[c]) for c in TSV_COLUMNS}))
            except (ValueError, TypeError) as exc:
                problems.append((lineno, str(exc)))
    return posts, problems


def save_corpus(corpus: Corpus, path: str, format: str) -> None:
    if format == "vmu_tsv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\t".join(TSV_COLUMNS) + "\n")
            for p in corpus.posts:
                fh.write(
                    "\t".join(
                        _escape(getattr(p, col)) for col in TSV_COLUMNS
                    ) + "\n"
                )
    elif format == "fixture_jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for p in corpus.posts:
                fh.write(json.dumps(
                    {col: getattr(p, col) for col in TSV_COLUMNS},
                    ensure_ascii=False, sort_keys=True,
                ) + "\n")
    else:
        raise ValueError(f"unknown corpus format: {format!r}")


def filter_media(corpus: Corpus, keep: str) -> Corpus:
    if keep not in MEDIA_KINDS:
        raise ValueError(f"keep must be one of {MEDIA_KINDS}, got {keep!r}")
    return Corpus(tuple(p for p in corpus.posts if p.media_kind == keep))


def _apportion(n: int, fracs: tuple[float, float, float]) -> tuple[int, int, int]:
    """Largest-remainder split of n items; each count within 1 of frac*n."""
    raw = [f * n for f in fracs]
    counts = [int(r) for r in raw]
    remainders = sorted(
        range(3), key=lambda i: (-(raw[i] - counts[i]), i)
    )
    for i in range(n - sum(counts)):
        counts[remainders[i % 3]] += 1
    return counts[0], counts[1], counts[2]


def stratified_split(
    corpus: Corpus, spec: SplitSpec, by: str = "post"
) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic label-stratified split into (train, val, test).

    by="post" shuffles posts within each label; by="image" keeps all posts
    of an image in one split (images stratified by their majority label),
    trading exact proportions for leakage control.
    """
    if by not in ("post", "image"):
        raise ValueError(f"by must be 'post' or 'image', got {by!r}")
    labels_present = {p.label for p in corpus.posts}
    if len(labels_present) < 2:
        raise CorpusError(
            f"stratified_split needs at least 1 post per label, found {labels_present or '{}'}"
        )
    fracs = (spec.train_frac, spec.val_frac, spec.test_frac)
    rng = random.Random(spec.seed)
    order = {p.post_id: i for i, p in enumerate(corpus.posts)}
    buckets: tuple[list[Post], list[Post], list[Post]] = ([], [], [])

    if by == "post":
        for label in LABELS:
            group = [p for p in corpus.posts if p.label == label]
            if not group:
                continue
            rng.shuffle(group)
            n_tr, n_val, _ = _apportion(len(group), fracs)
            buckets[0].extend(group[:n_tr])
            buckets[1].extend(group[n_tr:n_tr + n_val])
            buckets[2].extend(group[n_tr + n_val:])
    else:
        by_image: dict[str, list[Post]] = {}
        for p in corpus.posts:
            by_image.setdefault(p.image_id, []).append(p)
        image_ids = sorted(by_image)

        def image_label(img: str) -> str:
            fake = sum(1 for p in by_image[img] if p.label == "fake")
            return "fake" if 2 * fake >= len(by_image[img]) else "real"

        for label in LABELS:
            group = [img for img in image_ids if image_label(img) == label]
            if not group:
                continue
            rng.shuffle(group)
            n_tr, n_val, _ = _apportion(len(group), fracs)
            for i, img in enumerate(group):
                dest = 0 if i < n_tr else (1 if i < n_tr + n_val else 2)
                buckets[dest].extend(by_image[img])

    return tuple(  # type: ignore[return-value]
        Corpus(tuple(sorted(b, key=lambda p: order[p.post_id]))) for b in buckets
    )
