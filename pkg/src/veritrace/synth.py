"""Synthetic corpora with known ground truth.

Two generators live here. The planted-signal generator emits posts whose
fake/real status is detectable by construction: fake posts carry fake-
lexicon phrases in their retrieved titles with high probability and their
query-title scores fall on the same-context side of the threshold. It is
the oracle for end-to-end pipeline tests, since every regularity a model
finds was planted on purpose.

The second generator reshapes random filler into the published benchmark's
event table so ingest summaries and desk-scale walkthroughs have data of
the right shape. The texts are synthetic; nothing about the original
tweets is reproduced.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .corpus import Corpus, Post
from .evidence import EvidenceRecord, EvidenceStore
from .similarity import DEFAULT_THRESHOLD

# (event, real images, real posts, fake images, fake posts)
VMU2015_EVENT_TABLE = (
    ("Hurricane Sandy", 148, 4664, 62, 5559),
    ("Boston Marathon Bombing", 28, 344, 35, 189),
    ("Sochi Olympics", 0, 0, 26, 274),
    ("MA flight 370", 0, 0, 29, 501),
    ("Bring Back Our Girls", 0, 0, 7, 131),
    ("Columbian Chemicals", 0, 0, 15, 185),
    ("Passport Hoax", 0, 0, 2, 44),
    ("Rock Elephant", 0, 0, 1, 13),
    ("Underwater Bedroom", 0, 0, 3, 113),
    ("Livr mobile app", 0, 0, 4, 9),
    ("Pig fish", 0, 0, 1, 14),
)

# all in the shipped fake lexicon and none reduced away by stopwording,
# so the signal survives both the trace path and the neural text path
PLANT_FAKE_PHRASES = (
    "hoax", "scam", "bogus", "fabricated", "misleading",
    "rumor", "myth", "forged", "fake news", "deception",
)
PLANT_DOUBT_PHRASES = ("is it", "is that")

# deliberately small pool: with low filler entropy, label-noise instances
# have near-duplicates of the opposite label, so sequence models cannot
# buy training accuracy by memorizing filler and must learn the plants
NEUTRAL_WORDS = (
    "storm", "coast", "bridge", "marathon", "runner", "crowd", "photo",
    "camera", "street", "river", "cloud", "mountain", "harbor", "market",
    "festival", "stadium",
)

FIXED_RETRIEVED_AT = datetime(2015, 6, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class PlantedConfig:
    n_posts: int = 200
    fake_frac: float = 0.5
    titles_min: int = 1
    titles_max: int = 10
    # per-title probability that a fake-lexicon phrase is planted
    title_phrase_prob_fake: float = 0.8
    title_phrase_prob_real: float = 0.05
    # per-query probabilities
    query_phrase_prob_fake: float = 0.95
    query_phrase_prob_real: float = 0.01
    query_doubt_prob_fake: float = 0.10
    query_doubt_prob_real: float = 0.02
    # per (query, title) pair: probability the score lands above threshold
    pair_high_prob_fake: float = 0.95
    pair_high_prob_real: float = 0.05
    score_high_range: tuple[float, float] = (1.5, 4.5)
    score_low_range: tuple[float, float] = (0.0, 1.25)
    threshold: float = DEFAULT_THRESHOLD
    engine: str = "fixture"
    event: str = "planted-signal"

    def __post_init__(self) -> None:
        if self.n_posts < 2:
            raise ValueError("need at least 2 posts")
        if not 0.0 < self.fake_frac < 1.0:
            raise ValueError("fake_frac must be in (0,1)")
        if not 1 <= self.titles_min <= self.titles_max <= 10:
            raise ValueError("title counts must satisfy 1 <= min <= max <= 10")
        if self.score_high_range[0] < self.threshold:
            raise ValueError("high score range must start at or above the threshold")
        if self.score_low_range[1] >= self.threshold:
            raise ValueError("low score range must stay below the threshold")


@dataclass(frozen=True)
class PlantedData:
    corpus: Corpus
    store: EvidenceStore
    scores: tuple[tuple[str, str, float], ...]
    config: PlantedConfig


def _words(rng: np.random.Generator, lo: int, hi: int) -> list[str]:
    n = int(rng.integers(lo, hi + 1))
    return [NEUTRAL_WORDS[int(i)] for i in rng.integers(0, len(NEUTRAL_WORDS), size=n)]


def _insert_phrase(rng: np.random.Generator, words: list[str], phrase: str) -> list[str]:
    slot = int(rng.integers(0, len(words) + 1))
    return words[:slot] + phrase.split() + words[slot:]


def _make_query(rng: np.random.Generator, fake: bool, cfg: PlantedConfig) -> str:
    words = _words(rng, 4, 7)
    p_phrase = cfg.query_phrase_prob_fake if fake else cfg.query_phrase_prob_real
    p_doubt = cfg.query_doubt_prob_fake if fake else cfg.query_doubt_prob_real
    if rng.random() < p_phrase:
        phrase = PLANT_FAKE_PHRASES[int(rng.integers(len(PLANT_FAKE_PHRASES)))]
        words = _insert_phrase(rng, words, phrase)
    text = " ".join(words)
    if rng.random() < p_doubt:
        if rng.random() < 0.5:
            doubt = PLANT_DOUBT_PHRASES[int(rng.integers(len(PLANT_DOUBT_PHRASES)))]
            text = f"{doubt} {text}"
        else:
            text = f"{text}?"
    return text


def _make_title(rng: np.random.Generator, fake: bool, cfg: PlantedConfig) -> str:
    words = _words(rng, 3, 6)
    p = cfg.title_phrase_prob_fake if fake else cfg.title_phrase_prob_real
    if rng.random() < p:
        phrase = PLANT_FAKE_PHRASES[int(rng.integers(len(PLANT_FAKE_PHRASES)))]
        words = _insert_phrase(rng, words, phrase)
    return " ".join(words)


def generate_planted(config: PlantedConfig | None = None, seed: int = 0) -> PlantedData:
    """Corpus + evidence + exhaustive scores file, all reproducible from
    the seed. Every (query, title) pair that featurization can request is
    present in the score list, so the external scorer never falls through.
    """
    cfg = config or PlantedConfig()
    rng = np.random.default_rng(seed)
    n_fake = round(cfg.n_posts * cfg.fake_frac)
    labels = ["fake"] * n_fake + ["real"] * (cfg.n_posts - n_fake)
    rng.shuffle(labels)

    posts: list[Post] = []
    store = EvidenceStore()
    scores: list[tuple[str, str, float]] = []
    for i, label in enumerate(labels):
        fake = label == "fake"
        query = _make_query(rng, fake, cfg)
        image_id = f"img{i:04d}"
        n_titles = int(rng.integers(cfg.titles_min, cfg.titles_max + 1))
        titles = tuple(_make_title(rng, fake, cfg) for _ in range(n_titles))
        p_high = cfg.pair_high_prob_fake if fake else cfg.pair_high_prob_real
        for title in titles:
            lo, hi = cfg.score_high_range if rng.random() < p_high else cfg.score_low_range
            scores.append((query, title, round(float(rng.uniform(lo, hi)), 6)))
        posts.append(Post(
            post_id=f"p{i:04d}", text=query, user_id=f"u{i % 37:03d}",
            image_id=image_id, event=cfg.event, label=label, media_kind="image",
        ))
        store.upsert(EvidenceRecord(
            image_id=image_id, engine=cfg.engine, titles=titles,
            retrieved_at=FIXED_RETRIEVED_AT,
        ))
    return PlantedData(corpus=Corpus(tuple(posts)), store=store,
                       scores=tuple(scores), config=cfg)


def make_benchmark_shaped_corpus(
    posts_per_event_cap: int | None = None, seed: int = 0
) -> Corpus:
    """Synthetic corpus whose per-event post and image counts match the
    published benchmark table exactly (or a capped miniature of it)."""
    rng = np.random.default_rng(seed)
    posts: list[Post] = []
    serial = 0
    for event, real_images, real_posts, fake_images, fake_posts in VMU2015_EVENT_TABLE:
        slug = "".join(ch if ch.isalnum() else "-" for ch in event.lower())
        for label, n_images, n_posts in (
            ("real", real_images, real_posts), ("fake", fake_images, fake_posts),
        ):
            if posts_per_event_cap is not None:
                n_posts = min(n_posts, posts_per_event_cap)
                n_images = min(n_images, max(1, n_posts))
            if n_posts == 0:
                continue
            image_ids = [f"{slug}-{label}-im{j:04d}" for j in range(max(1, n_images))]
            for j in range(n_posts):
                text = " ".join(_words(rng, 5, 11))
                posts.append(Post(
                    post_id=f"vmu{serial:05d}", text=text,
                    user_id=f"u{int(rng.integers(0, 2000)):04d}",
                    image_id=image_ids[j % len(image_ids)], event=event,
                    label=label, media_kind="image",
                ))
                serial += 1
    return Corpus(tuple(posts))
