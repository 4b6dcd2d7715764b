#!/usr/bin/env python3
"""Regenerate the committed fixtures under fixtures/.

Two fixture sets are produced, both fully deterministic:

  demo40/   a 40-post planted-signal corpus with evidence, an exhaustive
            scores file, a replay directory for `veritrace evidence fetch`,
            and a ready-to-run TOML config. Small enough that the whole
            CLI walkthrough in the README finishes in seconds.

  mh370/    a single worked example: one flight-incident post whose image
            has three prior-use titles, with hand-set similarity scores
            (1.03 below the 1.3 threshold, 2.125 and 2.40 above it) so
            `veritrace verify` shows a context mismatch, a query-only
            fake trace, and a both-fake case side by side.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from veritrace.corpus import Corpus, Post, save_corpus
from veritrace.evidence import (
    EvidenceRecord, EvidenceStore, write_replay_fixture,
)
from veritrace.similarity import write_scores_file
from veritrace.synth import FIXED_RETRIEVED_AT, PlantedConfig, generate_planted

MH370_QUERY = (
    "This image is NOT MH370, this is an image from the incident of a "
    "plane crashed in Sicily on 6Ogos2005 #PrayForMH370"
)
MH370_TITLES = (
    "Atr72 air disaster, Bari remembers 16 victims",
    "Serious! - Pictures of MH370 Crashed at Sea This Is Fake UPDATES",
    "Hoax warning: viral MH370 photo is not real, say investigators",
)
MH370_SCORES = (1.03, 2.125, 2.40)
MH370_IMAGE = "mh370-img-01"

DEMO40_TOML = """\
seed = 7
engine = "fixture"
mode = "tweet_plus_image"

[paths]
corpus = "fixtures/demo40/corpus.tsv"
evidence = "out/demo40/evidence.jsonl"
scores = "fixtures/demo40/scores.tsv"
output_dir = "out/demo40"

[similarity]
scorer = "external_file"

[model]
kind = "logreg"
"""

MH370_TOML = """\
seed = 7
engine = "fixture"

[paths]
corpus = "fixtures/mh370/corpus.tsv"
evidence = "fixtures/mh370/evidence.jsonl"
scores = "fixtures/mh370/scores.tsv"
output_dir = "out/mh370"

[similarity]
scorer = "external_file"
"""


def write_demo40(root: str) -> None:
    out = os.path.join(root, "demo40")
    os.makedirs(out, exist_ok=True)
    data = generate_planted(PlantedConfig(n_posts=40), seed=13)

    save_corpus(data.corpus, os.path.join(out, "corpus.tsv"), format="vmu_tsv")
    data.store.save(os.path.join(out, "evidence.jsonl"))
    write_scores_file(os.path.join(out, "scores.tsv"), data.scores)

    # replay directory + image map so `evidence fetch --engine fixture` works
    replay_dir = os.path.join(out, "replay")
    map_path = os.path.join(out, "image_map.tsv")
    with open(map_path, "w", encoding="utf-8") as fh:
        fh.write("# image_id<TAB>image_ref\n")
        for record in data.store.records():
            write_replay_fixture(replay_dir, "fixture", record.image_id,
                                 list(record.titles))
            fh.write(f"{record.image_id}\t{record.image_id}\n")

    with open(os.path.join(out, "veritrace.toml"), "w", encoding="utf-8") as fh:
        fh.write(DEMO40_TOML)
    print(f"demo40: {len(data.corpus.posts)} posts, {len(data.store)} evidence "
          f"records, {len(data.scores)} scored pairs -> {out}")


def write_mh370(root: str) -> None:
    out = os.path.join(root, "mh370")
    os.makedirs(out, exist_ok=True)

    post = Post(post_id="mh370-001", text=MH370_QUERY, user_id="u001",
                image_id=MH370_IMAGE, event="MA flight 370", label="fake",
                media_kind="image")
    save_corpus(Corpus((post,)), os.path.join(out, "corpus.tsv"), format="vmu_tsv")

    store = EvidenceStore()
    store.upsert(EvidenceRecord(image_id=MH370_IMAGE, engine="fixture",
                                titles=MH370_TITLES,
                                retrieved_at=FIXED_RETRIEVED_AT))
    store.save(os.path.join(out, "evidence.jsonl"))

    pairs = [(MH370_QUERY, t, s) for t, s in zip(MH370_TITLES, MH370_SCORES)]
    write_scores_file(os.path.join(out, "scores.tsv"), pairs)

    write_replay_fixture(os.path.join(out, "replay"), "fixture", MH370_IMAGE,
                         list(MH370_TITLES))
    with open(os.path.join(out, "image_map.tsv"), "w", encoding="utf-8") as fh:
        fh.write(f"{MH370_IMAGE}\t{MH370_IMAGE}\n")
    with open(os.path.join(out, "veritrace.toml"), "w", encoding="utf-8") as fh:
        fh.write(MH370_TOML)
    print(f"mh370: 1 post, 3 titles, scores {MH370_SCORES} -> {out}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default="fixtures", help="fixture root directory")
    args = ap.parse_args()
    write_demo40(args.root)
    write_mh370(args.root)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
