#!/usr/bin/env python3
"""One-shot adapter: MediaEval verifying-multimedia-use tweet dumps -> corpus TSV.

The benchmark distributes tweets as a TSV with columns

    tweetId  tweetText  userId  imageId(s)  username  timestamp  label

This script maps them onto the corpus schema used here
(post_id, text, user_id, image_id, event, label, media_kind):

  - multi-image posts (comma-separated imageId list) keep the first id
  - the event is derived from the image id prefix (e.g. "sandyA_fake_01"
    -> "sandy"), which is how the benchmark encodes event membership
  - the benchmark's "humor" label is mapped per --humor-as (default fake,
    matching the task's treatment of humorous reposts as misuse)
  - image ids ending in _video / containing "video" are tagged media_kind
    video so ingest can drop them

This is a best-effort importer for a dataset we do not ship; rows that do
not parse are reported and skipped. Output is written with the same escaping
rules the loader enforces, so the round trip is loss-free.

Usage:
  python3 scripts/convert_mediaeval.py --input tweets.txt --output corpus.tsv
"""

from __future__ import annotations

import argparse
import os
import re
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from veritrace.corpus import Corpus, Post, save_corpus

EXPECTED_COLS = 7
LABEL_MAP = {"fake": "fake", "real": "real"}


def event_of(image_id: str) -> str:
    """'sandyA_fake_01' -> 'sandya'; leading alphabetic run otherwise."""
    head = image_id.split("_", 1)[0].lower()
    m = re.match(r"[a-z]+", head)
    return m.group(0) if m else (head or "unknown")


def convert(input_path: str, humor_as: str) -> tuple[list[Post], int]:
    posts: list[Post] = []
    skipped = 0
    seen: set[str] = set()
    with open(input_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or (lineno == 1 and line.lower().startswith("tweetid")):
                continue
            cells = line.split("\t")
            if len(cells) != EXPECTED_COLS:
                print(f"line {lineno}: expected {EXPECTED_COLS} columns, "
                      f"got {len(cells)}; skipped", file=sys.stderr)
                skipped += 1
                continue
            tweet_id, text, user_id, image_ids, _username, _ts, label = cells
            label = label.strip().lower()
            if label == "humor":
                if humor_as == "drop":
                    skipped += 1
                    continue
                label = humor_as
            if label not in LABEL_MAP:
                print(f"line {lineno}: unknown label {label!r}; skipped",
                      file=sys.stderr)
                skipped += 1
                continue
            if tweet_id in seen:
                print(f"line {lineno}: duplicate tweet id {tweet_id!r}; skipped",
                      file=sys.stderr)
                skipped += 1
                continue
            seen.add(tweet_id)
            image_id = image_ids.split(",")[0].strip()
            kind = "video" if "video" in image_id.lower() else "image"
            posts.append(Post(post_id=tweet_id, text=text, user_id=user_id,
                              image_id=image_id, event=event_of(image_id),
                              label=label, media_kind=kind))
    return posts, skipped


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", required=True, help="benchmark tweets TSV")
    ap.add_argument("--output", required=True, help="corpus TSV to write")
    ap.add_argument("--humor-as", choices=("fake", "real", "drop"),
                    default="fake")
    args = ap.parse_args()

    posts, skipped = convert(args.input, args.humor_as)
    if not posts:
        print("no convertible rows found", file=sys.stderr)
        return 1
    save_corpus(Corpus(tuple(posts)), args.output, format="vmu_tsv")
    print(f"{len(posts)} posts written to {args.output} ({skipped} rows skipped)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
