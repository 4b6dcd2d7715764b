"""Image-backed misinformation triage.

Given a social post (tweet text plus an attached image), the pipeline
gathers the image's prior appearances on the web as page titles, extracts
doubt/fake wording traces and query-title similarity cases, and classifies
the post with from-scratch classical models or a bidirectional LSTM.
"""

__version__ = "0.1.0"

__all__ = [
    "classifiers",
    "cli",
    "corpus",
    "evidence",
    "features",
    "forest",
    "metrics",
    "neural",
    "similarity",
    "synth",
    "textprep",
    "traces",
]
