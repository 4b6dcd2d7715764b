"""Confusion-matrix statistics: per-class and support-weighted rates.

Positive class is fake (label 1). The weighted rows mirror the common
toolkit convention (average per-class values weighted by class support)
so reports are comparable with published tables; the per-class rows stay
in the output to remove ambiguity about the convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

RATE_NAMES = ("tp_rate", "fp_rate", "precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a non-negative int, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """The same predictions viewed with the positive class flipped."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


def confusion(y_true: Iterable[int], y_pred: Iterable[int]) -> ConfusionMatrix:
    yt = list(y_true)
    yp = list(y_pred)
    if len(yt) != len(yp):
        raise ValueError(f"length mismatch: {len(yt)} labels vs {len(yp)} predictions")
    if not yt:
        raise ValueError("need at least one evaluated item")
    if any(v not in (0, 1) for v in yt) or any(v not in (0, 1) for v in yp):
        raise ValueError("labels and predictions must be 0 or 1")
    tp = sum(1 for t, p in zip(yt, yp) if t == 1 and p == 1)
    fp = sum(1 for t, p in zip(yt, yp) if t == 0 and p == 1)
    fn = sum(1 for t, p in zip(yt, yp) if t == 1 and p == 0)
    tn = sum(1 for t, p in zip(yt, yp) if t == 0 and p == 0)
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class ClassMetrics:
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f1: float
    accuracy: float
    support: int
    precision_defined: bool = True

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in RATE_NAMES}
        d["support"] = self.support
        d["precision_defined"] = self.precision_defined
        return d


def _class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    support = cm.tp + cm.fn
    recall = cm.tp / support if support else 0.0
    fp_denom = cm.fp + cm.tn
    fp_rate = cm.fp / fp_denom if fp_denom else 0.0
    p_denom = cm.tp + cm.fp
    precision = cm.tp / p_denom if p_denom else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (cm.tp + cm.tn) / cm.total
    return ClassMetrics(
        tp_rate=recall, fp_rate=fp_rate, precision=precision, recall=recall,
        f1=f1, accuracy=accuracy, support=support,
        precision_defined=p_denom > 0,
    )


@dataclass(frozen=True)
class MetricReport:
    counts: ConfusionMatrix
    positive: ClassMetrics
    negative: ClassMetrics
    weighted: ClassMetrics
    metadata: Mapping[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "counts": {"tp": self.counts.tp, "fp": self.counts.fp,
                       "fn": self.counts.fn, "tn": self.counts.tn,
                       "total": self.counts.total},
            "per_class": {
                "fake": self.positive.as_dict(),
                "real": self.negative.as_dict(),
            },
            "weighted": self.weighted.as_dict(),
            "metadata": dict(self.metadata),
        }


def compute(cm: ConfusionMatrix, metadata: Mapping[str, str] | None = None) -> MetricReport:
    """Per-class metrics for both label orientations plus support-weighted
    averages. Undefined precisions come back as 0 with the flag cleared."""
    if cm.total == 0:
        raise ValueError("cannot compute metrics over zero items")
    pos = _class_metrics(cm)
    neg = _class_metrics(cm.swapped())
    total = cm.total

    def wavg(name: str) -> float:
        return (pos.support * getattr(pos, name) + neg.support * getattr(neg, name)) / total

    weighted = ClassMetrics(
        tp_rate=wavg("tp_rate"), fp_rate=wavg("fp_rate"),
        precision=wavg("precision"), recall=wavg("recall"),
        f1=wavg("f1"), accuracy=(cm.tp + cm.tn) / total,
        support=total,
        precision_defined=pos.precision_defined and neg.precision_defined,
    )
    return MetricReport(counts=cm, positive=pos, negative=neg,
                        weighted=weighted, metadata=dict(metadata or {}))


def format_table(report: MetricReport) -> str:
    """Fixed-width text table, one row per class plus the weighted row."""
    header = f"{'class':<10}" + "".join(f"{n:>11}" for n in RATE_NAMES) + f"{'support':>9}"
    rows = [header, "-" * len(header)]
    for name, m in (("fake", report.positive), ("real", report.negative),
                    ("weighted", report.weighted)):
        cells = "".join(f"{getattr(m, n):>11.4f}" for n in RATE_NAMES)
        rows.append(f"{name:<10}{cells}{m.support:>9}")
    if not (report.positive.precision_defined and report.negative.precision_defined):
        rows.append("note: a precision denominator was zero; value reported as 0")
    if report.metadata:
        meta = ", ".join(f"{k}={v}" for k, v in sorted(report.metadata.items()))
        rows.append(f"({meta})")
    return "\n".join(rows)


def to_json(report: MetricReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"


def write_report(report: MetricReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_json(report))
