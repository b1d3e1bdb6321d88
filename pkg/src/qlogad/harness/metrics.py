"""Confusion counts and the four detection metrics (anomaly = positive)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise PreconditionError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predicted, actual) -> "ConfusionCounts":
        p = np.asarray(predicted, dtype=bool)
        a = np.asarray(actual, dtype=bool)
        if p.shape != a.shape:
            raise PreconditionError("prediction and label vectors differ in length")
        return cls(
            tp=int(np.sum(p & a)), fp=int(np.sum(p & ~a)), tn=int(np.sum(~p & ~a)), fn=int(np.sum(~p & a))
        )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    specificity: float
    f1: float


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def compute_metrics(counts: ConfusionCounts) -> Metrics:
    """Zero denominators give 0 for that metric; F1 is 0 when P + R == 0."""
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    specificity = _ratio(counts.tn, counts.tn + counts.fp)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(precision, recall, specificity, f1)
