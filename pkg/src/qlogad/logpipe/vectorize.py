"""Event vocabulary and the three event vectorisations.

Model indices ``0..|V|-1`` are the training-split templates in sorted id
order and ``|V|`` is the out-of-vocabulary slot, so every vector has
``|V| + 1`` entries.  History padding uses ``PAD = -1``, which maps to the
all-zero vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError

PAD = -1
SCHEMES = ("one_hot", "count", "embedding")


class Vocabulary:
    def __init__(self, template_ids):
        ids = sorted({int(t) for t in template_ids})
        self.template_ids = tuple(ids)
        self._index = {t: i for i, t in enumerate(ids)}
        lookup_size = (max(ids) + 1) if ids else 0
        self._lookup = np.full(lookup_size, len(ids), dtype=np.int64)
        for t, i in self._index.items():
            self._lookup[t] = i

    @classmethod
    def from_samples(cls, samples) -> "Vocabulary":
        seen = set()
        for s in samples:
            seen.update(s.events)
        return cls(seen)

    def __len__(self):
        return len(self.template_ids)

    @property
    def oov(self) -> int:
        return len(self.template_ids)

    @property
    def n_classes(self) -> int:
        return len(self.template_ids) + 1

    def index(self, template_id: int) -> int:
        return self._index.get(int(template_id), self.oov)

    def map(self, events) -> np.ndarray:
        """Template ids -> model indices; unknown ids go to OOV, ``PAD`` stays."""
        ev = np.asarray(events, dtype=np.int64)
        out = np.full(ev.shape, self.oov, dtype=np.int64)
        ok = (ev >= 0) & (ev < self._lookup.size)
        out[ok] = self._lookup[ev[ok]]
        out[ev == PAD] = PAD
        return out


@dataclass(frozen=True)
class EventVector:
    scheme: str
    values: np.ndarray


def one_hot(indices, n_classes: int) -> np.ndarray:
    """``(..., n_classes)`` one-hot rows; ``PAD`` gives a zero row."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.zeros(idx.shape + (n_classes,))
    mask = idx != PAD
    if np.any(idx[mask] >= n_classes) or np.any(idx[mask] < 0):
        raise PreconditionError("index outside the vocabulary")
    out[mask, idx[mask]] = 1.0
    return out


def cumulative_counts(histories, n_classes: int) -> np.ndarray:
    """Count vectors per history step: entry ``t`` counts events ``0..t``."""
    return np.cumsum(one_hot(histories, n_classes), axis=-2)


def history_pairs(indices, h: int, pad: bool = True):
    """All ``(history, next)`` pairs of one mapped window.

    With ``pad`` every position is a target and short histories are
    left-padded with ``PAD``; otherwise targets start at position ``h``.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if h < 1:
        raise PreconditionError("history length must be positive")
    if pad:
        padded = np.concatenate([np.full(h, PAD, dtype=np.int64), idx])
        start = h
    else:
        padded = idx
        start = h
    n = padded.size - start
    if n <= 0:
        return np.zeros((0, h), dtype=np.int64), np.zeros(0, dtype=np.int64)
    rows = np.lib.stride_tricks.sliding_window_view(padded, h)[:n]
    return rows.copy(), padded[start:].copy()


def vectorize(sample, scheme: str, vocab: Vocabulary, h: int | None = None) -> list[EventVector]:
    """Per-position vectors for one window.

    ``one_hot`` and ``embedding`` give one vector per event; ``count``
    gives, for each position ``t``, the counts over the ``h`` events
    ending at ``t`` (fewer at the start of the window).
    """
    if scheme not in SCHEMES:
        raise PreconditionError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    events = getattr(sample, "events", sample)
    idx = vocab.map(events)
    if scheme == "embedding":
        return [EventVector(scheme, np.array([i])) for i in idx]
    oh = one_hot(idx, vocab.n_classes)
    if scheme == "one_hot":
        return [EventVector(scheme, row) for row in oh]
    span = len(idx) if h is None else h
    csum = np.cumsum(oh, axis=0)
    lagged = np.concatenate([np.zeros((span, oh.shape[1])), csum])[: len(idx)]
    return [EventVector(scheme, row) for row in csum - lagged]
