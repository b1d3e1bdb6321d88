"""Windowing, splitting and resampling of labelled event streams."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError, PreconditionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowedSample:
    events: tuple
    label: int
    origin: int

    @property
    def is_anomaly(self) -> bool:
        return self.label == 1


def windowize(event_ids, alert_flags, window_size: int = 100) -> list[WindowedSample]:
    """Tumbling windows; a window is anomalous iff any of its lines is an alert."""
    if window_size < 2:
        raise ConfigurationError(f"window size must be >= 2, got {window_size}")
    ids = np.asarray(event_ids, dtype=np.int64)
    flags = np.asarray(alert_flags, dtype=bool)
    if ids.shape != flags.shape:
        raise PreconditionError("event and label streams differ in length")
    n_windows = ids.size // window_size
    if n_windows == 0:
        log.warning("only %d lines; no full window of %d", ids.size, window_size)
        return []
    used = n_windows * window_size
    ids = ids[:used].reshape(n_windows, window_size)
    labels = flags[:used].reshape(n_windows, window_size).any(axis=1)
    return [
        WindowedSample(tuple(int(e) for e in ids[k]), int(labels[k]), k) for k in range(n_windows)
    ]


def chronological_split(samples, train_fraction: float = 0.8):
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError(f"train fraction must lie in (0, 1), got {train_fraction}")
    cut = int(math.floor(len(samples) * train_fraction))
    return list(samples[:cut]), list(samples[cut:])


def subsample_training(train, ratio: float, seed: int = 0):
    """Seeded uniform subset of size ``ceil(N * ratio)``, kept in origin order."""
    if not 0.0 < ratio <= 1.0:
        raise ConfigurationError(f"training ratio must lie in (0, 1], got {ratio}")
    train = list(train)
    if ratio == 1.0:
        return train
    k = math.ceil(len(train) * ratio)
    if k == 0:
        raise DataError("subsampling produced an empty training set")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(train), size=k, replace=False))
    return [train[i] for i in keep]


def filter_normal(train):
    kept = [s for s in train if s.label == 0]
    if not kept:
        raise DataError("no normal windows left for semi-supervised training")
    return kept


def oversample_anomalies(train, target_ratio: float = 1 / 3, seed: int = 0):
    """Duplicate anomalous windows until ``anomalies / normals >= target_ratio``.

    Copies are drawn by cycling through the anomalies in a seeded order;
    each copy is placed right after its source so origin order holds.
    """
    train = list(train)
    anomalies = [i for i, s in enumerate(train) if s.label == 1]
    if not anomalies:
        raise DataError("supervised training needs at least one anomalous window")
    n_normal = len(train) - len(anomalies)
    target = math.ceil(n_normal * target_ratio - 1e-12)
    extra = max(0, target - len(anomalies))
    if extra == 0:
        return train
    order = np.random.default_rng(seed).permutation(anomalies)
    copies = np.zeros(len(train), dtype=np.int64)
    for j in range(extra):
        copies[order[j % len(order)]] += 1
    out = []
    for i, s in enumerate(train):
        out.append(s)
        out.extend([s] * int(copies[i]))
    return out
