"""From a data source to chronological train / validation / test windows."""
from __future__ import annotations

import functools
import logging
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..logpipe import synth
from ..logpipe.drain import drain_parse
from ..logpipe.reader import read_parsed_csv, read_raw_log
from ..logpipe.vectorize import Vocabulary
from ..logpipe.windows import (
    chronological_split,
    filter_normal,
    oversample_anomalies,
    subsample_training,
    windowize,
)

log = logging.getLogger(__name__)


@dataclass
class Splits:
    train: list
    val: list
    test: list
    vocab: Vocabulary


@functools.lru_cache(maxsize=8)
def _load_stream(source: str, synth_key: tuple, drain_key: tuple):
    if source == "synthetic":
        n_windows, window_size, n_normal, n_alert, rate, seed = synth_key
        with tempfile.TemporaryDirectory() as tmp:
            corpus = synth.generate_corpus(
                Path(tmp) / "synthetic.log", n_windows, window_size, n_normal, n_alert, rate, seed=seed
            )
            lines = read_raw_log(corpus.path)
    else:
        path = Path(source)
        if not path.exists():
            raise DataError(f"dataset not found: {path}")
        if path.suffix.lower() == ".csv":
            flags, ids = read_parsed_csv(path)
            return tuple(ids), tuple(flags)
        lines = read_raw_log(path)
    depth, sim, max_children = drain_key
    _, ids = drain_parse(lines, depth, sim, max_children)
    return tuple(ids), tuple(int(line.is_alert) for line in lines)


def load_stream(cfg) -> tuple[np.ndarray, np.ndarray]:
    """Event ids and alert flags for ``cfg.data`` (cached per source)."""
    synth_key = (cfg.synth_windows, cfg.window_size, cfg.synth_normal, cfg.synth_alert,
                 cfg.synth_anomaly_rate, cfg.synth_seed)
    drain_key = (cfg.drain_depth, cfg.drain_sim, cfg.drain_max_children)
    ids, flags = _load_stream(str(cfg.data), synth_key, drain_key)
    return np.asarray(ids, dtype=np.int64), np.asarray(flags, dtype=np.int64)


def make_splits(cfg, ids, flags) -> Splits:
    """Window, split chronologically and prepare the training subset.

    The vocabulary comes from the whole training split.  The validation
    set is its chronological tail.  Next-event models keep only normal
    windows and then subsample; LogRobust subsamples and then oversamples
    anomalies.
    """
    windows = windowize(ids, flags, cfg.window_size)
    if len(windows) < 2:
        raise DataError(f"need at least two windows of {cfg.window_size} lines, got {len(windows)}")
    train_all, test = chronological_split(windows, cfg.train_fraction)
    if not train_all or not test:
        raise DataError("chronological split left an empty side")
    vocab = Vocabulary.from_samples(train_all)
    n_val = int(np.floor(len(train_all) * cfg.val_fraction))
    train, val = train_all[: len(train_all) - n_val], train_all[len(train_all) - n_val :]
    if not train:
        raise DataError("validation split consumed the whole training set")
    if cfg.model == "logrobust":
        train = subsample_training(train, cfg.train_ratio, cfg.seed)
        train = oversample_anomalies(train, cfg.oversample_ratio, cfg.seed)
    else:
        train = subsample_training(filter_normal(train), cfg.train_ratio, cfg.seed)
        val = [w for w in val if w.label == 0]
    if not val:
        log.warning("%s: empty validation set; validation loss will be NaN", cfg.name)
    return Splits(train, val, test, vocab)
