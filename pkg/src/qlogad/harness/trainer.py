"""Minibatch Adam training with exact duplicate collapsing.

Training rows repeat heavily (a cyclic log produces the same histories
over and over), so rows are reduced to their unique set once.  Each
minibatch is drawn from the full row list as usual and then evaluated on
its distinct rows with multiplicity weights, which gives exactly the
gradient of the plain minibatch mean.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .. import nn

log = logging.getLogger(__name__)


@dataclass
class LossHistory:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)


@dataclass
class RowSet:
    unique: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "RowSet":
        if len(rows) == 0:
            return cls(rows, np.zeros(0, dtype=np.int64))
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        return cls(uniq, inv.reshape(-1))

    def __len__(self):
        return len(self.inverse)

    def weights(self) -> np.ndarray:
        return np.bincount(self.inverse, minlength=len(self.unique)) / max(len(self.inverse), 1)


def mean_loss(model, rows: RowSet) -> float:
    if len(rows) == 0:
        return math.nan
    return model.eval_loss(rows.unique, rows.weights())


def train_model(model, train_rows: np.ndarray, val_rows: np.ndarray, *, epochs: int, lr: float,
                batch_size: int, clip_norm: float = 5.0, seed: int = 0, on_epoch=None) -> LossHistory:
    """Train ``model.params`` in place; returns per-epoch train and validation losses.

    The training loss of an epoch is the mean of its minibatch losses
    weighted by batch size, i.e. the average loss over the rows seen.
    """
    train = RowSet.from_rows(train_rows)
    val = RowSet.from_rows(val_rows)
    history = LossHistory()
    if epochs and len(train) == 0:
        log.warning("no training rows; parameters stay at their initial values")
    rng = np.random.default_rng(seed)
    adam = nn.AdamState()
    N = len(train)
    for epoch in range(epochs):
        order = rng.permutation(N)
        total = 0.0
        for s in range(0, N, batch_size):
            ids = train.inverse[order[s : s + batch_size]]
            counts = np.bincount(ids, minlength=len(train.unique))
            rows = np.flatnonzero(counts)
            loss, grads = model.loss(model.params, train.unique[rows], counts[rows] / len(ids))
            grads, _ = nn.clip_by_global_norm(grads, clip_norm)
            model.params = nn.adam_step(model.params, grads, adam, lr)
            total += loss * len(ids)
        history.train.append(total / N if N else math.nan)
        history.val.append(mean_loss(model, val))
        if on_epoch is not None:
            on_epoch(epoch, history)
    return history
