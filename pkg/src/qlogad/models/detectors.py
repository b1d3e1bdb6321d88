"""DeepLog, LogAnomaly and LogRobust, each classical or with quantum layers.

Next-event models (DeepLog and both LogAnomaly members) read a history of
``h`` event vectors, unroll a (Q)LSTM and map the last hidden state to
``|V| + 1`` logits.  LogRobust embeds a whole window, runs a
bidirectional (Q)LSTM, applies self-attention over the time steps,
mean-pools and scores the window with a sigmoid.

Training rows are integer arrays so duplicates can be collapsed:
``[history..., next]`` for next-event models and the mapped window
followed by its label for LogRobust.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from .. import nn
from ..encode import Encoding
from ..errors import ConfigurationError, PreconditionError
from ..kvtext import parse_bool
from ..logpipe.vectorize import PAD, Vocabulary, cumulative_counts, history_pairs, one_hot
from ..pqc import CircuitDesign
from .layers import Affine, Embedding, LSTMLayer, SelfAttention

log = logging.getLogger(__name__)

KINDS = ("deeplog", "loganomaly", "logrobust")
VARIANTS = ("classical", "quantum")


@dataclass
class ModelConfig:
    kind: str = "deeplog"
    variant: str = "classical"
    hidden: int = 0  # 0 -> 64 classical, n_qubits quantum
    history: int = 10
    top_g: int = 9
    n_qubits: int = 4
    layout: str = "Rx"
    encoding: str = "rx"
    n_layers: int = 1
    ring: bool = False
    attn_qubits: int = 8
    qkv_sharing: str = "shared"
    embedding_dim: int = 16
    pad_history: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model {self.kind!r}; expected one of {KINDS}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.history < 1:
            raise ConfigurationError("history length must be positive")
        if self.top_g < 0:
            raise ConfigurationError("top_g must be non-negative")
        if self.hidden < 0:
            raise ConfigurationError("hidden size must be non-negative")
        if self.qkv_sharing not in ("shared", "separate"):
            raise ConfigurationError("qkv_sharing must be shared or separate")
        self.encoding = Encoding.parse(self.encoding).value

    @property
    def quantum(self) -> bool:
        return self.variant == "quantum"

    @property
    def hidden_size(self) -> int:
        if self.hidden:
            return self.hidden
        return self.n_qubits if self.quantum else 64

    def design(self, n_qubits: int | None = None) -> CircuitDesign | None:
        if not self.quantum:
            return None
        return CircuitDesign(self.layout, n_qubits or self.n_qubits, self.n_layers, self.encoding, self.ring)

    @property
    def name(self) -> str:
        return ("Q" if self.quantum else "") + {"deeplog": "DeepLog", "loganomaly": "LogAnomaly",
                                                 "logrobust": "LogRobust"}[self.kind]

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def _coerce(field_type, raw: str):
    if field_type in (bool, "bool"):
        return parse_bool(raw)
    try:
        if field_type in (int, "int"):
            return int(raw)
        if field_type in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"expected a number, got {raw!r}") from None
    return raw.strip()


def config_from_dict(values: dict) -> ModelConfig:
    types = {f.name: f.type for f in fields(ModelConfig)}
    kwargs = {}
    for k, v in values.items():
        if k not in types:
            raise ConfigurationError(f"unknown model option {k!r}")
        kwargs[k] = _coerce(types[k], v) if isinstance(v, str) else v
    return ModelConfig(**kwargs)


# -- shared building blocks ------------------------------------------------


class NextEventNet:
    """(Q)LSTM over history vectors plus a linear head to class logits."""

    def __init__(self, prefix: str, n_classes: int, cfg: ModelConfig, scheme: str):
        self.prefix = prefix
        self.n_classes = n_classes
        self.scheme = scheme
        H = cfg.hidden_size
        self.lstm = LSTMLayer(f"{prefix}lstm", n_classes, H, cfg.design())
        self.head = Affine(f"{prefix}head", H, n_classes)

    def components(self):
        return {"lstm": self.lstm.layers, "head": [self.head]}

    def init(self, rng):
        p = self.lstm.init(rng)
        p.update(self.head.init(rng))
        return p

    def inputs(self, histories) -> np.ndarray:
        if self.scheme == "count":
            return cumulative_counts(histories, self.n_classes)
        return one_hot(histories, self.n_classes)

    def logits(self, params, histories, grad: bool = False):
        xs = self.inputs(histories)
        hs, lcache = self.lstm.forward(params, xs, grad)
        z, hcache = self.head.forward(params, hs[:, -1], grad)
        return z, (xs.shape, hs.shape, lcache, hcache)

    def loss(self, params, histories, targets, weights):
        z, (xshape, hshape, lcache, hcache) = self.logits(params, histories, grad=True)
        per, gz = nn.softmax_cross_entropy(z, targets)
        loss = float(np.dot(weights, per))
        gh_last, grads = self.head.backward(params, hcache, gz * weights[:, None])
        dhs = np.zeros(hshape)
        dhs[:, -1] = gh_last
        _, g = self.lstm.backward(params, lcache, dhs)
        grads.update(g)
        return loss, grads


def top_g_hits(logits: np.ndarray, targets: np.ndarray, g: int) -> np.ndarray:
    """True where ``targets`` ranks among the ``g`` largest logits of its row."""
    rows = np.arange(len(targets))
    rank = np.sum(logits > logits[rows, targets][:, None], axis=1)
    return rank < g


class DetectorModel:
    """Common plumbing: parameters, vocabulary, batched scoring."""

    kind = ""
    eval_batch = 512

    def __init__(self, cfg: ModelConfig, vocab: Vocabulary):
        if cfg.kind != self.kind:
            raise ConfigurationError(f"config is for {cfg.kind}, model is {self.kind}")
        self.cfg = cfg
        self.vocab = vocab
        self.n_classes = vocab.n_classes
        self.params: dict = {}

    @property
    def name(self) -> str:
        return self.cfg.name

    def init_params(self, seed: int | None = None):
        rng = np.random.default_rng(self.cfg.seed if seed is None else seed)
        self.params = self._init(rng)
        return self.params

    def components(self) -> dict:
        raise NotImplementedError

    def parameter_names(self) -> list[str]:
        return [n for layers in self.components().values() for layer in layers for n in layer.names()]


class NextEventDetector(DetectorModel):
    """Shared logic for DeepLog-style top-g detection."""

    nets: dict

    def training_rows(self, windows) -> np.ndarray:
        """``[history..., next]`` rows for every scored position of every window."""
        h = self.cfg.history
        chunks = []
        for w in windows:
            hist, nxt = history_pairs(self.vocab.map(w.events), h, self.cfg.pad_history)
            chunks.append(np.concatenate([hist, nxt[:, None]], axis=1))
        if not chunks:
            return np.zeros((0, h + 1), dtype=np.int64)
        return np.concatenate(chunks)

    def _init(self, rng):
        p = {}
        for net in self.nets.values():
            p.update(net.init(rng))
        return p

    def components(self):
        out = {}
        for net in self.nets.values():
            for k, v in net.components().items():
                out.setdefault(k, []).extend(v)
        return out

    def loss(self, params, rows, weights):
        total = 0.0
        grads = {}
        for net in self.nets.values():
            loss, g = net.loss(params, rows[:, :-1], rows[:, -1], weights)
            total += loss
            grads.update(g)
        return total, grads

    def eval_loss(self, rows, weights) -> float:
        total = 0.0
        for net in self.nets.values():
            for s in range(0, len(rows), self.eval_batch):
                chunk = rows[s : s + self.eval_batch]
                z = net.logits(self.params, chunk[:, :-1])[0]
                per, _ = nn.softmax_cross_entropy(z, chunk[:, -1])
                total += float(np.dot(weights[s : s + self.eval_batch], per))
        return total

    def hit_matrix(self, histories, targets, g: int | None = None) -> np.ndarray:
        """``(N, n_nets)`` booleans: does each net accept each next event?"""
        uniq, inv = np.unique(histories, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        out = np.ones((len(targets), len(self.nets)), dtype=bool)
        for j, net in enumerate(self.nets.values()):
            z = np.concatenate([
                net.logits(self.params, uniq[s : s + self.eval_batch])[0]
                for s in range(0, len(uniq), self.eval_batch)
            ]) if len(uniq) else np.zeros((0, self.n_classes))
            out[:, j] = top_g_hits(z[inv], targets, self.cfg.top_g if g is None else g)
        return out

    def predict(self, windows, g: int | None = None) -> np.ndarray:
        """Per-window labels (1 anomaly, 0 normal, -1 skipped as too short)."""
        h = self.cfg.history
        owners, hists, nxts = [], [], []
        labels = np.zeros(len(windows), dtype=np.int64)
        for k, w in enumerate(windows):
            if not self.cfg.pad_history and len(w.events) < h + 1:
                log.warning("window %d shorter than history + 1; skipped", getattr(w, "origin", k))
                labels[k] = -1
                continue
            hist, nxt = history_pairs(self.vocab.map(w.events), h, self.cfg.pad_history)
            hists.append(hist)
            nxts.append(nxt)
            owners.append(np.full(len(nxt), k))
        if not hists:
            return labels
        hits = self.hit_matrix(np.concatenate(hists), np.concatenate(nxts), g)
        # normal only when every net accepts every position (AND semantics)
        missed = ~hits.all(axis=1)
        owner = np.concatenate(owners)
        bad = np.bincount(owner, weights=missed, minlength=len(windows)) > 0
        labels[bad & (labels >= 0)] = 1
        return labels

    def detect(self, window, g: int | None = None):
        label = self.predict([window], g)[0]
        if label < 0:
            return None
        return "anomaly" if label else "normal"


class DeepLog(NextEventDetector):
    kind = "deeplog"

    def __init__(self, cfg: ModelConfig, vocab: Vocabulary):
        super().__init__(cfg, vocab)
        self.nets = {"seq": NextEventNet("", self.n_classes, cfg, "one_hot")}

    def logits(self, histories) -> np.ndarray:
        return self.nets["seq"].logits(self.params, np.asarray(histories))[0]


class LogAnomaly(NextEventDetector):
    kind = "loganomaly"

    def __init__(self, cfg: ModelConfig, vocab: Vocabulary):
        super().__init__(cfg, vocab)
        self.nets = {
            "seq": NextEventNet("seq.", self.n_classes, cfg, "one_hot"),
            "quant": NextEventNet("quant.", self.n_classes, cfg, "count"),
        }


class LogRobust(DetectorModel):
    kind = "logrobust"

    def __init__(self, cfg: ModelConfig, vocab: Vocabulary):
        super().__init__(cfg, vocab)
        H = cfg.hidden_size
        e = cfg.embedding_dim
        self.embed = Embedding("embed", self.n_classes, e)
        self.fwd = LSTMLayer("bilstm.fwd", e, H, cfg.design())
        self.bwd = LSTMLayer("bilstm.bwd", e, H, cfg.design(), reverse=True)
        self.attn = SelfAttention("attention", 2 * H, 2 * H, cfg.design(cfg.attn_qubits), cfg.qkv_sharing)
        self.head = Affine("head", 2 * H, 1)

    def components(self):
        return {
            "embedding": [self.embed],
            "lstm": [*self.fwd.layers, *self.bwd.layers],
            "attention": self.attn.layers,
            "head": [self.head],
        }

    def _init(self, rng):
        p = {}
        for part in (self.embed, self.fwd, self.bwd, self.attn, self.head):
            p.update(part.init(rng))
        return p

    def training_rows(self, windows) -> np.ndarray:
        if not windows:
            return np.zeros((0, 1), dtype=np.int64)
        lengths = {len(w.events) for w in windows}
        if len(lengths) != 1:
            raise PreconditionError("LogRobust needs windows of equal length")
        ids = np.stack([self.vocab.map(w.events) for w in windows])
        labels = np.array([w.label for w in windows], dtype=np.int64)
        return np.concatenate([ids, labels[:, None]], axis=1)

    def _forward(self, params, ids, grad: bool):
        emb, ecache = self.embed.forward(params, ids, grad)
        hf, fcache = self.fwd.forward(params, emb, grad)
        hb, bcache = self.bwd.forward(params, emb, grad)
        hcat = np.concatenate([hf, hb], axis=-1)
        att, acache = self.attn.forward(params, hcat, grad)
        pooled = att.mean(axis=1)
        z, hcache = self.head.forward(params, pooled, grad)
        return z[:, 0], (ecache, fcache, bcache, acache, hcache, att.shape, hf.shape[-1])

    def scores(self, ids, params=None) -> np.ndarray:
        params = self.params if params is None else params
        ids = np.asarray(ids, dtype=np.int64)
        out = [self._forward(params, ids[s : s + self.eval_batch], False)[0]
               for s in range(0, len(ids), self.eval_batch)]
        return nn.sigmoid(np.concatenate(out)) if out else np.zeros(0)

    def loss(self, params, rows, weights):
        ids, y = rows[:, :-1], rows[:, -1].astype(float)
        z, (ecache, fcache, bcache, acache, hcache, att_shape, H) = self._forward(params, ids, True)
        per, gz = nn.sigmoid_binary_cross_entropy(z, y)
        loss = float(np.dot(weights, per))
        gpool, grads = self.head.backward(params, hcache, (gz * weights)[:, None])
        gatt = np.repeat(gpool[:, None, :] / att_shape[1], att_shape[1], axis=1)
        ghcat, g = self.attn.backward(params, acache, gatt)
        grads.update(g)
        gemb, g = self.fwd.backward(params, fcache, ghcat[..., :H])
        grads.update(g)
        gemb_b, g = self.bwd.backward(params, bcache, ghcat[..., H:])
        grads.update(g)
        _, g = self.embed.backward(params, ecache, gemb + gemb_b)
        grads.update(g)
        return loss, grads

    def eval_loss(self, rows, weights) -> float:
        total = 0.0
        for s in range(0, len(rows), self.eval_batch):
            chunk = rows[s : s + self.eval_batch]
            z = self._forward(self.params, chunk[:, :-1], False)[0]
            per, _ = nn.sigmoid_binary_cross_entropy(z, chunk[:, -1].astype(float))
            total += float(np.dot(weights[s : s + self.eval_batch], per))
        return total

    def predict_proba(self, windows) -> np.ndarray:
        if not windows:
            return np.zeros(0)
        ids = self.training_rows(windows)[:, :-1]
        uniq, inv = np.unique(ids, axis=0, return_inverse=True)
        return self.scores(uniq)[inv.reshape(-1)]

    def predict(self, windows) -> np.ndarray:
        return (self.predict_proba(windows) >= 0.5).astype(np.int64)


MODEL_CLASSES = {"deeplog": DeepLog, "loganomaly": LogAnomaly, "logrobust": LogRobust}


def build_model(cfg: ModelConfig, vocab: Vocabulary, init: bool = True) -> DetectorModel:
    model = MODEL_CLASSES[cfg.kind](cfg, vocab)
    if init:
        model.init_params()
    return model


# -- the three detection entry points ---------------------------------------


def next_event_forward(model: NextEventDetector, history) -> np.ndarray:
    """Logits over ``|V| + 1`` classes for one history of template ids."""
    hist = model.vocab.map(history)
    if len(hist) != model.cfg.history:
        raise PreconditionError(f"history must have {model.cfg.history} events, got {len(hist)}")
    net = next(iter(model.nets.values()))
    return net.logits(model.params, hist[None, :])[0][0]


def deeplog_detect(window, model: DeepLog, g: int | None = None):
    """``"anomaly"`` iff some next event falls outside the top-``g`` predictions."""
    return model.detect(window, g)


def loganomaly_detect(window, model: LogAnomaly, g: int | None = None):
    """Normal only when the sequential and the quantitative model both accept."""
    return model.detect(window, g)


def logrobust_classify(window, model: LogRobust) -> float:
    return float(model.predict_proba([window])[0])


__all__ = [
    "PAD",
    "DeepLog",
    "LogAnomaly",
    "LogRobust",
    "ModelConfig",
    "build_model",
    "config_from_dict",
    "deeplog_detect",
    "logrobust_classify",
    "loganomaly_detect",
    "next_event_forward",
    "top_g_hits",
]
