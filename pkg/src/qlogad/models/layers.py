"""Layers with explicit forward/backward passes over a shared parameter dict.

A layer owns a name prefix and a set of parameter names; the arrays
themselves live in the model's ``params`` dict so the optimiser and the
checkpoint code see one flat namespace.  ``forward`` returns
``(output, cache)`` and ``backward(params, cache, upstream)`` returns
``(grad_input, grads)``.
"""
from __future__ import annotations

import numpy as np

from .. import nn, pqc, qsim
from ..encode import encode_rows
from ..errors import PreconditionError
from ..pqc import CircuitDesign


class Layer:
    prefix: str
    shapes: dict

    def names(self) -> list[str]:
        return [f"{self.prefix}.{k}" for k in self.shapes]

    def _p(self, params, key):
        return params[f"{self.prefix}.{key}"]

    def _g(self, **grads):
        return {f"{self.prefix}.{k}": v for k, v in grads.items()}


class Affine(Layer):
    def __init__(self, prefix: str, n_in: int, n_out: int, bias: bool = True):
        self.prefix = prefix
        self.n_in, self.n_out, self.bias = n_in, n_out, bias
        self.shapes = {"W": (n_in, n_out)}
        if bias:
            self.shapes["b"] = (n_out,)

    def init(self, rng):
        return {
            f"{self.prefix}.{k}": nn.init_uniform(rng, self.n_in, shape) for k, shape in self.shapes.items()
        }

    def forward(self, params, x, grad: bool = True):
        W = self._p(params, "W")
        b = self._p(params, "b") if self.bias else np.zeros(self.n_out)
        return nn.linear_forward(x, W, b), x

    def backward(self, params, cache, upstream):
        gx, gW, gb = nn.linear_backward(cache, self._p(params, "W"), upstream)
        grads = self._g(W=gW, b=gb) if self.bias else self._g(W=gW)
        return gx, grads


class QLayer(Layer):
    """Linear down-projection -> encoding -> PQC -> <Z> per qubit -> linear up-projection.

    ``in_W`` maps the input to the encoder's feature count (``n`` angles or
    ``2**n`` amplitudes); ``out_W`` maps the ``n`` expectations to the
    output width.  The compiled circuit unitaries are cached per ``theta``
    because an unrolled recurrence reuses them at every time step.
    """

    def __init__(self, prefix: str, n_in: int, n_out: int, design: CircuitDesign, fd_fallback: bool = True):
        self.prefix = prefix
        self.design = design
        self.circuit = pqc.build_circuit(design)
        self.n_in, self.n_out = n_in, n_out
        self.fd_fallback = fd_fallback
        m = design.feature_count
        n = design.n_qubits
        self.shapes = {
            "in_W": (n_in, m),
            "in_b": (m,),
            "theta": (design.parameter_count,),
            "out_W": (n, n_out),
            "out_b": (n_out,),
        }
        self._shifted_key = self._transfer_key = None

    @property
    def n_qubits(self) -> int:
        return self.design.n_qubits

    def init(self, rng):
        n = self.design.n_qubits
        return {
            f"{self.prefix}.in_W": nn.init_uniform(rng, self.n_in, self.shapes["in_W"]),
            f"{self.prefix}.in_b": nn.init_uniform(rng, self.n_in, self.shapes["in_b"]),
            f"{self.prefix}.theta": pqc.random_params(self.design, rng),
            f"{self.prefix}.out_W": nn.init_uniform(rng, n, self.shapes["out_W"]),
            f"{self.prefix}.out_b": nn.init_uniform(rng, n, self.shapes["out_b"]),
        }

    def _shifted(self, theta):
        key = theta.tobytes()
        if key != self._shifted_key:
            self._shifted_cache = pqc.shifted_unitaries(self.circuit, theta)
            self._shifted_key = key
        return self._shifted_cache

    def _transfer(self, theta):
        key = theta.tobytes()
        if key != self._transfer_key:
            self._transfer_cache = pqc.transfer_matrix(self.circuit, theta)
            self._transfer_key = key
        return self._transfer_cache

    def expectations(self, params, x):
        """Circuit outputs ``<Z_q>`` for each input row (no projection out)."""
        a = nn.linear_forward(x, self._p(params, "in_W"), self._p(params, "in_b"))
        states = encode_rows(a, self.design.encoding, self.design.n_qubits)
        return qsim.expectations_z_rows(states @ self._transfer(self._p(params, "theta")))

    def forward(self, params, x, grad: bool = True):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise PreconditionError(f"{self.prefix}: expected (rows, {self.n_in}) input, got {x.shape}")
        theta = self._p(params, "theta")
        if grad:
            a = nn.linear_forward(x, self._p(params, "in_W"), self._p(params, "in_b"))
            E, Jp, Jx = pqc.forward_with_jacobians(
                self.design, theta, a, fd_fallback=self.fd_fallback, unitaries=self._shifted(theta)
            )
            cache = (x, E, Jp, Jx)
        else:
            E = self.expectations(params, x)
            cache = None
        y = nn.linear_forward(E, self._p(params, "out_W"), self._p(params, "out_b"))
        return y, cache

    def backward(self, params, cache, upstream):
        x, E, Jp, Jx = cache
        gE, g_out_W, g_out_b = nn.linear_backward(E, self._p(params, "out_W"), upstream)
        g_theta = np.einsum("bn,bnp->p", gE, Jp)
        ga = np.einsum("bn,bnm->bm", gE, Jx)
        gx, g_in_W, g_in_b = nn.linear_backward(x, self._p(params, "in_W"), ga)
        return gx, self._g(in_W=g_in_W, in_b=g_in_b, theta=g_theta, out_W=g_out_W, out_b=g_out_b)


class Embedding(Layer):
    def __init__(self, prefix: str, n_rows: int, dim: int):
        self.prefix = prefix
        self.n_rows, self.dim = n_rows, dim
        self.shapes = {"table": (n_rows, dim)}

    def init(self, rng):
        return {f"{self.prefix}.table": rng.normal(0.0, 1.0, self.shapes["table"])}

    def forward(self, params, ids, grad: bool = True):
        ids = np.asarray(ids, dtype=np.int64)
        if np.any(ids < 0) or np.any(ids >= self.n_rows):
            raise PreconditionError("embedding index out of range")
        return self._p(params, "table")[ids], ids

    def backward(self, params, cache, upstream):
        g = np.zeros(self.shapes["table"])
        np.add.at(g, cache.reshape(-1), upstream.reshape(-1, self.dim))
        return None, self._g(table=g)


# -- recurrent ------------------------------------------------------------

GATE_NAMES = {"f": "forget", "i": "input", "C": "update", "o": "output"}


def make_gate(prefix: str, n_in: int, n_out: int, design: CircuitDesign | None):
    if design is None:
        return Affine(prefix, n_in, n_out)
    return QLayer(prefix, n_in, n_out, design)


def qlstm_cell(params, x_t, h_prev, c_prev, gates: dict, grad: bool = False):
    """One (Q)LSTM step: each gate transform of the classic cell is ``gates[g]``.

    ``gates`` maps ``f, i, C, o`` to layers (QLayers for the quantum cell,
    Affine maps for the classical one).  Returns ``(h_t, c_t, cache)``.
    """
    v = np.concatenate([h_prev, x_t], axis=-1)
    z, caches = [], []
    for g in nn.LSTM_GATES:
        out, cache = gates[g].forward(params, v, grad)
        z.append(out)
        caches.append(cache)
    h, c, pw = nn.lstm_pointwise(*z, c_prev)
    return h, c, (caches, pw)


def qlstm_cell_backward(params, cache, dh, dc, gates: dict, hidden: int):
    """Returns ``(dx_t, dh_prev, dc_prev, grads)``."""
    caches, pw = cache
    dz = nn.lstm_pointwise_backward(pw, dh, dc)
    dv = None
    grads = {}
    for g, gcache, dz_g in zip(nn.LSTM_GATES, caches, dz[:4]):
        gv, gg = gates[g].backward(params, gcache, dz_g)
        dv = gv if dv is None else dv + gv
        grads.update(gg)
    return dv[:, hidden:], dv[:, :hidden], dz[4], grads


class LSTMLayer:
    """Unrolled (Q)LSTM over ``(batch, time, features)`` input."""

    def __init__(self, prefix: str, n_in: int, hidden: int, design: CircuitDesign | None = None,
                 reverse: bool = False):
        self.prefix = prefix
        self.n_in, self.hidden = n_in, hidden
        self.design = design
        self.reverse = reverse
        self.gates = {
            g: make_gate(f"{prefix}.{GATE_NAMES[g]}", hidden + n_in, hidden, design)
            for g in nn.LSTM_GATES
        }

    @property
    def layers(self):
        return list(self.gates.values())

    def init(self, rng):
        out = {}
        for layer in self.layers:
            out.update(layer.init(rng))
        return out

    def names(self):
        return [n for layer in self.layers for n in layer.names()]

    def forward(self, params, xs, grad: bool = True):
        xs = np.asarray(xs, dtype=float)
        B, T, d = xs.shape
        if d != self.n_in:
            raise PreconditionError(f"{self.prefix}: expected input width {self.n_in}, got {d}")
        h = np.zeros((B, self.hidden))
        c = np.zeros((B, self.hidden))
        hs = np.empty((B, T, self.hidden))
        steps = range(T - 1, -1, -1) if self.reverse else range(T)
        caches = []
        for t in steps:
            h, c, cache = qlstm_cell(params, xs[:, t], h, c, self.gates, grad)
            hs[:, t] = h
            caches.append((t, cache))
        return hs, caches if grad else None

    def backward(self, params, caches, dhs):
        B, T, _ = dhs.shape
        dxs = np.zeros((B, T, self.n_in))
        dh = np.zeros((B, self.hidden))
        dc = np.zeros((B, self.hidden))
        grads = {}
        for t, cache in reversed(caches):
            dx, dh, dc, g = qlstm_cell_backward(params, cache, dh + dhs[:, t], dc, self.gates, self.hidden)
            dxs[:, t] = dx
            for k, v in g.items():
                grads[k] = grads[k] + v if k in grads else v
        return dxs, grads


# -- attention ------------------------------------------------------------


class SelfAttention:
    """Scaled dot-product self-attention; Q/K/V maps are linear or QLayers."""

    def __init__(self, prefix: str, d_in: int, d_att: int, design: CircuitDesign | None = None,
                 sharing: str = "shared"):
        if sharing not in ("shared", "separate"):
            raise PreconditionError(f"unknown register sharing mode {sharing!r}")
        self.prefix = prefix
        self.d_in, self.d_att = d_in, d_att
        self.design = design
        self.sharing = sharing
        if design is None:
            self.proj = {k: Affine(f"{prefix}.W_{k}", d_in, d_att, bias=False) for k in "QKV"}
        else:
            self.proj = {k: QLayer(f"{prefix}.{k}", d_in, d_att, design) for k in "QKV"}

    @property
    def layers(self):
        return list(self.proj.values())

    def init(self, rng):
        out = {}
        for layer in self.layers:
            out.update(layer.init(rng))
        return out

    def names(self):
        return [n for layer in self.layers for n in layer.names()]

    @property
    def qubits(self) -> int:
        if self.design is None:
            return 0
        return self.design.n_qubits * (1 if self.sharing == "shared" else 3)

    def forward(self, params, X, grad: bool = True):
        X = np.asarray(X, dtype=float)
        lead = X.shape[:-1]
        if X.shape[-1] != self.d_in:
            raise PreconditionError(f"{self.prefix}: expected width {self.d_in}, got {X.shape[-1]}")
        flat = X.reshape(-1, self.d_in)
        outs, caches = {}, {}
        for k, layer in self.proj.items():
            y, caches[k] = layer.forward(params, flat, grad)
            outs[k] = y.reshape(lead + (self.d_att,))
        out, core = nn.attention_core(outs["Q"], outs["K"], outs["V"])
        return out, (lead, caches, core)

    def backward(self, params, cache, upstream):
        lead, caches, core = cache
        dQKV = dict(zip("QKV", nn.attention_core_backward(core, upstream)))
        dX = np.zeros(lead + (self.d_in,)).reshape(-1, self.d_in)
        grads = {}
        for k, layer in self.proj.items():
            gx, g = layer.backward(params, caches[k], dQKV[k].reshape(-1, self.d_att))
            dX += gx
            grads.update(g)
        return dX.reshape(lead + (self.d_in,)), grads


def q_attention(params, X, attention: SelfAttention):
    """``softmax(Q K^T / sqrt(d_k)) V`` with Q, K, V produced by the layer's maps."""
    out, _ = attention.forward(params, X, grad=False)
    return out
