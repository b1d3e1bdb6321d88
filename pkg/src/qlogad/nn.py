"""Small classical NN toolkit with hand-written reverse-mode gradients.

Every ``*_forward`` returns the value plus whatever the matching
``*_backward`` needs.  Arrays carry a leading batch axis where it makes
sense; single vectors work too.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, PreconditionError


def init_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


# -- linear -----------------------------------------------------------------


def linear_forward(x, W, b):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != W.shape[0] or b.shape[-1] != W.shape[1]:
        raise PreconditionError(
            f"linear layer dims do not conform: x{x.shape}, W{W.shape}, b{b.shape}"
        )
    return x @ W + b


def linear_backward(x, W, upstream):
    """Returns ``(grad_x, grad_W, grad_b)``; batch axes are summed out."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(upstream, dtype=float)
    gx = g @ W.T
    x2 = x.reshape(-1, x.shape[-1])
    g2 = g.reshape(-1, g.shape[-1])
    return gx, x2.T @ g2, g2.sum(axis=0)


# -- activations ------------------------------------------------------------


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis: int = -1):
    x = np.asarray(x, dtype=float)
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def activation(kind: str, x):
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(np.asarray(x, dtype=float))
    if kind == "softmax":
        return softmax(x)
    raise PreconditionError(f"unknown activation {kind!r}")


def activation_backward(kind: str, y, upstream, axis: int = -1):
    """Gradient w.r.t. the input given the forward *output* ``y``."""
    if kind == "sigmoid":
        return upstream * y * (1.0 - y)
    if kind == "tanh":
        return upstream * (1.0 - y * y)
    if kind == "softmax":
        return y * (upstream - np.sum(upstream * y, axis=axis, keepdims=True))
    raise PreconditionError(f"unknown activation {kind!r}")


# -- losses -----------------------------------------------------------------


def softmax_cross_entropy(logits, target):
    """``-log softmax(logits)[target]`` and its gradient.

    With batched ``logits`` of shape ``(B, C)`` and ``target`` of shape
    ``(B,)`` the per-sample losses and gradients are returned.
    """
    z = np.asarray(logits, dtype=float)
    t = np.asarray(target)
    single = z.ndim == 1
    z2 = z.reshape(-1, z.shape[-1])
    t2 = t.reshape(-1)
    if np.any(t2 < 0) or np.any(t2 >= z2.shape[1]):
        raise PreconditionError(f"target index out of range for {z2.shape[1]} classes")
    shifted = z2 - z2.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z2.shape[0])
    loss = log_norm - shifted[rows, t2]
    grad = np.exp(shifted - log_norm[:, None])
    grad[rows, t2] -= 1.0
    if single:
        return float(loss[0]), grad[0]
    return loss, grad


def binary_cross_entropy(p, y, eps: float = 1e-7):
    p = np.clip(np.asarray(p, dtype=float), eps, 1.0 - eps)
    y = np.asarray(y, dtype=float)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = -y / p + (1.0 - y) / (1.0 - p)
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def sigmoid_binary_cross_entropy(z, y):
    """BCE on a logit; stable for large ``|z|``. Gradient is ``sigmoid(z) - y``."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    loss = np.logaddexp(0.0, z) - y * z
    return loss, sigmoid(z) - y


# -- optimisation -----------------------------------------------------------


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> dict:
    """One bias-corrected Adam update. Returns new arrays; ``state`` is advanced."""
    if set(params) != set(grads):
        raise PreconditionError("parameter and gradient names differ")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=float)
        if g.shape != p.shape:
            raise PreconditionError(f"{name}: gradient shape {g.shape} != parameter shape {p.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p, dtype=float)
            v = np.zeros_like(p, dtype=float)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


def clip_by_global_norm(grads: dict, max_norm: float = 5.0):
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total > max_norm:
        scale = max_norm / total
        grads = {k: g * scale for k, g in grads.items()}
    return grads, total


# -- LSTM -------------------------------------------------------------------

LSTM_GATES = ("f", "i", "C", "o")


def lstm_pointwise(z_f, z_i, z_c, z_o, c_prev):
    """The cell recurrence once the four gate pre-activations are known."""
    f = sigmoid(z_f)
    i = sigmoid(z_i)
    c_tilde = np.tanh(z_c)
    o = sigmoid(z_o)
    c = f * c_prev + i * c_tilde
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, (f, i, c_tilde, o, c_prev, tanh_c)


def lstm_pointwise_backward(cache, dh, dc):
    f, i, c_tilde, o, c_prev, tanh_c = cache
    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz_f = dc * c_prev * f * (1.0 - f)
    dz_i = dc * c_tilde * i * (1.0 - i)
    dz_c = dc * i * (1.0 - c_tilde * c_tilde)
    dz_o = do * o * (1.0 - o)
    return dz_f, dz_i, dz_c, dz_o, dc * f


def lstm_cell(x_t, h_prev, c_prev, weights: dict):
    """Classic LSTM cell on ``v = [h_prev, x_t]``.

    ``weights`` holds ``W_f, W_i, W_C, W_o`` of shape ``(hidden + input,
    hidden)`` and the matching ``b_*``.  Returns ``(h_t, c_t, cache)``.
    """
    v = np.concatenate([h_prev, x_t], axis=-1)
    z = [linear_forward(v, weights[f"W_{g}"], weights[f"b_{g}"]) for g in LSTM_GATES]
    if z[0].shape != np.shape(c_prev):
        raise PreconditionError("hidden and cell state sizes do not match the weights")
    h, c, pw = lstm_pointwise(*z, c_prev)
    return h, c, (v, weights, pw, np.shape(h_prev)[-1])


def lstm_cell_backward(cache, dh, dc):
    """Returns ``(dx, dh_prev, dc_prev, grads)``."""
    v, weights, pw, hidden = cache
    dz = lstm_pointwise_backward(pw, dh, dc)
    dc_prev = dz[4]
    dv = np.zeros_like(v)
    grads = {}
    for g, dz_g in zip(LSTM_GATES, dz[:4]):
        gv, gW, gb = linear_backward(v, weights[f"W_{g}"], dz_g)
        dv += gv
        grads[f"W_{g}"] = gW
        grads[f"b_{g}"] = gb
    return dv[..., hidden:], dv[..., :hidden], dc_prev, grads


# -- attention --------------------------------------------------------------


def attention_core(Q, K, V):
    """``softmax(Q K^T / sqrt(d_k)) V`` over the last two axes."""
    d_k = Q.shape[-1]
    scores = Q @ np.swapaxes(K, -1, -2) / np.sqrt(d_k)
    A = softmax(scores, axis=-1)
    return A @ V, (Q, K, V, A)


def attention_core_backward(cache, upstream):
    Q, K, V, A = cache
    d_k = Q.shape[-1]
    dV = np.swapaxes(A, -1, -2) @ upstream
    dA = upstream @ np.swapaxes(V, -1, -2)
    dS = activation_backward("softmax", A, dA) / np.sqrt(d_k)
    dQ = dS @ K
    dK = np.swapaxes(dS, -1, -2) @ Q
    return dQ, dK, dV


def scaled_dot_attention(X, W_Q, W_K, W_V):
    X = np.asarray(X, dtype=float)
    if not (X.shape[-1] == W_Q.shape[0] == W_K.shape[0] == W_V.shape[0]):
        raise PreconditionError("attention projections do not match the input width")
    if W_Q.shape[1] != W_K.shape[1]:
        raise PreconditionError("query and key widths differ")
    Q, K, V = X @ W_Q, X @ W_K, X @ W_V
    out, core = attention_core(Q, K, V)
    return out, (X, W_Q, W_K, W_V, core)


def scaled_dot_attention_backward(cache, upstream):
    """Returns ``(dX, dW_Q, dW_K, dW_V)``."""
    X, W_Q, W_K, W_V, core = cache
    dQ, dK, dV = attention_core_backward(core, upstream)
    X2 = X.reshape(-1, X.shape[-1])

    def wgrad(d):
        return X2.T @ d.reshape(-1, d.shape[-1])

    dX = dQ @ W_Q.T + dK @ W_K.T + dV @ W_V.T
    return dX, wgrad(dQ), wgrad(dK), wgrad(dV)


# -- checkpoints ------------------------------------------------------------
#
# Binary container, all integers little-endian uint32:
#   magic b"QLCK", version, entry count, then per entry:
#   name length, UTF-8 name, ndim, each dim, row-major float64 values.

_MAGIC = b"QLCK"
_VERSION = 1


def save_arrays(path, arrays: dict) -> None:
    chunks = [_MAGIC, struct.pack("<II", _VERSION, len(arrays))]
    for name, arr in arrays.items():
        a = np.asarray(arr, dtype="<f8")  # tobytes() is row-major; keeps 0-d shapes
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)) + raw)
        chunks.append(struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape))
        chunks.append(a.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_arrays(path) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise DataError(f"{path}: not a qlogad checkpoint")
    pos = 4
    version, count = struct.unpack_from("<II", data, pos)
    pos += 8
    if version != _VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    out = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos : pos + nlen].decode("utf-8")
            pos += nlen
            (ndim,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            out[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape).copy()
            pos += 8 * size
    except (struct.error, ValueError) as exc:
        raise DataError(f"{path}: truncated checkpoint") from exc
    return out
