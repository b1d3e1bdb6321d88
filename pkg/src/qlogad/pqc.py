"""Parameterised circuits: layouts, forward passes, parameter-shift gradients.

A design compiles to a flat op list. Each layer is a rotation block (one or
two trainable rotations per qubit) followed by the CNOT chain
``0->1, 1->2, ..., n-2->n-1`` (plus ``n-1->0`` when ``ring`` is set).
Parameters are indexed layer-major, then qubit, then rotation order.

Every model output is the vector of per-qubit Pauli-Z expectations.
Gradients use the two-term shift rule: each trainable rotation (and each
angle-encoding rotation) has the form ``exp(-i*a/2*P)``, so

    d<Z_q>/da = (<Z_q>(a + pi/2) - <Z_q>(a - pi/2)) / 2

exactly.  All shifted circuits of a batch are stacked into one array and
simulated together.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .encode import Encoding, encode_rows, feature_count
from .errors import ConfigurationError, PreconditionError, UnsupportedGradientError
from .qsim import Gate

LAYOUTS = {
    "Rx": ("Rx",),
    "RxRy": ("Rx", "Ry"),
    "RyRx": ("Ry", "Rx"),
    "Rz": ("Rz",),
}
SHIFT = np.pi / 2
FD_STEP = 1e-5


def parse_layout(value: str) -> str:
    for name in LAYOUTS:
        if str(value).strip().lower() == name.lower():
            return name
    raise ConfigurationError(f"unknown layout {value!r}; expected one of {', '.join(LAYOUTS)}")


@dataclass(frozen=True)
class CircuitDesign:
    layout: str = "Rx"
    n_qubits: int = 4
    n_layers: int = 1
    encoding: Encoding = Encoding.RX
    ring: bool = False

    def __post_init__(self):
        object.__setattr__(self, "layout", parse_layout(self.layout))
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        object.__setattr__(self, "n_qubits", qsim.check_qubit_count(self.n_qubits))
        if int(self.n_layers) != self.n_layers or self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be a positive integer, got {self.n_layers!r}")
        object.__setattr__(self, "n_layers", int(self.n_layers))

    @property
    def rotations_per_qubit(self) -> int:
        return len(LAYOUTS[self.layout])

    @property
    def parameter_count(self) -> int:
        return self.n_layers * self.n_qubits * self.rotations_per_qubit

    @property
    def feature_count(self) -> int:
        return feature_count(self.encoding, self.n_qubits)

    def to_text(self) -> str:
        return (
            f"layout = {self.layout}\n"
            f"n_qubits = {self.n_qubits}\n"
            f"n_layers = {self.n_layers}\n"
            f"encoding = {self.encoding.value}\n"
            f"ring = {'true' if self.ring else 'false'}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "CircuitDesign":
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigurationError(f"expected key = value, got {raw!r}")
            values[key.strip()] = value.strip()
        unknown = set(values) - {"layout", "n_qubits", "n_layers", "encoding", "ring"}
        if unknown:
            raise ConfigurationError(f"unknown circuit keys: {sorted(unknown)}")
        return cls(
            layout=values.get("layout", "Rx"),
            n_qubits=int(values.get("n_qubits", 4)),
            n_layers=int(values.get("n_layers", 1)),
            encoding=values.get("encoding", "rx"),
            ring=values.get("ring", "false").lower() in ("1", "true", "yes"),
        )


@dataclass(frozen=True)
class Op:
    kind: str
    target: int
    control: int | None = None
    param: int | None = None


@dataclass(frozen=True)
class Circuit:
    design: CircuitDesign
    ops: tuple[Op, ...] = field(repr=False)

    @property
    def n_params(self) -> int:
        return self.design.parameter_count

    def gates(self, theta) -> list[Gate]:
        """Bind angles and return the plain qsim gate list."""
        theta = np.asarray(theta, dtype=float)
        out = []
        for op in self.ops:
            if op.kind == "CNOT":
                out.append(Gate("CNOT", op.target, control=op.control))
            else:
                out.append(Gate(op.kind, op.target, angle=float(theta[op.param])))
        return out


@functools.lru_cache(maxsize=None)
def build_circuit(design: CircuitDesign) -> Circuit:
    n = design.n_qubits
    ops = []
    p = 0
    for _ in range(design.n_layers):
        for q in range(n):
            for kind in LAYOUTS[design.layout]:
                ops.append(Op(kind, q, param=p))
                p += 1
        for q in range(n - 1):
            ops.append(Op("CNOT", q + 1, control=q))
        if design.ring and n > 2:
            ops.append(Op("CNOT", 0, control=n - 1))
    return Circuit(design, tuple(ops))


def _check_theta(circuit: Circuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != circuit.n_params:
        raise PreconditionError(
            f"circuit takes {circuit.n_params} parameters, got {theta.shape[-1]}"
        )
    return theta


def evolve_rows(circuit: Circuit, thetas: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Run the circuit on every row; ``thetas`` is ``(P,)`` or one row per state."""
    thetas = _check_theta(circuit, thetas)
    per_row = thetas.ndim == 2
    for op in circuit.ops:
        if op.kind == "CNOT":
            states = qsim.apply_cnot_rows(states, op.control, op.target)
        elif per_row:
            mats = qsim.rotation_matrices(op.kind, thetas[:, op.param])
            states = qsim.apply_matrix_rows(states, mats, op.target)
        else:
            states = qsim.apply_matrix_rows(
                states, qsim.gate_matrix(op.kind, thetas[op.param]), op.target
            )
    return states


def expectations_rows(circuit: Circuit, thetas, states: np.ndarray) -> np.ndarray:
    return qsim.expectations_z_rows(evolve_rows(circuit, thetas, states))


def _as_batch(design: CircuitDesign, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if design.encoding.is_angle and x.shape[1] != design.n_qubits:
        raise PreconditionError(
            f"{design.encoding.value} encoding needs {design.n_qubits} features, got {x.shape[1]}"
        )
    return x


def forward_batch(design: CircuitDesign, params, features) -> np.ndarray:
    circuit = build_circuit(design)
    x = _as_batch(design, features)
    states = encode_rows(x, design.encoding, design.n_qubits)
    return expectations_rows(circuit, params, states)


def forward(design: CircuitDesign, params, features) -> np.ndarray:
    """Encode one feature vector, run the circuit, return ``[<Z_0>, ..., <Z_n-1>]``."""
    return forward_batch(design, params, np.asarray(features, dtype=float)[None, :])[0]


def _shift_table(size: int, step: float) -> np.ndarray:
    # rows 0..size-1 are +step on coordinate j, rows size..2*size-1 are -step
    eye = np.eye(size) * step
    return np.concatenate([eye, -eye])


def _layer_unitaries(circuit: Circuit, configs: np.ndarray) -> np.ndarray:
    """Full-register unitaries ``(K, D, D)`` for ``K`` parameter vectors."""
    design = circuit.design
    n = design.n_qubits
    K = configs.shape[0]
    dim = 1 << n
    total = np.broadcast_to(np.eye(dim, dtype=complex), (K, dim, dim))
    per_layer = n * design.rotations_per_qubit
    ops_per_layer = len(circuit.ops) // design.n_layers
    for layer in range(design.n_layers):
        layer_ops = circuit.ops[layer * ops_per_layer : (layer + 1) * ops_per_layer]
        # one 2x2 per qubit: product of that qubit's rotations in program order
        qubit_mats = np.broadcast_to(np.eye(2, dtype=complex), (K, n, 2, 2)).copy()
        for op in layer_ops[:per_layer]:
            rot = qsim.rotation_matrices(op.kind, configs[:, op.param])
            qubit_mats[:, op.target] = rot @ qubit_mats[:, op.target]
        block = qubit_mats[:, 0]
        for q in range(1, n):
            m = qubit_mats[:, q]
            size = block.shape[-1] * 2
            block = (block[:, :, None, :, None] * m[:, None, :, None, :]).reshape(K, size, size)
        for op in layer_ops[per_layer:]:
            block = block[:, qsim._cnot_permutation(n, op.control, op.target), :]
        total = block @ total
    return total


def shifted_unitaries(circuit: Circuit, theta) -> np.ndarray:
    """Transfer matrices of the unshifted and every +-pi/2 shifted circuit.

    Entry ``k`` is ``R_k`` with ``psi_out = psi_in @ R_k`` for row states,
    i.e. ``R_k = U_k^T``.  Index 0 is the unshifted circuit, ``1..P`` the
    ``+pi/2`` shifts and ``P+1..2P`` the ``-pi/2`` shifts.  Each circuit is
    compiled on its own, layer by layer: the Kronecker product of the
    per-qubit rotations followed by the CNOT permutation.
    """
    theta = _check_theta(circuit, theta)
    configs = np.concatenate([theta[None, :], theta + _shift_table(theta.size, SHIFT)])
    return np.ascontiguousarray(_layer_unitaries(circuit, configs).transpose(0, 2, 1))


def transfer_matrix(circuit: Circuit, theta) -> np.ndarray:
    """``R`` with ``psi_out = psi_in @ R`` for row states (the unshifted circuit only)."""
    theta = _check_theta(circuit, theta)
    return np.ascontiguousarray(_layer_unitaries(circuit, theta[None, :])[0].T)


def forward_with_jacobians(
    design: CircuitDesign,
    params,
    features,
    inputs: bool = True,
    fd_fallback: bool = True,
    unitaries: np.ndarray | None = None,
):
    """Expectations plus shift-rule Jacobians for a feature batch.

    Returns ``(E, J_params, J_inputs)`` with shapes ``(B, n)``, ``(B, n, P)``
    and ``(B, n, m)``; ``J_inputs`` is ``None`` when ``inputs`` is false.
    Amplitude encodings have no shift rule for their inputs, so the input
    Jacobian falls back to central differences with step ``FD_STEP``.

    Without ``unitaries`` every shifted circuit is simulated gate by gate
    on the stacked batch.  Passing the output of ``shifted_unitaries`` for
    the same ``params`` reuses those compiled circuits instead.
    """
    circuit = build_circuit(design)
    theta = _check_theta(circuit, params)
    x = _as_batch(design, features)
    B, m = x.shape
    P = theta.size
    n = design.n_qubits
    base = encode_rows(x, design.encoding, n)

    shifted_states = None
    if inputs:
        if design.encoding.is_angle:
            step = SHIFT
        elif fd_fallback:
            step = FD_STEP
        else:
            raise UnsupportedGradientError(
                "amplitude encoding has no shift rule; enable the finite-difference fallback"
            )
        shifted = (x[None, :, :] + _shift_table(m, step)[:, None, :]).reshape(-1, m)
        shifted_states = encode_rows(shifted, design.encoding, n)

    if unitaries is None:
        state_blocks = [base, np.tile(base, (2 * P, 1))]
        theta_blocks = [
            np.broadcast_to(theta, (B, P)),
            np.repeat(theta + _shift_table(P, SHIFT), B, axis=0),
        ]
        if inputs:
            state_blocks.append(shifted_states)
            theta_blocks.append(np.broadcast_to(theta, (2 * m * B, P)))
        E_all = expectations_rows(
            circuit, np.concatenate(theta_blocks), np.concatenate(state_blocks)
        )
        E = E_all[:B]
        E_params = E_all[B : B + 2 * P * B]
        E_inputs = E_all[B + 2 * P * B :]
    else:
        E_cfg = qsim.expectations_z_rows(np.matmul(base[None], unitaries).reshape(-1, 1 << n))
        E = E_cfg[:B]
        E_params = E_cfg[B:]
        if inputs:
            E_inputs = qsim.expectations_z_rows(shifted_states @ unitaries[0])

    shifted_p = E_params.reshape(2, P, B, n)
    J_params = (0.5 * (shifted_p[0] - shifted_p[1])).transpose(1, 2, 0)
    J_inputs = None
    if inputs:
        shifted_x = E_inputs.reshape(2, m, B, n)
        scale = 0.5 if design.encoding.is_angle else 0.5 / FD_STEP
        J_inputs = (scale * (shifted_x[0] - shifted_x[1])).transpose(1, 2, 0)
    return E, J_params, J_inputs


def gradient_params(design: CircuitDesign, params, features, upstream) -> np.ndarray:
    """``J^T @ upstream`` for one sample, ``J[q, j] = d<Z_q>/d theta_j``."""
    _, J, _ = forward_with_jacobians(design, params, np.asarray(features, float)[None, :], inputs=False)
    return np.asarray(upstream, dtype=float) @ J[0]


def gradient_inputs(
    design: CircuitDesign, params, features, upstream, fd_fallback: bool = False
) -> np.ndarray:
    _, _, J = forward_with_jacobians(
        design, params, np.asarray(features, float)[None, :], fd_fallback=fd_fallback
    )
    return np.asarray(upstream, dtype=float) @ J[0]


def random_params(design: CircuitDesign, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-np.pi, np.pi, design.parameter_count)
