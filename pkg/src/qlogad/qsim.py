"""Ideal (noise-free) statevector simulator.

Bit ordering: qubit 0 is the most significant bit of a basis index, so on
two qubits ``|10>`` is amplitude index 2.

The single-state API (``StateVector``, ``apply_single_qubit`` ...) is pure:
inputs are never modified.  The ``*_rows`` kernels work on a 2-D array of
shape ``(rows, 2**n)`` holding many states at once; the circuit layer uses
them to run every parameter-shifted copy of a circuit in one pass.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, PreconditionError

MAX_QUBITS = 20
ROTATIONS = ("Rx", "Ry", "Rz")
GATE_KINDS = ("H", "X", "Y", "Z", "Rx", "Ry", "Rz", "CNOT")
NORM_TOL = 1e-10

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}


def check_qubit_count(n_qubits: int) -> int:
    if isinstance(n_qubits, bool) or int(n_qubits) != n_qubits:
        raise ConfigurationError(f"qubit count must be an integer, got {n_qubits!r}")
    n_qubits = int(n_qubits)
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"qubit count {n_qubits} outside simulator range 1..{MAX_QUBITS}"
        )
    return n_qubits


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm register state; ``amplitudes`` is a read-only copy."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or amps.size != 1 << n:
            raise PreconditionError(
                f"amplitude count must be a power of two >= 2, got {amps.size}"
            )
        check_qubit_count(n)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise PreconditionError(f"state is not normalized (|psi|^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def __len__(self):
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angle: float | None = None
    control: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise PreconditionError(f"unknown gate kind {self.kind!r}")
        if (self.kind in ROTATIONS) != (self.angle is not None):
            raise PreconditionError(f"{self.kind}: angle is required iff the gate is a rotation")
        if (self.kind == "CNOT") != (self.control is not None):
            raise PreconditionError(f"{self.kind}: control is required iff the gate is CNOT")
        if self.kind == "CNOT" and self.control == self.target:
            raise PreconditionError("CNOT control and target must differ")
        if self.target < 0 or (self.control is not None and self.control < 0):
            raise PreconditionError("qubit indices must be non-negative")

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.angle)


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    """Dense unitary of a gate kind; rotations are ``exp(-i*angle/2*P)``.

    CNOT is returned as a 4x4 matrix with the control as the first
    (most significant) qubit.
    """
    if kind in _FIXED:
        return _FIXED[kind].copy()
    if kind not in ROTATIONS:
        raise PreconditionError(f"unknown gate kind {kind!r}")
    if angle is None:
        raise PreconditionError(f"{kind} needs an angle")
    return rotation_matrices(kind, np.array([angle], dtype=float))[0]


def rotation_matrices(kind: str, angles: np.ndarray) -> np.ndarray:
    """Stack of rotation unitaries, shape ``(len(angles), 2, 2)``."""
    half = np.asarray(angles, dtype=float) / 2.0
    c, s = np.cos(half), np.sin(half)
    out = np.empty(half.shape + (2, 2), dtype=complex)
    if kind == "Rx":
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif kind == "Ry":
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    elif kind == "Rz":
        out[..., 0, 0] = c - 1j * s
        out[..., 0, 1] = 0.0
        out[..., 1, 0] = 0.0
        out[..., 1, 1] = c + 1j * s
    else:
        raise PreconditionError(f"{kind} is not a rotation")
    return out


def zero_state(n_qubits: int) -> StateVector:
    n = check_qubit_count(n_qubits)
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps)


def _check_index(qubit: int, n_qubits: int, what: str = "qubit"):
    if not 0 <= qubit < n_qubits:
        raise PreconditionError(f"{what} index {qubit} out of range for {n_qubits} qubits")


def apply_single_qubit(gate: Gate, state: StateVector) -> StateVector:
    if gate.kind == "CNOT":
        raise PreconditionError("use apply_cnot for two-qubit gates")
    _check_index(gate.target, state.n_qubits)
    rows = apply_matrix_rows(state.amplitudes[None, :], gate.matrix(), gate.target)
    return StateVector(rows[0])


def apply_cnot(control: int, target: int, state: StateVector) -> StateVector:
    if control == target:
        raise PreconditionError("CNOT control and target must differ")
    _check_index(control, state.n_qubits, "control")
    _check_index(target, state.n_qubits, "target")
    rows = apply_cnot_rows(state.amplitudes[None, :], control, target)
    return StateVector(rows[0])


def apply_gate(gate: Gate, state: StateVector) -> StateVector:
    if gate.kind == "CNOT":
        return apply_cnot(gate.control, gate.target, state)
    return apply_single_qubit(gate, state)


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_index(qubit, state.n_qubits)
    return float(expectations_z_rows(state.amplitudes[None, :])[0, qubit])


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


# -- row kernels -----------------------------------------------------------


def _n_from_dim(dim: int) -> int:
    return dim.bit_length() - 1


def apply_matrix_rows(states: np.ndarray, matrix: np.ndarray, target: int) -> np.ndarray:
    """Apply a 2x2 matrix (shared, or one per row) to ``target`` of every row."""
    rows, dim = states.shape
    view = states.reshape(rows, 1 << target, 2, dim >> (target + 1))
    s0, s1 = view[:, :, 0, :], view[:, :, 1, :]
    m = np.asarray(matrix)
    if m.ndim == 2:
        m00, m01, m10, m11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    else:
        m00, m01, m10, m11 = (m[:, i, j, None, None] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    out = np.empty_like(view)
    out[:, :, 0, :] = m00 * s0 + m01 * s1
    out[:, :, 1, :] = m10 * s0 + m11 * s1
    return out.reshape(rows, dim)


@functools.lru_cache(maxsize=None)
def _cnot_permutation(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    cbit = 1 << (n_qubits - 1 - control)
    tbit = 1 << (n_qubits - 1 - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    perm.setflags(write=False)
    return perm


def apply_cnot_rows(states: np.ndarray, control: int, target: int) -> np.ndarray:
    n = _n_from_dim(states.shape[1])
    return states[:, _cnot_permutation(n, control, target)]


@functools.lru_cache(maxsize=None)
def z_signs(n_qubits: int) -> np.ndarray:
    """``(2**n, n)`` matrix of Pauli-Z eigenvalues per basis state and qubit."""
    idx = np.arange(1 << n_qubits)[:, None]
    shifts = n_qubits - 1 - np.arange(n_qubits)[None, :]
    signs = 1.0 - 2.0 * ((idx >> shifts) & 1)
    signs.setflags(write=False)
    return signs


def expectations_z_rows(states: np.ndarray) -> np.ndarray:
    """Exact per-qubit <Z> for each row, shape ``(rows, n)``."""
    probs = states.real ** 2 + states.imag ** 2
    return probs @ z_signs(_n_from_dim(states.shape[1]))
