"""Classical feature vectors -> quantum states.

Angle encodings start from the uniform superposition (H on every qubit)
and then rotate qubit ``i`` by ``features[i]`` radians about the chosen
axis.  Amplitude encoding writes the normalised, zero-padded vector into
the amplitudes directly, with no H preparation.

Note that ``Rx`` leaves ``|+>`` invariant up to a global phase, so the
``rx`` angle encoding produces the same physical state for every input.
"""
from __future__ import annotations

import enum

import numpy as np

from . import qsim
from .errors import ConfigurationError, InputError, NormalizationError, PreconditionError
from .qsim import Gate, StateVector


class Encoding(str, enum.Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    AMPLITUDE = "amplitude"

    @classmethod
    def parse(cls, value) -> "Encoding":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        key = {"anglerx": "rx", "anglery": "ry", "anglerz": "rz", "amp": "amplitude"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(
                f"unknown encoding {value!r}; expected one of rx, ry, rz, amplitude"
            ) from None

    @property
    def is_angle(self) -> bool:
        return self is not Encoding.AMPLITUDE

    @property
    def rotation(self) -> str:
        return {"rx": "Rx", "ry": "Ry", "rz": "Rz"}[self.value]


def feature_count(encoding: Encoding, n_qubits: int) -> int:
    """Number of classical features a register of ``n_qubits`` takes."""
    return n_qubits if Encoding.parse(encoding).is_angle else 1 << n_qubits


def qubits_needed(encoding: Encoding, n_features: int) -> int:
    if Encoding.parse(encoding).is_angle:
        return n_features
    return max(1, int(np.ceil(np.log2(n_features))))


def prepare_uniform_superposition(n_qubits: int) -> StateVector:
    state = qsim.zero_state(n_qubits)
    for q in range(state.n_qubits):
        state = qsim.apply_single_qubit(Gate("H", q), state)
    return state


def _as_features(features) -> np.ndarray:
    x = np.asarray(features, dtype=float).reshape(-1)
    if x.size == 0:
        raise PreconditionError("feature vector is empty")
    if not np.all(np.isfinite(x)):
        raise InputError("features must be finite")
    return x


def angle_encode(features, axis: str, n_qubits: int | None = None) -> StateVector:
    """H on every qubit, then ``R_axis(features[i])`` on qubit ``i``."""
    x = _as_features(features)
    if n_qubits is not None and x.size != n_qubits:
        raise PreconditionError(f"angle encoding needs {n_qubits} features, got {x.size}")
    kind = "R" + axis.strip().lower()[-1]
    if kind not in qsim.ROTATIONS:
        raise PreconditionError(f"axis must be X, Y or Z, got {axis!r}")
    state = prepare_uniform_superposition(x.size)
    for q, angle in enumerate(x):
        state = qsim.apply_single_qubit(Gate(kind, q, angle=float(angle)), state)
    return state


def amplitude_encode(features) -> StateVector:
    x = _as_features(features)
    n = qubits_needed(Encoding.AMPLITUDE, x.size)
    qsim.check_qubit_count(n)
    padded = np.zeros(1 << n)
    padded[: x.size] = x
    norm = np.linalg.norm(padded)
    if norm == 0.0:
        raise NormalizationError("cannot amplitude-encode an all-zero vector")
    return StateVector(padded / norm)


def encode(features, encoding: Encoding, n_qubits: int) -> StateVector:
    encoding = Encoding.parse(encoding)
    if encoding.is_angle:
        return angle_encode(features, encoding.rotation, n_qubits)
    x = _as_features(features)
    if x.size > 1 << n_qubits:
        raise PreconditionError(
            f"{x.size} features do not fit the amplitudes of {n_qubits} qubits"
        )
    state = amplitude_encode(np.pad(x, (0, (1 << n_qubits) - x.size)))
    return state


def encode_rows(features: np.ndarray, encoding: Encoding, n_qubits: int) -> np.ndarray:
    """Vectorised encoder: ``(rows, m)`` features -> ``(rows, 2**n)`` amplitudes."""
    encoding = Encoding.parse(encoding)
    x = np.asarray(features, dtype=float)
    rows, m = x.shape
    if not np.all(np.isfinite(x)):
        raise InputError("features must be finite")
    if encoding.is_angle:
        if m != n_qubits:
            raise PreconditionError(f"angle encoding needs {n_qubits} features, got {m}")
        # Angle encodings are product states: kron the per-qubit R(x)|+> vectors.
        mats = qsim.rotation_matrices(encoding.rotation, x.reshape(-1))
        qubit_states = (mats.sum(axis=-1) * np.sqrt(0.5)).reshape(rows, m, 2)
        out = qubit_states[:, 0, :]
        for q in range(1, m):
            out = (out[:, :, None] * qubit_states[:, q, None, :]).reshape(rows, -1)
        return out
    dim = 1 << n_qubits
    if m > dim:
        raise PreconditionError(f"{m} features do not fit the amplitudes of {n_qubits} qubits")
    out = np.zeros((rows, dim), dtype=complex)
    out[:, :m] = x
    norms = np.sqrt(np.sum(x * x, axis=1))
    if np.any(norms == 0.0):
        raise NormalizationError("cannot amplitude-encode an all-zero vector")
    return out / norms[:, None]
