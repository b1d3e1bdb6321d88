"""Parameter-size accounting in the ``"<bits> bit + <q> qubit"`` style."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import QLayer

BITS_PER_REAL = 32


@dataclass
class ParamReport:
    classical_bits: int
    qubit_count: int
    components: dict = field(default_factory=dict)

    def __str__(self):
        return format_size(self.classical_bits, self.qubit_count)


def format_size(bits: int, qubits: int) -> str:
    return f"{bits} bit" + (f" + {qubits} qubit" if qubits else "")


def _layer_size(layer) -> int:
    return int(sum(np.prod(shape) for shape in layer.shapes.values()))


def count_parameters(model) -> ParamReport:
    """Bits of classically stored reals (circuit angles included) and qubits.

    Qubits are counted per register: one per QLayer, except that the Q/K/V
    maps of a shared-register attention block count their register once.
    """
    components = {}
    total_bits = total_qubits = 0
    for name, layers in model.components().items():
        bits = BITS_PER_REAL * sum(_layer_size(layer) for layer in layers)
        qlayers = [layer for layer in layers if isinstance(layer, QLayer)]
        if name == "attention" and qlayers and model.cfg.qkv_sharing == "shared":
            qubits = qlayers[0].n_qubits
        else:
            qubits = sum(layer.n_qubits for layer in qlayers)
        components[name] = ParamReport(bits, qubits)
        total_bits += bits
        total_qubits += qubits
    return ParamReport(total_bits, total_qubits, components)
