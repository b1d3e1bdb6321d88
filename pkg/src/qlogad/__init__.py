"""Hybrid quantum-classical log anomaly detection on a statevector simulator."""
from .errors import (
    ConfigurationError,
    DataError,
    InputError,
    NormalizationError,
    PreconditionError,
    QlogadError,
    UnsupportedGradientError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DataError",
    "InputError",
    "NormalizationError",
    "PreconditionError",
    "QlogadError",
    "UnsupportedGradientError",
]
