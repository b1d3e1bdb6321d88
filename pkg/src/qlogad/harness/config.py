"""Experiment configuration: typed fields, text round-trip and validation.

Fields with an enumerated set of published values (qubit counts,
encodings, layouts, training ratios, window size, learning rate, epoch
cap) are checked against those sets unless ``extension = true``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..encode import Encoding, feature_count
from ..errors import ConfigurationError
from ..kvtext import format_key_values, parse_bool, parse_key_values
from ..models.detectors import KINDS, VARIANTS, ModelConfig
from ..pqc import LAYOUTS, parse_layout

PUBLISHED_QUBITS = (4, 6, 8)
PUBLISHED_RATIOS = (0.01, 0.1, 0.5, 1.0)
PUBLISHED_WINDOW = 100
PUBLISHED_LR = 1e-4
MAX_EPOCHS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = ""
    model: str = "deeplog"
    variant: str = "classical"
    data: str = "synthetic"
    # synthetic corpus (used when data = synthetic)
    synth_windows: int = 200
    synth_normal: int = 9
    synth_alert: int = 3
    synth_anomaly_rate: float = 0.1
    synth_seed: int = 0
    # log pipeline
    drain_depth: int = 4
    drain_sim: float = 0.4
    drain_max_children: int = 100
    window_size: int = 100
    train_fraction: float = 0.8
    val_fraction: float = 0.1
    train_ratio: float = 1.0
    oversample_ratio: float = 1 / 3
    # model
    history: int = 10
    top_g: int = 9
    hidden: int = 0
    n_qubits: int = 4
    encoding: str = "rx"
    layout: str = "Rx"
    n_layers: int = 1
    ring: bool = False
    attn_qubits: int = 8
    qkv_sharing: str = "shared"
    embedding_dim: int = 16
    pad_history: bool = True
    encoded_features: int = 0
    # optimisation
    lr: float = PUBLISHED_LR
    epochs: int = 50
    batch_size: int = 0
    clip_norm: float = 5.0
    seed: int = 0
    extension: bool = False

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding).value)
        object.__setattr__(self, "layout", parse_layout(self.layout))
        if not self.name:
            object.__setattr__(self, "name", self.default_name())
        self.validate()

    def default_name(self) -> str:
        base = f"{self.model}-{self.variant}"
        if self.variant == "quantum":
            base += f"-q{self.n_qubits}-{self.encoding}-{self.layout}"
        return base

    def validate(self) -> None:
        if self.model not in KINDS:
            raise ConfigurationError(f"model must be one of {KINDS}, got {self.model!r}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if any(ch in self.name for ch in "/\\ \t,"):
            raise ConfigurationError(f"name {self.name!r} must not contain separators or spaces")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 0:
            raise ConfigurationError("batch_size must be >= 0 (0 picks the model default)")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError("train_fraction must lie in (0, 1)")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError("val_fraction must lie in [0, 1)")
        if not 0.0 < self.train_ratio <= 1.0:
            raise ConfigurationError("train_ratio must lie in (0, 1]")
        if self.oversample_ratio <= 0:
            raise ConfigurationError("oversample_ratio must be positive")
        if self.lr <= 0 or self.clip_norm <= 0:
            raise ConfigurationError("lr and clip_norm must be positive")
        if self.window_size < 2:
            raise ConfigurationError("window_size must be >= 2")
        if self.history >= self.window_size:
            raise ConfigurationError("history must be shorter than the window")
        capacity = feature_count(self.encoding, self.n_qubits)
        if self.encoded_features and self.encoded_features > capacity:
            raise ConfigurationError(
                f"{self.encoded_features} encoded features exceed the {capacity} slots of "
                f"{self.encoding} encoding on {self.n_qubits} qubits"
            )
        if not self.extension:
            self._check_published_sets()
        # building the model config runs its own checks
        self.model_config()

    def _check_published_sets(self) -> None:
        problems = []
        if self.variant == "quantum" and self.n_qubits not in PUBLISHED_QUBITS:
            problems.append(f"n_qubits {self.n_qubits} not in {PUBLISHED_QUBITS}")
        if self.variant == "quantum" and self.model == "logrobust" and self.attn_qubits not in PUBLISHED_QUBITS:
            problems.append(f"attn_qubits {self.attn_qubits} not in {PUBLISHED_QUBITS}")
        if not any(abs(self.train_ratio - r) < 1e-12 for r in PUBLISHED_RATIOS):
            problems.append(f"train_ratio {self.train_ratio} not in {PUBLISHED_RATIOS}")
        if self.window_size != PUBLISHED_WINDOW:
            problems.append(f"window_size {self.window_size} != {PUBLISHED_WINDOW}")
        if self.epochs > MAX_EPOCHS:
            problems.append(f"epochs {self.epochs} > {MAX_EPOCHS}")
        if abs(self.lr - PUBLISHED_LR) > 1e-15:
            problems.append(f"lr {self.lr} != {PUBLISHED_LR}")
        if self.layout not in LAYOUTS:
            problems.append(f"layout {self.layout}")
        if problems:
            raise ConfigurationError(
                "outside the published settings (set extension = true to allow): " + "; ".join(problems)
            )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            kind=self.model,
            variant=self.variant,
            hidden=self.hidden,
            history=self.history,
            top_g=self.top_g,
            n_qubits=self.n_qubits,
            layout=self.layout,
            encoding=self.encoding,
            n_layers=self.n_layers,
            ring=self.ring,
            attn_qubits=self.attn_qubits,
            qkv_sharing=self.qkv_sharing,
            embedding_dim=self.embedding_dim,
            pad_history=self.pad_history,
            seed=self.seed,
        )

    @property
    def effective_batch_size(self) -> int:
        if self.batch_size:
            return self.batch_size
        return 32 if self.model == "logrobust" else 2048

    def with_updates(self, **changes) -> "ExperimentConfig":
        if "name" not in changes and self.name == self.default_name():
            changes["name"] = ""
        return replace(self, **changes)

    def with_overrides(self, values: dict) -> "ExperimentConfig":
        """Apply string-valued overrides (as from ``--set``); a default name follows the new fields."""
        base = self.to_dict()
        if "name" not in values and self.name == self.default_name():
            del base["name"]
        return ExperimentConfig.from_dict({**base, **values})

    # -- text form ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        return format_key_values(self.to_dict())

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigurationError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(types[key], raw, key)
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(parse_key_values(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"))


def _coerce(kind, raw, key: str):
    if not isinstance(raw, str):
        return raw
    try:
        if kind in (bool, "bool"):
            return parse_bool(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            if ":" in raw:  # ratios such as 1:3
                num, den = raw.split(":")
                return float(num) / float(den)
            return float(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"{key}: cannot parse {raw!r}") from None
    return raw
