"""Self-describing model checkpoints: array container plus a key = value sidecar."""
from __future__ import annotations

from pathlib import Path

from .. import nn
from ..errors import ConfigurationError, DataError
from ..kvtext import parse_key_values
from ..logpipe.vectorize import Vocabulary
from .detectors import ModelConfig, build_model, config_from_dict


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".cfg")


def save_model(path, model) -> None:
    nn.save_arrays(path, model.params)
    text = model.cfg.to_text()
    text += "vocabulary = " + ",".join(str(t) for t in model.vocab.template_ids) + "\n"
    sidecar_path(path).write_text(text, encoding="utf-8")


def load_model(path):
    side = sidecar_path(path)
    if not side.exists():
        raise DataError(f"missing checkpoint sidecar {side}")
    try:
        values = parse_key_values(side.read_text(encoding="utf-8"))
    except ConfigurationError as exc:
        raise DataError(f"{side}: {exc}") from None
    vocab_text = values.pop("vocabulary", "")
    vocab = Vocabulary(int(t) for t in vocab_text.split(",") if t.strip())
    cfg: ModelConfig = config_from_dict(values)
    model = build_model(cfg, vocab, init=False)
    params = nn.load_arrays(path)
    expected = {name: shape for layers in model.components().values() for layer in layers
                for name, shape in zip(layer.names(), layer.shapes.values())}
    if set(params) != set(expected):
        raise DataError(f"{path}: parameter names do not match the configured model")
    for name, shape in expected.items():
        if params[name].shape != tuple(shape):
            raise DataError(f"{path}: {name} has shape {params[name].shape}, expected {shape}")
    model.params = params
    return model
