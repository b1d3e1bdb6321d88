"""Run configured experiments, sweep presets and write report files."""
from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..models import build_model, count_parameters, save_model
from ..models.accounting import ParamReport
from .config import ExperimentConfig
from .data import load_stream, make_splits
from .metrics import ConfusionCounts, Metrics, compute_metrics
from .trainer import LossHistory, train_model

log = logging.getLogger(__name__)

WORKERS_ENV = "QLOGAD_WORKERS"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    counts: ConfusionCounts
    metrics: Metrics
    losses: LossHistory
    params: ParamReport
    wall_time: float


def evaluate(model, windows) -> ConfusionCounts:
    labels = np.array([w.label for w in windows], dtype=np.int64)
    pred = model.predict(windows)
    scored = pred >= 0
    return ConfusionCounts.from_predictions(pred[scored] == 1, labels[scored] == 1)


def run_experiment(cfg: ExperimentConfig, checkpoint=None) -> ExperimentResult:
    """Pipeline -> train -> evaluate on the test split; reproducible from ``cfg``."""
    start = time.perf_counter()
    ids, flags = load_stream(cfg)
    splits = make_splits(cfg, ids, flags)
    model = build_model(cfg.model_config(), splits.vocab)
    losses = train_model(
        model,
        model.training_rows(splits.train),
        model.training_rows(splits.val),
        epochs=cfg.epochs,
        lr=cfg.lr,
        batch_size=cfg.effective_batch_size,
        clip_norm=cfg.clip_norm,
        seed=cfg.seed,
        on_epoch=lambda e, h: log.info("%s epoch %d train %.6f val %.6f", cfg.name, e + 1, h.train[-1], h.val[-1]),
    )
    counts = evaluate(model, splits.test)
    if checkpoint is not None:
        save_model(checkpoint, model)
    return ExperimentResult(
        cfg, counts, compute_metrics(counts), losses, count_parameters(model), time.perf_counter() - start
    )


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError(f"{WORKERS_ENV} must be >= 1")
    return n


def run_sweep(configs, workers: int | None = None) -> list[ExperimentResult]:
    """Run independent configs, in parallel processes when ``workers > 1``.

    Results come back in config order whatever the pool size.
    """
    configs = list(configs)
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigurationError("experiment names in a sweep must be unique")
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(run_experiment, configs))


# -- presets --------------------------------------------------------------

SEMI = ("deeplog", "loganomaly")
ALL_MODELS = ("deeplog", "loganomaly", "logrobust")
PRESET_ALIASES = {
    "baseline": "rq1",
    "encodings": "rq2",
    "qubits": "rq3",
    "layouts": "rq4",
    "ratios": "rq5",
    "efficiency": "rq6",
}


def preset_configs(name: str, **overrides) -> list[ExperimentConfig]:
    """Expand ``rq1``..``rq6`` (or their aliases) into experiment configs.

    rq1 every model classical and quantum; rq2 encodings; rq3 qubit counts;
    rq4 circuit layouts; rq5 training ratios; rq6 rq1 at 100 epochs.
    rq2 to rq5 use DeepLog and LogAnomaly.  ``overrides`` apply to every
    config except the swept field itself (for example ``data``).
    """
    key = PRESET_ALIASES.get(name.lower(), name.lower())
    grids = {
        "rq1": [dict(model=m, variant=v) for m in ALL_MODELS for v in ("classical", "quantum")],
        "rq2": [dict(model=m, variant="quantum", encoding=e, name=f"{m}-quantum-{e}")
                for m in SEMI for e in ("rx", "ry", "rz", "amplitude")],
        "rq3": [dict(model=m, variant="quantum", n_qubits=q, name=f"{m}-quantum-q{q}")
                for m in SEMI for q in (4, 6, 8)],
        "rq4": [dict(model=m, variant="quantum", layout=lay, name=f"{m}-quantum-{lay}")
                for m in SEMI for lay in ("Rx", "RxRy", "RyRx", "Rz")],
        "rq5": [dict(model=m, variant=v, train_ratio=r, name=f"{m}-{v}-ratio{r:g}")
                for m in SEMI for v in ("classical", "quantum") for r in (0.01, 0.1, 0.5, 1.0)],
        "rq6": [dict(model=m, variant=v, epochs=100) for m in ALL_MODELS for v in ("classical", "quantum")],
    }
    if key not in grids:
        raise ConfigurationError(f"unknown preset {name!r}; expected rq1..rq6 or {sorted(PRESET_ALIASES)}")
    out = []
    for cell in grids[key]:
        # the swept field always wins over an override of the same key
        values = {**{k: v for k, v in overrides.items() if k != "name"}, **cell}
        out.append(ExperimentConfig.from_dict(values))
    return out


# -- reports ---------------------------------------------------------------

RESULT_FIELDS = (
    "name", "model", "variant", "data", "window_size", "history", "top_g", "hidden", "n_qubits",
    "encoding", "layout", "n_layers", "lr", "epochs", "train_ratio", "seed",
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def results_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*RESULT_FIELDS, "precision", "recall", "specificity", "f1", "tp", "fp", "tn", "fn",
                "classical_bits", "qubit_count", "param_size"])
    for r in results:
        cfg = r.config.to_dict()
        m = r.metrics
        w.writerow([
            *(_fmt(cfg[k]) for k in RESULT_FIELDS),
            *(_fmt(v) for v in (m.precision, m.recall, m.specificity, m.f1)),
            r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn,
            r.params.classical_bits, r.params.qubit_count, str(r.params),
        ])
    return buf.getvalue()


def loss_csv(losses: LossHistory) -> str:
    lines = ["epoch,train_loss,val_loss\n"]
    for i, (tr, va) in enumerate(zip(losses.train, losses.val), 1):
        lines.append(f"{i},{tr:.10g},{va:.10g}\n")
    return "".join(lines)


def results_table(results) -> str:
    """Plain-text table: one row per experiment, metrics as percentages."""
    header = f"{'Model':<34}{'Precision':>10}{'Recall':>10}{'Spec.':>10}{'F1':>10}   Parameters"
    rows = [header, "-" * len(header)]
    for r in results:
        m = r.metrics
        rows.append(
            f"{r.config.name:<34}{100 * m.precision:>10.2f}{100 * m.recall:>10.2f}"
            f"{100 * m.specificity:>10.2f}{100 * m.f1:>10.2f}   {r.params}"
        )
    return "\n".join(rows) + "\n"


def emit_reports(results, out_dir) -> list[Path]:
    """Write results.csv, loss_<name>.csv per experiment, table.txt and timings.csv.

    Wall times go to timings.csv only, so results.csv is byte-identical
    across reruns of the same configs.
    """
    results = list(results)
    if not results:
        raise ConfigurationError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "results.csv", out / "table.txt", out / "timings.csv"]
    written[0].write_text(results_csv(results), encoding="utf-8")
    written[1].write_text(results_table(results), encoding="utf-8")
    written[2].write_text(
        "name,wall_time_s\n" + "".join(f"{r.config.name},{r.wall_time:.3f}\n" for r in results),
        encoding="utf-8",
    )
    for r in results:
        path = out / f"loss_{r.config.name}.csv"
        path.write_text(loss_csv(r.losses), encoding="utf-8")
        written.append(path)
    return written
