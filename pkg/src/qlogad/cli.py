"""Command-line entry point: ``qlogad <command> ...``.

Exit status is 0 on success and 2 on any configuration, data or model
error (the message goes to stderr).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import QlogadError
from .harness import ExperimentConfig, emit_reports, evaluate, preset_configs, run_experiment, run_sweep
from .harness.metrics import compute_metrics
from .kvtext import parse_key_values
from .logpipe import drain_parse, read_raw_log, windowize, write_parsed_csv, write_templates
from .logpipe.reader import read_parsed_csv
from .logpipe.synth import generate_corpus
from .logpipe.windows import chronological_split
from .models import count_parameters, load_model

log = logging.getLogger("qlogad")


def _overrides(pairs) -> dict:
    return parse_key_values("\n".join(pairs or []))


def _parent_dir(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_parse(args) -> int:
    lines = read_raw_log(args.raw)
    templates, ids = drain_parse(lines, args.depth, args.sim, args.max_children)
    write_parsed_csv(_parent_dir(args.output), [line.is_alert for line in lines], ids)
    tpl_path = _parent_dir(args.templates or Path(args.output).with_suffix(".templates.tsv"))
    write_templates(tpl_path, templates)
    print(f"{len(lines)} lines, {len(templates) - 1} templates -> {args.output}, {tpl_path}")
    return 0


def cmd_train(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.set:
        cfg = cfg.with_overrides(_overrides(args.set))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(cfg, checkpoint=out / f"{cfg.name}.qlck")
    emit_reports([result], out)
    m = result.metrics
    print(f"{cfg.name}: P={m.precision:.4f} R={m.recall:.4f} Spec={m.specificity:.4f} F1={m.f1:.4f} "
          f"[{result.params}] -> {out}")
    return 0


def _load_windows(path, window_size):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        flags, ids = read_parsed_csv(path)
    else:
        lines = read_raw_log(path)
        _, ids = drain_parse(lines)
        flags = [line.is_alert for line in lines]
    return windowize(ids, flags, window_size)


def cmd_eval(args) -> int:
    model = load_model(args.checkpoint)
    windows = _load_windows(args.data, args.window_size)
    if args.split == "test":
        windows = chronological_split(windows, args.train_fraction)[1]
    counts = evaluate(model, windows)
    m = compute_metrics(counts)
    print(f"windows={counts.total} tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn}")
    print(f"precision={m.precision:.6f} recall={m.recall:.6f} specificity={m.specificity:.6f} f1={m.f1:.6f}")
    return 0


def cmd_experiment(args) -> int:
    overrides = _overrides(args.set)
    if args.data:
        overrides["data"] = args.data
    target = args.target
    if Path(target).is_file():
        configs = [ExperimentConfig.from_file(target).with_overrides(overrides)]
    else:
        configs = preset_configs(target, **overrides)
    results = run_sweep(configs)
    written = emit_reports(results, args.output)
    sys.stdout.write(written[1].read_text(encoding="utf-8"))
    return 0


def cmd_report_params(args) -> int:
    model = load_model(args.checkpoint)
    report = count_parameters(model)
    for name, part in report.components.items():
        print(f"{name:<10} {part}")
    print(f"{'total':<10} {report}")
    return 0


def cmd_synth(args) -> int:
    corpus = generate_corpus(
        _parent_dir(args.output), args.windows, args.window_size, args.normal, args.alert, args.anomaly_rate, seed=args.seed
    )
    print(f"{corpus.n_lines} lines, {int(corpus.window_labels.sum())} anomalous windows -> {corpus.path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlogad", description="Log anomaly detection with classical and simulated quantum models.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", help="Drain-parse a raw log into origin_index,label,event_id CSV")
    s.add_argument("raw")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--templates", help="template file (default: <output>.templates.tsv)")
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--sim", type=float, default=0.4)
    s.add_argument("--max-children", type=int, default=100)
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("train", help="train and evaluate one config; writes a checkpoint and reports")
    s.add_argument("config")
    s.add_argument("-o", "--output", default="runs")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a dataset with a saved checkpoint")
    s.add_argument("checkpoint")
    s.add_argument("data", help="raw log file or parsed CSV")
    s.add_argument("--window-size", type=int, default=100)
    s.add_argument("--split", choices=("all", "test"), default="all")
    s.add_argument("--train-fraction", type=float, default=0.8)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("experiment", help="run a preset (rq1..rq6) or a config file")
    s.add_argument("target")
    s.add_argument("-o", "--output", default="results")
    s.add_argument("--data", help="dataset for every config (default: synthetic)")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("report-params", help="parameter size of a checkpoint")
    s.add_argument("checkpoint")
    s.set_defaults(func=cmd_report_params)

    s = sub.add_parser("synth", help="write a synthetic BGL-format corpus")
    s.add_argument("output")
    s.add_argument("--windows", type=int, default=200)
    s.add_argument("--window-size", type=int, default=100)
    s.add_argument("--normal", type=int, default=9)
    s.add_argument("--alert", type=int, default=3)
    s.add_argument("--anomaly-rate", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (QlogadError, OSError) as exc:
        print(f"qlogad: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
