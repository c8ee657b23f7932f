"""Command-line entry point for the topology-performance experiments."""

from __future__ import annotations

import argparse
import os
import sys

from . import pipeline
from .config import ConfigError, describe_keys, load_config, parse_config


def build_parser():
    parser = argparse.ArgumentParser(
        prog="topocf",
        description="Topology-aware analysis of graph collaborative "
                    "filtering: sample sub-datasets, compute graph "
                    "characteristics, train recommenders, and fit the "
                    "explanatory regression.",
        epilog=describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--out", help="override output directory "
                        "(or set TOPOCF_OUT)")
    parser.add_argument("--jobs", type=int, help="parallel worker processes")
    parser.add_argument("--resume", action="store_true",
                        help="reuse completed cells recorded in the ledger")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "sample": "generate the sub-dataset pool and manifest",
        "characterize": "compute per-sample characteristic vectors",
        "train": "train and evaluate every (sample, model) cell",
        "evaluate": "print aggregate metrics per model",
        "explain": "fit the per-model explanatory regressions",
        "rq2": "run the alpha-sweep over mixed sample pools",
        "report": "assemble existing outputs into report.md",
        "run-all": "full pipeline plus alpha sweep and report",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="configuration overrides")
    return parser


def _load_config(args):
    overrides = list(getattr(args, "overrides", []))
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    out = args.out or os.environ.get("TOPOCF_OUT")
    if out:
        overrides.append(f"out_dir={out}")
    if args.jobs is not None:
        overrides.append(f"jobs={args.jobs}")
    if args.config:
        return load_config(args.config, overrides)
    return parse_config([], overrides)


def _prepare(cfg):
    lcc = pipeline.load_dataset(cfg)
    samples, paths = pipeline.prepare_samples(cfg, lcc)
    return lcc, samples, paths


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _dispatch(args.command, cfg, args.resume)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(command, cfg, resume):
    if command == "report":
        path = pipeline.emit_report(cfg)
        print(path)
        return 0

    if command == "sample":
        _, samples, _ = _prepare(cfg)
        print(f"wrote {len(samples)} samples to "
              f"{os.path.join(cfg.out_dir, 'samples')}")
        return 0

    if command == "characterize":
        _, samples, paths = _prepare(cfg)
        ledger = pipeline.RunLedger(os.path.join(cfg.out_dir, "ledger.json"))
        if not resume:
            ledger.cells = {}
        result = pipeline.RunResult(out_dir=cfg.out_dir)
        vectors = pipeline.characterize_samples(cfg, samples, paths, ledger,
                                                result)
        ledger.save()
        pipeline.chars.write_characteristics_csv(
            [(sid, pipeline._as_vector(vectors[sid]))
             for sid in sorted(vectors)],
            os.path.join(cfg.out_dir, "characteristics.csv"))
        return _finish(result)

    if command in ("train", "evaluate"):
        _, samples, paths = _prepare(cfg)
        ledger = pipeline.RunLedger(os.path.join(cfg.out_dir, "ledger.json"))
        if not resume:
            ledger.cells = {}
        result = pipeline.RunResult(out_dir=cfg.out_dir)
        rows = pipeline.train_samples(cfg, samples, paths, ledger, result)
        ledger.save()
        pipeline.write_metrics_csv(rows,
                                   os.path.join(cfg.out_dir, "metrics.csv"),
                                   cfg.metric_k)
        if command == "evaluate":
            _print_metric_summary(rows, cfg)
        return _finish(result)

    if command == "explain":
        result, *_ = pipeline.run_experiment(cfg, resume=resume)
        return _finish(result)

    if command == "rq2":
        result, samples, vectors, rows = pipeline.run_experiment(
            cfg, resume=resume)
        pipeline.rq2_sweep(cfg, samples, vectors, rows, result)
        return _finish(result)

    if command == "run-all":
        result, samples, vectors, rows = pipeline.run_experiment(
            cfg, resume=resume)
        pipeline.rq2_sweep(cfg, samples, vectors, rows, result)
        pipeline.emit_report(cfg)
        return _finish(result)

    raise ConfigError(f"unknown command {command!r}")


def _print_metric_summary(rows, cfg):
    by_model = {}
    for sid, kind, recall, ndcg, *_ in rows:
        by_model.setdefault(kind, []).append((recall, ndcg))
    for kind in sorted(by_model):
        vals = by_model[kind]
        recall = sum(v[0] for v in vals) / len(vals)
        ndcg = sum(v[1] for v in vals) / len(vals)
        print(f"{kind}: mean recall@{cfg.metric_k}={recall:.4f} "
              f"mean ndcg@{cfg.metric_k}={ndcg:.4f} over {len(vals)} samples")


def _finish(result):
    if result.failures:
        print(f"{len(result.failures)} cell(s) failed:", file=sys.stderr)
        for key, error in result.failures:
            print(f"  {key}: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
