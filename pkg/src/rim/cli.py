"""Command-line entry points.

Subcommands: select (run active learning, dump a trace), train (fit a model
from a trace), influence (dump one influence column as CSV), experiment (run
a benchmark grid). Global flags --seed/--threads go before the subcommand.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .graph import DatasetError, PropagationOperator, load_dataset_dir
from .harness import (ConfigError, ExperimentConfig, _check_keys,
                      labeled_from_payload, run_experiment, summarize,
                      trace_payload)
from .influence import influence_column
from .models import evaluate, lp_fit_predict, sgc_fit, sgc_predict, SgcHyperparams
from .oracle import NoisyOracle
from .selection import SelectorConfig, run_al_loop
from .graph import smooth_features

_SELECT_KEYS = ("alpha", "budget", "batch_size", "theta", "k", "mode",
                "strategy", "reliable_selection", "reliable_training", "seed",
                "lp_iters", "lp_mre_max_candidates")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _selector_from_file(path, seed_override) -> tuple[SelectorConfig, float]:
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    _check_keys(raw, _SELECT_KEYS, "selection config")
    for key in ("alpha", "budget", "batch_size"):
        if key not in raw:
            raise ConfigError(f"{path}: missing required key {key!r}")
    alpha = float(raw.pop("alpha"))
    if seed_override is not None:
        raw["seed"] = seed_override
    return SelectorConfig(**raw), alpha


def _cmd_select(args) -> int:
    graph = load_dataset_dir(args.dataset)
    config, alpha = _selector_from_file(args.config, args.seed)
    oracle = NoisyOracle(alpha=alpha, ground_truth=graph.labels,
                         num_classes=graph.num_classes,
                         rng=np.random.default_rng([config.seed, 1]))
    start = time.perf_counter()
    labeled, trace = run_al_loop(graph, config, oracle)
    wall = time.perf_counter() - start
    payload = trace_payload(labeled, trace, config,
                            extra={"wall_seconds": wall, "seed": config.seed})
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    activated = trace.batches[-1].activated_count if trace.batches else 0
    print(f"labeled {len(labeled)} nodes in {len(trace.batches)} batches; "
          f"{activated}/{graph.num_nodes} activated; trace -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    payload = _load_json(args.labeled)
    labeled = labeled_from_payload(payload)
    graph = load_dataset_dir(args.dataset)
    run_cfg = payload.get("config", {})
    k = int(run_cfg.get("k", 2))
    lp_iters = int(run_cfg.get("lp_iters", 10))
    use_reliability = bool(run_cfg.get("reliable_training", True))
    op = PropagationOperator(graph, k)
    if args.model == "lp":
        preds = lp_fit_predict(op, labeled, iters=lp_iters,
                               use_reliability=use_reliability)
    else:
        if graph.features is None:
            raise DatasetError("sgc needs a features file in the dataset directory")
        smoothed = smooth_features(op)
        model = sgc_fit(smoothed, labeled, graph.num_classes,
                        use_reliability=use_reliability)
        preds = sgc_predict(model, smoothed)
    metrics = {
        "model": args.model,
        "num_labeled": len(labeled),
        "reliable_training": use_reliability,
        "unreached": int(preds.unreached.sum()),
        "test_accuracy": (evaluate(preds, graph, "test")
                          if graph.test_nodes.size else None),
        "val_accuracy": (evaluate(preds, graph, "val")
                         if graph.val_nodes.size else None),
    }
    Path(args.out).write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    shown = {k: v for k, v in metrics.items() if v is not None}
    print(f"metrics -> {args.out}: {shown}")
    return 0


def _cmd_influence(args) -> int:
    graph = load_dataset_dir(args.dataset)
    op = PropagationOperator(graph, args.k)
    column = influence_column(op, args.source)
    lines = ["node,score"]
    lines += [f"{node},{score:.12g}" for node, score in enumerate(column.scores)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"influence column of node {args.source} (k={args.k}) -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_dict(_load_json(args.config))
    if args.seed is not None:
        config.master_seed = args.seed
        config.__post_init__()
    results = run_experiment(config, out_dir=args.out, threads=args.threads)
    for cell in summarize(results)["cells"]:
        if cell["failures"]:
            print(f"{cell['method']} alpha={cell['alpha']} budget={cell['budget']}: "
                  f"{cell['failures']}/{cell['repetitions']} runs failed")
        else:
            print(f"{cell['method']} alpha={cell['alpha']} budget={cell['budget']}: "
                  f"accuracy {cell['accuracy_mean']:.4f} +- {cell['accuracy_std']:.4f}")
    print(f"artifacts -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rim", description="Reliability-aware influence-based active learning")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed / master seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for the experiment grid")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run active-learning selection, write a trace")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--config", required=True, help="selection config JSON")
    p.add_argument("--out", required=True, help="output trace JSON path")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("train", help="train a model from a trace file")
    p.add_argument("--model", required=True, choices=("lp", "sgc"))
    p.add_argument("--labeled", required=True, help="trace JSON from `rim select`")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output metrics JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("influence", help="dump one influence column as CSV")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--source", required=True, type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_influence)

    p = sub.add_parser("experiment", help="run a benchmark grid")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError) as exc:
        print(f"rim: {exc}", file=sys.stderr)
        return 1
    except (ValueError, IndexError, OSError) as exc:
        print(f"rim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
