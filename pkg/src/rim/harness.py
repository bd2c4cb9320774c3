"""Synthetic benchmarks and the experiment grid runner.

A grid is methods x alphas x budgets x repetitions over one dataset. Each
(alpha, budget, rep) cell has a derived seed shared by every method, so
method comparisons are paired. results.csv is bit-reproducible for a fixed
config and master seed; wall times (which are not) go to the per-run trace
JSON and summary.json instead, and the csv's `seconds` column stays empty.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, PropagationOperator, build_graph, load_dataset_dir, smooth_features
from .models import SgcHyperparams, evaluate, lp_fit_predict, sgc_fit, sgc_predict
from .oracle import NoisyOracle
from .reliability import LabeledSet
from .selection import (STRATEGIES, SelectionTrace, SelectorConfig, run_al_loop)


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration entry."""


@dataclass(frozen=True)
class SbmParams:
    """Stochastic block model with one-hot-plus-noise features.

    Features are the node's block one-hot in feature_dim dimensions (default:
    one per block) plus Gaussian noise of scale feature_noise. Labels are
    block ids. Splits are a seeded shuffle cut by split_fractions.
    """

    blocks: int
    nodes_per_block: int
    p_intra: float
    p_inter: float
    feature_dim: int | None = None
    feature_noise: float = 0.5
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.blocks < 2 or self.nodes_per_block < 1:
            raise ConfigError("need blocks >= 2 and nodes_per_block >= 1")
        for p in (self.p_intra, self.p_inter):
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"edge probability {p} outside [0, 1]")
        if self.feature_dim is not None and self.feature_dim < self.blocks:
            raise ConfigError("feature_dim must be at least the block count")
        if self.feature_noise < 0:
            raise ConfigError("feature_noise must be non-negative")
        fr = tuple(self.split_fractions)
        if len(fr) != 3 or any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigError("split_fractions must be three non-negatives summing to 1")
        object.__setattr__(self, "split_fractions", fr)


def generate_sbm(params: SbmParams, seed) -> Graph:
    """Sample a graph; deterministic for a fixed seed. Desk scale: the edge
    sampler draws a dense n x n uniform block."""
    if params.p_inter >= params.p_intra:
        warnings.warn("p_inter >= p_intra: blocks will not be assortative")
    rng = np.random.default_rng(seed)
    n = params.blocks * params.nodes_per_block
    labels = np.repeat(np.arange(params.blocks), params.nodes_per_block)
    prob = np.where(labels[:, None] == labels[None, :], params.p_intra, params.p_inter)
    draws = rng.random((n, n))
    rows, cols = np.triu_indices(n, k=1)
    hit = draws[rows, cols] < prob[rows, cols]
    edges = np.stack([rows[hit], cols[hit]], axis=1)

    dim = params.feature_dim or params.blocks
    features = np.eye(dim)[labels] + params.feature_noise * rng.standard_normal((n, dim))

    perm = rng.permutation(n)
    n_train = int(params.split_fractions[0] * n)
    n_val = int(params.split_fractions[1] * n)
    splits = {"train": perm[:n_train].tolist(),
              "val": perm[n_train:n_train + n_val].tolist(),
              "test": perm[n_train + n_val:].tolist()}
    return build_graph(n, edges, labels, num_classes=params.blocks,
                       features=features, splits=splits)


@dataclass(frozen=True)
class MethodSpec:
    strategy: str = "rim"
    reliable_selection: bool = True
    reliable_training: bool = True
    name: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")

    def resolved_name(self) -> str:
        if self.name:
            return self.name
        suffix = {(True, True): "", (True, False): "-no-rt",
                  (False, True): "-no-rs", (False, False): "-no-rts"}
        return self.strategy + suffix[(self.reliable_selection, self.reliable_training)]


def _check_keys(d: dict, allowed, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; "
                          f"allowed: {sorted(allowed)}")


@dataclass
class ExperimentConfig:
    """Parsed experiment description; see from_dict for the JSON schema."""

    dataset: dict
    model: str
    methods: list[MethodSpec]
    alphas: list[float]
    budgets: list[int]
    repetitions: int = 10
    batch_size: int | None = None  # None: one pick per class
    k: int = 2
    theta: float = 0.05
    master_seed: int = 0
    lp_iters: int = 10
    lp_mre_max_candidates: int = 500
    sgc: SgcHyperparams = field(default_factory=SgcHyperparams)

    def __post_init__(self):
        _check_keys(self.dataset, ("path", "sbm"), "dataset")
        if len(self.dataset) != 1:
            raise ConfigError("dataset needs exactly one of 'path' or 'sbm'")
        if "sbm" in self.dataset and not isinstance(self.dataset["sbm"], SbmParams):
            sbm = dict(self.dataset["sbm"])
            if "split_fractions" in sbm:
                sbm["split_fractions"] = tuple(sbm["split_fractions"])
            _check_keys(sbm, ("blocks", "nodes_per_block", "p_intra", "p_inter",
                              "feature_dim", "feature_noise", "split_fractions"),
                        "dataset.sbm")
            self.dataset = {"sbm": SbmParams(**sbm)}
        if self.model not in ("lp", "sgc"):
            raise ConfigError(f"model must be 'lp' or 'sgc', got {self.model!r}")
        if not self.methods:
            raise ConfigError("methods list must not be empty")
        names = [m.resolved_name() for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate method names: {names}")
        if not self.alphas or any(not (0.0 < a <= 1.0) for a in self.alphas):
            raise ConfigError("alphas must be a non-empty list of values in (0, 1]")
        if not self.budgets or any(int(b) != b or b < 1 for b in self.budgets):
            raise ConfigError("budgets must be a non-empty list of positive ints")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.master_seed < 0 or int(self.master_seed) != self.master_seed:
            raise ConfigError("master_seed must be a non-negative integer")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1 when given")
        if self.theta < 0 or self.k < 0 or self.lp_iters < 1:
            raise ConfigError("theta/k must be non-negative, lp_iters >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Strict parse: unknown keys anywhere are an error.

        Top-level keys: dataset, model, methods, alphas, budgets,
        repetitions, batch_size, k, theta, master_seed, lp_iters,
        lp_mre_max_candidates, sgc_learning_rate, sgc_epochs,
        sgc_weight_decay. Each method: strategy, reliable_selection,
        reliable_training, name.
        """
        if not isinstance(raw, dict):
            raise ConfigError("experiment config must be a JSON object")
        allowed = ("dataset", "model", "methods", "alphas", "budgets",
                   "repetitions", "batch_size", "k", "theta", "master_seed",
                   "lp_iters", "lp_mre_max_candidates",
                   "sgc_learning_rate", "sgc_epochs", "sgc_weight_decay")
        _check_keys(raw, allowed, "experiment config")
        for key in ("dataset", "model", "methods", "alphas", "budgets"):
            if key not in raw:
                raise ConfigError(f"missing required key {key!r}")
        methods = []
        for i, m in enumerate(raw["methods"]):
            if not isinstance(m, dict):
                raise ConfigError(f"methods[{i}] must be an object")
            _check_keys(m, ("strategy", "reliable_selection", "reliable_training",
                            "name"), f"methods[{i}]")
            methods.append(MethodSpec(**m))
        sgc = SgcHyperparams(
            learning_rate=raw.get("sgc_learning_rate", 0.2),
            epochs=raw.get("sgc_epochs", 300),
            weight_decay=raw.get("sgc_weight_decay", 5e-5))
        kwargs = {k: raw[k] for k in ("repetitions", "batch_size", "k", "theta",
                                      "master_seed", "lp_iters",
                                      "lp_mre_max_candidates") if k in raw}
        return cls(dataset=dict(raw["dataset"]), model=raw["model"],
                   methods=methods, alphas=list(raw["alphas"]),
                   budgets=list(raw["budgets"]), sgc=sgc, **kwargs)

    def to_dict(self) -> dict:
        """JSON-ready echo of the config; from_dict(to_dict()) round-trips."""
        if "sbm" in self.dataset:
            sbm = asdict(self.dataset["sbm"])
            sbm["split_fractions"] = list(sbm["split_fractions"])
            dataset = {"sbm": sbm}
        else:
            dataset = dict(self.dataset)
        d = {"dataset": dataset,
             "model": self.model,
             "methods": [{"strategy": m.strategy,
                          "reliable_selection": m.reliable_selection,
                          "reliable_training": m.reliable_training,
                          "name": m.resolved_name()} for m in self.methods],
             "alphas": list(self.alphas), "budgets": list(self.budgets),
             "repetitions": self.repetitions, "batch_size": self.batch_size,
             "k": self.k, "theta": self.theta, "master_seed": self.master_seed,
             "lp_iters": self.lp_iters,
             "lp_mre_max_candidates": self.lp_mre_max_candidates,
             "sgc_learning_rate": self.sgc.learning_rate,
             "sgc_epochs": self.sgc.epochs,
             "sgc_weight_decay": self.sgc.weight_decay}
        return d


def dataset_from_config(config: ExperimentConfig) -> Graph:
    if "path" in config.dataset:
        return load_dataset_dir(config.dataset["path"])
    return generate_sbm(config.dataset["sbm"], seed=config.master_seed)


@dataclass(frozen=True)
class ActivationBreakdown:
    correct: int
    incorrect: int
    inactive: int


def activation_breakdown(trace: SelectionTrace, labeled: LabeledSet,
                         ground_truth: np.ndarray) -> ActivationBreakdown:
    """Split nodes by their first activator: activated by a node whose oracle
    label matches that node's ground truth, activated by a mislabeled node,
    or never activated. The three counts partition the graph."""
    first = trace.first_activator
    label_of = {e.node: e.label for e in labeled.entries}
    active = first >= 0
    activators = first[active]
    oracle_ok = np.asarray(
        [label_of[int(a)] == int(ground_truth[int(a)]) for a in activators], dtype=bool)
    correct = int(oracle_ok.sum())
    return ActivationBreakdown(correct=correct,
                               incorrect=int(activators.size - correct),
                               inactive=int(first.size - activators.size))


@dataclass
class RunResult:
    method: str
    alpha: float
    budget: int
    rep: int
    seed: int
    accuracy: float | None = None
    correct_activated: int | None = None
    incorrect_activated: int | None = None
    inactive: int | None = None
    wall_seconds: float | None = None
    error: str | None = None


def trace_payload(labeled: LabeledSet, trace: SelectionTrace,
                  config: SelectorConfig, extra: dict | None = None) -> dict:
    """JSON-ready dump of one run: enough to retrain a model from it."""
    payload = {
        "alpha": labeled.alpha,
        "strategy": trace.strategy,
        "config": asdict(config),
        "labeled": [{"node": e.node, "label": e.label, "quality": e.quality,
                     "batch": e.batch} for e in labeled.entries],
        "batches": [{"batch": b.batch, "picked": b.picked, "gains": b.gains,
                     "objective_values": b.objective_values,
                     "activated_count": b.activated_count,
                     "qualities": [[n, q] for n, q in sorted(b.qualities.items())]}
                    for b in trace.batches],
        "first_activator": trace.first_activator.tolist(),
    }
    if extra:
        payload.update(extra)
    return payload


def labeled_from_payload(payload: dict) -> LabeledSet:
    labeled = LabeledSet(alpha=float(payload["alpha"]))
    for e in payload["labeled"]:
        labeled.add(int(e["node"]), int(e["label"]), float(e["quality"]),
                    int(e["batch"]))
    return labeled


def _run_cell(graph: Graph, config: ExperimentConfig, method: MethodSpec,
              alpha: float, budget: int, rep: int, run_seed: int):
    start = time.perf_counter()
    batch_size = config.batch_size or graph.num_classes
    sel_cfg = SelectorConfig(
        budget=budget, batch_size=min(batch_size, budget), theta=config.theta,
        k=config.k, mode="label" if config.model == "lp" else "feature",
        strategy=method.strategy, reliable_selection=method.reliable_selection,
        reliable_training=method.reliable_training, seed=run_seed,
        lp_iters=config.lp_iters,
        lp_mre_max_candidates=config.lp_mre_max_candidates)
    oracle = NoisyOracle(alpha=alpha, ground_truth=graph.labels,
                         num_classes=graph.num_classes,
                         rng=np.random.default_rng([run_seed, 1]))
    labeled, trace = run_al_loop(graph, sel_cfg, oracle)
    op = PropagationOperator(graph, config.k)
    if config.model == "lp":
        preds = lp_fit_predict(op, labeled, iters=config.lp_iters,
                               use_reliability=method.reliable_training)
    else:
        smoothed = smooth_features(op)
        model = sgc_fit(smoothed, labeled, graph.num_classes, config.sgc,
                        use_reliability=method.reliable_training)
        preds = sgc_predict(model, smoothed)
    accuracy = evaluate(preds, graph, "test")
    breakdown = activation_breakdown(trace, labeled, graph.labels)
    wall = time.perf_counter() - start
    result = RunResult(method=method.resolved_name(), alpha=alpha, budget=budget,
                       rep=rep, seed=run_seed, accuracy=accuracy,
                       correct_activated=breakdown.correct,
                       incorrect_activated=breakdown.incorrect,
                       inactive=breakdown.inactive, wall_seconds=wall)
    payload = trace_payload(labeled, trace, sel_cfg,
                            extra={"wall_seconds": wall, "seed": run_seed,
                                   "method": method.resolved_name(),
                                   "rep": rep})
    return result, payload


def run_experiment(config: ExperimentConfig, out_dir=None,
                   threads: int = 1) -> list[RunResult]:
    """Run the full grid; optionally write results.csv, summary.json, and
    per-run trace JSON under out_dir. A failed cell becomes a RunResult with
    an error message; the rest of the grid still runs."""
    graph = dataset_from_config(config)
    n_b, n_r = len(config.budgets), config.repetitions
    cells = []
    for method in config.methods:
        for a_i, alpha in enumerate(config.alphas):
            for b_i, budget in enumerate(config.budgets):
                for rep in range(n_r):
                    cell_index = (a_i * n_b + b_i) * n_r + rep
                    run_seed = config.master_seed ^ (cell_index + 1)
                    cells.append((method, float(alpha), int(budget), rep, run_seed))

    def run(cell):
        method, alpha, budget, rep, run_seed = cell
        try:
            return _run_cell(graph, config, method, alpha, budget, rep, run_seed)
        except Exception as exc:  # record and continue
            return RunResult(method=method.resolved_name(), alpha=alpha,
                             budget=budget, rep=rep, seed=run_seed,
                             error=f"{type(exc).__name__}: {exc}"), None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, cells))
    else:
        outcomes = [run(cell) for cell in cells]

    order = sorted(range(len(outcomes)),
                   key=lambda i: (outcomes[i][0].method, outcomes[i][0].alpha,
                                  outcomes[i][0].budget, outcomes[i][0].rep))
    results = [outcomes[i][0] for i in order]
    payloads = [outcomes[i][1] for i in order]

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(results, out / "results.csv")
        (out / "summary.json").write_text(
            json.dumps(summarize(results, config), indent=2, sort_keys=True) + "\n")
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        for result, payload in zip(results, payloads):
            if payload is None:
                continue
            name = f"{result.method}_alpha{result.alpha}_budget{result.budget}_rep{result.rep}.json"
            (trace_dir / name).write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return results


def write_results_csv(results: list[RunResult], path):
    """One row per run. The seconds column is intentionally left empty so the
    file is identical across reruns; timings live in summary.json and the
    trace files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "alpha", "budget", "rep", "accuracy",
                         "correct_act", "incorrect_act", "inactive", "seconds"])
        for r in results:
            if r.error is not None:
                writer.writerow([r.method, r.alpha, r.budget, r.rep,
                                 "error", "", "", "", ""])
            else:
                writer.writerow([r.method, r.alpha, r.budget, r.rep,
                                 f"{r.accuracy:.6f}", r.correct_activated,
                                 r.incorrect_activated, r.inactive, ""])


def summarize(results: list[RunResult], config: ExperimentConfig | None = None) -> dict:
    """Per-cell means/stds (population std) over successful repetitions."""
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.method, r.alpha, r.budget), []).append(r)
    cells = []
    for (method, alpha, budget), rs in sorted(groups.items()):
        ok = [r for r in rs if r.error is None]
        cell = {"method": method, "alpha": alpha, "budget": budget,
                "repetitions": len(rs), "failures": len(rs) - len(ok),
                "errors": sorted(r.error for r in rs if r.error is not None)}
        if ok:
            for key, attr in (("accuracy", "accuracy"),
                              ("correct_act", "correct_activated"),
                              ("incorrect_act", "incorrect_activated"),
                              ("inactive", "inactive"),
                              ("seconds", "wall_seconds")):
                vals = np.asarray([getattr(r, attr) for r in ok], dtype=np.float64)
                cell[f"{key}_mean"] = float(vals.mean())
                cell[f"{key}_std"] = float(vals.std())
        cells.append(cell)
    out = {"cells": cells}
    if config is not None:
        out["config"] = config.to_dict()
    return out
