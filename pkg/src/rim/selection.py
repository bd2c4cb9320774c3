"""Batch selection strategies and the active-learning loop.

The main selector greedily maximizes activated-node coverage: a node counts
as activated once the best quality-scaled influence reaching it exceeds a
threshold. Coverage is monotone and submodular in the labeled set, so lazy
re-evaluation (a stale-gain heap) reproduces the naive greedy argmax exactly;
stale gains only overestimate, and an entry is accepted only when its gain
was computed against the current state.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, PropagationOperator, smooth_features
from .influence import (ActivationState, InfluenceColumn, add_source,
                        build_activation, influence_column, influence_columns,
                        marginal_gain)
from .models import SoftLabelMatrix, lp_fit_predict
from .oracle import NoisyOracle
from .reliability import LabeledSet, SimilaritySource, update_quality

STRATEGIES = ("rim", "random", "degree", "lp_me", "lp_mre")


@dataclass
class SelectorConfig:
    """Knobs for one active-learning run.

    theta 0.05 suits graphs up to a few thousand nodes; use 0.005 for much
    larger ones (influence mass spreads thinner). reliable_selection scales
    influence by estimated label quality and refines qualities after every
    batch; reliable_training forwards those qualities to the model.
    """

    budget: int
    batch_size: int
    theta: float = 0.05
    k: int = 2
    mode: str = "feature"
    strategy: str = "rim"
    reliable_selection: bool = True
    reliable_training: bool = True
    seed: int = 0
    lp_iters: int = 10
    lp_mre_max_candidates: int = 500

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if not (0 < self.batch_size <= self.budget):
            raise ValueError(
                f"batch_size must lie in [1, budget], got {self.batch_size}")
        if self.theta < 0:
            raise ValueError(f"theta must be non-negative, got {self.theta}")
        if self.mode not in ("feature", "label"):
            raise ValueError(f"mode must be 'feature' or 'label', got {self.mode!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.lp_iters < 1 or self.lp_mre_max_candidates < 1:
            raise ValueError("lp_iters and lp_mre_max_candidates must be >= 1")


@dataclass
class BatchSelection:
    """Result of one greedy batch: picks in order, their marginal gains, the
    objective after each pick, nodes that crossed theta at each pick, and the
    final activation state (labeled set plus picks at candidate quality)."""

    picked: list[int]
    gains: list[int]
    objective_values: list[int]
    newly_activated: list[np.ndarray]
    state: ActivationState


def objective(op: PropagationOperator, labeled: LabeledSet, theta: float,
              column_cache: dict | None = None) -> int:
    """Number of activated nodes under the labeled set's current qualities."""
    return build_activation(op, labeled, theta, column_cache).activated_count


def _column(op, node: int, cache: dict | None) -> InfluenceColumn:
    if cache is not None and node in cache:
        return InfluenceColumn(node, cache[node])
    col = influence_column(op, node)
    if cache is not None:
        cache[node] = col.scores
    return col


def _candidate_stats(op, candidates, state, quality, block_size=512):
    """Initial marginal gains and raw column masses, block-computed so the
    full candidate column matrix never has to be held at once."""
    gains = np.empty(candidates.size, dtype=np.int64)
    masses = np.empty(candidates.size, dtype=np.float64)
    inactive = ~state.activated_mask
    for start in range(0, candidates.size, block_size):
        chunk = candidates[start:start + block_size]
        cols = influence_columns(op, chunk)
        masses[start:start + block_size] = cols.sum(axis=0)
        hits = (quality * cols > state.theta) & inactive[:, None]
        gains[start:start + block_size] = hits.sum(axis=0)
    return gains, masses


def greedy_batch(op: PropagationOperator, labeled: LabeledSet,
                 config: SelectorConfig, candidates, batch_size: int,
                 column_cache: dict | None = None, lazy: bool = True) -> BatchSelection:
    """Greedy coverage maximization over one batch.

    Every candidate is scored at the same provisional quality (alpha, or 1
    when reliable selection is off). Ties break by larger raw column mass,
    then lower node id; when every remaining gain is zero this reduces to
    picking the highest-mass column. `lazy=False` re-scores every candidate
    each round and exists to cross-check the heap path.
    """
    candidates = np.unique(np.asarray(candidates, dtype=np.int64))
    if batch_size == 0:
        return BatchSelection([], [], [], [],
                              build_activation(op, labeled, config.theta, column_cache))
    if candidates.size < batch_size:
        raise ValueError(
            f"need at least {batch_size} candidates, got {candidates.size}")
    state = build_activation(op, labeled, config.theta, column_cache)
    quality = labeled.alpha if config.reliable_selection else 1.0
    gains, masses = _candidate_stats(op, candidates, state, quality)

    picked: list[int] = []
    out_gains: list[int] = []
    out_objective: list[int] = []
    newly: list[np.ndarray] = []

    def accept(node: int, gain: int):
        col = _column(op, node, column_cache)
        crossed = add_source(state, col, quality)
        picked.append(int(node))
        out_gains.append(int(gain))
        out_objective.append(state.activated_count)
        newly.append(crossed)

    if lazy:
        heap = [(-int(g), -m, int(v)) for g, m, v in zip(gains, masses, candidates)]
        heapq.heapify(heap)
        evaluated_at = {int(v): 0 for v in candidates}
        while len(picked) < batch_size:
            neg_gain, neg_mass, node = heapq.heappop(heap)
            if evaluated_at[node] == len(picked):
                accept(node, -neg_gain)
            else:
                gain = marginal_gain(state, _column(op, node, column_cache), quality)
                evaluated_at[node] = len(picked)
                heapq.heappush(heap, (-gain, neg_mass, node))
    else:
        remaining = {int(v): -m for v, m in zip(candidates, masses)}
        for _ in range(batch_size):
            best = None
            for node, neg_mass in remaining.items():
                gain = marginal_gain(state, _column(op, node, column_cache), quality)
                key = (-gain, neg_mass, node)
                if best is None or key < best[0]:
                    best = (key, node, gain)
            _, node, gain = best
            del remaining[node]
            accept(node, gain)
    return BatchSelection(picked, out_gains, out_objective, newly, state)


def select_batch(op: PropagationOperator, labeled: LabeledSet,
                 config: SelectorConfig, candidates,
                 column_cache: dict | None = None) -> list[int]:
    """Greedy batch picks (full batch_size), in pick order."""
    return greedy_batch(op, labeled, config, candidates, config.batch_size,
                        column_cache=column_cache).picked


def soft_label_entropy(rows: np.ndarray, num_classes: int) -> np.ndarray:
    """Shannon entropy of raw soft-label rows (natural log).

    Rows carry mass <= 1 and are not renormalized; an all-zero row gets the
    maximal value log(c), so never-reached nodes look maximally uncertain.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0.0, rows * np.log(rows), 0.0)
    h = -terms.sum(axis=1)
    h[~rows.any(axis=1)] = np.log(num_classes)
    return h


def baseline_select(strategy: str, graph: Graph, labeled: LabeledSet,
                    batch_size: int, rng: np.random.Generator,
                    lp_state: SoftLabelMatrix | np.ndarray | None = None, *,
                    op: PropagationOperator | None = None, lp_iters: int = 10,
                    max_candidates: int = 500) -> list[int]:
    """Comparison selectors over the pool train-split minus labeled.

    random: uniform without replacement. degree: highest degree first, ties
    to lower id. lp_me: highest soft-label entropy. lp_mre: largest total
    entropy reduction after simulating the candidate's argmax label and
    re-running propagation (candidate pool subsampled beyond max_candidates).
    Entropy-based ties break by a seeded random permutation, so with no
    labels yet both lp strategies degrade to a uniform random batch.
    """
    if strategy not in STRATEGIES or strategy == "rim":
        raise ValueError(f"not a baseline strategy: {strategy!r}")
    taken = set(int(v) for v in labeled.nodes()) if len(labeled) else set()
    pool = np.asarray([int(v) for v in graph.train_nodes if int(v) not in taken],
                      dtype=np.int64)
    if batch_size == 0:
        return []
    if pool.size < batch_size:
        raise ValueError(f"need at least {batch_size} candidates, got {pool.size}")

    if strategy == "random":
        return [int(v) for v in rng.choice(pool, size=batch_size, replace=False)]

    if strategy == "degree":
        order = np.lexsort((pool, -graph.degrees[pool]))
        return [int(v) for v in pool[order[:batch_size]]]

    c = graph.num_classes
    if lp_state is None:
        soft = np.zeros((graph.num_nodes, c), dtype=np.float64)
    elif isinstance(lp_state, SoftLabelMatrix):
        soft = lp_state.soft
    else:
        soft = np.asarray(lp_state, dtype=np.float64)

    if strategy == "lp_me":
        scores = soft_label_entropy(soft[pool], c)
        order = np.lexsort((rng.permutation(pool.size), -scores))
        return [int(v) for v in pool[order[:batch_size]]]

    # lp_mre
    if op is None:
        raise ValueError("lp_mre needs the propagation operator to re-run LP")
    sub = pool
    if pool.size > max_candidates:
        keep = rng.choice(pool.size, size=max_candidates, replace=False)
        sub = pool[np.sort(keep)]
    base_total = soft_label_entropy(soft, c).sum()
    reductions = np.empty(sub.size, dtype=np.float64)
    last_batch = labeled.entries[-1].batch if len(labeled) else 0
    for i, v in enumerate(sub):
        guess = int(np.argmax(soft[v]))
        sim = LabeledSet(alpha=labeled.alpha)
        sim.entries = list(labeled.entries)
        sim.add(int(v), guess, 1.0, last_batch)
        y = lp_fit_predict(op, sim, iters=lp_iters, use_reliability=False)
        reductions[i] = base_total - soft_label_entropy(y.soft, c).sum()
    order = np.lexsort((rng.permutation(sub.size), -reductions))
    return [int(v) for v in sub[order[:batch_size]]]


@dataclass
class BatchRecord:
    batch: int
    picked: list[int]
    gains: list[int]
    objective_values: list[int]
    activated_count: int
    qualities: dict[int, float]


@dataclass
class SelectionTrace:
    """What happened during one active-learning run.

    Per batch: picks in order, their marginal gains and running objective
    (greedy strategy only; empty for baselines), the activated-node count
    after the post-batch quality update, and the batch nodes' updated
    qualities. first_activator[j] is the labeled node whose scaled influence
    first pushed j over theta (-1 if never), frozen at the first crossing.
    """

    strategy: str
    alpha: float
    batches: list[BatchRecord] = field(default_factory=list)
    first_activator: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def run_al_loop(graph: Graph, config: SelectorConfig,
                oracle: NoisyOracle) -> tuple[LabeledSet, SelectionTrace]:
    """Select, query, and refine for ceil(budget / batch_size) batches.

    New entries start at quality alpha (1.0 when reliable selection is off);
    with reliable selection on, each batch after the first ends with a
    similarity-weighted quality update of exactly that batch's nodes, measured
    against the propagation state from before the batch was labeled. Seed-batch
    nodes keep quality alpha for the whole run. Candidates are always the
    train split minus already-labeled nodes. Runs with equal seeds are
    bit-reproducible.
    """
    if config.budget > graph.train_nodes.size:
        raise ValueError(
            f"budget {config.budget} exceeds train split size {graph.train_nodes.size}")
    op = PropagationOperator(graph, config.k)
    feature_src = None
    if config.reliable_selection and config.mode == "feature":
        if graph.features is None:
            raise ValueError("feature-mode similarity needs node features")
        feature_src = SimilaritySource("feature", smooth_features(op))
    rng = np.random.default_rng(config.seed)
    labeled = LabeledSet(alpha=oracle.alpha)
    cache: dict = {}
    first_activator = np.full(graph.num_nodes, -1, dtype=np.int64)
    batches: list[BatchRecord] = []
    new_quality = oracle.alpha if config.reliable_selection else 1.0

    remaining = config.budget
    batch_idx = 0
    while remaining > 0:
        size = min(config.batch_size, remaining)
        if config.strategy == "rim":
            candidates = np.setdiff1d(graph.train_nodes, labeled.nodes())
            sel = greedy_batch(op, labeled, config, candidates, size,
                               column_cache=cache)
            picks, gains, obj_values = sel.picked, sel.gains, sel.objective_values
            for node, crossed in zip(picks, sel.newly_activated):
                fresh = crossed[first_activator[crossed] == -1]
                first_activator[fresh] = node
        else:
            lp_state = None
            if config.strategy in ("lp_me", "lp_mre") and len(labeled):
                lp_state = lp_fit_predict(op, labeled, iters=config.lp_iters,
                                          use_reliability=False)
            picks = baseline_select(config.strategy, graph, labeled, size, rng,
                                    lp_state, op=op, lp_iters=config.lp_iters,
                                    max_candidates=config.lp_mre_max_candidates)
            gains, obj_values = [], []

        # The quality update judges each new label against the propagation
        # state the node was part of while still unlabeled, so the label-mode
        # similarity matrix is built from the labeled set as it stood before
        # this batch's labels arrived. Once a node's own label is clamped into
        # the state, its row equals every same-label row and the cosine is
        # identically 1, which would pin every updated quality at 1. The seed
        # batch has no earlier state to be judged against and keeps alpha.
        src = None
        if config.reliable_selection and batch_idx > 0:
            if config.mode == "feature":
                src = feature_src
            else:
                soft = lp_fit_predict(op, labeled, iters=config.lp_iters,
                                      use_reliability=True).soft
                src = SimilaritySource("label", soft)
        for node in picks:
            labeled.add(node, oracle.query(node), new_quality, batch_idx)
        if src is not None:
            update_quality(labeled, picks, src, graph.num_classes)

        state = build_activation(op, labeled, config.theta, cache)
        active = np.flatnonzero(state.activated_mask)
        fresh = active[first_activator[active] == -1]
        first_activator[fresh] = state.best_source[fresh]
        batches.append(BatchRecord(
            batch=batch_idx, picked=[int(p) for p in picks], gains=gains,
            objective_values=obj_values, activated_count=state.activated_count,
            qualities={int(p): labeled.entry_for(p).quality for p in picks}))
        remaining -= len(picks)
        batch_idx += 1

    trace = SelectionTrace(strategy=config.strategy, alpha=oracle.alpha,
                           batches=batches, first_activator=first_activator)
    return labeled, trace
