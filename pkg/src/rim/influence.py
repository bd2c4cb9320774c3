"""Influence columns of the k-step walk operator and coverage bookkeeping.

The influence of a source on node j is the (j, source) entry of P^k, i.e.
the probability that a k-step lazy walk started at j ends on the source.
Columns are set-independent: labeling a node does not change anyone else's
column. An absorbing-walk variant (labeled nodes as sinks) would couple the
columns to the labeled set and break the additive coverage objective, so it
is deliberately not used here.

Rows of P^k sum to one, so summing a fixed target row over all sources gives
exactly 1; tests assert this instead of renormalizing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import PropagationOperator, propagate_k


@dataclass(frozen=True)
class InfluenceColumn:
    """Scores of one source against every node: scores[j] = [P^k]_{j, source}."""

    source: int
    scores: np.ndarray


def influence_column(op: PropagationOperator, source: int) -> InfluenceColumn:
    n = op.graph.num_nodes
    if not (0 <= source < n):
        raise IndexError(f"source {source} outside 0..{n - 1}")
    basis = np.zeros(n, dtype=np.float64)
    basis[source] = 1.0
    return InfluenceColumn(source=int(source), scores=propagate_k(op, basis))


def influence_columns(op: PropagationOperator, sources) -> np.ndarray:
    """Columns for several sources at once, as an (n, len(sources)) block."""
    sources = np.asarray(sources, dtype=np.int64)
    n = op.graph.num_nodes
    if sources.size and (sources.min() < 0 or sources.max() >= n):
        raise IndexError("source outside the graph")
    block = np.zeros((n, sources.size), dtype=np.float64)
    block[sources, np.arange(sources.size)] = 1.0
    return propagate_k(op, block)


def reliable_quantity(column: InfluenceColumn, quality: float) -> np.ndarray:
    """Influence scaled by the source's label quality."""
    if not (0.0 <= quality <= 1.0):
        raise ValueError(f"quality must lie in [0, 1], got {quality}")
    return quality * column.scores


@dataclass
class ActivationState:
    """Running pointwise maximum of quality-scaled influence over the labeled set.

    Node j is activated when q_max[j] > theta. best_source[j] is the labeled
    node achieving the max (-1 while q_max[j] is still zero); ties go to the
    lowest source id when built via build_activation.
    """

    theta: float
    q_max: np.ndarray
    best_source: np.ndarray

    @property
    def activated_mask(self) -> np.ndarray:
        return self.q_max > self.theta

    @property
    def activated_count(self) -> int:
        return int(np.count_nonzero(self.q_max > self.theta))


def empty_activation(num_nodes: int, theta: float) -> ActivationState:
    if theta < 0:
        raise ValueError(f"theta must be non-negative, got {theta}")
    return ActivationState(theta=float(theta),
                           q_max=np.zeros(num_nodes, dtype=np.float64),
                           best_source=np.full(num_nodes, -1, dtype=np.int64))


def add_source(state: ActivationState, column: InfluenceColumn,
               quality: float) -> np.ndarray:
    """Fold one quality-scaled column into the state.

    Returns the ids of nodes that crossed theta by this addition. best_source
    changes only where the new scaled score strictly exceeds the old maximum.
    """
    scaled = reliable_quantity(column, quality)
    was_active = state.q_max > state.theta
    better = scaled > state.q_max
    state.q_max[better] = scaled[better]
    state.best_source[better] = column.source
    newly = (state.q_max > state.theta) & ~was_active
    return np.flatnonzero(newly)


def build_activation(op: PropagationOperator, labeled, theta: float,
                     column_cache: dict | None = None) -> ActivationState:
    """Activation state of a labeled set, from scratch.

    Entries are folded in ascending node order with strict-improvement
    updates, so equal scores resolve to the lowest source id. `labeled` is a
    reliability.LabeledSet; `column_cache` (node -> scores array) is filled
    for reuse across batches.
    """
    state = empty_activation(op.graph.num_nodes, theta)
    for entry in sorted(labeled.entries, key=lambda e: e.node):
        if column_cache is not None and entry.node in column_cache:
            scores = column_cache[entry.node]
        else:
            scores = influence_column(op, entry.node).scores
            if column_cache is not None:
                column_cache[entry.node] = scores
        add_source(state, InfluenceColumn(entry.node, scores), entry.quality)
    return state


def marginal_gain(state: ActivationState, column: InfluenceColumn,
                  quality: float) -> int:
    """Number of nodes this quality-scaled column would newly activate."""
    scaled = reliable_quantity(column, quality)
    return int(np.count_nonzero((scaled > state.theta) & ~(state.q_max > state.theta)))
