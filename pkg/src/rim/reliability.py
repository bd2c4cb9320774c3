"""Label quality estimation for noisy-oracle active learning.

An oracle answers correctly with probability alpha and otherwise uniformly
over the c-1 wrong classes. Given a reference node whose true label the
queried node shares with probability s, the posterior probability that the
oracle's answer is actually correct, conditioned on it agreeing with the
reference's true label, is

    r = alpha * s / (alpha * s + (1 - alpha) * (1 - s) / (c - 1)).

Each labeled node carries such a quality estimate; after every batch the new
nodes refine theirs by a reliability-weighted vote over same-label references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def label_reliability(alpha: float, s, c: int):
    """Posterior correctness probability of an oracle label.

    Parameters
    ----------
    alpha : float in (0, 1]
        Oracle accuracy.
    s : float or np.ndarray, values in [0, 1]
        Probability that the queried node shares the reference's true label.
    c : int >= 2
        Number of classes.

    Scalar s gives a float; an array gives an elementwise array. The
    degenerate 0/0 case (alpha = 1, s = 0) resolves to 0.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {c}")
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
        raise ValueError("s must lie in [0, 1]")
    num = alpha * s_arr
    den = num + (1.0 - alpha) * (1.0 - s_arr) / (c - 1)
    with np.errstate(invalid="ignore"):
        out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SimilaritySource:
    """Row matrix whose cosine similarities approximate same-label probability.

    mode "feature": rows of the smoothed feature matrix P^k X, fixed per run.
    mode "label": rows of a propagated soft-label matrix, refreshed per batch.
    Cosine is clamped at 0; a zero-norm row is treated as similar to nothing.
    """

    mode: str
    matrix: np.ndarray
    _norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("feature", "label"):
            raise ValueError(f"mode must be 'feature' or 'label', got {self.mode!r}")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("similarity matrix must be 2-D")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_norms", np.linalg.norm(m, axis=1))


def similarity(src: SimilaritySource, i: int, j: int) -> float:
    """Clamped cosine between rows i and j, in [0, 1]."""
    return float(similarity_to(src, j, np.asarray([i]))[0])


def similarity_to(src: SimilaritySource, j: int, nodes: np.ndarray) -> np.ndarray:
    """Clamped cosine between row j and each listed row."""
    nj = src._norms[j]
    if nj == 0.0:
        return np.zeros(len(nodes), dtype=np.float64)
    nodes = np.asarray(nodes, dtype=np.int64)
    dots = src.matrix[nodes] @ src.matrix[j]
    norms = src._norms[nodes]
    out = np.zeros(len(nodes), dtype=np.float64)
    ok = norms > 0.0
    out[ok] = dots[ok] / (norms[ok] * nj)
    np.clip(out, 0.0, 1.0, out=out)
    return out


@dataclass
class LabeledEntry:
    node: int
    label: int
    quality: float
    batch: int


@dataclass
class LabeledSet:
    """Oracle-labeled nodes with their quality estimates, in query order."""

    alpha: float
    entries: list[LabeledEntry] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, node: int) -> bool:
        return any(e.node == node for e in self.entries)

    def add(self, node: int, label: int, quality: float, batch: int) -> LabeledEntry:
        if node in self:
            raise ValueError(f"node {node} already labeled")
        if not (0.0 <= quality <= 1.0):
            raise ValueError(f"quality must lie in [0, 1], got {quality}")
        if self.entries and batch < self.entries[-1].batch:
            raise ValueError("batch indices must be non-decreasing")
        entry = LabeledEntry(int(node), int(label), float(quality), int(batch))
        self.entries.append(entry)
        return entry

    def nodes(self) -> np.ndarray:
        return np.asarray([e.node for e in self.entries], dtype=np.int64)

    def labels(self) -> np.ndarray:
        return np.asarray([e.label for e in self.entries], dtype=np.int64)

    def qualities(self) -> np.ndarray:
        return np.asarray([e.quality for e in self.entries], dtype=np.float64)

    def entry_for(self, node: int) -> LabeledEntry:
        for e in self.entries:
            if e.node == node:
                return e
        raise KeyError(node)


def update_quality(labeled: LabeledSet, new_nodes, src: SimilaritySource,
                   c: int) -> LabeledSet:
    """Refine the quality of each newly labeled node by a weighted vote.

    References for node j are every other labeled node with the same oracle
    label. Reference weights are their pre-update qualities, normalized over
    the reference set; each reference votes label_reliability(alpha, s_ij, c).
    All new nodes are updated against the same pre-update snapshot, and a node
    with no references (or only zero-quality ones) keeps its current quality.
    Mutates `labeled` in place and returns it.
    """
    snapshot = {e.node: e.quality for e in labeled.entries}
    new_nodes = set(int(v) for v in new_nodes)
    missing = new_nodes - snapshot.keys()
    if missing:
        raise ValueError(f"nodes {sorted(missing)} are not in the labeled set")
    alpha = labeled.alpha
    updated = {}
    for j in sorted(new_nodes):
        entry = labeled.entry_for(j)
        refs = [e for e in labeled.entries if e.label == entry.label and e.node != j]
        if not refs:
            continue
        ref_nodes = np.asarray([e.node for e in refs], dtype=np.int64)
        weights = np.asarray([snapshot[e.node] for e in refs], dtype=np.float64)
        total = weights.sum()
        if total <= 0.0:
            continue
        sims = similarity_to(src, j, ref_nodes)
        votes = label_reliability(alpha, sims, c)
        # convex combination of values in [0, 1]; clamp the float-summation
        # residue (a unanimous vote can come out as 1 + 1e-16 otherwise)
        updated[j] = float(min(1.0, max(0.0, (weights / total) @ votes)))
    for j, q in updated.items():
        labeled.entry_for(j).quality = q
    return labeled
