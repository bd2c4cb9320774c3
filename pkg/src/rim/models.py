"""Classifiers trained on noisy labeled sets.

Both models consume the labeled set's quality estimates: label propagation
scales its clamped seed rows by quality, and the softmax classifier weights
each node's cross-entropy term by quality. Passing use_reliability=False
restores the unweighted variants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import PropagationOperator, _apply_once
from .reliability import LabeledSet


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; lower the learning rate."""


@dataclass(frozen=True)
class SoftLabelMatrix:
    """Per-node class scores plus hard predictions.

    predictions break argmax ties toward the lowest class index. unreached
    marks all-zero rows (possible under label propagation on disconnected
    graphs); those rows predict class 0 by convention.
    """

    soft: np.ndarray
    predictions: np.ndarray
    unreached: np.ndarray


def _finalize(soft: np.ndarray) -> SoftLabelMatrix:
    predictions = np.argmax(soft, axis=1).astype(np.int64)
    unreached = ~soft.any(axis=1)
    return SoftLabelMatrix(soft=soft, predictions=predictions, unreached=unreached)


def lp_fit_predict(op: PropagationOperator, labeled: LabeledSet,
                   iters: int = 10, use_reliability: bool = True) -> SoftLabelMatrix:
    """Label propagation with quality-scaled clamped seeds.

    Seed row i is quality_i * onehot(label_i) (or plain onehot when
    use_reliability is False). Each iteration propagates one step of P and
    re-clamps every labeled row, so labeled rows never drift.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if len(labeled) == 0:
        raise ValueError("label propagation needs at least one labeled node")
    graph = op.graph
    c = graph.num_classes
    nodes = labeled.nodes()
    if nodes.max() >= graph.num_nodes:
        raise IndexError("labeled node outside the graph")
    seeds = np.zeros((graph.num_nodes, c), dtype=np.float64)
    scale = labeled.qualities() if use_reliability else np.ones(len(labeled))
    seeds[nodes, labeled.labels()] = scale
    y = seeds.copy()
    for _ in range(iters):
        y = _apply_once(op, y)
        y[nodes] = seeds[nodes]
    return _finalize(y)


@dataclass(frozen=True)
class SgcHyperparams:
    learning_rate: float = 0.2
    epochs: int = 300
    weight_decay: float = 5e-5

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.weight_decay < 0:
            raise ValueError(f"bad hyperparameters: {self}")


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (dim, classes)
    bias: np.ndarray     # (classes,)


def weighted_cross_entropy(weights: np.ndarray, bias: np.ndarray, x: np.ndarray,
                           labels: np.ndarray, sample_weights: np.ndarray,
                           weight_decay: float):
    """Mean weighted cross-entropy with L2 on the weight matrix (not the bias).

    Returns (loss, grad_weights, grad_bias). Exposed separately so the
    gradient can be checked against finite differences.
    """
    m = x.shape[0]
    logits = x @ weights + bias
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    log_p = logits - log_norm[:, None]
    loss = -(sample_weights * log_p[np.arange(m), labels]).sum() / m
    # overflow here means the step size is far too large; the caller turns the
    # resulting inf into a DivergenceError, so don't warn about it
    with np.errstate(over="ignore"):
        loss += 0.5 * weight_decay * (weights ** 2).sum()
    grad_logits = np.exp(log_p) * (sample_weights / m)[:, None]
    grad_logits[np.arange(m), labels] -= sample_weights / m
    grad_w = x.T @ grad_logits + weight_decay * weights
    grad_b = grad_logits.sum(axis=0)
    return float(loss), grad_w, grad_b


def sgc_fit(features: np.ndarray, labeled: LabeledSet, num_classes: int,
            hyper: SgcHyperparams | None = None,
            use_reliability: bool = True) -> SoftmaxModel:
    """Full-batch gradient descent on the labeled rows of a smoothed feature
    matrix. Zero initialization, fixed step size: deterministic end to end.

    `features` should already be smoothed (graph.smooth_features); this
    function is plain logistic regression on whatever rows it is given.
    """
    if hyper is None:
        hyper = SgcHyperparams()
    if len(labeled) == 0:
        raise ValueError("training needs at least one labeled node")
    labels = labeled.labels()
    if labels.max() >= num_classes:
        raise ValueError("labeled class outside num_classes")
    x = np.asarray(features, dtype=np.float64)[labeled.nodes()]
    sample_weights = labeled.qualities() if use_reliability else np.ones(len(labeled))
    w = np.zeros((x.shape[1], num_classes), dtype=np.float64)
    b = np.zeros(num_classes, dtype=np.float64)
    for _ in range(hyper.epochs):
        loss, grad_w, grad_b = weighted_cross_entropy(
            w, b, x, labels, sample_weights, hyper.weight_decay)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"loss became non-finite at lr={hyper.learning_rate}; reduce it")
        w -= hyper.learning_rate * grad_w
        b -= hyper.learning_rate * grad_b
    return SoftmaxModel(weights=w, bias=b)


def sgc_predict(model: SoftmaxModel, features: np.ndarray) -> SoftLabelMatrix:
    """Softmax probabilities for every row of the (smoothed) feature matrix."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"features have width {x.shape[-1]}, model expects {model.weights.shape[0]}")
    logits = x @ model.weights + model.bias
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return _finalize(p)


def evaluate(predictions, graph, split: str) -> float:
    """Accuracy of hard predictions on a named split ('val' or 'test')."""
    if split not in ("val", "test"):
        raise ValueError(f"split must be 'val' or 'test', got {split!r}")
    nodes = graph.split(split)
    if nodes.size == 0:
        raise ValueError(f"{split} split is empty")
    if isinstance(predictions, SoftLabelMatrix):
        predictions = predictions.predictions
    predictions = np.asarray(predictions)
    if predictions.shape[0] != graph.num_nodes:
        raise ValueError("predictions must cover every node")
    return float(np.mean(predictions[nodes] == graph.labels[nodes]))
