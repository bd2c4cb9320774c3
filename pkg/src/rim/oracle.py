"""Noisy labeling oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass
class NoisyOracle:
    """Answers queries correctly with probability alpha, otherwise uniformly
    over the remaining classes. Repeated queries of the same node re-sample
    independently; one generator per run, advanced in query order."""

    alpha: float
    ground_truth: np.ndarray
    num_classes: int
    rng: np.random.Generator

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.num_classes < 2:
            raise ValueError("oracle needs at least 2 classes")

    @classmethod
    def for_graph(cls, graph: Graph, alpha: float, seed) -> "NoisyOracle":
        return cls(alpha=alpha, ground_truth=graph.labels,
                   num_classes=graph.num_classes, rng=np.random.default_rng(seed))

    def query(self, node: int) -> int:
        truth = int(self.ground_truth[node])
        if self.rng.random() < self.alpha:
            return truth
        # uniform over the c-1 wrong classes
        wrong = int(self.rng.integers(self.num_classes - 1))
        return wrong if wrong < truth else wrong + 1
