"""Shared test utilities: tiny deterministic graphs and random instances."""

import numpy as np

import rim


def path3(num_classes=2):
    """0 - 1 - 2 with all nodes in the train split."""
    return rim.build_graph(3, [(0, 1), (1, 2)], [0, 0, 1],
                           num_classes=num_classes,
                           splits={"train": [0, 1, 2]})


def pair():
    """Single edge 0 - 1."""
    return rim.build_graph(2, [(0, 1)], [0, 1], splits={"train": [0, 1]})


def random_graph(rng, n, p, num_classes=2, with_features=False):
    """Erdos-Renyi graph; isolated nodes allowed. All nodes in train."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    labels = rng.integers(num_classes, size=n)
    features = rng.standard_normal((n, 3)) if with_features else None
    return rim.build_graph(n, edges, labels, num_classes=num_classes,
                           features=features, splits={"train": list(range(n))})


def labeled_from(graph, nodes, qualities, alpha=0.7, labels=None):
    """LabeledSet over given nodes; oracle labels default to ground truth."""
    ls = rim.LabeledSet(alpha=alpha)
    for i, node in enumerate(nodes):
        label = graph.labels[node] if labels is None else labels[i]
        ls.add(int(node), int(label), float(qualities[i]), 0)
    return ls


def coverage_value(op, sources, qualities, theta):
    """Independent coverage computation: count nodes whose best
    quality-scaled influence beats theta, straight from dense columns."""
    if len(sources) == 0:
        return 0
    cols = rim.influence_columns(op, np.asarray(sources, dtype=np.int64))
    scaled = cols * np.asarray(qualities, dtype=np.float64)[None, :]
    return int((scaled.max(axis=1) > theta).sum())


def conditional_match_frequency(alpha, s, c, rng, min_conditioned=100_000,
                                chunk=500_000):
    """Monte-Carlo route for the reliability formula.

    Pair model: reference has true label 0; the queried node shares it with
    probability s, otherwise is uniform over the rest. The oracle answers the
    queried node's true label with probability alpha, otherwise uniformly
    wrong. Returns the empirical P(oracle correct | oracle answer == 0) and
    the number of conditioned samples used.
    """
    conditioned = 0
    hits = 0
    while conditioned < min_conditioned:
        same = rng.random(chunk) < s
        y_j = rng.integers(1, c, size=chunk)
        y_j[same] = 0
        correct = rng.random(chunk) < alpha
        w = rng.integers(0, c - 1, size=chunk)
        wrong = w + (w >= y_j)
        answer = np.where(correct, y_j, wrong)
        sel = answer == 0
        conditioned += int(sel.sum())
        hits += int((sel & correct).sum())
    return hits / conditioned, conditioned


def finite_difference_grads(w, b, x, y, sample_weights, weight_decay, eps=1e-5):
    """Central-difference gradients of the weighted CE loss."""
    def loss_at(wm, bm):
        return rim.weighted_cross_entropy(wm, bm, x, y, sample_weights,
                                          weight_decay)[0]

    grad_w = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        up, down = w.copy(), w.copy()
        up[idx] += eps
        down[idx] -= eps
        grad_w[idx] = (loss_at(up, b) - loss_at(down, b)) / (2 * eps)
    grad_b = np.zeros_like(b)
    for i in range(b.size):
        up, down = b.copy(), b.copy()
        up[i] += eps
        down[i] -= eps
        grad_b[i] = (loss_at(w, up) - loss_at(w, down)) / (2 * eps)
    return grad_w, grad_b


def max_relative_error(analytic, numeric, floor=1e-6):
    num = np.abs(analytic - numeric)
    den = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((num / den).max())


def write_dataset_dir(root):
    """Six-node chain dataset in the on-disk layout the loaders expect."""
    import json
    root.mkdir(exist_ok=True)
    (root / "edges.txt").write_text("0 1\n1 2\n3 4\n4 5\n2 3\n")
    (root / "labels.txt").write_text("0\n0\n0\n1\n1\n1\n")
    (root / "features.txt").write_text(
        "\n".join(f"{1.0 - l},{float(l)}" for l in (0, 0, 0, 1, 1, 1)) + "\n")
    (root / "splits.json").write_text(
        json.dumps({"train": [0, 1, 4, 5], "val": [], "test": [2, 3]}))
    return root
