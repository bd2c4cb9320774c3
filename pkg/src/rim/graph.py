"""Graph container, dataset file formats, and the row-normalized walk operator.

The walk operator is P = D~^-1 A~ where A~ adds a self-loop to every node.
Self-loops are kept implicit: applying P costs one sparse multiply plus a
vector add, and A itself stays loop-free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class DatasetError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass(frozen=True)
class Graph:
    """Undirected graph with labels, optional features, and node splits.

    Attributes
    ----------
    num_nodes : int
    adjacency : scipy.sparse.csr_matrix
        Symmetric 0/1 matrix, no self-loops, no duplicate edges.
    labels : np.ndarray
        Ground-truth class per node, values in [0, num_classes).
    num_classes : int
    features : np.ndarray or None
        Dense (num_nodes, dim) float matrix.
    train_nodes, val_nodes, test_nodes : np.ndarray
        Sorted, pairwise-disjoint node id arrays. May be empty.
    """

    num_nodes: int
    adjacency: sp.csr_matrix
    labels: np.ndarray
    num_classes: int
    features: np.ndarray | None = None
    train_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    val_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    test_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        """Degree without the implicit self-loop."""
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def neighbors(self, node: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def split(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train_nodes, "val": self.val_nodes,
                    "test": self.test_nodes}[name]
        except KeyError:
            raise ValueError(f"unknown split {name!r}, expected train/val/test") from None


def build_graph(num_nodes, edges, labels, num_classes=None, features=None,
                splits=None) -> Graph:
    """Validate raw pieces and assemble a Graph.

    Parameters
    ----------
    edges : iterable of (u, v)
        Undirected; duplicates (in either orientation) are merged.
        Self-loops are rejected, the operator adds its own.
    labels : array-like of int, length num_nodes
    num_classes : int, optional
        Defaults to max(labels) + 1.
    splits : dict, optional
        Any of the keys "train"/"val"/"test" mapping to node id lists.
    """
    if num_nodes <= 0:
        raise DatasetError("graph needs at least one node")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (num_nodes,):
        raise DatasetError(
            f"expected {num_nodes} labels, got shape {labels.shape}")
    if labels.size and labels.min() < 0:
        raise DatasetError("negative class label")
    inferred = int(labels.max()) + 1 if labels.size else 1
    if num_classes is None:
        num_classes = inferred
    elif num_classes < inferred:
        raise DatasetError(
            f"label {inferred - 1} out of range for {num_classes} classes")

    unique = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise DatasetError(f"edge ({u}, {v}) references a node outside 0..{num_nodes - 1}")
        if u == v:
            raise DatasetError(f"self-loop on node {u} not allowed in input")
        unique.add((u, v) if u < v else (v, u))
    if unique:
        arr = np.array(sorted(unique), dtype=np.int64)
        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
    else:
        rows = cols = np.empty(0, dtype=np.int64)
        data = np.empty(0, dtype=np.float64)
    adjacency = sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))
    adjacency.sort_indices()

    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != num_nodes:
            raise DatasetError(
                f"features must be (num_nodes, dim), got {features.shape}")

    split_arrays = {}
    splits = splits or {}
    for key in splits:
        if key not in ("train", "val", "test"):
            raise DatasetError(f"unknown split name {key!r}")
    seen = np.zeros(num_nodes, dtype=bool)
    for key in ("train", "val", "test"):
        ids = np.asarray(sorted(int(i) for i in splits.get(key, ())), dtype=np.int64)
        if ids.size:
            if ids.min() < 0 or ids.max() >= num_nodes:
                raise DatasetError(f"{key} split references a node outside the graph")
            if np.unique(ids).size != ids.size:
                raise DatasetError(f"duplicate node in {key} split")
            if seen[ids].any():
                raise DatasetError(f"{key} split overlaps another split")
            seen[ids] = True
        split_arrays[key] = ids

    return Graph(num_nodes=num_nodes, adjacency=adjacency, labels=labels,
                 num_classes=int(num_classes), features=features,
                 train_nodes=split_arrays["train"], val_nodes=split_arrays["val"],
                 test_nodes=split_arrays["test"])


def _parse_edges(path: Path) -> list[tuple[int, int]]:
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'u v', got {text!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-integer node id in {text!r}") from None
    return edges


def _parse_labels(path: Path) -> np.ndarray:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: expected a class index, got {text!r}") from None
    if not labels:
        raise DatasetError(f"{path}: no labels found")
    return np.asarray(labels, dtype=np.int64)


def _parse_features(path: Path, num_nodes: int) -> np.ndarray:
    """Dense CSV (row i = node i) or sparse 'idx:value' lines, auto-detected."""
    raw = Path(path).read_text().splitlines()
    sparse_mode = any(":" in line for line in raw)
    if sparse_mode:
        entries: list[list[tuple[int, float]]] = []
        max_idx = -1
        for lineno, line in enumerate(raw, 1):
            row = []
            for tok in line.split():
                if ":" not in tok:
                    raise DatasetError(f"{path}:{lineno}: expected idx:value, got {tok!r}")
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise DatasetError(f"{path}:{lineno}: bad idx:value pair {tok!r}") from None
                if idx < 0:
                    raise DatasetError(f"{path}:{lineno}: negative feature index")
                max_idx = max(max_idx, idx)
                row.append((idx, val))
            entries.append(row)
        if len(entries) != num_nodes:
            raise DatasetError(
                f"{path}: {len(entries)} feature rows for {num_nodes} nodes")
        dim = max_idx + 1
        if dim <= 0:
            raise DatasetError(f"{path}: sparse feature file has no entries")
        out = np.zeros((num_nodes, dim), dtype=np.float64)
        for i, row in enumerate(entries):
            for idx, val in row:
                out[i, idx] = val
        return out

    rows = []
    width = None
    kept = 0
    for lineno, line in enumerate(raw, 1):
        text = line.strip()
        if not text:
            continue
        parts = [p for p in text.split(",") if p.strip() != ""]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-numeric feature value") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DatasetError(
                f"{path}:{lineno}: row has {len(vals)} values, expected {width}")
        rows.append(vals)
        kept += 1
    if kept != num_nodes:
        raise DatasetError(f"{path}: {kept} feature rows for {num_nodes} nodes")
    return np.asarray(rows, dtype=np.float64)


def _parse_splits(path: Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise DatasetError(f"{path}: expected a JSON object")
    for key, val in obj.items():
        if key not in ("train", "val", "test"):
            raise DatasetError(f"{path}: unknown split key {key!r}")
        if not isinstance(val, list) or not all(isinstance(i, int) for i in val):
            raise DatasetError(f"{path}: split {key!r} must be a list of ints")
    return obj


def load_dataset(edges_path, labels_path=None, features_path=None,
                 splits_path=None) -> Graph:
    """Load a graph from the plain-text dataset files.

    File formats
    ------------
    edges: one "u v" pair per line, 0-indexed; blank lines and lines
        starting with '#' are ignored.
    labels: one class index per line, line i = node i. Node count is the
        number of label lines.
    features (optional): dense CSV, or sparse "idx:value idx:value ..."
        lines; sparse is detected by the presence of ':'.
    splits (optional): JSON object with "train"/"val"/"test" id lists;
        missing keys mean empty splits.
    """
    if labels_path is None:
        raise DatasetError("a labels file is required (it defines the node count)")
    labels = _parse_labels(Path(labels_path))
    num_nodes = labels.shape[0]
    edges = _parse_edges(Path(edges_path))
    features = _parse_features(Path(features_path), num_nodes) if features_path else None
    splits = _parse_splits(Path(splits_path)) if splits_path else None
    return build_graph(num_nodes, edges, labels, features=features, splits=splits)


def load_dataset_dir(directory) -> Graph:
    """Load from a directory using the fixed names edges.txt, labels.txt,
    features.txt (optional), splits.json (optional)."""
    d = Path(directory)
    edges = d / "edges.txt"
    labels = d / "labels.txt"
    if not edges.is_file() or not labels.is_file():
        raise DatasetError(f"{d}: expected edges.txt and labels.txt")
    features = d / "features.txt"
    splits = d / "splits.json"
    return load_dataset(edges, labels,
                        features if features.is_file() else None,
                        splits if splits.is_file() else None)


@dataclass(frozen=True)
class PropagationOperator:
    """k-step application of P = D~^-1 A~ with implicit self-loops.

    One application maps v to (A v + v) / (deg + 1); the matrix P itself is
    never materialized.
    """

    graph: Graph
    k: int = 2
    inv_degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k!r}")
        inv = 1.0 / (self.graph.degrees.astype(np.float64) + 1.0)
        object.__setattr__(self, "inv_degree", inv)


def _apply_once(op: PropagationOperator, arr: np.ndarray) -> np.ndarray:
    out = op.graph.adjacency @ arr
    out += arr
    if out.ndim == 1:
        out *= op.inv_degree
    else:
        out *= op.inv_degree[:, None]
    return out


def propagate(op: PropagationOperator, vec: np.ndarray) -> np.ndarray:
    """One application of P to a vector."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (op.graph.num_nodes,):
        raise ValueError(
            f"vector has shape {vec.shape}, graph has {op.graph.num_nodes} nodes")
    return _apply_once(op, vec)


def propagate_k(op: PropagationOperator, arr: np.ndarray) -> np.ndarray:
    """P^k applied to a vector or a column block."""
    out = np.array(arr, dtype=np.float64, copy=True)
    if out.shape[0] != op.graph.num_nodes:
        raise ValueError(
            f"array has {out.shape[0]} rows, graph has {op.graph.num_nodes} nodes")
    for _ in range(op.k):
        out = _apply_once(op, out)
    return out


def smooth_features(op: PropagationOperator, block_size: int = 512) -> np.ndarray:
    """P^k X, computed in column blocks so only k sparse passes are needed."""
    if op.graph.features is None:
        raise ValueError("graph has no features to smooth")
    x = op.graph.features
    out = np.empty_like(x, dtype=np.float64)
    for start in range(0, x.shape[1], block_size):
        out[:, start:start + block_size] = propagate_k(op, x[:, start:start + block_size])
    return out
