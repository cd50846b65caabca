"""Random forest classifier built from scratch, with vote-fraction scores.

Axis-aligned CART-style trees on Gini impurity. Everything that involves
chance runs off SplitMix64: tree t draws from a stream seeded with
params.seed XOR t, consuming first the n bootstrap draws and then, node by
node in depth-first order (left child first), the feature subsets. Split
candidates are midpoints between consecutive distinct sorted values; the
split minimizing the weighted child Gini wins, ties broken by lower feature
index, then lower threshold. Routing sends value < threshold left, so equal
values go right.

Match scoring is the fraction of trees voting for the claimed class, which
makes scores a calibrated-by-construction value in [0, 1] summing to 1 over
the class list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyNodeError,
    FormatError,
    InvalidParamError,
    InvalidTrainingSetError,
    UnknownLabelError,
)
from .features import FeatureVector
from .rng import SplitMix64

MODEL_FORMAT = "veinforge-forest"
MODEL_VERSION = 1


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int = 0  # 0 means unlimited
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # None resolves to ceil(sqrt(d))
    seed: int = 42

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidParamError("n_trees must be at least 1")
        if self.max_depth < 0:
            raise InvalidParamError("max_depth must be 0 (unlimited) or positive")
        if self.min_samples_leaf < 1:
            raise InvalidParamError("min_samples_leaf must be at least 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise InvalidParamError("features_per_split must be at least 1")


@dataclass
class TreeNode:
    count: int
    feature: int | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None
    label: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class Forest:
    params: ForestParams
    class_labels: list[str]
    dimension: int
    trees: list[TreeNode] = field(default_factory=list)


@dataclass
class Prediction:
    label: str
    confidence: float  # vote fraction of the predicted label
    votes: dict[str, int]


# ---------------------------------------------------------------------------
# impurity and splitting


def gini(counts) -> float:
    """Gini impurity sum q_i * (1 - q_i) over class counts.

    Summation runs in class order; the exhaustive-split test oracle uses the
    same form so tied candidates agree bitwise.
    """
    total = 0
    for c in counts:
        total += int(c)
    if total == 0:
        raise EmptyNodeError("gini of an empty node is undefined")
    acc = 0.0
    for c in counts:
        q = c / total
        acc += q * (1.0 - q)
    return acc


def best_split(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    candidates: np.ndarray | None = None,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, weighted_child_gini) over candidate features.

    Thresholds are midpoints of consecutive distinct sorted values. Returns
    None when no candidate split strictly reduces the parent impurity.
    x is (n, d) float64, y is (n,) int class indices.
    """
    n = x.shape[0]
    if n < 2:
        return None
    if candidates is None:
        candidates = np.arange(x.shape[1])
    m = len(candidates)
    if m == 0:
        return None

    parent_counts = np.bincount(y, minlength=n_classes)
    parent_gini = gini(parent_counts)

    xc = x[:, candidates]
    order = np.argsort(xc, axis=0)
    sorted_x = np.take_along_axis(xc, order, axis=0)
    sorted_y = y[order]

    onehot = np.zeros((n, m, n_classes), dtype=np.float64)
    onehot[np.arange(n)[:, None], np.arange(m)[None, :], sorted_y] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]  # (n-1, m, C): counts left of boundary i
    right = parent_counts.astype(np.float64)[None, None, :] - left

    nl = np.arange(1, n, dtype=np.float64)[:, None, None]
    nr = np.arange(n - 1, 0, -1, dtype=np.float64)[:, None, None]
    ql = left / nl
    qr = right / nr
    gini_left = (ql * (1.0 - ql)).sum(axis=2)
    gini_right = (qr * (1.0 - qr)).sum(axis=2)
    weighted = (nl[:, :, 0] * gini_left + nr[:, :, 0] * gini_right) / float(n)

    valid = sorted_x[1:] > sorted_x[:-1]
    weighted = np.where(valid, weighted, np.inf)

    best: tuple[int, float, float] | None = None
    for fi in range(m):
        column = weighted[:, fi]
        i = int(np.argmin(column))  # first minimum = lowest threshold
        wg = float(column[i])
        if not np.isfinite(wg):
            continue
        if best is None or wg < best[2]:
            threshold = float((sorted_x[i, fi] + sorted_x[i + 1, fi]) / 2.0)
            best = (int(candidates[fi]), threshold, wg)
    if best is None or not best[2] < parent_gini:
        return None
    return best


def bootstrap_indices(n: int, rng: SplitMix64) -> list[int]:
    """n draws with replacement from range(n)."""
    if n < 1:
        raise InvalidParamError("cannot bootstrap an empty set")
    return [rng.next_below(n) for _ in range(n)]


# ---------------------------------------------------------------------------
# training


def _majority_label(counts: np.ndarray, class_labels: list[str]) -> str:
    # argmax takes the first maximum, which is the earliest label
    return class_labels[int(np.argmax(counts))]


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    rng: SplitMix64,
    params: ForestParams,
    n_classes: int,
    class_labels: list[str],
    fps: int,
) -> TreeNode:
    counts = np.bincount(y[rows], minlength=n_classes)
    node_size = len(rows)

    def leaf() -> TreeNode:
        return TreeNode(count=node_size, label=_majority_label(counts, class_labels))

    pure = int(np.count_nonzero(counts)) <= 1
    depth_capped = params.max_depth > 0 and depth >= params.max_depth
    if pure or depth_capped or node_size < 2 * params.min_samples_leaf or node_size < 2:
        return leaf()

    chosen = rng.sample_indices(x.shape[1], fps)
    candidates = np.array(sorted(chosen), dtype=np.intp)
    found = best_split(x[rows], y[rows], n_classes, candidates)
    if found is None:
        return leaf()
    feature, threshold, _ = found
    go_left = x[rows, feature] < threshold
    left_rows = rows[go_left]
    right_rows = rows[~go_left]
    if len(left_rows) < params.min_samples_leaf or len(right_rows) < params.min_samples_leaf:
        return leaf()
    left = _grow(x, y, left_rows, depth + 1, rng, params, n_classes, class_labels, fps)
    right = _grow(x, y, right_rows, depth + 1, rng, params, n_classes, class_labels, fps)
    return TreeNode(
        count=node_size, feature=feature, threshold=threshold, left=left, right=right
    )


def train_forest(vectors: list[FeatureVector], params: ForestParams) -> Forest:
    if len(vectors) < 2:
        raise InvalidTrainingSetError("need at least 2 training vectors")
    dims = {len(v.values) for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatchError(f"inconsistent training dimensions {sorted(dims)}")
    (dimension,) = dims
    class_labels = sorted({v.label for v in vectors})
    if len(class_labels) < 2:
        raise InvalidTrainingSetError("training set must contain at least two classes")

    label_index = {label: i for i, label in enumerate(class_labels)}
    x = np.stack([v.values for v in vectors]).astype(np.float64)
    y = np.array([label_index[v.label] for v in vectors], dtype=np.intp)
    n = len(vectors)

    fps = params.features_per_split
    if fps is None:
        fps = math.ceil(math.sqrt(dimension))
    if not 1 <= fps <= dimension:
        raise InvalidParamError(f"features_per_split must lie in [1, {dimension}], got {fps}")

    trees = []
    for t in range(params.n_trees):
        rng = SplitMix64(params.seed ^ t)
        rows = np.array(bootstrap_indices(n, rng), dtype=np.intp)
        trees.append(_grow(x, y, rows, 0, rng, params, len(class_labels), class_labels, fps))

    resolved = ForestParams(
        n_trees=params.n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        features_per_split=fps,
        seed=params.seed,
    )
    return Forest(params=resolved, class_labels=class_labels, dimension=dimension, trees=trees)


# ---------------------------------------------------------------------------
# inference


def _route(node: TreeNode, values: np.ndarray) -> str:
    while not node.is_leaf:
        node = node.left if values[node.feature] < node.threshold else node.right
    return node.label


def vote_counts(forest: Forest, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (forest.dimension,):
        raise DimensionMismatchError(
            f"vector has shape {values.shape}, model expects ({forest.dimension},)"
        )
    index = {label: i for i, label in enumerate(forest.class_labels)}
    counts = np.zeros(len(forest.class_labels), dtype=np.int64)
    for tree in forest.trees:
        counts[index[_route(tree, values)]] += 1
    return counts


def predict(forest: Forest, vector: FeatureVector) -> Prediction:
    counts = vote_counts(forest, vector.values)
    winner = int(np.argmax(counts))  # ties resolve to the earliest label
    return Prediction(
        label=forest.class_labels[winner],
        confidence=float(counts[winner]) / forest.params.n_trees,
        votes={label: int(c) for label, c in zip(forest.class_labels, counts)},
    )


def match_score(forest: Forest, vector: FeatureVector, claimed_label: str) -> float:
    if claimed_label not in forest.class_labels:
        raise UnknownLabelError(f"label {claimed_label!r} not in the model's class list")
    counts = vote_counts(forest, vector.values)
    idx = forest.class_labels.index(claimed_label)
    return float(counts[idx]) / forest.params.n_trees


# ---------------------------------------------------------------------------
# serialization


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"count": node.count, "label": node.label}
    return {
        "count": node.count,
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(payload: dict) -> TreeNode:
    try:
        if "label" in payload:
            return TreeNode(count=int(payload["count"]), label=str(payload["label"]))
        return TreeNode(
            count=int(payload["count"]),
            feature=int(payload["feature"]),
            threshold=float(payload["threshold"]),
            left=_node_from_dict(payload["left"]),
            right=_node_from_dict(payload["right"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed tree node: {exc}") from exc


def serialize_forest(forest: Forest) -> str:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dimension": forest.dimension,
        "class_labels": forest.class_labels,
        "params": {
            "n_trees": forest.params.n_trees,
            "max_depth": forest.params.max_depth,
            "min_samples_leaf": forest.params.min_samples_leaf,
            "features_per_split": forest.params.features_per_split,
            "seed": forest.params.seed,
        },
        "trees": [_node_to_dict(t) for t in forest.trees],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def deserialize_forest(text: str) -> Forest:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a {MODEL_FORMAT} document")
    if payload.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {payload.get('version')!r}")
    try:
        params = ForestParams(**payload["params"])
        labels = [str(v) for v in payload["class_labels"]]
        dimension = int(payload["dimension"])
        trees = [_node_from_dict(t) for t in payload["trees"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model payload: {exc}") from exc
    if len(trees) != params.n_trees:
        raise FormatError(f"model declares {params.n_trees} trees but holds {len(trees)}")
    return Forest(params=params, class_labels=labels, dimension=dimension, trees=trees)


def save_forest(path: str | Path, forest: Forest) -> None:
    Path(path).write_text(serialize_forest(forest), encoding="utf-8")


def load_forest(path: str | Path) -> Forest:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return deserialize_forest(path.read_text(encoding="utf-8"))
