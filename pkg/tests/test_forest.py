"""Forest training, splitting, scoring, and serialization tests.

The split oracle below enumerates every candidate threshold in plain Python
and computes the weighted child impurity with the same arithmetic forms the
implementation pins (q * (1 - q) summed in class order, then
(nl * gl + nr * gr) / n), so comparisons can demand bitwise equality.
"""

import math
import random

import numpy as np
import pytest

from veinforge.errors import (
    DimensionMismatchError,
    EmptyNodeError,
    FormatError,
    InvalidParamError,
    InvalidTrainingSetError,
    UnknownLabelError,
)
from veinforge.features import FeatureVector
from veinforge.forest import (
    Forest,
    ForestParams,
    TreeNode,
    best_split,
    bootstrap_indices,
    deserialize_forest,
    gini,
    match_score,
    predict,
    serialize_forest,
    train_forest,
    vote_counts,
)
from veinforge.rng import SplitMix64


def gini_oracle(counts) -> float:
    total = sum(counts)
    acc = 0.0
    for c in counts:
        q = c / total
        acc += q * (1.0 - q)
    return acc


def best_split_oracle(x, y, n_classes, candidates=None):
    """Try every midpoint of consecutive distinct values, every feature."""
    n, d = x.shape
    if candidates is None:
        candidates = range(d)
    parent = gini_oracle(np.bincount(y, minlength=n_classes).tolist())
    best = None
    for f in candidates:
        vals = sorted(set(x[:, f].tolist()))
        for lo, hi in zip(vals, vals[1:]):
            thr = (lo + hi) / 2.0
            mask = x[:, f] < thr
            yl = y[mask]
            yr = y[~mask]
            cl = np.bincount(yl, minlength=n_classes).tolist()
            cr = np.bincount(yr, minlength=n_classes).tolist()
            w = (len(yl) * gini_oracle(cl) + len(yr) * gini_oracle(cr)) / float(n)
            if best is None or w < best[2]:
                best = (f, thr, w)
    if best is None or not best[2] < parent:
        return None
    return best


# ---------------------------------------------------------------------------
# gini


def test_gini_pure_node_is_zero():
    assert gini([10, 0]) == 0.0
    assert gini([0, 0, 7]) == 0.0


def test_gini_even_binary_split():
    assert gini([5, 5]) == 0.5


def test_gini_one_three():
    assert gini([1, 3]) == 0.375


def test_gini_uniform_k_classes():
    for k in (2, 3, 4, 5):
        counts = [6] * k
        assert gini(counts) == pytest.approx(1.0 - 1.0 / k, abs=1e-12)


def test_gini_empty_node_raises():
    with pytest.raises(EmptyNodeError):
        gini([0, 0, 0])


# ---------------------------------------------------------------------------
# best_split


def test_best_split_simple_separable():
    x = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = np.array([0, 0, 1, 1])
    found = best_split(x, y, 2)
    assert found == (0, 5.5, 0.0)


def test_best_split_none_when_pure():
    x = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1, 1, 1])
    assert best_split(x, y, 2) is None


def test_best_split_none_when_no_distinct_values():
    x = np.full((4, 3), 2.5)
    y = np.array([0, 1, 0, 1])
    assert best_split(x, y, 2) is None


def test_best_split_none_when_no_improvement():
    # alternating labels on a line: every cut keeps both children mixed at
    # an impurity no better than the parent
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    found = best_split(x, y, 2)
    oracle = best_split_oracle(x, y, 2)
    assert found == oracle


def test_best_split_tie_prefers_lower_feature():
    # features 0 and 1 are identical, so their best cuts tie exactly
    x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    found = best_split(x, y, 2)
    assert found is not None
    assert found[0] == 0
    assert found[1] == 1.5


def test_best_split_tie_prefers_lower_threshold():
    # labels a,b,a: cutting at 0.5 or 1.5 both give weighted gini 1/3
    x = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0, 1, 0])
    found = best_split(x, y, 2)
    assert found is not None
    assert found[1] == 0.5


def test_best_split_respects_candidate_subset():
    # feature 0 separates perfectly but is not offered
    x = np.array([[0.0, 3.0], [1.0, 1.0], [10.0, 2.0], [11.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    found = best_split(x, y, 2, candidates=np.array([1]))
    oracle = best_split_oracle(x, y, 2, candidates=[1])
    assert found == oracle
    assert found[0] == 1


def test_best_split_matches_oracle_on_random_sets():
    rng = random.Random(1234)
    for trial in range(60):
        n = rng.randint(2, 24)
        d = rng.randint(1, 5)
        n_classes = rng.randint(2, 5)
        # coarse integer grid keeps midpoints exactly representable
        x = np.array(
            [[float(rng.randint(0, 9)) for _ in range(d)] for _ in range(n)]
        )
        y = np.array([rng.randint(0, n_classes - 1) for _ in range(n)])
        found = best_split(x, y, n_classes)
        oracle = best_split_oracle(x, y, n_classes)
        assert found == oracle, f"trial {trial}: {found} != {oracle}"


def test_best_split_matches_oracle_with_candidate_subsets():
    rng = random.Random(99)
    for trial in range(25):
        n = rng.randint(3, 18)
        d = rng.randint(2, 6)
        n_classes = rng.randint(2, 4)
        x = np.array(
            [[float(rng.randint(0, 5)) for _ in range(d)] for _ in range(n)]
        )
        y = np.array([rng.randint(0, n_classes - 1) for _ in range(n)])
        k = rng.randint(1, d)
        candidates = sorted(rng.sample(range(d), k))
        found = best_split(x, y, n_classes, candidates=np.array(candidates))
        oracle = best_split_oracle(x, y, n_classes, candidates=candidates)
        assert found == oracle, f"trial {trial}: {found} != {oracle}"


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_is_deterministic_per_seed():
    a = bootstrap_indices(50, SplitMix64(7))
    b = bootstrap_indices(50, SplitMix64(7))
    c = bootstrap_indices(50, SplitMix64(8))
    assert a == b
    assert a != c
    assert len(a) == 50
    assert all(0 <= i < 50 for i in a)


def test_bootstrap_frequencies_roughly_uniform():
    rng = SplitMix64(2024)
    draws = bootstrap_indices(10_000, rng)
    hist = np.bincount(np.array(draws) % 10, minlength=10)
    # modulo classes of 10k draws from [0, 10k): each near 1000
    fractions = hist / 10_000
    assert fractions.min() > 0.05
    assert fractions.max() < 0.15


def test_bootstrap_rejects_empty():
    with pytest.raises(InvalidParamError):
        bootstrap_indices(0, SplitMix64(1))


# ---------------------------------------------------------------------------
# training helpers


def _blob_vectors(seed: int, per_class: int = 30) -> list[FeatureVector]:
    """Four well separated 2-D gaussian blobs."""
    rng = SplitMix64(seed)
    centers = {"a": (0.0, 0.0), "b": (8.0, 0.0), "c": (0.0, 8.0), "d": (8.0, 8.0)}
    out = []
    for label, (cx, cy) in sorted(centers.items()):
        for _ in range(per_class):
            out.append(
                FeatureVector(
                    values=np.array(
                        [cx + rng.next_gauss(), cy + rng.next_gauss()]
                    ),
                    label=label,
                )
            )
    return out


def test_train_rejects_tiny_or_single_class_sets():
    v = FeatureVector(values=np.array([1.0, 2.0]), label="a")
    with pytest.raises(InvalidTrainingSetError):
        train_forest([v], ForestParams(n_trees=3))
    same = [
        FeatureVector(values=np.array([1.0]), label="a"),
        FeatureVector(values=np.array([2.0]), label="a"),
    ]
    with pytest.raises(InvalidTrainingSetError):
        train_forest(same, ForestParams(n_trees=3))


def test_train_rejects_mixed_dimensions():
    vs = [
        FeatureVector(values=np.array([1.0, 2.0]), label="a"),
        FeatureVector(values=np.array([1.0]), label="b"),
    ]
    with pytest.raises(DimensionMismatchError):
        train_forest(vs, ForestParams(n_trees=3))


def test_params_validation():
    with pytest.raises(InvalidParamError):
        ForestParams(n_trees=0)
    with pytest.raises(InvalidParamError):
        ForestParams(max_depth=-1)
    with pytest.raises(InvalidParamError):
        ForestParams(min_samples_leaf=0)
    with pytest.raises(InvalidParamError):
        ForestParams(features_per_split=0)


def test_features_per_split_defaults_to_ceil_sqrt():
    vs = [
        FeatureVector(values=np.arange(10, dtype=float) + i, label="ab"[i % 2])
        for i in range(8)
    ]
    forest = train_forest(vs, ForestParams(n_trees=2, seed=3))
    assert forest.params.features_per_split == math.ceil(math.sqrt(10))


def test_features_per_split_cannot_exceed_dimension():
    vs = [
        FeatureVector(values=np.array([float(i), 0.0]), label="ab"[i % 2])
        for i in range(6)
    ]
    with pytest.raises(InvalidParamError):
        train_forest(vs, ForestParams(n_trees=2, features_per_split=3))


def test_class_labels_sorted_and_dimension_recorded():
    vs = [
        FeatureVector(values=np.array([0.0, 1.0, 2.0]), label="zebra"),
        FeatureVector(values=np.array([5.0, 1.0, 2.0]), label="ant"),
        FeatureVector(values=np.array([0.1, 1.0, 2.0]), label="zebra"),
        FeatureVector(values=np.array([5.1, 1.0, 2.0]), label="ant"),
    ]
    forest = train_forest(vs, ForestParams(n_trees=5, seed=1))
    assert forest.class_labels == ["ant", "zebra"]
    assert forest.dimension == 3
    assert len(forest.trees) == 5


def test_training_is_deterministic():
    vs = _blob_vectors(seed=11, per_class=12)
    p = ForestParams(n_trees=20, seed=42)
    one = serialize_forest(train_forest(vs, p))
    two = serialize_forest(train_forest(vs, p))
    assert one == two
    other = serialize_forest(train_forest(vs, ForestParams(n_trees=20, seed=43)))
    assert one != other


def test_blobs_high_holdout_accuracy():
    train = _blob_vectors(seed=11, per_class=30)
    test = _blob_vectors(seed=77, per_class=15)
    forest = train_forest(train, ForestParams(n_trees=25, seed=42))
    hits = sum(1 for v in test if predict(forest, v).label == v.label)
    assert hits / len(test) >= 0.95


def test_max_depth_one_yields_stumps():
    vs = _blob_vectors(seed=5, per_class=10)
    forest = train_forest(vs, ForestParams(n_trees=10, max_depth=1, seed=9))
    for tree in forest.trees:
        if tree.is_leaf:
            continue
        assert tree.left.is_leaf and tree.right.is_leaf


def test_min_samples_leaf_bounds_every_split_child():
    vs = _blob_vectors(seed=21, per_class=20)
    msl = 5
    forest = train_forest(
        vs, ForestParams(n_trees=12, min_samples_leaf=msl, seed=4)
    )

    def walk(node: TreeNode):
        if node.is_leaf:
            assert node.count >= 1
            return
        assert node.left.count >= msl
        assert node.right.count >= msl
        assert node.left.count + node.right.count == node.count
        walk(node.left)
        walk(node.right)

    for tree in forest.trees:
        walk(tree)


def test_leaf_counts_sum_to_bootstrap_size():
    vs = _blob_vectors(seed=31, per_class=8)
    forest = train_forest(vs, ForestParams(n_trees=6, seed=2))

    def leaf_total(node: TreeNode) -> int:
        if node.is_leaf:
            return node.count
        return leaf_total(node.left) + leaf_total(node.right)

    for tree in forest.trees:
        assert leaf_total(tree) == len(vs)


# ---------------------------------------------------------------------------
# prediction and scoring


def _manual_forest(labels: list[str], leaf_labels: list[str]) -> Forest:
    """Forest of single-leaf trees casting fixed votes."""
    params = ForestParams(n_trees=len(leaf_labels), seed=0, features_per_split=1)
    trees = [TreeNode(count=1, label=lab) for lab in leaf_labels]
    return Forest(params=params, class_labels=labels, dimension=2, trees=trees)


def test_vote_counts_and_match_score():
    forest = _manual_forest(["a", "b", "c"], ["a", "b", "b", "c", "b"])
    v = FeatureVector(values=np.array([0.0, 0.0]), label="b")
    counts = vote_counts(forest, v.values)
    assert counts.tolist() == [1, 3, 1]
    assert match_score(forest, v, "b") == 0.6
    assert match_score(forest, v, "a") == 0.2
    p = predict(forest, v)
    assert p.label == "b"
    assert p.confidence == 0.6
    assert p.votes == {"a": 1, "b": 3, "c": 1}


def test_match_scores_sum_to_one_over_classes():
    forest = _manual_forest(["a", "b", "c"], ["a", "c", "b", "c"])
    v = FeatureVector(values=np.array([1.0, 1.0]), label="a")
    total = sum(match_score(forest, v, lab) for lab in forest.class_labels)
    assert total == 1.0


def test_vote_tie_resolves_to_earliest_label():
    forest = _manual_forest(["a", "b"], ["b", "a", "a", "b"])
    v = FeatureVector(values=np.array([0.0, 0.0]), label="a")
    assert predict(forest, v).label == "a"


def test_unknown_label_rejected():
    forest = _manual_forest(["a", "b"], ["a", "b"])
    v = FeatureVector(values=np.array([0.0, 0.0]), label="a")
    with pytest.raises(UnknownLabelError):
        match_score(forest, v, "nope")


def test_dimension_mismatch_rejected():
    forest = _manual_forest(["a", "b"], ["a", "b"])
    v = FeatureVector(values=np.array([0.0, 0.0, 0.0]), label="a")
    with pytest.raises(DimensionMismatchError):
        predict(forest, v)


def test_routing_equal_value_goes_right():
    left = TreeNode(count=1, label="low")
    right = TreeNode(count=1, label="high")
    root = TreeNode(count=2, feature=0, threshold=1.5, left=left, right=right)
    forest = Forest(
        params=ForestParams(n_trees=1, seed=0, features_per_split=1),
        class_labels=["high", "low"],
        dimension=1,
        trees=[root],
    )
    below = FeatureVector(values=np.array([1.0]), label="low")
    at = FeatureVector(values=np.array([1.5]), label="high")
    above = FeatureVector(values=np.array([2.0]), label="high")
    assert predict(forest, below).label == "low"
    assert predict(forest, at).label == "high"
    assert predict(forest, above).label == "high"


# ---------------------------------------------------------------------------
# serialization


def test_serialize_round_trip_preserves_predictions():
    vs = _blob_vectors(seed=13, per_class=10)
    forest = train_forest(vs, ForestParams(n_trees=8, seed=6))
    text = serialize_forest(forest)
    back = deserialize_forest(text)
    assert back.class_labels == forest.class_labels
    assert back.dimension == forest.dimension
    assert back.params == forest.params
    assert serialize_forest(back) == text
    for v in vs[:10]:
        assert predict(back, v) == predict(forest, v)


def test_serialized_params_store_resolved_features_per_split():
    vs = _blob_vectors(seed=13, per_class=6)
    forest = train_forest(vs, ForestParams(n_trees=3, seed=6))
    back = deserialize_forest(serialize_forest(forest))
    assert back.params.features_per_split == 2  # ceil(sqrt(2))


def test_deserialize_rejects_garbage():
    with pytest.raises(FormatError):
        deserialize_forest("not json at all {")
    with pytest.raises(FormatError):
        deserialize_forest('{"format":"something-else","version":1}')
    with pytest.raises(FormatError):
        deserialize_forest('{"format":"veinforge-forest","version":9}')


def test_deserialize_rejects_tree_count_mismatch():
    vs = _blob_vectors(seed=3, per_class=6)
    forest = train_forest(vs, ForestParams(n_trees=4, seed=1))
    import json as json_mod

    payload = json_mod.loads(serialize_forest(forest))
    payload["trees"] = payload["trees"][:2]
    with pytest.raises(FormatError):
        deserialize_forest(json_mod.dumps(payload))


def test_deserialize_rejects_malformed_node():
    bad = (
        '{"class_labels":["a","b"],"dimension":1,"format":"veinforge-forest",'
        '"params":{"features_per_split":1,"max_depth":0,"min_samples_leaf":1,'
        '"n_trees":1,"seed":0},"trees":[{"count":1}],"version":1}'
    )
    with pytest.raises(FormatError):
        deserialize_forest(bad)
