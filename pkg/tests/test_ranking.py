import random

import numpy as np
import pytest

from ratval.ranking import (
    N_TREES,
    Ranker,
    cbr_split_share,
    feature_usage,
    mrr,
    rank,
    stratified_bootstrap,
    train_bagged_trees,
    tree_predict,
)


def cbr_only_samples(n=300, seed=0):
    """Only the two CBR features carry signal."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        y = rng.random() < 0.4
        out.append(
            (
                {
                    "cbr_score": (0.7 if y else 0.3) + rng.gauss(0, 0.1),
                    "cbr_confidence": (0.8 if y else 0.5) + rng.gauss(0, 0.1),
                    "lexeme_overlap": rng.random(),
                    "proof_found": float(rng.random() < 0.5),
                    "proof_depth": float(rng.randint(0, 4)),
                },
                int(y),
            )
        )
    return out


def test_default_ten_trees():
    r = train_bagged_trees(cbr_only_samples())
    assert N_TREES == 10 and len(r.trees) == 10


def test_separable_training_accuracy():
    samples = [({"x": float(i), "noise": float(i % 3)}, int(i >= 5)) for i in range(10)]
    r = train_bagged_trees(samples, seed=1)
    preds = [int(r.score(fv) > 0.5) for fv, _ in samples]
    assert preds == [y for _, y in samples]
    for t in r.trees:
        assert t["feature"] == "x"


def test_single_class_constant():
    samples = [({"x": float(i)}, 1) for i in range(5)]
    with pytest.warns(UserWarning):
        r = train_bagged_trees(samples)
    assert {r.score({"x": v}) for v in (-3.0, 0.0, 100.0)} == {1.0}
    assert feature_usage(r) == {}


def test_probabilities_bounded_and_rank_is_permutation():
    r = train_bagged_trees(cbr_only_samples(), seed=4)
    cands = [fv for fv, _ in cbr_only_samples(40, seed=9)]
    out = rank(r, cands)
    assert sorted(x.index for x in out) == list(range(40))
    assert all(0.0 <= x.score <= 1.0 for x in out)
    assert all(a.score >= b.score for a, b in zip(out, out[1:]))


def _fixed(scores):
    tree = {"feature": "i", "threshold": 0.5, "left": {"leaf": scores[0]},
            "right": {"feature": "i", "threshold": 1.5, "left": {"leaf": scores[1]}, "right": {"leaf": scores[2]}}}
    return Ranker(["i"], [tree])


def test_rank_order_and_ties():
    r = _fixed([0.9, 0.2, 0.5])
    assert [x.index for x in rank(r, [{"i": 0.0}, {"i": 1.0}, {"i": 2.0}])] == [0, 2, 1]
    tie = _fixed([0.5, 0.5, 0.1])
    assert [x.index for x in rank(tie, [{"i": 1.0}, {"i": 0.0}, {"i": 2.0}])] == [0, 1, 2]
    assert [x.index for x in rank(r, [{"i": 1.0}])] == [0]


def test_rank_unknown_feature():
    r = _fixed([0.9, 0.2, 0.5])
    with pytest.raises(KeyError):
        rank(r, [{"i": 0.0, "bogus": 1.0}])
    with pytest.raises(KeyError):
        rank(r, [{}])


def test_feature_usage():
    one = Ranker(["cbr_score"], [{"feature": "cbr_score", "threshold": 0.5, "left": {"leaf": 0.0}, "right": {"leaf": 1.0}}])
    assert feature_usage(one) == {"cbr_score": 1.0}
    r = train_bagged_trees(cbr_only_samples(), seed=2)
    assert sum(feature_usage(r).values()) == pytest.approx(1.0, abs=1e-9)
    assert all(v >= 0 for v in feature_usage(r).values())


def test_cbr_features_dominate_when_only_informative():
    for seed in range(3):
        r = train_bagged_trees(cbr_only_samples(seed=seed), seed=seed)
        assert cbr_split_share(r) > 0.5


def test_stratified_bootstrap_preserves_counts():
    rng = np.random.default_rng(0)
    y = np.array([0] * 7 + [1] * 3)
    for _ in range(20):
        idx = stratified_bootstrap(y, rng)
        assert (y[idx] == 1).sum() == 3 and len(idx) == 10


def test_seeded_and_serializable():
    a = train_bagged_trees(cbr_only_samples(), seed=5)
    b = train_bagged_trees(cbr_only_samples(), seed=5)
    assert a.to_json() == b.to_json()
    c = Ranker.from_json(a.to_json())
    fv = cbr_only_samples(1, seed=3)[0][0]
    assert c.score(fv) == a.score(fv)
    assert tree_predict(c.trees[0], fv) == tree_predict(a.trees[0], fv)


def test_mrr_examples():
    assert mrr([1]) == 1.0
    assert mrr([2, 4]) == 0.375
    assert mrr([None, None]) == 0.0
    with pytest.raises(ValueError):
        mrr([0])


def test_mrr_monotone():
    rng = random.Random(0)
    for _ in range(200):
        ranks = [rng.choice([None, 1, 2, 3, 5, 8]) for _ in range(6)]
        i = rng.randrange(6)
        better = list(ranks)
        better[i] = 1 if ranks[i] is None else max(1, ranks[i] - 1)
        assert mrr(better) >= mrr(ranks)
