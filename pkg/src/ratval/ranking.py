"""
Bagged decision-tree ranker for answer candidates.

Each tree is grown on a stratified bootstrap sample with Gini splits and
stores the fraction of correct samples at its leaves; a candidate's score is
the mean leaf probability over the ensemble.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

N_TREES = 10
MAX_DEPTH = 4
CBR_FEATURES = ("cbr_score", "cbr_confidence")


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = np.divide(pos, n, out=np.zeros_like(pos, dtype=float), where=n > 0)
    return 2.0 * p * (1.0 - p)


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    n = len(y)
    parent = _gini(np.array([y.sum()], float), np.array([n], float))[0]
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        left_pos = np.cumsum(ys)[:-1].astype(float)
        left_n = np.arange(1, n, dtype=float)
        right_pos = ys.sum() - left_pos
        right_n = n - left_n
        impurity = (left_n * _gini(left_pos, left_n) + right_n * _gini(right_pos, right_n)) / n
        valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (right_n >= min_leaf)
        if not valid.any():
            continue
        impurity = np.where(valid, impurity, np.inf)
        i = int(np.argmin(impurity))
        gain = parent - impurity[i]
        if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
            best = (gain, f, 0.5 * (xs[i] + xs[i + 1]))
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, names: Sequence[str], max_depth: int = MAX_DEPTH, min_leaf: int = 1) -> dict:
    """Grow a classification tree as nested split/leaf records."""
    if max_depth == 0 or y.min() == y.max():
        return {"leaf": float(y.mean()), "n": int(len(y))}
    split = _best_split(X, y, min_leaf)
    if split is None:
        return {"leaf": float(y.mean()), "n": int(len(y))}
    _, f, threshold = split
    mask = X[:, f] <= threshold
    return {
        "feature": names[f],
        "threshold": float(threshold),
        "left": grow_tree(X[mask], y[mask], names, max_depth - 1, min_leaf),
        "right": grow_tree(X[~mask], y[~mask], names, max_depth - 1, min_leaf),
    }


def tree_predict(tree: dict, features: Mapping[str, float]) -> float:
    while "leaf" not in tree:
        tree = tree["left"] if features[tree["feature"]] <= tree["threshold"] else tree["right"]
    return tree["leaf"]


def _splits(tree: dict):
    if "leaf" in tree:
        return
    yield tree["feature"]
    yield from _splits(tree["left"])
    yield from _splits(tree["right"])


@dataclass
class Ranker:
    feature_names: list[str]
    trees: list[dict]

    def score(self, features: Mapping[str, float]) -> float:
        check_features(features, self.feature_names)
        return float(np.mean([tree_predict(t, features) for t in self.trees]))

    def to_json(self) -> str:
        return json.dumps({"feature_names": self.feature_names, "trees": self.trees}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Ranker":
        d = json.loads(text)
        return cls(list(d["feature_names"]), list(d["trees"]))


def check_features(features: Mapping[str, float], names: Sequence[str]):
    unknown = set(features) - set(names)
    if unknown:
        raise KeyError(f"unknown feature(s): {', '.join(sorted(unknown))}")
    missing = set(names) - set(features)
    if missing:
        raise KeyError(f"missing feature(s): {', '.join(sorted(missing))}")
    for k, v in features.items():
        if not math.isfinite(v):
            raise ValueError(f"feature {k} is not finite: {v}")


def stratified_bootstrap(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-class resampling with replacement; class counts are preserved exactly."""
    idx = [rng.choice(np.flatnonzero(y == c), size=int((y == c).sum()), replace=True) for c in np.unique(y)]
    return np.sort(np.concatenate(idx))


def train_bagged_trees(
    samples: Sequence[tuple[Mapping[str, float], int]],
    n_trees: int = N_TREES,
    seed: int = 0,
    max_depth: int = MAX_DEPTH,
    min_leaf: int = 1,
    feature_names: Optional[Sequence[str]] = None,
) -> Ranker:
    """Train the ensemble on (features, label) pairs with label 1 = correct."""
    if not samples:
        raise ValueError("no training samples")
    names = list(feature_names or sorted(samples[0][0]))
    for fv, _ in samples:
        check_features(fv, names)
    X = np.array([[fv[n] for n in names] for fv, _ in samples], dtype=float)
    y = np.array([int(lbl) for _, lbl in samples], dtype=int)
    if y.min() == y.max():
        warnings.warn("training data has a single class; ranker is constant", stacklevel=2)
        return Ranker(names, [{"leaf": float(y[0]), "n": len(y)} for _ in range(n_trees)])
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        idx = stratified_bootstrap(y, np.random.default_rng(child))
        trees.append(grow_tree(X[idx], y[idx], names, max_depth, min_leaf))
    return Ranker(names, trees)


@dataclass
class Ranked:
    index: int
    score: float


def rank(ranker: Ranker, candidates: Sequence[Mapping[str, float]]) -> list[Ranked]:
    """Descending by score; exact ties keep input order."""
    scored = [Ranked(i, ranker.score(fv)) for i, fv in enumerate(candidates)]
    return sorted(scored, key=lambda r: -r.score)


def feature_usage(ranker: Ranker) -> dict[str, float]:
    counts = Counter(f for t in ranker.trees for f in _splits(t))
    total = sum(counts.values())
    if not total:
        return {}
    return {f: counts[f] / total for f in sorted(counts)}


def cbr_split_share(ranker: Ranker) -> float:
    usage = feature_usage(ranker)
    return sum(v for f, v in usage.items() if f in CBR_FEATURES)


def mrr(first_correct_ranks: Sequence[Optional[int]]) -> float:
    """Mean reciprocal rank; a query without a ranked correct answer adds 0."""
    if not first_correct_ranks:
        return 0.0
    total = 0.0
    for r in first_correct_ranks:
        if r is None:
            continue
        if r < 1:
            raise ValueError(f"rank must be >= 1, got {r}")
        total += 1.0 / r
    return total / len(first_correct_ranks)
