"""
Case-based answer validation.

Question/answer pairs are represented as labeled graphs; a new pair is
classified by majority vote of its k most similar cases.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

CORRECT = "correct"
INCORRECT = "incorrect"
LABELS = (CORRECT, INCORRECT)


@dataclass(frozen=True)
class SemanticGraph:
    nodes: tuple[str, ...] = ()
    edges: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes)))
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))
        labels = set(self.nodes)
        for src, _, dst in self.edges:
            if src not in labels or dst not in labels:
                raise ValueError(f"edge ({src}, {dst}) has an endpoint outside the node set")

    @cached_property
    def node_counts(self) -> Counter:
        return Counter(self.nodes)

    @cached_property
    def edge_counts(self) -> Counter:
        return Counter(self.edges)

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticGraph":
        return cls(tuple(d.get("nodes", ())), tuple(tuple(e) for e in d.get("edges", ())))


def graph_similarity(g1: SemanticGraph, g2: SemanticGraph) -> float:
    """Multiset overlap of nodes and edges, normalized by the larger graph."""
    denom = max(len(g1.nodes), len(g2.nodes)) + max(len(g1.edges), len(g2.edges))
    if denom == 0:
        return 1.0
    shared = sum((g1.node_counts & g2.node_counts).values()) + sum((g1.edge_counts & g2.edge_counts).values())
    return shared / denom


@dataclass(frozen=True)
class Case:
    question: SemanticGraph
    candidate: SemanticGraph
    label: Optional[str] = None  # None only for queries

    def __post_init__(self):
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def to_dict(self) -> dict:
        d = {"question": self.question.to_dict(), "candidate": self.candidate.to_dict()}
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Case":
        return cls(
            SemanticGraph.from_dict(d["question"]),
            SemanticGraph.from_dict(d["candidate"]),
            d.get("label"),
        )


@dataclass
class CaseBase:
    """Append-only store of labeled cases; indices never change."""

    _cases: list[Case] = field(default_factory=list)

    def __post_init__(self):
        cases, self._cases = self._cases, []
        for c in cases:
            self.append(c)

    def append(self, case: Case) -> int:
        if case.label is None:
            raise ValueError("case base only stores labeled cases")
        self._cases.append(case)
        return len(self._cases) - 1

    def __len__(self):
        return len(self._cases)

    def __getitem__(self, i) -> Case:
        return self._cases[i]

    def __iter__(self):
        return iter(self._cases)


def case_distance(a: Case, b: Case) -> float:
    sim = 0.5 * (graph_similarity(a.question, b.question) + graph_similarity(a.candidate, b.candidate))
    return 1.0 - sim


def classify(base: CaseBase, query: Case, k: int = 3) -> tuple[str, float]:
    """k-NN vote; distance ties go to the older case, vote ties to 'incorrect'."""
    if len(base) == 0:
        raise ValueError("cannot classify against an empty case base")
    if k < 1:
        raise ValueError("k must be positive")
    ranked = sorted(range(len(base)), key=lambda i: (case_distance(query, base[i]), i))
    votes = Counter(base[i].label for i in ranked[:k])
    n = sum(votes.values())
    if votes[CORRECT] > votes[INCORRECT]:
        return CORRECT, votes[CORRECT] / n
    return INCORRECT, votes[INCORRECT] / n


def load_cases(path) -> list[Case]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [Case.from_dict(d) for d in data]


# --------------------------------------------------------------------------
# user-feedback simulation


@dataclass
class LearningCurve:
    checkpoints: list[int]
    overall: list[float]
    correct: list[Optional[float]]
    incorrect: list[Optional[float]]

    def to_dict(self) -> dict:
        return {
            "checkpoints": self.checkpoints,
            "overall": self.overall,
            "correct": self.correct,
            "incorrect": self.incorrect,
        }

    def rows(self):
        for row in zip(self.checkpoints, self.overall, self.correct, self.incorrect):
            yield row


def interaction_curve(stream: Sequence[Case], checkpoints: Iterable[int], k: int = 3) -> LearningCurve:
    """Simulate reliable feedback on a stream of new cases.

    Each case is classified against the cases seen so far, then added with
    its true label.  The value at checkpoint n is the accuracy over the first
    n classifications, overall and split by true label.  With an empty base
    the prediction is 'incorrect'.
    """
    checkpoints = list(checkpoints)
    if checkpoints != sorted(checkpoints):
        raise ValueError("checkpoints must be ascending")
    if checkpoints and checkpoints[-1] > len(stream):
        raise ValueError("checkpoint beyond end of stream")
    base = CaseBase()
    hits = {CORRECT: 0, INCORRECT: 0}
    seen = {CORRECT: 0, INCORRECT: 0}
    curve = LearningCurve([], [], [], [])
    todo = iter(checkpoints)
    nxt = next(todo, None)
    for step, case in enumerate(stream, 1):
        if nxt is None:
            break
        predicted = classify(base, case, k)[0] if len(base) else INCORRECT
        seen[case.label] += 1
        hits[case.label] += predicted == case.label
        base.append(case)
        while nxt == step:
            curve.checkpoints.append(step)
            curve.overall.append((hits[CORRECT] + hits[INCORRECT]) / step)
            curve.correct.append(hits[CORRECT] / seen[CORRECT] if seen[CORRECT] else None)
            curve.incorrect.append(hits[INCORRECT] / seen[INCORRECT] if seen[INCORRECT] else None)
            nxt = next(todo, None)
    return curve


def _random_graph(rng: random.Random, vocab: list[str], shared: list[str], size: int) -> SemanticGraph:
    nodes = rng.sample(vocab, size) + rng.sample(shared, 1)
    edges = []
    for _ in range(size):
        src, dst = rng.sample(nodes, 2)
        edges.append((src, rng.choice(("agt", "obj", "attr")), dst))
    return SemanticGraph(tuple(nodes), tuple(edges))


def synthetic_stream(n: int, seed: int = 0, p_correct: float = 0.5) -> list[Case]:
    """Labeled cases from two well-separated graph clusters, i.i.d. labels."""
    rng = random.Random(seed)
    shared = [f"s{i}" for i in range(4)]
    vocab = {
        CORRECT: [f"c{i}" for i in range(12)],
        INCORRECT: [f"x{i}" for i in range(12)],
    }
    questions = [f"q{i}" for i in range(12)]
    out = []
    for _ in range(n):
        label = CORRECT if rng.random() < p_correct else INCORRECT
        q = _random_graph(rng, questions, shared, 4)
        a = _random_graph(rng, vocab[label], shared, 5)
        out.append(Case(q, a, label))
    return out


def median_curve(curves: Sequence[LearningCurve]) -> list[float]:
    """Pointwise median of the overall series."""
    out = []
    for vals in zip(*(c.overall for c in curves)):
        s = sorted(vals)
        m = len(s) // 2
        out.append(s[m] if len(s) % 2 else 0.5 * (s[m - 1] + s[m]))
    return out


def is_nondecreasing(series: Sequence[float], tol: float = 0.0) -> bool:
    return all(b >= a - tol for a, b in zip(series, series[1:]) if not (math.isnan(a) or math.isnan(b)))
