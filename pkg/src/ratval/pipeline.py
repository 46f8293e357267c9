"""
Toy question-answering pipeline: retrieval, heuristic pre-ranking,
defeasible reasoning per candidate, and learned answer validation.
"""

from __future__ import annotations

import json
import logging
import random
import re
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import cbr
from .derivation import Argument
from .kb import KnowledgeBase, Literal, parse_kb, parse_literal
from .ranking import Ranker, feature_usage, mrr, train_bagged_trees
from .specificity import NO, UNDECIDED, YES, warranted

logger = logging.getLogger(__name__)

STAGES = ("retrieval", "ranking", "reasoning", "validation")
FEATURES = ("lexeme_overlap", "retrieval_rank", "proof_found", "proof_depth", "decided", "cbr_score", "cbr_confidence")

_WORD = re.compile(r"[a-z0-9]+")


class DatasetError(ValueError):
    pass


def tokenize(text: str) -> set[str]:
    return set(_WORD.findall(text.lower()))


@dataclass
class Passage:
    id: str
    text: str
    facts: list[str] = field(default_factory=list)
    extra_lexemes: list[str] = field(default_factory=list)
    lexemes: frozenset = frozenset()

    def __post_init__(self):
        if not self.lexemes:
            self.lexemes = frozenset(tokenize(self.text) | {x.lower() for x in self.extra_lexemes})

    def fact_literals(self) -> list[Literal]:
        lits = [parse_literal(f) for f in self.facts]
        for lit in lits:
            if not lit.is_ground:
                raise ValueError(f"passage {self.id}: fact '{lit}' is not ground")
        return lits

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "facts": self.facts, "extra_lexemes": self.extra_lexemes}


def load_corpus(path) -> list[Passage]:
    corpus, ids = [], set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                p = Passage(str(d["id"]), d["text"], list(d.get("facts", [])), list(d.get("extra_lexemes", [])))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise DatasetError(f"{path}:{n}: bad corpus record ({exc})") from None
            if p.id in ids:
                raise DatasetError(f"{path}:{n}: duplicate passage id {p.id!r}")
            ids.add(p.id)
            corpus.append(p)
    return corpus


def write_corpus(corpus: Iterable[Passage], path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            fh.write(json.dumps(p.to_dict(), sort_keys=True) + "\n")


@dataclass
class PipelineConfig:
    candidate_limit: int = 200
    top_k: int = 5
    seed: int = 0
    k_neighbors: int = 3
    folds: int = 2
    max_universe: int = 20
    max_depth: int = 64
    max_trees: int = 256

    def __post_init__(self):
        if not 1 <= self.top_k <= self.candidate_limit:
            raise ValueError("need 1 <= top_k <= candidate_limit")

    def bounds(self) -> dict:
        return {"max_universe": self.max_universe, "max_depth": self.max_depth, "max_trees": self.max_trees}


def select_candidates(question: str, corpus: Sequence[Passage], limit: int = 200) -> list[tuple[Passage, float]]:
    """Passages by share of question lexemes they contain; ties by id."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    q = tokenize(question)
    if not q:
        raise ValueError("question has no lexemes")
    scored = [(p, len(q & p.lexemes) / len(q)) for p in corpus]
    scored = [s for s in scored if s[1] > 0]
    scored.sort(key=lambda s: (-s[1], s[0].id))
    return scored[:limit]


def literal_graph(lexemes: Iterable[str], literals: Iterable[Literal]) -> cbr.SemanticGraph:
    nodes = set(lexemes)
    edges = []
    for lit in literals:
        pred = ("not_" if lit.negated else "") + lit.predicate
        names = [t.name for t in lit.args]
        if len(names) == 1:
            nodes |= {names[0], pred}
            edges.append((names[0], "is", pred))
        elif len(names) >= 2:
            nodes |= set(names)
            edges += [(a, pred, b) for a, b in zip(names, names[1:])]
        else:
            nodes.add(pred)
    return cbr.SemanticGraph(tuple(nodes), tuple(edges))


@dataclass
class AnswerCandidate:
    passage_id: str
    query: Literal
    verdict: str
    features: dict
    score: float = 0.0
    pro: list[Argument] = field(default_factory=list)
    con: list[Argument] = field(default_factory=list)

    @property
    def winners(self) -> list[Argument]:
        return self.pro if self.verdict == YES else self.con if self.verdict == NO else []

    def text(self) -> str:
        if self.verdict == UNDECIDED:
            return f"undecided: {self.query}, no argument prevails"
        best = min(self.winners, key=lambda a: a.tree.depth)
        return f"{self.verdict}: {self.query}, because {_chain(best)}"

    def to_dict(self, explain: bool = False) -> dict:
        d = {
            "passage_id": self.passage_id,
            "verdict": self.verdict,
            "answer": self.text(),
            "score": round(self.score, 12),
            "features": {k: self.features[k] for k in FEATURES},
        }
        if explain:
            d["pro"] = [a.tree.to_dict() for a in self.pro]
            d["con"] = [a.tree.to_dict() for a in self.con]
        return d


def _chain(arg: Argument) -> str:
    parts = []
    node = arg.tree
    while True:
        if node.is_leaf:
            parts.append(f"{node.root} [fact]")
            break
        arrow = "-<" if node.rule.is_defeasible else "<-"
        parts.append(f"{node.root} {arrow}")
        node = node.children[0]
    return " ".join(parts)


def default_score(features: dict) -> float:
    """Fallback validation score when no trained ranker is supplied."""
    return 0.5 * features["decided"] + 0.3 * features["lexeme_overlap"] + 0.2 * features["cbr_score"]


def _reason(
    question: str,
    query: Literal,
    retrieved: list[tuple[Passage, float]],
    kb: KnowledgeBase,
    config: PipelineConfig,
    case_base: Optional[cbr.CaseBase],
    timings: dict,
) -> list[AnswerCandidate]:
    t0 = time.perf_counter()
    q_graph = literal_graph(tokenize(question), [query])
    out = []
    for pos, (passage, overlap) in enumerate(retrieved, 1):
        try:
            facts = passage.fact_literals()
            w = warranted(kb.with_facts(facts), query, **config.bounds())
        except (ValueError, RuntimeError) as exc:
            logger.warning("dropping candidate %s: %s", passage.id, exc)
            continue
        winners = w.pro if w.verdict == YES else w.con if w.verdict == NO else []
        p_graph = literal_graph(passage.lexemes, facts)
        if case_base is not None and len(case_base):
            label, conf = cbr.classify(case_base, cbr.Case(q_graph, p_graph), config.k_neighbors)
            cbr_score = conf if label == cbr.CORRECT else 1.0 - conf
        else:
            cbr_score, conf = cbr.graph_similarity(q_graph, p_graph), 0.0
        features = {
            "lexeme_overlap": overlap,
            "retrieval_rank": float(pos),
            "proof_found": float(bool(w.pro or w.con)),
            "proof_depth": float(min((a.tree.depth for a in winners), default=0)),
            "decided": float(w.verdict != UNDECIDED),
            "cbr_score": cbr_score,
            "cbr_confidence": conf,
        }
        out.append(AnswerCandidate(passage.id, query, w.verdict, features, pro=w.pro, con=w.con))
    timings["reasoning"] = timings.get("reasoning", 0.0) + time.perf_counter() - t0
    return out


def _retrieve(question, corpus, config, timings):
    t0 = time.perf_counter()
    retrieved = select_candidates(question, corpus, config.candidate_limit)
    t1 = time.perf_counter()
    # pre-reasoning ranking is the lexical order; only the cap applies here
    retrieved = retrieved[: config.candidate_limit]
    t2 = time.perf_counter()
    timings["retrieval"] = timings.get("retrieval", 0.0) + t1 - t0
    timings["ranking"] = timings.get("ranking", 0.0) + t2 - t1
    return retrieved


def _validate(cands: list[AnswerCandidate], ranker: Optional[Ranker], timings: dict) -> list[AnswerCandidate]:
    t0 = time.perf_counter()
    for c in cands:
        c.score = ranker.score(c.features) if ranker is not None else default_score(c.features)
    ordered = sorted(cands, key=lambda c: -c.score)
    timings["validation"] = timings.get("validation", 0.0) + time.perf_counter() - t0
    return ordered


def answer(
    question: str,
    query: Literal | str,
    corpus: Sequence[Passage],
    kb: KnowledgeBase,
    config: PipelineConfig | None = None,
    ranker: Optional[Ranker] = None,
    case_base: Optional[cbr.CaseBase] = None,
) -> list[AnswerCandidate]:
    """Top-k validated answer candidates for one question."""
    config = config or PipelineConfig()
    query = parse_literal(query) if isinstance(query, str) else query
    timings: dict = {}
    retrieved = _retrieve(question, corpus, config, timings)
    cands = _reason(question, query, retrieved, kb, config, case_base, timings)
    return _validate(cands, ranker, timings)[: config.top_k]


# --------------------------------------------------------------------------
# batch evaluation


@dataclass
class Question:
    question_text: str
    query: Literal
    corpus: list[Passage]
    gold: dict[str, str]
    kb: KnowledgeBase


@dataclass
class EvaluationReport:
    data: dict
    timings: dict

    def to_json(self, include_timings: bool = False) -> str:
        d = dict(self.data)
        if include_timings:
            d["timings"] = {s: round(self.timings.get(s, 0.0), 6) for s in STAGES}
        return json.dumps(d, indent=2, sort_keys=True)

    def format(self) -> str:
        d = self.data
        lines = [
            "metric\tvalue",
            f"questions\t{d['n_questions']}",
            f"mrr\t{d['mrr']:.4f}",
            f"top1_accuracy\t{d['top1_accuracy']:.4f}",
            "",
            "stage\tseconds",
        ]
        lines += [f"{s}\t{self.timings.get(s, 0.0):.4f}" for s in STAGES]
        return "\n".join(lines)


def load_dataset(path, kb: Optional[KnowledgeBase] = None) -> list[Question]:
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    if not isinstance(records, list):
        raise DatasetError(f"{path}: expected a list of question records")
    corpora: dict[Path, list[Passage]] = {}
    kbs: dict[Path, KnowledgeBase] = {}
    out = []
    for i, rec in enumerate(records):
        try:
            cref = path.parent / rec["corpus_ref"]
            if cref not in corpora:
                corpora[cref] = load_corpus(cref)
            if "kb_ref" in rec:
                kref = path.parent / rec["kb_ref"]
                if kref not in kbs:
                    kbs[kref] = parse_kb(kref.read_text(encoding="utf-8"))
                rec_kb = kbs[kref]
            elif kb is not None:
                rec_kb = kb
            else:
                raise DatasetError(f"record {i}: no kb_ref and no knowledge base given")
            out.append(_question(rec, corpora[cref], rec_kb))
        except DatasetError:
            raise
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise DatasetError(f"record {i}: {exc}") from None
    return out


def _question(rec: dict, corpus: list[Passage], kb: KnowledgeBase) -> Question:
    gold = dict(rec["gold"])
    bad = {v for v in gold.values() if v not in cbr.LABELS}
    if bad:
        raise ValueError(f"gold labels must be correct/incorrect, got {sorted(bad)}")
    return Question(rec["question_text"], parse_literal(rec["query"]), corpus, gold, kb)


def evaluate(questions: Sequence[Question], config: PipelineConfig | None = None) -> EvaluationReport:
    """Cross-validated evaluation of the learned validation ranker."""
    config = config or PipelineConfig()
    if not questions:
        raise DatasetError("empty dataset")
    timings: dict = {}
    per_q = []
    for q in questions:
        retrieved = _retrieve(q.question_text, q.corpus, config, timings)
        per_q.append(_reason(q.question_text, q.query, retrieved, q.kb, config, None, timings))

    order = list(range(len(questions)))
    random.Random(config.seed).shuffle(order)
    n_folds = max(1, min(config.folds, len(questions)))
    fold_of = {qi: n % n_folds for n, qi in enumerate(order)}
    rankers: dict[int, Optional[Ranker]] = {}
    usage = defaultdict(float)
    for f in range(n_folds):
        samples = [
            ({k: c.features[k] for k in FEATURES}, int(questions[qi].gold.get(c.passage_id) == cbr.CORRECT))
            for qi in range(len(questions))
            if n_folds == 1 or fold_of[qi] != f
            for c in per_q[qi]
        ]
        labels = {y for _, y in samples}
        if len(labels) < 2:
            rankers[f] = None
            continue
        rankers[f] = train_bagged_trees(samples, seed=config.seed + f, feature_names=FEATURES)
        for feat, share in feature_usage(rankers[f]).items():
            usage[feat] += share / n_folds

    rows = []
    ranks = []
    for qi, q in enumerate(questions):
        ordered = _validate(per_q[qi], rankers[fold_of[qi]], timings)
        ids = [c.passage_id for c in ordered]
        first = next((n for n, pid in enumerate(ids, 1) if q.gold.get(pid) == cbr.CORRECT), None)
        ranks.append(first)
        rows.append(
            {
                "index": qi,
                "query": str(q.query),
                "ranking": ids[: config.top_k],
                "verdicts": [c.verdict for c in ordered[: config.top_k]],
                "first_correct_rank": first,
            }
        )
    data = {
        "config": {"candidate_limit": config.candidate_limit, "top_k": config.top_k, "seed": config.seed, "folds": n_folds},
        "stages": list(STAGES),
        "n_questions": len(questions),
        "mrr": mrr(ranks),
        "top1_accuracy": sum(r == 1 for r in ranks) / len(ranks),
        "feature_usage": {k: round(v, 12) for k, v in sorted(usage.items())},
        "per_query": rows,
    }
    return EvaluationReport(data, timings)


# --------------------------------------------------------------------------
# synthetic fixtures

SYNTH_KB = """\
bird(X) <- emu(X).
~flies(X) <- emu(X).
bird(X) <- penguin(X).
~flies(X) -< penguin(X).
bird(X) <- sparrow(X).
flies(X) -< bird(X).
"""

_NAMES = ["tom", "tina", "otto", "ida", "karl", "lena", "max", "nora", "paul", "rita"]
_PLACES = ["berlin", "hagen", "koblenz", "wernigerode", "vienna", "perth", "oslo"]


def synthetic_dataset(n_questions: int = 50, seed: int = 0, n_distractors: int = 3):
    """Return (kb_text, corpus, records) for a toy flying-animals benchmark."""
    rng = random.Random(seed)
    corpus: list[Passage] = []
    records = []
    for i in range(n_questions):
        name = f"{rng.choice(_NAMES)}{i}"
        kind = rng.choice(["emu", "penguin", "sparrow"])
        place = rng.choice(_PLACES)
        facts = [f"{kind}({name})"] if rng.random() > 0.1 else []
        gold_id = f"p{i:03d}_{rng.randrange(100):02d}"
        passages = [Passage(gold_id, f"{name.capitalize()} is a {kind} living in {place}.", facts)]
        for j in range(n_distractors):
            other = f"{rng.choice(_NAMES)}{rng.randrange(1000, 2000)}"
            style = rng.randrange(3)
            if style == 0:
                p = Passage(f"p{i:03d}_{rng.randrange(100):02d}d{j}", f"{name.capitalize()} visited {place} last year.")
            elif style == 1:
                p = Passage(
                    f"p{i:03d}_{rng.randrange(100):02d}d{j}",
                    f"Another {kind} named {other} can fly over {place}.",
                    [f"{kind}({other})"],
                )
            else:
                p = Passage(f"p{i:03d}_{rng.randrange(100):02d}d{j}", f"In {place}, {name} met {other}.")
            if p.id != gold_id and all(p.id != x.id for x in passages):
                passages.append(p)
        corpus += passages
        records.append(
            {
                "question_text": f"Can {name} fly?",
                "query": f"flies({name})",
                "corpus_ref": "corpus.jsonl",
                "kb_ref": "kb.dkb",
                "gold": {p.id: cbr.CORRECT if p.id == gold_id else cbr.INCORRECT for p in passages},
            }
        )
    return SYNTH_KB, corpus, records


def write_synthetic_dataset(out_dir, n_questions: int = 50, seed: int = 0) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kb_text, corpus, records = synthetic_dataset(n_questions, seed)
    (out / "kb.dkb").write_text(kb_text, encoding="utf-8")
    write_corpus(corpus, out / "corpus.jsonl")
    (out / "dataset.json").write_text(json.dumps(records, indent=1, sort_keys=True), encoding="utf-8")
    return out / "dataset.json"
