"""
Specificity comparison of conflicting arguments.

An activation set of an argument is a consistent set of literals from which,
without any contingent facts, the premises of every defeasible rule
application in the argument's derivation can be derived.  Argument ``a`` is
more specific than ``b`` when every activation set of ``a`` also activates
``b``.  Raw pairwise specificity is not transitive, so arguments are ordered
by the reflexive-transitive closure of (strict-over-defeasible preference
plus pairwise specificity).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .derivation import MAX_DEPTH, MAX_TREES, Argument, arguments_for, defeasible_premises
from .kb import KnowledgeBase, Literal, forward_closure, ground_instances, is_consistent, strict_closure

logger = logging.getLogger(__name__)

MAX_UNIVERSE = 20

MORE = "more_specific"
LESS = "less_specific"
EQUIVALENT = "equivalent"
INCOMPARABLE = "incomparable"

YES, NO, UNDECIDED = "yes", "no", "undecided"


class IntractableComparison(RuntimeError):
    pass


class InconsistentActivation(ValueError):
    pass


class StrictInconsistency(ValueError):
    """Facts plus strict rules derive a complementary pair."""


def relevant_universe(kb: KnowledgeBase, args: Iterable[Argument]) -> frozenset[Literal]:
    return frozenset(n.root for a in args for n in a.tree.nodes())


class _Activation:
    """Activation test with closures memoized per candidate set."""

    def __init__(self, kb: KnowledgeBase):
        self.rules = sorted(kb.rules)
        self._memo: dict[frozenset, frozenset] = {}

    def closure(self, s: frozenset) -> frozenset:
        c = self._memo.get(s)
        if c is None:
            c = self._memo[s] = forward_closure(s, self.rules)
        return c

    def __call__(self, s: frozenset, arg: Argument) -> bool:
        return defeasible_premises(arg.tree) <= self.closure(s)


def activates(kb: KnowledgeBase, s: Iterable[Literal], arg: Argument) -> bool:
    s = frozenset(s)
    if not is_consistent(s):
        raise InconsistentActivation("inconsistent activation candidate")
    return _Activation(kb)(s, arg)


def consistent_subsets(universe: Iterable[Literal]):
    """Consistent subsets of ``universe`` in order of increasing size."""
    items = sorted(universe)
    for size in range(len(items) + 1):
        for combo in itertools.combinations(items, size):
            if is_consistent(combo):
                yield frozenset(combo)


def more_specific_poole(
    kb: KnowledgeBase,
    a: Argument,
    b: Argument,
    universe: Iterable[Literal] | None = None,
    max_universe: int = MAX_UNIVERSE,
    _act: _Activation | None = None,
) -> bool:
    """True iff every consistent activation set of ``a`` within the universe activates ``b``.

    Activation is monotone in the candidate set, so only the minimal
    activation sets of ``a`` need to be tested against ``b``.
    """
    universe = relevant_universe(kb, (a, b)) if universe is None else frozenset(universe)
    if len(universe) > max_universe:
        raise IntractableComparison(
            f"literal universe of {len(universe)} exceeds bound {max_universe}"
        )
    act = _act or _Activation(kb)
    minimal: list[frozenset] = []
    for s in consistent_subsets(universe):
        if any(m <= s for m in minimal):
            continue
        if act(s, a):
            if not act(s, b):
                return False
            minimal.append(s)
    return True


@dataclass
class SpecificityVerdict:
    args: list[Argument]
    geq: list[list[bool]]  # geq[i][j]: args[i] at least as preferred as args[j]
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {a: i for i, a in enumerate(self.args)}

    def relation(self, i: int, j: int) -> str:
        fwd, back = self.geq[i][j], self.geq[j][i]
        if fwd and back:
            return EQUIVALENT
        if fwd:
            return MORE
        if back:
            return LESS
        return INCOMPARABLE

    def compare(self, a: Argument, b: Argument) -> str:
        return self.relation(self._index[a], self._index[b])

    def strictly_above(self, a: Argument, b: Argument) -> bool:
        return self.compare(a, b) == MORE

    def matrix(self) -> list[list[str]]:
        n = len(self.args)
        return [[self.relation(i, j) for j in range(n)] for i in range(n)]

    def format(self) -> str:
        short = {MORE: ">", LESS: "<", EQUIVALENT: "=", INCOMPARABLE: "?"}
        labels = [f"A{i}" for i in range(len(self.args))]
        lines = ["\t" + "\t".join(labels)]
        for i, row in enumerate(self.matrix()):
            lines.append(labels[i] + "\t" + "\t".join(short[r] for r in row))
        for i, a in enumerate(self.args):
            lines.append(f"A{i}: {a}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "arguments": [
                {"id": f"A{i}", "conclusion": str(a.conclusion), "uses_defeasible": a.uses_defeasible}
                for i, a in enumerate(self.args)
            ],
            "matrix": self.matrix(),
        }


def specificity_preorder(
    kb: KnowledgeBase, args: Sequence[Argument], max_universe: int = MAX_UNIVERSE
) -> SpecificityVerdict:
    args = list(args)
    n = len(args)
    act = _Activation(kb)
    geq = [[i == j for j in range(n)] for i in range(n)]
    for i, j in itertools.permutations(range(n), 2):
        a, b = args[i], args[j]
        if not a.uses_defeasible and b.uses_defeasible:
            geq[i][j] = True
        elif a.uses_defeasible and b.uses_defeasible:
            geq[i][j] = more_specific_poole(kb, a, b, max_universe=max_universe, _act=act)
    for k in range(n):
        for i in range(n):
            if geq[i][k]:
                row_k = geq[k]
                row_i = geq[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return SpecificityVerdict(args, geq)


@dataclass
class Warrant:
    verdict: str
    pro: list[Argument]
    con: list[Argument]
    preorder: SpecificityVerdict

    def __iter__(self):
        return iter((self.verdict, self.pro, self.con))


def warranted(
    kb: KnowledgeBase,
    query: Literal,
    max_universe: int = MAX_UNIVERSE,
    max_depth: int = MAX_DEPTH,
    max_trees: int = MAX_TREES,
) -> Warrant:
    """Decide ``query`` by comparing its arguments against those for its complement."""
    ground = ground_instances(kb, query.constants)
    if not query.is_ground:
        raise ValueError(f"query '{query}' is not ground")
    closure, ok = strict_closure(ground.facts, ground.strict)
    if not ok:
        clash = sorted(lit for lit in closure if not lit.negated and lit.complement() in closure)
        raise StrictInconsistency(f"strict knowledge is inconsistent on {', '.join(map(str, clash))}")
    pro = arguments_for(ground, query, max_depth=max_depth, max_trees=max_trees)
    con = arguments_for(ground, query.complement(), max_depth=max_depth, max_trees=max_trees)
    order = specificity_preorder(ground, pro + con, max_universe=max_universe)

    def beats_all(side, others):
        return any(all(order.strictly_above(p, c) for c in others) for p in side)

    if pro and beats_all(pro, con):
        verdict = YES
    elif con and beats_all(con, pro):
        verdict = NO
    else:
        verdict = UNDECIDED
    logger.debug("warranted(%s) = %s with %d pro / %d con", query, verdict, len(pro), len(con))
    return Warrant(verdict, pro, con, order)
