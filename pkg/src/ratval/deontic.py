"""
Standard deontic logic: propositional modal K with a serial accessibility
relation (KD).

``O(f)`` reads "f is obligatory" (box), ``P(f)`` reads "f is permitted"
(diamond).  Satisfiability is decided by a tableau that builds a tree model;
every model it returns is re-checked by plain Kripke evaluation.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Optional


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"position {position}: {message}")
        self.position = position


class NormShapeError(ValueError):
    pass


class FactsInconsistent(ValueError):
    pass


class FactsIncomplete(ValueError):
    pass


# --------------------------------------------------------------------------
# syntax


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __rshift__(self, other):
        return Implies(self, other)


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Bottom(Formula):
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula

    def __str__(self):
        return f"~{_wrap(self.sub)}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_wrap(self.left)} | {_wrap(self.right)}"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_wrap(self.left)} -> {_wrap(self.right)}"


@dataclass(frozen=True)
class Box(Formula):
    sub: Formula

    def __str__(self):
        return f"O({self.sub})"


@dataclass(frozen=True)
class Dia(Formula):
    sub: Formula

    def __str__(self):
        return f"P({self.sub})"


def _wrap(f: Formula) -> str:
    if isinstance(f, (And, Or, Implies)):
        return f"({f})"
    return str(f)


def conj(formulas: Iterable[Formula]) -> Formula:
    formulas = list(formulas)
    return reduce(And, formulas) if formulas else Top()


def atoms(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, (Not, Box, Dia)):
        return atoms(f.sub)
    if isinstance(f, (And, Or, Implies)):
        return atoms(f.left) | atoms(f.right)
    return set()


def modal_depth(f: Formula) -> int:
    if isinstance(f, (Box, Dia)):
        return 1 + modal_depth(f.sub)
    if isinstance(f, Not):
        return modal_depth(f.sub)
    if isinstance(f, (And, Or, Implies)):
        return max(modal_depth(f.left), modal_depth(f.right))
    return 0


def subformulas(f: Formula) -> set[Formula]:
    out = {f}
    if isinstance(f, (Not, Box, Dia)):
        out |= subformulas(f.sub)
    elif isinstance(f, (And, Or, Implies)):
        out |= subformulas(f.left) | subformulas(f.right)
    return out


def is_modal_free(f: Formula) -> bool:
    return modal_depth(f) == 0


_FTOKEN = re.compile(r"\s*(?:(->)|([~&|()])|([OP])(?=\s*\()|([a-z][A-Za-z0-9_]*))")


def _ftokens(text: str):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _FTOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start, m.lastindex))
        pos = m.end()
    out.append(("", len(text), 0))
    return out


def parse_modal(text: str) -> Formula:
    """Parse ``~ & | -> O(..) P(..)`` syntax; ``->`` associates to the right."""
    toks = _ftokens(text)
    i = 0

    def peek():
        return toks[i][0]

    def take(expected=None):
        nonlocal i
        tok, pos, _ = toks[i]
        if expected is not None and tok != expected:
            raise FormulaSyntaxError(f"expected {expected!r}, found {tok or 'end of input'!r}", pos)
        i += 1
        return tok

    def implication():
        left = disjunction()
        if peek() == "->":
            take()
            return Implies(left, implication())
        return left

    def disjunction():
        left = conjunction()
        while peek() == "|":
            take()
            left = Or(left, conjunction())
        return left

    def conjunction():
        left = unary()
        while peek() == "&":
            take()
            left = And(left, unary())
        return left

    def unary():
        tok, pos, group = toks[i]
        if tok == "~":
            take()
            return Not(unary())
        if tok in ("O", "P") and group == 3:
            take()
            take("(")
            inner = implication()
            take(")")
            return Box(inner) if tok == "O" else Dia(inner)
        if tok == "(":
            take()
            inner = implication()
            take(")")
            return inner
        if group == 4:
            take()
            if tok == "true":
                return Top()
            if tok == "false":
                return Bottom()
            return Atom(tok)
        raise FormulaSyntaxError(f"unexpected {tok or 'end of input'!r}", pos)

    f = implication()
    if toks[i][0] != "":
        raise FormulaSyntaxError(f"unexpected {toks[i][0]!r}", toks[i][1])
    return f


# --------------------------------------------------------------------------
# Kripke semantics


@dataclass
class KripkeModel:
    worlds: tuple
    accessibility: frozenset  # of (world, world) pairs
    valuation: Mapping  # world -> set of true atoms
    _succ: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.worlds:
            raise ValueError("a Kripke model needs at least one world")
        self.worlds = tuple(self.worlds)
        self.accessibility = frozenset(self.accessibility)
        succ = {w: [] for w in self.worlds}
        for u, v in sorted(self.accessibility, key=repr):
            succ[u].append(v)
        self._succ = succ

    def successors(self, world) -> list:
        return self._succ[world]

    def is_serial(self) -> bool:
        return all(self._succ[w] for w in self.worlds)

    def to_dict(self) -> dict:
        return {
            "worlds": [str(w) for w in self.worlds],
            "accessibility": sorted([str(u), str(v)] for u, v in self.accessibility),
            "valuation": {str(w): sorted(self.valuation.get(w, ())) for w in self.worlds},
        }

    def format(self) -> str:
        lines = []
        for w in self.worlds:
            true = ", ".join(sorted(self.valuation.get(w, ()))) or "-"
            nxt = ", ".join(str(v) for v in self._succ[w])
            lines.append(f"{w}: {{{true}}} -> {nxt}")
        return "\n".join(lines)


def satisfies(model: KripkeModel, world, formula: Formula) -> bool:
    if isinstance(formula, Atom):
        return formula.name in model.valuation.get(world, ())
    if isinstance(formula, Top):
        return True
    if isinstance(formula, Bottom):
        return False
    if isinstance(formula, Not):
        return not satisfies(model, world, formula.sub)
    if isinstance(formula, And):
        return satisfies(model, world, formula.left) and satisfies(model, world, formula.right)
    if isinstance(formula, Or):
        return satisfies(model, world, formula.left) or satisfies(model, world, formula.right)
    if isinstance(formula, Implies):
        return not satisfies(model, world, formula.left) or satisfies(model, world, formula.right)
    if isinstance(formula, Box):
        return all(satisfies(model, v, formula.sub) for v in model.successors(world))
    if isinstance(formula, Dia):
        return any(satisfies(model, v, formula.sub) for v in model.successors(world))
    raise TypeError(f"not a formula: {formula!r}")


def evaluate(formula: Formula, true_atoms: Iterable[str]) -> bool:
    """Truth of a modal-free formula under a single valuation."""
    if not is_modal_free(formula):
        raise ValueError(f"'{formula}' contains modal operators")
    return satisfies(KripkeModel(("w",), {("w", "w")}, {"w": set(true_atoms)}), "w", formula)


# --------------------------------------------------------------------------
# KD tableau


def nnf(f: Formula, negate: bool = False) -> Formula:
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Top):
        return Bottom() if negate else f
    if isinstance(f, Bottom):
        return Top() if negate else f
    if isinstance(f, Not):
        return nnf(f.sub, not negate)
    if isinstance(f, And):
        parts = (nnf(f.left, negate), nnf(f.right, negate))
        return Or(*parts) if negate else And(*parts)
    if isinstance(f, Or):
        parts = (nnf(f.left, negate), nnf(f.right, negate))
        return And(*parts) if negate else Or(*parts)
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right), negate)
    if isinstance(f, Box):
        return Dia(nnf(f.sub, True)) if negate else Box(nnf(f.sub))
    if isinstance(f, Dia):
        return Box(nnf(f.sub, True)) if negate else Dia(nnf(f.sub))
    raise TypeError(f"not a formula: {f!r}")


@dataclass
class _Node:
    atoms: frozenset
    children: list


def _saturate(label: frozenset):
    """Yield the propositionally saturated, clash-free branches of ``label``."""
    stack = [(list(label), frozenset())]
    while stack:
        todo, done = stack.pop()
        while todo:
            f = todo.pop()
            if isinstance(f, Top) or f in done:
                continue
            if isinstance(f, And):
                todo += [f.left, f.right]
            elif isinstance(f, Or):
                stack.append((todo + [f.right], done))
                todo.append(f.left)
            else:
                done = done | {f}
        if any(isinstance(f, Bottom) for f in done):
            continue
        if any(isinstance(f, Not) and f.sub in done for f in done):
            continue
        yield done


class _Tableau:
    def __init__(self):
        self.memo: dict[frozenset, Optional[_Node]] = {}

    def sat(self, label: frozenset) -> Optional[_Node]:
        if label in self.memo:
            return self.memo[label]
        result = None
        for branch in _saturate(label):
            boxed = frozenset(f.sub for f in branch if isinstance(f, Box))
            demands = [f.sub for f in branch if isinstance(f, Dia)]
            if not demands:
                # seriality: an ideal world must exist even without a permission demand
                demands = [None] if boxed else []
            children = []
            for d in demands:
                child = self.sat(boxed | {d} if d is not None else boxed)
                if child is None:
                    break
                children.append(child)
            else:
                result = _Node(frozenset(f.name for f in branch if isinstance(f, Atom)), children)
                break
        self.memo[label] = result
        return result


def _build_model(root: _Node) -> tuple[KripkeModel, str]:
    ids: dict[int, str] = {}
    order: list[_Node] = []
    edges = set()

    def visit(node: _Node) -> str:
        key = id(node)
        if key in ids:
            return ids[key]
        name = ids[key] = f"w{len(order)}"
        order.append(node)
        if not node.children:
            edges.add((name, name))
        for c in node.children:
            edges.add((name, visit(c)))
        return name

    designated = visit(root)
    valuation = {ids[id(n)]: set(n.atoms) for n in order}
    return KripkeModel(tuple(ids[id(n)] for n in order), edges, valuation), designated


def kd_satisfiable(formula: Formula) -> Optional[tuple[KripkeModel, str]]:
    """Return a serial model and designated world satisfying ``formula``, or None."""
    node = _Tableau().sat(frozenset({nnf(formula)}))
    if node is None:
        return None
    model, world = _build_model(node)
    if not model.is_serial() or not satisfies(model, world, formula):
        raise RuntimeError(f"tableau produced an invalid model for '{formula}'")
    return model, world


def kd_valid(formula: Formula) -> bool:
    return kd_satisfiable(Not(formula)) is None


def kd_countermodel(formula: Formula) -> Optional[tuple[KripkeModel, str]]:
    return kd_satisfiable(Not(formula))


# --------------------------------------------------------------------------
# norms

FULFILLED = "fulfilled"
VIOLATED = "violated"
INAPPLICABLE = "inapplicable"


def norm_parts(norm: Formula) -> tuple[Formula, Formula]:
    """Split ``antecedent -> O(consequent)`` (or bare ``O(consequent)``)."""
    if isinstance(norm, Box) and is_modal_free(norm.sub):
        return Top(), norm.sub
    if (
        isinstance(norm, Implies)
        and isinstance(norm.right, Box)
        and is_modal_free(norm.left)
        and is_modal_free(norm.right.sub)
    ):
        return norm.left, norm.right.sub
    raise NormShapeError(f"norm '{norm}' is not of the form antecedent -> O(consequent)")


@dataclass
class NormReport:
    norms: list[Formula]
    statuses: list[str]
    kd_consistent: bool
    actual: dict  # atom -> bool after closure under background
    witness: Optional[tuple[KripkeModel, str]] = None

    def counts(self) -> dict[str, int]:
        return {s: self.statuses.count(s) for s in (FULFILLED, VIOLATED, INAPPLICABLE)}

    def to_dict(self) -> dict:
        out = {
            "norms": [{"norm": str(n), "status": s} for n, s in zip(self.norms, self.statuses)],
            "kd_consistent": self.kd_consistent,
            "actual_world": {a: self.actual[a] for a in sorted(self.actual)},
        }
        if self.witness is not None:
            out["witness"] = {"model": self.witness[0].to_dict(), "designated": self.witness[1]}
        return out

    def format(self) -> str:
        lines = ["norm\tstatus"]
        lines += [f"{n}\t{s}" for n, s in zip(self.norms, self.statuses)]
        lines.append(f"kd_consistent\t{str(self.kd_consistent).lower()}")
        return "\n".join(lines)


def _closed_facts(formulas: list[Formula], facts: Mapping[str, bool], max_free: int = 20) -> list[dict]:
    mentioned = sorted(set(facts).union(*(atoms(f) for f in formulas)))
    free = [a for a in mentioned if a not in facts]
    if len(free) > max_free:
        raise FactsIncomplete(f"{len(free)} undetermined atoms; give more facts")
    worlds = []
    for bits in itertools.product((False, True), repeat=len(free)):
        val = dict(facts)
        val.update(zip(free, bits))
        true = {a for a, v in val.items() if v}
        if all(evaluate(f, true) for f in formulas):
            worlds.append(val)
    return worlds


def norm_status(
    norms: list[Formula],
    background: list[Formula],
    facts: Mapping[str, bool],
) -> NormReport:
    """Classify each conditional obligation against the actual world.

    ``facts`` may be partial; missing atoms are filled in when the background
    fixes them.
    """
    parts = [norm_parts(n) for n in norms]
    for b in background:
        if not is_modal_free(b):
            raise NormShapeError(f"background formula '{b}' contains modal operators")
    candidates = _closed_facts(background, facts)
    if not candidates:
        raise FactsInconsistent("facts contradict the background knowledge")

    def settled(f: Formula) -> bool:
        values = {evaluate(f, {a for a, v in c.items() if v}) for c in candidates}
        if len(values) > 1:
            raise FactsIncomplete(f"truth of '{f}' is not determined by the facts")
        return values.pop()

    statuses = []
    for ant, cons in parts:
        if not settled(ant):
            statuses.append(INAPPLICABLE)
        else:
            statuses.append(FULFILLED if settled(cons) else VIOLATED)

    actual = {a: candidates[0][a] for a in candidates[0] if len({c[a] for c in candidates}) == 1}
    fact_lits = [Atom(a) if v else Not(Atom(a)) for a, v in sorted(facts.items())]
    witness = kd_satisfiable(conj(list(norms) + list(background) + fact_lits))
    return NormReport(list(norms), statuses, witness is not None, actual, witness)


def parse_norm_file(text: str) -> tuple[list[Formula], list[Formula]]:
    """One formula per line; modal lines are norms, the rest background."""
    norms, background = [], []
    for line in text.splitlines():
        line = line.split("%", 1)[0].split("#", 1)[0].strip()
        if not line:
            continue
        f = parse_modal(line)
        (background if is_modal_free(f) else norms).append(f)
    return norms, background


def parse_facts(text: str) -> dict[str, bool]:
    """``atom`` or ``~atom`` tokens separated by whitespace, commas or newlines."""
    facts: dict[str, bool] = {}
    for line in text.splitlines():
        line = line.split("%", 1)[0].split("#", 1)[0]
        for tok in re.split(r"[\s,.]+", line):
            if not tok:
                continue
            neg = tok.startswith("~")
            name = tok.lstrip("~")
            if not re.fullmatch(r"[a-z][A-Za-z0-9_]*", name):
                raise FormulaSyntaxError(f"bad fact {tok!r}", 0)
            if facts.get(name, not neg) != (not neg):
                raise FactsInconsistent(f"fact '{name}' given both ways")
            facts[name] = not neg
    return facts
