"""
Rule language for defeasible knowledge bases.

A knowledge base holds ground contingent facts, strict rules and defeasible
rules over function-free literals.  Surface syntax::

    emu(tom).                 % fact
    bird(X) <- emu(X).        % strict rule
    ~flies(X) <- emu(X).      % strict rule with classical negation
    flies(X) -< bird(X).      % defeasible rule
"""

from __future__ import annotations

import itertools
import re
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

STRICT = "strict"
DEFEASIBLE = "defeasible"


class KBSyntaxError(ValueError):
    """Malformed rule source; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class GroundingError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Term:
    kind: str  # "constant" | "variable"
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("empty term name")
        if self.kind == "constant" and not self.name[0].islower():
            raise ValueError(f"constant must start lowercase: {self.name!r}")
        if self.kind == "variable" and not self.name[0].isupper():
            raise ValueError(f"variable must start uppercase: {self.name!r}")
        if self.kind not in ("constant", "variable"):
            raise ValueError(f"unknown term kind {self.kind!r}")

    @classmethod
    def of(cls, name: str) -> "Term":
        return cls("variable" if name[0].isupper() else "constant", name)

    @property
    def is_variable(self) -> bool:
        return self.kind == "variable"

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Literal:
    negated: bool
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def is_ground(self) -> bool:
        return not any(t.is_variable for t in self.args)

    @property
    def variables(self) -> set[str]:
        return {t.name for t in self.args if t.is_variable}

    @property
    def constants(self) -> set[str]:
        return {t.name for t in self.args if not t.is_variable}

    def complement(self) -> "Literal":
        return Literal(not self.negated, self.predicate, self.args)

    def substitute(self, binding: dict[str, str]) -> "Literal":
        args = tuple(
            Term("constant", binding[t.name]) if t.is_variable and t.name in binding else t
            for t in self.args
        )
        return Literal(self.negated, self.predicate, args)

    def __str__(self):
        sign = "~" if self.negated else ""
        if not self.args:
            return f"{sign}{self.predicate}"
        return f"{sign}{self.predicate}({','.join(t.name for t in self.args)})"


def complementary(a: Literal, b: Literal) -> bool:
    return a.predicate == b.predicate and a.args == b.args and a.negated != b.negated


@dataclass(frozen=True, order=True)
class Rule:
    head: Literal
    body: tuple[Literal, ...]
    kind: str = STRICT

    def __post_init__(self):
        if self.kind not in (STRICT, DEFEASIBLE):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        unbound = self.head.variables - set().union(*(b.variables for b in self.body))
        if unbound:
            raise ValueError(
                f"head variable(s) {', '.join(sorted(unbound))} of '{self.head}' do not occur in the body"
            )

    @property
    def is_defeasible(self) -> bool:
        return self.kind == DEFEASIBLE

    @property
    def is_ground(self) -> bool:
        return self.head.is_ground and all(b.is_ground for b in self.body)

    @property
    def variables(self) -> list[str]:
        names = set(self.head.variables).union(*(b.variables for b in self.body))
        return sorted(names)

    def substitute(self, binding: dict[str, str]) -> "Rule":
        return Rule(
            self.head.substitute(binding),
            tuple(b.substitute(binding) for b in self.body),
            self.kind,
        )

    def __str__(self):
        arrow = "-<" if self.is_defeasible else "<-"
        if not self.body:
            return f"{self.head} {arrow} ."
        return f"{self.head} {arrow} {', '.join(str(b) for b in self.body)}."


@dataclass(frozen=True)
class KnowledgeBase:
    facts: frozenset[Literal] = frozenset()
    strict: frozenset[Rule] = frozenset()
    defeasible: frozenset[Rule] = frozenset()
    # statement -> (line, column); diagnostic only
    positions: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        for f in self.facts:
            if not f.is_ground:
                raise ValueError(f"fact '{f}' is not ground")
        if any(r.kind != STRICT for r in self.strict):
            raise ValueError("strict set contains a defeasible rule")
        if any(r.kind != DEFEASIBLE for r in self.defeasible):
            raise ValueError("defeasible set contains a strict rule")

    @property
    def rules(self) -> frozenset[Rule]:
        return self.strict | self.defeasible

    @property
    def constants(self) -> frozenset[str]:
        out: set[str] = set()
        for f in self.facts:
            out |= f.constants
        for r in self.rules:
            out |= r.head.constants
            for b in r.body:
                out |= b.constants
        return frozenset(out)

    @property
    def is_ground(self) -> bool:
        return all(r.is_ground for r in self.rules)

    def with_facts(self, extra: Iterable[Literal]) -> "KnowledgeBase":
        return KnowledgeBase(self.facts | frozenset(extra), self.strict, self.defeasible)

    def __len__(self):
        return len(self.facts) + len(self.strict) + len(self.defeasible)


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<strict><-)
  | (?P<defeasible>-<)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<punct>[~(),.])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise KBSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(m.group() if kind == "punct" else kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise KBSyntaxError(f"expected {kind!r}, found {found!r}", tok.line, tok.col)
        self.i += 1
        return tok

    def literal(self) -> Literal:
        negated = False
        if self.peek().kind == "~":
            self.take("~")
            negated = True
        name = self.take("ident").text
        args: list[Term] = []
        # zero-arity literals (plain propositions) are accepted without parentheses
        if self.peek().kind == "(":
            self.take("(")
            while True:
                tok = self.peek()
                if tok.kind == "ident":
                    args.append(Term("constant", self.take("ident").text))
                elif tok.kind == "var":
                    args.append(Term("variable", self.take("var").text))
                else:
                    raise KBSyntaxError(f"expected a term, found {tok.text or 'end of input'!r}", tok.line, tok.col)
                if self.peek().kind == ",":
                    self.take(",")
                    continue
                self.take(")")
                break
        return Literal(negated, name, tuple(args))

    def statement(self):
        start = self.peek()
        head = self.literal()
        nxt = self.peek()
        if nxt.kind == ".":
            self.take(".")
            if not head.is_ground:
                raise KBSyntaxError(f"fact '{head}' contains variables", start.line, start.col)
            return head, (start.line, start.col)
        if nxt.kind not in ("strict", "defeasible"):
            raise KBSyntaxError(f"expected '.', '<-' or '-<', found {nxt.text or 'end of input'!r}", nxt.line, nxt.col)
        self.i += 1
        body = [self.literal()]
        while self.peek().kind == ",":
            self.take(",")
            body.append(self.literal())
        self.take(".")
        kind = STRICT if nxt.kind == "strict" else DEFEASIBLE
        try:
            rule = Rule(head, tuple(body), kind)
        except ValueError as exc:
            raise KBSyntaxError(str(exc), start.line, start.col) from None
        return rule, (start.line, start.col)


def parse_kb(text: str) -> KnowledgeBase:
    """Parse rule source into a KnowledgeBase.

    Raises KBSyntaxError on malformed input or unbound head variables.
    Duplicate statements are dropped with a warning.
    """
    p = _Parser(text)
    facts: set[Literal] = set()
    strict: set[Rule] = set()
    defeasible: set[Rule] = set()
    positions = {}
    while p.peek().kind != "eof":
        stmt, pos = p.statement()
        if isinstance(stmt, Literal):
            target = facts
        else:
            target = defeasible if stmt.is_defeasible else strict
        if stmt in target:
            warnings.warn(f"line {pos[0]}: duplicate statement '{stmt}' ignored", stacklevel=2)
            continue
        target.add(stmt)
        positions[stmt] = pos
    return KnowledgeBase(frozenset(facts), frozenset(strict), frozenset(defeasible), positions)


def parse_literal(text: str) -> Literal:
    p = _Parser(text.strip().rstrip("."))
    lit = p.literal()
    p.take("eof")
    return lit


def print_kb(kb: KnowledgeBase) -> str:
    lines = sorted(f"{f}." for f in kb.facts)
    lines += sorted(str(r) for r in kb.strict)
    lines += sorted(str(r) for r in kb.defeasible)
    return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# grounding and strict consequence


def ground_rule(rule: Rule, constants: Iterable[str]) -> list[Rule]:
    names = rule.variables
    if not names:
        return [rule]
    consts = sorted(constants)
    return [rule.substitute(dict(zip(names, combo))) for combo in itertools.product(consts, repeat=len(names))]


def ground_instances(kb: KnowledgeBase, extra_constants: Iterable[str] = ()) -> KnowledgeBase:
    """Replace every rule by all its instantiations over the KB's constants.

    ``extra_constants`` widens the universe, typically with the constants of
    a query.
    """
    if kb.is_ground:
        return kb
    universe = kb.constants | frozenset(extra_constants)
    if not universe:
        raise GroundingError("no grounding universe: non-ground rules but no constants")
    strict = frozenset(g for r in kb.strict for g in ground_rule(r, universe))
    defeasible = frozenset(g for r in kb.defeasible for g in ground_rule(r, universe))
    return KnowledgeBase(kb.facts, strict, defeasible)


def forward_closure(premises: Iterable[Literal], rules: Iterable[Rule]) -> frozenset[Literal]:
    """Least fixpoint of forward rule application over ground rules."""
    known = set(premises)
    waiting: dict[Literal, list[int]] = defaultdict(list)
    rules = list(rules)
    missing = []
    agenda = []
    for i, r in enumerate(rules):
        need = {b for b in r.body if b not in known}
        missing.append(len(need))
        for b in need:
            waiting[b].append(i)
        if not need:
            agenda.append(r.head)
    while agenda:
        lit = agenda.pop()
        if lit in known:
            continue
        known.add(lit)
        for i in waiting.pop(lit, ()):
            missing[i] -= 1
            if missing[i] == 0:
                agenda.append(rules[i].head)
    return frozenset(known)


def is_consistent(literals: Iterable[Literal]) -> bool:
    lits = set(literals)
    return not any(lit.complement() in lits for lit in lits)


def strict_closure(premises: Iterable[Literal], strict: Iterable[Rule]) -> tuple[frozenset[Literal], bool]:
    closure = forward_closure(premises, strict)
    return closure, is_consistent(closure)
