"""
Derivation trees over ground knowledge bases.

Trees are enumerated by backward chaining.  A literal may not repeat along a
root-to-leaf path, which keeps enumeration finite on ground input.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

from .kb import DEFEASIBLE, STRICT, KnowledgeBase, Literal, Rule, complementary, forward_closure

MAX_DEPTH = 64
MAX_TREES = 256


class DerivationBoundError(RuntimeError):
    """Search exceeded its depth or tree-count bound (not the same as 'no derivation')."""


@dataclass(frozen=True)
class DerivationTree:
    root: Literal
    rule: Optional[Rule] = None  # None marks a fact leaf
    children: tuple["DerivationTree", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.rule is None

    @property
    def kind(self) -> str:
        return "fact" if self.rule is None else self.rule.kind

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()

    def leaves(self) -> set[Literal]:
        return {n.root for n in self.nodes() if n.is_leaf}

    def rules(self) -> set[Rule]:
        return {n.rule for n in self.nodes() if n.rule is not None}

    @property
    def depth(self) -> int:
        return 1 + max((c.depth for c in self.children), default=0)

    def to_dict(self) -> dict:
        return {
            "literal": str(self.root),
            "rule_kind": self.kind,
            "children": [c.to_dict() for c in self.children],
        }

    def format(self, indent: int = 0) -> str:
        pad = "  " * indent
        tag = {"fact": "[fact]", STRICT: "<- [strict]", DEFEASIBLE: "-< [defeasible]"}[self.kind]
        lines = [f"{pad}{self.root} {tag}"]
        lines += [c.format(indent + 1) for c in self.children]
        return "\n".join(lines)

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class Argument:
    conclusion: Literal
    tree: DerivationTree

    @cached_property
    def uses_defeasible(self) -> bool:
        return any(n.kind == DEFEASIBLE for n in self.tree.nodes())

    @classmethod
    def from_tree(cls, tree: DerivationTree) -> "Argument":
        return cls(tree.root, tree)

    def __str__(self):
        return f"<{self.conclusion}, {'defeasible' if self.uses_defeasible else 'strict'}>"


def derive(
    kb: KnowledgeBase,
    goal: Literal,
    max_depth: int = MAX_DEPTH,
    max_trees: int = MAX_TREES,
) -> set[DerivationTree]:
    """All derivation trees for ``goal`` in a ground KB."""
    if not kb.is_ground or not goal.is_ground:
        raise ValueError("derive needs a ground KB and a ground goal")
    by_head: dict[Literal, list[Rule]] = defaultdict(list)
    for r in sorted(kb.rules):
        by_head[r.head].append(r)

    def search(lit: Literal, path: frozenset, depth: int) -> list[DerivationTree]:
        if depth > max_depth:
            raise DerivationBoundError(f"derivation depth exceeds {max_depth} at '{lit}'")
        found = []
        if lit in kb.facts:
            found.append(DerivationTree(lit))
        below = path | {lit}
        for rule in by_head.get(lit, ()):
            if any(b in below for b in rule.body):
                continue
            if rule.body and depth + 1 > max_depth:
                raise DerivationBoundError(f"derivation depth exceeds {max_depth} at '{lit}'")
            options = []
            for b in rule.body:
                subs = search(b, below, depth + 1)
                if not subs:
                    break
                options.append(subs)
            else:
                count = 1
                for o in options:
                    count *= len(o)
                if len(found) + count > max_trees:
                    raise DerivationBoundError(f"more than {max_trees} derivation trees for '{lit}'")
                for combo in itertools.product(*options):
                    found.append(DerivationTree(lit, rule, tuple(combo)))
        return found

    return set(search(goal, frozenset(), 1))


def arguments_for(kb: KnowledgeBase, goal: Literal, **bounds) -> list[Argument]:
    trees = derive(kb, goal, **bounds)
    return sorted((Argument.from_tree(t) for t in trees), key=lambda a: a.tree.format())


def derivable(
    rules: Iterable[Rule],
    premises: Iterable[Literal],
    goal: Literal,
    include_defeasible: bool = False,
) -> bool:
    selected = [r for r in rules if include_defeasible or not r.is_defeasible]
    return goal in forward_closure(premises, selected)


def defeasible_leaf_literals(tree: DerivationTree) -> set[Literal]:
    """Fact leaves lying below at least one defeasible rule application."""
    out: set[Literal] = set()

    def walk(node: DerivationTree, under_defeasible: bool):
        if node.is_leaf:
            if under_defeasible:
                out.add(node.root)
            return
        flag = under_defeasible or node.rule.is_defeasible
        for c in node.children:
            walk(c, flag)

    walk(tree, False)
    return out


def defeasible_premises(tree: DerivationTree) -> set[Literal]:
    """Body literals of every defeasible rule application in the tree.

    These are what must hold for the defeasible parts of the derivation to
    fire; used as the activation target in specificity comparison.
    """
    return {b for n in tree.nodes() if n.rule is not None and n.rule.is_defeasible for b in n.rule.body}


def conflicts(a: Argument, b: Argument) -> bool:
    return complementary(a.conclusion, b.conclusion)
