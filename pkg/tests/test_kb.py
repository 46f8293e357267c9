import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from ratval.kb import (
    DEFEASIBLE,
    STRICT,
    GroundingError,
    KBSyntaxError,
    KnowledgeBase,
    Literal,
    Rule,
    Term,
    complementary,
    ground_instances,
    parse_kb,
    parse_literal,
    print_kb,
    strict_closure,
)

import oracles

EMU = "emu(tom). bird(X) <- emu(X). ~flies(X) <- emu(X). flies(X) -< bird(X)."


def lit(text):
    return parse_literal(text)


def test_parse_emu():
    kb = parse_kb(EMU)
    assert kb.facts == {lit("emu(tom)")}
    assert len(kb.strict) == 2 and len(kb.defeasible) == 1
    assert kb.constants == {"tom"}
    (d,) = kb.defeasible
    assert d.kind == DEFEASIBLE and str(d) == "flies(X) -< bird(X)."


def test_parse_empty():
    assert parse_kb("") == KnowledgeBase()
    assert parse_kb("% only a comment\n\n") == KnowledgeBase()


def test_syntax_error_position():
    with pytest.raises(KBSyntaxError) as err:
        parse_kb("flies(X) <-")
    assert err.value.line == 1
    with pytest.raises(KBSyntaxError) as err:
        parse_kb("emu(tom).\nbird(X) <- emu(X)\nfoo(a).")
    assert err.value.line == 3


def test_unbound_head_variable():
    with pytest.raises(KBSyntaxError, match="Y"):
        parse_kb("p(X, Y) <- q(X).")


def test_fact_with_variable_rejected():
    with pytest.raises(KBSyntaxError):
        parse_kb("emu(X).")


def test_duplicate_warns():
    with pytest.warns(UserWarning, match="duplicate"):
        kb = parse_kb("emu(tom). emu(tom).")
    assert len(kb.facts) == 1


def test_positions_kept():
    kb = parse_kb("emu(tom).\n  bird(X) <- emu(X).")
    (r,) = kb.strict
    assert kb.positions[r] == (2, 3)


def test_term_invariants():
    with pytest.raises(ValueError):
        Term("constant", "Tom")
    with pytest.raises(ValueError):
        Term("variable", "x")
    with pytest.raises(ValueError):
        Term("constant", "")


def test_complementary():
    assert complementary(lit("flies(tom)"), lit("~flies(tom)"))
    assert not complementary(lit("flies(tom)"), lit("flies(tom)"))
    assert not complementary(lit("flies(tom)"), lit("~flies(tina)"))


def test_print_canonical_order():
    assert print_kb(KnowledgeBase()) == ""
    text = print_kb(parse_kb(EMU))
    assert text.splitlines() == [
        "emu(tom).",
        "bird(X) <- emu(X).",
        "~flies(X) <- emu(X).",
        "flies(X) -< bird(X).",
    ]


def test_roundtrip_emu():
    kb = parse_kb(EMU)
    assert parse_kb(print_kb(kb)) == kb


_names = st.sampled_from(["p", "q", "bird", "flies"])
_consts = st.sampled_from(["a", "b", "tom"])
_vars = st.sampled_from(["X", "Y"])


@st.composite
def kb_texts(draw):
    lines = []
    for _ in range(draw(st.integers(0, 4))):
        args = draw(st.lists(_consts, min_size=0, max_size=2))
        neg = draw(st.booleans())
        a = f"({','.join(args)})" if args else ""
        lines.append(f"{'~' if neg else ''}{draw(_names)}{a}.")
    for _ in range(draw(st.integers(0, 4))):
        body_vars = draw(st.lists(_vars, min_size=1, max_size=2, unique=True))
        head_vars = draw(st.lists(st.sampled_from(body_vars), max_size=2))
        head = f"{draw(_names)}({','.join(head_vars + ['a'])})"
        body = f"{draw(_names)}({','.join(body_vars)})"
        lines.append(f"{head} {draw(st.sampled_from(['<-', '-<']))} {body}.")
    return "\n".join(lines)


@settings(max_examples=200, deadline=None)
@given(kb_texts())
def test_roundtrip_property(text):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kb = parse_kb(text)
    assert parse_kb(print_kb(kb)) == kb


def test_ground_emu():
    g = ground_instances(parse_kb(EMU))
    assert g.is_ground
    assert {str(r) for r in g.strict} == {"bird(tom) <- emu(tom).", "~flies(tom) <- emu(tom)."}
    assert {str(r) for r in g.defeasible} == {"flies(tom) -< bird(tom)."}
    assert g.facts == parse_kb(EMU).facts


def test_ground_two_constants():
    kb = parse_kb("emu(tom). emu(tina). bird(X) <- emu(X).")
    assert len(ground_instances(kb).strict) == 2


def test_ground_fixpoint():
    g = ground_instances(parse_kb(EMU))
    assert ground_instances(g) == g


def test_ground_needs_universe():
    with pytest.raises(GroundingError, match="no grounding universe"):
        ground_instances(parse_kb("bird(X) <- emu(X)."))


def test_ground_query_constants_extend_universe():
    g = ground_instances(parse_kb("bird(X) <- emu(X)."), ["tom"])
    assert {str(r) for r in g.strict} == {"bird(tom) <- emu(tom)."}


@settings(max_examples=100, deadline=None)
@given(kb_texts())
def test_ground_count(text):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kb = parse_kb(text)
    if not kb.constants:
        return
    g = ground_instances(kb)
    n = len(kb.constants)
    expected_strict = sum(n ** len(r.variables) for r in kb.strict)
    expected_def = sum(n ** len(r.variables) for r in kb.defeasible)
    # distinct substitutions give distinct instances, but two source rules may share one
    assert len(g.strict) <= expected_strict and len(g.defeasible) <= expected_def
    from ratval.kb import ground_rule

    assert sum(len(ground_rule(r, kb.constants)) for r in kb.rules) == expected_strict + expected_def


def test_strict_closure_emu():
    g = ground_instances(parse_kb(EMU))
    closure, ok = strict_closure({lit("emu(tom)")}, g.strict)
    assert closure == {lit("emu(tom)"), lit("bird(tom)"), lit("~flies(tom)")}
    assert ok


def test_strict_closure_inconsistent():
    closure, ok = strict_closure({lit("p"), lit("~p")}, [])
    assert not ok


def test_strict_closure_empty():
    assert strict_closure(set(), []) == (frozenset(), True)


def test_closure_matches_naive_and_is_monotone_idempotent():
    rng = random.Random(7)
    for _ in range(200):
        kb = oracles.random_ground_kb(rng, consistent_strict=False)
        lits = [oracles.prop(a, n) for a in "abcd" for n in (False, True)]
        p = set(rng.sample(lits, rng.randint(0, 3)))
        p2 = p | set(rng.sample(lits, 2))
        c, _ = strict_closure(p, kb.strict)
        assert c == oracles.naive_closure(p, kb.strict)
        assert c <= strict_closure(p2, kb.strict)[0]
        assert strict_closure(c, kb.strict)[0] == c
