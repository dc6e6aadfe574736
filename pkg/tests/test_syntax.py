import random

import pytest
from hypothesis import given, settings, strategies as st

from ikbench.errors import ArityError, ParseError, SortError
from ikbench.gen import SMALL_SIG, random_formula
from ikbench.syntax import (App, Atom, Exists, Var, alpha_eq, free_vars, make_signature,
                            parse_formula, parse_sequent, parse_signature, print_formula,
                            print_sequent, print_signature, substitute)

SIG = SMALL_SIG
x, y = Var("x", "S"), Var("y", "S")


def test_parse_print_roundtrip_simple():
    text = "ex([y:S], and(R(x,y), imp(P(y), or(Q(f(y)), false))))"
    phi = parse_formula(text, SIG, context=[x])
    assert print_formula(parse_formula(print_formula(phi), SIG, context=[x])) == print_formula(phi)


def test_sequent_roundtrip():
    s = parse_sequent("P(x) |- [x:S] ex([y:S], R(x,y))", SIG)
    assert print_sequent(parse_sequent(print_sequent(s), SIG)) == print_sequent(s)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_random_roundtrip(seed):
    rng = random.Random(seed)
    phi = random_formula(SIG, rng, (x,), depth=3, width=3)
    back = parse_formula(print_formula(phi), SIG, context=[x])
    assert alpha_eq(phi, back)


def test_alpha_equivalence():
    a = parse_formula("ex([y:S], R(x,y))", SIG, context=[x])
    b = parse_formula("ex([z:S], R(x,z))", SIG, context=[x])
    c = parse_formula("ex([z:S], R(z,x))", SIG, context=[x])
    assert alpha_eq(a, b)
    assert not alpha_eq(a, c)


def test_substitution_avoids_capture():
    phi = parse_formula("ex([y:S], R(x,y))", SIG, context=[x])
    out = substitute(phi, {x: y})
    assert free_vars(out) == {y}
    assert isinstance(out, Exists) and out.block[0] != y


def test_free_vars():
    phi = parse_formula("and(P(x), all([y:S], R(x,y)))", SIG, context=[x])
    assert free_vars(phi) == {x}


@pytest.mark.parametrize("text, err", [
    ("R(c)", ArityError),
    ("P(c", ParseError),
    ("P(c) $", ParseError),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_formula(text, SIG)


def test_sort_error():
    sig = make_signature(relations={"P": ["A"]}, constants={"b": "B"}, sorts=("A", "B"))
    with pytest.raises(SortError):
        parse_formula("P(b)", sig)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_formula("and(P(c), %)", SIG)
    assert info.value.pos == 10


def test_signature_roundtrip():
    text = print_signature(SIG)
    assert print_signature(parse_signature(text)) == text


def test_signature_error_line():
    with pytest.raises(ParseError) as info:
        parse_signature("sort S\nbogus line\n")
    assert info.value.line == 2


def test_terms():
    t = App("f", (App("c", (), "S"),), "S")
    assert str(t) == "f(c)"
    assert Atom("P", (t,)) == parse_formula("P(f(c))", SIG)
