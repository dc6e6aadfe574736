import random

import pytest
from hypothesis import given, settings, strategies as st

from ikbench.gen import SMALL_SIG, random_formula
from ikbench.kripke import (force, holds_sequent, parse_model, print_model, random_model,
                            read_model_file, sequent_counterexample, validate_model)
from ikbench.syntax import Var, make_signature, parse_formula, parse_sequent

SIG = make_signature(relations={"P": ["S"]}, constants={"c": "S"})

TWO_WORLDS = """\
worlds w0 w1
order w0<=w1
domain w0 S = {c}
domain w1 S = {c}
rel w1 P = {(c)}
fun w0 c = {()->c}
fun w1 c = {()->c}
"""


@pytest.fixture
def two():
    return parse_model(TWO_WORLDS, SIG)


def test_valid(two):
    assert validate_model(two)


def test_excluded_middle_fails_at_root(two):
    phi = parse_formula("or(P(c), imp(P(c), false))", SIG)
    assert not force(two, "w0", {}, phi)
    assert force(two, "w1", {}, phi)


def test_double_negation(two):
    nnp = parse_formula("imp(imp(P(c), false), false)", SIG)
    assert force(two, "w0", {}, nnp)
    assert not force(two, "w0", {}, parse_formula("P(c)", SIG))


def test_sequent_counterexample(two):
    s = parse_sequent("imp(imp(P(c), false), false) |- [] P(c)", SIG)
    assert sequent_counterexample(two, s) == ("w0", {})
    assert not holds_sequent(two, s)


def test_print_parse_roundtrip(two):
    again, refuted = read_model_file(print_model(two, include_signature=True))
    assert print_model(again) == print_model(two)
    assert refuted is None


def test_non_monotone_model_rejected():
    bad = TWO_WORLDS.replace("rel w1 P = {(c)}", "rel w0 P = {(c)}")
    assert not validate_model(parse_model(bad, SIG))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_models_are_valid_and_persistent(seed):
    rng = random.Random(seed)
    m = random_model(SMALL_SIG, rng, max_worlds=4, max_elems=3)
    assert validate_model(m)
    x = Var("x", "S")
    phi = random_formula(SMALL_SIG, rng, (x,), depth=2, width=2)
    for (v, w) in m.leq:
        for env in m.environments(v, [x]):
            if force(m, v, env, phi):
                assert force(m, w, m.transport(env, v, w), phi)
