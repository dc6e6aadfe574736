import itertools
import random

import pytest

from ikbench import calculus as C
from ikbench.errors import ParseError, PreconditionError
from ikbench.gen import SMALL_SIG, random_instance, soundness_trial
from ikbench.kripke import check_soundness, holds_sequent, random_model
from ikbench.syntax import Atom, BOT, Sequent, Var, parse_formula, parse_sequent, print_sequent

SIG = SMALL_SIG
x = Var("x", "S")
P = lambda t: Atom("P", (t,))


def seq(text):
    return parse_sequent(text, SIG)


# ---------------------------------------------------------------- bars

def test_bar_examples():
    assert C.check_bar(2, 1, C.Bar({(0,), (1,)}))
    assert C.check_bar(2, 2, C.Bar({(0,), (1, 0), (1, 1)}))
    assert not C.check_bar(2, 2, C.Bar({(0,), (0, 1)}))


def test_bar_out_of_range():
    with pytest.raises(PreconditionError):
        C.check_bar(2, 1, C.Bar({(2,)}))


def _covers_each_leaf_once(gamma, d, nodes):
    # a set of nodes is a bar iff every leaf lies below exactly one of them
    counts = {leaf: 0 for leaf in itertools.product(range(gamma), repeat=d)}
    for f in nodes:
        for leaf in counts:
            if leaf[:len(f)] == f:
                counts[leaf] += 1
    return all(c == 1 for c in counts.values())


@pytest.mark.parametrize("gamma, d", [(1, 3), (2, 1), (2, 2), (3, 1), (3, 2), (2, 3)])
def test_bar_matches_leaf_oracle(gamma, d):
    nodes = list(C.addresses(gamma, d))
    subsets = itertools.chain.from_iterable(itertools.combinations(nodes, k) for k in range(len(nodes) + 1))
    if len(nodes) > 13:
        rng = random.Random(5)
        subsets = [rng.sample(nodes, rng.randint(0, len(nodes))) for _ in range(3000)]
    for B in subsets:
        assert bool(C.check_bar(gamma, d, C.Bar(B))) == _covers_each_leaf_once(gamma, d, B), B


def test_levels_are_bars():
    for gamma in (1, 2, 3):
        for level in range(4):
            assert C.check_bar(gamma, 3, C.Bar.level_bar(gamma, level))


# ---------------------------------------------------------------- single rules

def test_identity():
    assert C.check_rule_instance("identity", {}, [], seq("P(x) |- [x:S] P(x)"))
    assert not C.check_rule_instance("identity", {}, [], seq("P(x) |- [x:S] Q(x)"))


def test_cut_derivations():
    a = C.Derivation(seq("P(c) |- [] Q(c)"), "theory-axiom")
    b = C.Derivation(seq("Q(c) |- [] E"), "theory-axiom")
    theory = [a.conclusion, b.conclusion]
    good = C.Derivation(seq("P(c) |- [] E"), "cut", {}, (a, b))
    assert C.check_derivation(good, theory, SIG)
    bad = C.Derivation(seq("P(c) |- [] Q(c)"), "cut", {}, (a, b))
    v = C.check_derivation(bad, theory, SIG)
    assert not v and v.where in ((), None)


def test_theory_axiom_must_belong():
    leaf = C.Derivation(seq("P(c) |- [] Q(c)"), "theory-axiom")
    assert not C.check_derivation(leaf, [], SIG)


def test_failure_path_points_into_tree():
    ok = C.Derivation(seq("P(c) |- [] P(c)"), "identity")
    broken = C.Derivation(seq("P(c) |- [] Q(c)"), "identity")
    d = C.Derivation(seq("P(c) |- [] Q(c)"), "cut", {}, (ok, broken))
    v = C.check_derivation(d, (), SIG)
    assert not v and tuple(v.where) == (1,)


@pytest.mark.parametrize("rule", C.RULES)
def test_random_instances_accepted(rule):
    rng = random.Random(hash(rule) & 0xffff)
    for _ in range(20):
        payload, prem, concl = random_instance(rule, rng, SIG, width=3)
        theory = [concl] if rule == "theory-axiom" else None
        assert C.check_rule_instance(rule, payload, prem, concl, SIG, theory=theory)


@pytest.mark.parametrize("rule", [r for r in C.RULES if r != "eq-refl"])
def test_corrupted_conclusion_rejected(rule):
    rng = random.Random(7)
    rejected = 0
    for _ in range(20):
        payload, prem, concl = random_instance(rule, rng, SIG, width=2)
        wrong = Sequent(concl.antecedent, concl.context, Atom("E", ()) if concl.succedent == BOT else BOT)
        theory = [concl] if rule == "theory-axiom" else None
        rejected += not C.check_rule_instance(rule, payload, prem, wrong, SIG, theory=theory)
    assert rejected >= 15


@pytest.mark.parametrize("rule", C.RULES)
def test_soundness_smoke(rule):
    rng = random.Random(11)
    for _ in range(30):
        assert soundness_trial(rule, rng, SIG, width=2)


def test_limit_premises_must_be_empty():
    rng = random.Random(3)
    payload, prem, concl = random_instance("dual-dist", rng, SIG, width=2)
    assert C.check_rule_instance("dual-dist", dict(payload, limit_premises=[]), prem, concl, SIG)
    assert not C.check_rule_instance("dual-dist", dict(payload, limit_premises=[concl]), prem, concl, SIG)


# ---------------------------------------------------------------- tree rules by hand

def _trans_tree(root, child, block):
    labels = {(): root, (0,): child}
    tree = C.TreeFamily(1, 1, labels, C.canonical_contexts(C.TreeFamily(1, 1, labels)), {(0,): block})
    return tree


def test_trans_trans_fv_condition():
    good = _trans_tree(Atom("E", ()), P(x), (x,))
    bar = C.Bar.level_bar(1, 1)
    payload = {"tree": good, "bar": bar}
    assert C.check_rule_instance("trans-trans", payload, C.trans_trans_premises(good),
                                 C.trans_trans_conclusion(good, bar), SIG)
    bad = _trans_tree(P(x), P(x), (x,))
    v = C.check_rule_instance("trans-trans", {"tree": bad, "bar": bar}, C.trans_trans_premises(bad),
                              C.trans_trans_conclusion(bad, bar), SIG)
    assert not v
    assert "free" in v.reason or "FV" in v.reason or "block" in v.reason


def test_dual_dist_width_two_law():
    phi, q0, q1 = (parse_formula(t, SIG) for t in ("P(c)", "Q(c)", "E"))
    d = C.derive_distributive_law(phi, [q0, q1], sig=SIG)
    assert C.check_derivation(d, (), SIG)
    assert any(node.rule == "dual-dist" for node in _walk(d))


def _walk(d):
    yield d
    for p in d.premises:
        yield from _walk(p)


def test_wrong_bar_is_caught_by_models():
    # premises of a genuine dual-dist tree, conclusion taken over a non-bar
    labels = {(): Atom("E", ()), (0,): Atom("P", (App_c(),)), (1,): Atom("Q", (App_c(),))}
    tree = C.TreeFamily(2, 1, labels)
    prem = C.dual_dist_premises(tree, ())
    concl = C.dual_dist_conclusion(tree, C.Bar({(0,)}), ())
    rng = random.Random(0)
    found = any(not check_soundness(prem, concl, random_model(SIG, rng)) for _ in range(500))
    assert found


def App_c():
    from ikbench.syntax import App
    return App("c", (), "S")


# ---------------------------------------------------------------- distributive law

@pytest.mark.parametrize("width", [1, 2, 3, 4])
def test_distributive_law_checks(width):
    phi = parse_formula("P(c)", SIG)
    psis = [parse_formula(t, SIG) for t in ("Q(c)", "E", "P(f(c))", "Q(f(c))")[:width]]
    d = C.derive_distributive_law(phi, psis, sig=SIG)
    assert C.check_derivation(d, (), SIG)


def test_distributive_law_valid_in_models():
    rng = random.Random(2)
    d = C.derive_distributive_law(parse_formula("P(c)", SIG),
                                  [parse_formula(t, SIG) for t in ("Q(c)", "E", "P(f(c))")], sig=SIG)
    for _ in range(100):
        assert holds_sequent(random_model(SIG, rng), d.conclusion)


def test_width_one_is_degenerate():
    d = C.derive_distributive_law(parse_formula("P(c)", SIG), [parse_formula("Q(c)", SIG)], sig=SIG)
    assert C.check_derivation(d, (), SIG)
    assert print_sequent(d.conclusion).startswith("and(or(P(c), Q(c))) |- [] or(P(c)")


# ---------------------------------------------------------------- files

@pytest.mark.parametrize("width", [1, 2, 3])
def test_print_parse_roundtrip(width):
    psis = [parse_formula("Q(c)", SIG)] * width
    d = C.derive_distributive_law(parse_formula("P(c)", SIG), psis, sig=SIG)
    text = C.print_derivation(d)
    again = C.parse_derivation(text, SIG)
    assert C.print_derivation(again) == text
    assert C.check_derivation(again, (), SIG)


def test_parse_error_line_number():
    text = "n0: identity premises=[] payload={} conclusion=P(c) |- [] P(c)\nn1: nonsense\n"
    with pytest.raises(ParseError) as info:
        C.parse_derivation(text, SIG)
    assert info.value.line == 2


def test_unknown_premise_id():
    with pytest.raises(ParseError):
        C.parse_derivation("n1: cut premises=[n0,n0] payload={} conclusion=P(c) |- [] P(c)\n", SIG)
