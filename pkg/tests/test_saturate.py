import random

import pytest
from hypothesis import given, settings, strategies as st

from ikbench import saturate as Sat
from ikbench.calculus import check_derivation, derive_distributive_law
from ikbench.errors import PreconditionError
from ikbench.gen import PROP_SIG, random_closed_formula, random_coherent_sequent, random_coherent_theory
from ikbench.kripke import read_model_file, sequent_counterexample, validate_model
from ikbench.syntax import Exists, Sequent, TOP, Var, make_signature, parse_formula, parse_sequent

SIG = make_signature(relations={"P": ["S"], "Q": ["S"]}, constants={"c": "S"})
SIG2 = make_signature(relations={"P": ["S"]}, constants={"c": "S", "d": "S"})


def th(*axioms, sig=SIG):
    return Sat.CoherentTheory(sig, [parse_sequent(a, sig) for a in axioms])


def sq(text, sig=SIG):
    return parse_sequent(text, sig)


def f(text, sig=SIG):
    return parse_formula(text, sig)


def test_is_coherent():
    assert Sat.is_coherent(f("or(P(c), Q(c))"))
    assert not Sat.is_coherent(f("imp(P(c), Q(c))"))
    assert Sat.is_coherent(f("ex([x:S], and(P(x), true))"))
    assert not Sat.is_coherent(f("all([x:S], P(x))"))


def test_non_coherent_axiom_rejected():
    with pytest.raises(PreconditionError):
        th("true |- [] imp(P(c), Q(c))")


# ---------------------------------------------------------------- entailment

def test_entails_examples():
    assert Sat.entails(th("true |- [] or(P(c), Q(c))", "Q(c) |- [] false"), sq("true |- [] P(c)"))
    assert not Sat.entails(th("true |- [] or(P(c), Q(c))"), sq("true |- [] P(c)"))
    assert Sat.entails(th(), sq("P(c) |- [] P(c)"))


def test_inconsistent_theory_entails_everything():
    T = th("true |- [] false")
    assert Sat.entails(T, sq("true |- [] P(c)"))
    assert Sat.countermodel(T, sq("true |- [] Q(c)")) == Sat.ENTAILED


def test_quantified_goal():
    T = th("true |- [] ex([x:S], P(x))", sig=SIG2)
    assert Sat.entails(T, sq("true |- [] or(P(c), P(d))", SIG2))
    assert not Sat.entails(T, sq("true |- [] P(c)", SIG2))
    assert Sat.entails(th(sig=SIG2), sq("P(x) |- [x:S] ex([y:S], P(y))", SIG2))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_oracles_agree(seed):
    rng = random.Random(seed)
    T = random_coherent_theory(rng)
    s = random_coherent_sequent(T.sig, rng)
    assert Sat.entails_enum(T, s)[0] == Sat.entails_chase(T, s)[0]


def test_monotone_growth():
    rng = random.Random(4)
    for _ in range(30):
        T = random_coherent_theory(rng)
        goals = [random_coherent_sequent(T.sig, rng) for _ in range(5)]
        before = [Sat.entails(T, g) for g in goals]
        T2 = T.extended([random_coherent_sequent(T.sig, rng)])
        after = [Sat.entails(T2, g) for g in goals]
        assert all(a <= b for a, b in zip(before, after))


def test_congruence_mode():
    sig = make_signature(relations={"P": ["S"]}, constants={"c": "S", "d": "S"})
    T = Sat.CoherentTheory(sig, [sq("true |- [] eq(c,d)", sig), sq("true |- [] P(c)", sig)],
                           equality="congruence")
    assert Sat.entails(T, sq("true |- [] P(d)", sig))
    assert not Sat.entails(Sat.CoherentTheory(sig, [sq("true |- [] P(c)", sig)], equality="congruence"),
                           sq("true |- [] P(d)", sig))


# ---------------------------------------------------------------- Lindenbaum and countermodels

def test_lindenbaum_top_is_disjunction():
    T = th("true |- [] or(P(c), Q(c))")
    alg = Sat.lindenbaum(T, Sat.Fragment(), sq("true |- [] and(P(c), Q(c))"))
    assert alg.cls(f("or(P(c), Q(c))")) == alg.lattice.one
    assert alg.cls(TOP) == alg.lattice.one


def test_lindenbaum_trivial_chain():
    alg = Sat.lindenbaum(th(), Sat.Fragment(), sq("true |- [] false"))
    assert alg.lattice.n == 2


def test_lindenbaum_existential_join():
    T = th(sig=SIG2)
    alg = Sat.lindenbaum(T, Sat.Fragment(), sq("true |- [] ex([x:S], P(x))", SIG2))
    L = alg.lattice
    top = alg.cls(f("ex([x:S], P(x))", SIG2))
    assert (top, (alg.cls(f("P(c)", SIG2)), alg.cls(f("P(d)", SIG2)))) in alg.designated.joins
    assert L.le(alg.cls(f("P(c)", SIG2)), top)


def test_countermodel_example():
    r = Sat.countermodel(th("true |- [] or(P(c), Q(c))"), sq("true |- [] P(c)"))
    assert r.route == "filter"
    assert r.model.listing() == ["Q(c)"]


def test_countermodel_random_reverify():
    rng = random.Random(9)
    seen = 0
    for _ in range(100):
        T = random_coherent_theory(rng)
        s = random_coherent_sequent(T.sig, rng)
        r = Sat.countermodel(T, s)
        if r == Sat.ENTAILED:
            assert Sat.entails(T, s)
            continue
        seen += 1
        H = T.herbrand
        assert Sat.satisfies(T, r.model)
        assert H.holds(s.antecedent, r.env, r.model.atoms)
        assert not H.holds(s.succedent, r.env, r.model.atoms)
    assert seen > 20


def test_countermodel_points_route():
    T = th("true |- [] or(P(c), Q(c))")
    r = Sat.countermodel(T, sq("true |- [] P(c)"), Sat.Fragment(max_lattice=1))
    assert r.route == "points" and Sat.satisfies(T, r.model)


# ---------------------------------------------------------------- theory files

def test_theory_roundtrip():
    T = Sat.parse_theory("sort S\nrel P : S\nconst c : S\nax: true |- [] P(c)\n")
    assert Sat.print_theory(Sat.parse_theory(Sat.print_theory(T))) == Sat.print_theory(T)


def test_theory_file_error_line():
    from ikbench.errors import ParseError
    with pytest.raises(ParseError) as info:
        Sat.parse_theory("rel P : S\nconst c : S\nax: true |- [] P(c,\n")
    assert info.value.line == 3


# ---------------------------------------------------------------- Morleyization and Kripke

def test_morley_linkage():
    Tm = Sat.morleyize(Sat.Theory(SIG, []), Sat.Fragment(), goals=[f("imp(P(c), Q(c))")])
    data = Tm.morley
    assert {Sat.is_coherent(s.antecedent) and Sat.is_coherent(s.succedent) for s in Tm.axioms} == {True}
    imp_pred = data.preds[f("imp(P(c), Q(c))")]
    mentions = [s for s in Tm.axioms if imp_pred in repr(s)]
    assert len(mentions) == 1   # elimination only


def test_canonical_examples():
    K = Sat.canonical_kripke(Sat.CoherentTheory(make_signature(relations={"P": ["S"]}, constants={"c": "S"})))
    assert len(K.worlds) == 2 and validate_model(K)
    assert len(Sat.canonical_kripke(th("true |- [] false")).worlds) == 0
    K = Sat.canonical_kripke(th("true |- [] or(P(c), Q(c))"))
    assert len(K.worlds) == 3 and len(K.leq) == 5


def test_provable_examples(tmp_path):
    T = Sat.Theory(SIG, [])
    r = Sat.provable_ik(T, Sat.Fragment(), sq("true |- [] or(P(c), imp(P(c), false))"))
    assert not r
    cert, refuted = read_model_file(r.certificate_text())
    assert validate_model(cert)
    assert sequent_counterexample(cert, sq("true |- [] or(P(c), imp(P(c), false))")) is not None
    assert Sat.provable_ik(T, Sat.Fragment(), sq("P(c) |- [] P(c)"))
    assert not Sat.provable_ik(T, Sat.Fragment(), sq("imp(imp(P(c), Q(c)), P(c)) |- [] P(c)"))


def test_provable_respects_theory():
    T = Sat.Theory(SIG, [sq("true |- [] or(P(c), imp(P(c), false))")])
    assert Sat.provable_ik(T, Sat.Fragment(), sq("imp(imp(P(c), false), false) |- [] P(c)"))


def test_provable_sound_against_calculus():
    phi, psis = f("P(c)"), [f("Q(c)"), f("P(c)"), f("Q(c)")]
    d = derive_distributive_law(phi, psis, sig=SIG)
    assert check_derivation(d, (), SIG)
    assert Sat.provable_ik(Sat.Theory(SIG, []), Sat.Fragment(), d.conclusion)


def test_morley_correspondence_random():
    rng = random.Random(3)
    for _ in range(30):
        ax = [Sequent(random_closed_formula(rng, depth=1), (), random_closed_formula(rng, depth=1))
              for _ in range(rng.randint(0, 1))]
        Tm = Sat.morleyize(Sat.Theory(PROP_SIG, ax), Sat.Fragment(), goals=[random_closed_formula(rng)])
        assert Sat.morley_correspondence(Tm)


def test_disjunction_and_existence_examples():
    T = Sat.Theory(SIG, [])
    assert Sat.disjunction_property(T, [f("imp(P(c), P(c))"), f("Q(c)")]) == 0
    assert Sat.disjunction_property(T, [f("P(c)"), f("imp(P(c), false)")]) is None
    x = Var("x", "S")
    assert Sat.existence_property(T, f("ex([x:S], imp(P(x), P(x)))")) == ("c",)
    assert Sat.existence_property(T, f("ex([x:S], P(x))")) is None


def test_existence_needs_constant():
    sig = make_signature(relations={"P": ["S"]})
    with pytest.raises(PreconditionError):
        Sat.existence_property(Sat.Theory(sig, []), parse_formula("ex([x:S], P(x))", sig))
