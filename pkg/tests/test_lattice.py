import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ikbench import lattice as La
from ikbench.catalog import distributive_upto, lattices_upto, named_lattices, posets
from ikbench.errors import ParseError, PreconditionError

NAMED = named_lattices()
chain, square, M3, N5 = (NAMED[k] for k in ("chain3", "square", "M3", "N5"))
EMPTY = La.DesignatedJoins([], [])


def members(filters):
    return sorted(sorted(F.members) for F in filters)


def _brute_prime_filters(L):
    # every subset, checked directly against the definitions
    out = []
    for r in range(1, L.n):
        for sub in itertools.combinations(L.elements, r):
            F = set(sub)
            if L.one not in F or L.zero in F:
                continue
            if any(L.le(a, b) and b not in F for a in F for b in L.elements):
                continue
            if any(L.meet_of(a, b) not in F for a in F for b in F):
                continue
            if any(L.join_of(a, b) in F and a not in F and b not in F
                   for a in L.elements for b in L.elements):
                continue
            out.append(frozenset(F))
    return sorted(sorted(F) for F in out)


# ---------------------------------------------------------------- basics

def test_distributivity_examples():
    assert La.is_distributive(chain)
    assert La.is_distributive(square)
    assert not La.is_distributive(M3)
    assert not La.is_distributive(N5)
    a, b, c = La.distributivity_witness(M3)
    assert M3.meet_of(a, M3.join_of(b, c)) != M3.join_of(M3.meet_of(a, b), M3.meet_of(a, c))


def test_not_a_lattice():
    with pytest.raises(La.LatticeError):
        La.FinLattice.from_order(["0", "a", "b"], [("0", "a"), ("0", "b")])


# ---------------------------------------------------------------- tree-distributivity

def test_tree_dist_examples():
    assert La.is_tree_distributive(chain, 2, 2)
    v = La.is_tree_distributive(M3, 2, 1)
    assert not v
    lab = v.details["labelling"]
    assert M3.le(lab[()], M3.join_of(lab[(0,)], lab[(1,)]))
    for L in (M3, N5, square):
        assert La.is_tree_distributive(L, 1, 3)


def test_tree_dist_sampling_finds_m3():
    assert not La.is_tree_distributive(M3, 2, 2, method="sample", samples=5000, rng=random.Random(0))
    assert La.is_tree_distributive(square, 2, 2, method="sample", samples=500, rng=random.Random(0))


def test_tree_dist_equivalence_small():
    for L in lattices_upto(6):
        d = La.is_distributive(L)
        assert bool(La.is_tree_distributive(L, 2, 2)) == d
        assert bool(La.separates_points(L)) == d


# ---------------------------------------------------------------- prime filters

def test_prime_filter_examples():
    assert members(La.prime_filters(chain)) == [["1"], ["1", "m"]]
    assert members(La.prime_filters(square)) == [["1", "a"], ["1", "b"]]
    assert La.prime_filters(M3) == []


@pytest.mark.parametrize("L", lattices_upto(6), ids=lambda L: f"n{L.n}")
def test_prime_filters_match_brute_force(L):
    assert members(La.prime_filters(L)) == _brute_prime_filters(L)


def test_designated_joins_validated():
    bad = La.DesignatedJoins([("1", ("a",))], [])
    assert not bad.validate(square)
    assert La.DesignatedJoins([("1", ("a", "b"))], []).validate(square)


# ---------------------------------------------------------------- construction

def test_pairing_bound():
    for beta in range(30):
        for gamma in range(30):
            k = La.pair(beta, gamma)
            assert k >= gamma and La.unpair(k) == (beta, gamma)


def test_construct_examples():
    F, trace = La.construct_filter(chain, EMPTY, "m", "0")
    assert sorted(F.members) == ["1", "m"]
    assert trace.stabilized == "m"
    F, _ = La.construct_filter(square, EMPTY, "1", "0")
    assert sorted(F.members) in (["1", "a"], ["1", "b"])
    with pytest.raises(PreconditionError):
        La.construct_filter(square, EMPTY, "1", "1")


def test_construct_with_designated_join():
    S = La.DesignatedJoins([("1", ("a", "b"))], [])
    F, _ = La.construct_filter(square, S, "1", "0")
    assert F in La.prime_filters(square, S)


def test_construct_on_non_distributive_reports():
    with pytest.raises(PreconditionError):
        La.construct_filter(M3, EMPTY, "a", "b")


def test_trace_is_decreasing():
    for L in distributive_upto(8):
        for a, b in itertools.product(L.elements, repeat=2):
            if L.le(a, b):
                continue
            F, trace = La.construct_filter(L, EMPTY, a, b)
            assert all(L.le(y, x) for x, y in zip(trace.values, trace.values[1:]))
            assert all(not L.le(x, b) for x in trace.values)
            assert a in F and b not in F


def test_extend_filter():
    P = La.extend_filter(square, EMPTY, La.principal(square, "a"), square.down("b"))
    assert sorted(P.members) == ["1", "a"]
    P = La.extend_filter(chain, EMPTY, La.Filter(frozenset({"1"})), {"0"})
    assert P in La.prime_filters(chain) and "0" not in P
    with pytest.raises(PreconditionError):
        La.extend_filter(square, EMPTY, La.principal(square, "a"), square.down("a"))


# ---------------------------------------------------------------- duality

def test_spectrum_examples():
    sp = La.spectrum(chain)
    assert len(sp.poset.points) == 2 and len(sp.poset.leq) == 3
    sp = La.spectrum(square)
    assert len(sp.poset.points) == 2 and len(sp.poset.leq) == 2
    one = La.FinLattice(("0",), [[True]])
    assert La.spectrum(one).poset.points == ()


def test_upsets_lattice_examples():
    pt = La.poset_from_pairs(["p"], [])
    assert La.upsets_lattice(pt).n == 2
    anti = La.poset_from_pairs(["p", "q"], [])
    assert La.upsets_lattice(anti).n == 4 and La.is_distributive(La.upsets_lattice(anti))
    ch = La.poset_from_pairs(["p", "q"], [("p", "q")])
    assert La.upsets_lattice(ch).n == 3


def test_duality_examples():
    assert La.duality_roundtrip(chain)
    assert La.duality_roundtrip(square)
    r = La.duality_roundtrip(M3)
    assert not r and r.witness is not None


def test_duality_small_catalog():
    for L in distributive_upto(8):
        assert La.duality_roundtrip(L)
    for n in range(5):
        for P in posets(n):
            assert La.poset_roundtrip(P)


def test_baire_shadow():
    for L in distributive_upto(6):
        assert La.baire_shadow(L)


# ---------------------------------------------------------------- search

def test_rs_examples():
    P, v = La.rs_filter(square, [("1", ("a", "b"))], [], "1", "0")
    assert v and sorted(P.members) in (["1", "a"], ["1", "b"])
    P, v = La.rs_filter(chain, [], [("m", ("1", "m"))], "m", "0")
    assert sorted(P.members) == ["1", "m"]


def test_rs_none_exists():
    # the only filter containing 1 and omitting 0 must contain a or b; forbid both by the meet
    P, v = La.rs_filter(M3, [], [], "a", "b")
    assert P is None and not v


# ---------------------------------------------------------------- files

def test_lattice_file_roundtrip():
    S = La.DesignatedJoins([("1", ("a", "b"))], [])
    text = La.print_lattice(square, S)
    L, S2 = La.parse_lattice(text)
    assert L.n == 4 and S2.joins == S.joins
    assert La.print_lattice(L, S2) == text


@pytest.mark.parametrize("text, line", [
    ("elements 0 1\nleq 0\n", 2),
    ("elements 0 1\nfrob 0 1\n", 2),
])
def test_lattice_file_errors(text, line):
    with pytest.raises(ParseError) as info:
        La.parse_lattice(text)
    assert info.value.line == line


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_random_distributive_prime_filters_separate(seed):
    rng = random.Random(seed)
    L = rng.choice(distributive_upto(9))
    assert La.separates_points(L)
