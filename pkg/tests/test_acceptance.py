"""Acceptance criteria, one test per criterion.

Run ``python tests/test_acceptance.py`` for the one-line-per-criterion
report, or collect it with pytest like the other test files.
"""

import itertools
import random
import sys
import time

import pytest

from ikbench import calculus as C, lattice as La, saturate as Sat
from ikbench.catalog import distributive_upto, lattices_upto, named_lattices, posets
from ikbench.gen import (PROP_SIG, SMALL_SIG, random_atom, random_closed_formula, random_coherent_sequent,
                         random_coherent_theory, random_provable, soundness_trial)
from ikbench.kripke import holds_sequent, random_model, read_model_file, sequent_counterexample, validate_model
from ikbench.syntax import (And, Atom, BOT, Exists, Forall, Imp, Or, Sequent, TOP, Var, make_signature,
                            parse_sequent)

SEED = 20261018
EMPTY = La.DesignatedJoins([], [])


# ---------------------------------------------------------------- criterion bodies
# each returns (passed, summary)


def soundness_suite(per_rule=560):
    rng = random.Random(SEED)
    violations = nonvacuous = 0
    for rule in C.RULES:
        for k in range(per_rule):
            v = soundness_trial(rule, rng, SMALL_SIG, width=1 + k % 3, max_worlds=4, max_elems=3)
            violations += not v
            nonvacuous += bool(v) and not v.details.get("vacuous", False)
    total = per_rule * len(C.RULES)
    return violations == 0 and total >= 10_000, f"{total} trials, {nonvacuous} non-vacuous, {violations} violations"


def distributive_axiom(models=500):
    rng = random.Random(SEED + 1)
    x = Var("x", "S")
    failures = 0
    for k in range(models):
        width = 1 + k % 4
        phi = random_atom(SMALL_SIG, rng, (x,))
        psis = tuple(random_atom(SMALL_SIG, rng, (x,)) for _ in range(width))
        law = Imp(And(tuple(Or((phi, p)) for p in psis)), Or((phi, And(psis))))
        m = random_model(SMALL_SIG, rng, max_worlds=4, max_elems=3)
        failures += not holds_sequent(m, Sequent(TOP, (x,), law))
    return failures == 0, f"{models} models, {failures} failures"


def distributive_law_derivations():
    sig = SMALL_SIG
    parse = lambda t: parse_sequent(f"true |- [] {t}", sig).succedent
    phi = parse("P(c)")
    pool = [parse(t) for t in ("Q(c)", "E", "P(f(c))", "R(c,c)")]
    sizes = []
    for width in range(1, 5):
        d = C.derive_distributive_law(phi, pool[:width], sig=sig)
        if not C.check_derivation(d, (), sig):
            return False, f"width {width} rejected"
        sizes.append(d.size())
    return True, f"widths 1-4 accepted, sizes {sizes}"


def filter_construction():
    pairs = lattices = 0
    for L in lattices_upto(8):
        if not La.is_distributive(L):
            continue
        lattices += 1
        primes = La.prime_filters(L, EMPTY)
        for a, b in itertools.product(L.elements, repeat=2):
            if L.le(a, b):
                continue
            F, _ = La.construct_filter(L, EMPTY, a, b)
            if F not in primes or a not in F or b in F:
                return False, f"bad filter for {a}, {b} on a {L.n}-element lattice"
            pairs += 1
    M3 = named_lattices()["M3"]
    if La.is_distributive(M3) or La.separates_points(M3):
        return False, "M3 misreported"
    return True, f"{lattices} distributive lattices, {pairs} pairs; M3 non-distributive and non-separating"


def duality():
    lat = pos = 0
    for L in distributive_upto(10):
        if not La.duality_roundtrip(L):
            return False, f"lattice round-trip failed at size {L.n}"
        lat += 1
    for n in range(6):
        for P in posets(n):
            if not La.poset_roundtrip(P):
                return False, f"poset round-trip failed at {n} points"
            pos += 1
    return True, f"{lat} lattices (<=10), {pos} posets (<=5)"


def tree_distributivity():
    mismatches = total = 0
    for L in lattices_upto(8):
        total += 1
        mismatches += bool(La.is_tree_distributive(L, 2, 2)) != La.is_distributive(L)
    return mismatches == 0, f"{total} lattices, {mismatches} mismatches"


def coherent_completeness(theories=1000):
    rng = random.Random(SEED + 7)
    disagreements = countermodels = 0
    for _ in range(theories):
        T = random_coherent_theory(rng)
        s = random_coherent_sequent(T.sig, rng)
        a, _ = Sat.entails_enum(T, s)
        b, _ = Sat.entails_chase(T, s)
        if a != b:
            disagreements += 1
            continue
        r = Sat.countermodel(T, s)
        if (r == Sat.ENTAILED) != a:
            disagreements += 1
            continue
        if r != Sat.ENTAILED:
            H = T.herbrand
            ok = (Sat.satisfies(T, r.model) and H.holds(s.antecedent, r.env, r.model.atoms)
                  and not H.holds(s.succedent, r.env, r.model.atoms))
            disagreements += not ok
            countermodels += 1
    return disagreements == 0, f"{theories} theories, {countermodels} countermodels, {disagreements} disagreements"


def _certificate_ok(T, s):
    r = Sat.provable_ik(T, Sat.Fragment(), s)
    if r:
        return False
    cert, _ = read_model_file(r.certificate_text())
    return bool(validate_model(cert)) and sequent_counterexample(cert, s) is not None


def _depth_one(sig):
    atoms = [Atom(p, (App(k),)) for p in sig.relations for k in sig.constants()] + [TOP, BOT]
    x = Var("x", "S")
    out = list(atoms)
    for a, b in itertools.product(atoms, repeat=2):
        out += [And((a, b)), Or((a, b)), Imp(a, b)]
    for p in sig.relations:
        out += [Exists((x,), Atom(p, (x,))), Forall((x,), Atom(p, (x,)))]
    return out


def App(name):
    from ikbench.syntax import App as _App
    return _App(name, (), "S")


def kripke_completeness():
    sig = PROP_SIG
    T = Sat.Theory(sig, [])
    goals = ["true |- [] or(P(c), imp(P(c), false))",
             "imp(imp(P(c), Q(c)), P(c)) |- [] P(c)",
             "true |- [] imp(imp(imp(P(c), Q(c)), P(c)), P(c))"]
    for g in goals:
        if not _certificate_ok(T, parse_sequent(g, sig)):
            return False, f"no certificate for {g}"
    checked = 0
    for rels in (("P",), ("P", "Q")):
        for consts in (("c",), ("c", "d")):
            s = make_signature(relations={r: ["S"] for r in rels}, constants={k: "S" for k in consts})
            for chi in _depth_one(s):
                Tm = Sat.morleyize(Sat.Theory(s, []), Sat.Fragment(), goals=[chi])
                if not Sat.morley_correspondence(Tm):
                    return False, f"correspondence fails for {chi}"
                checked += 1
    rng = random.Random(SEED + 8)
    for _ in range(200):
        ax = [Sequent(random_closed_formula(rng, depth=1), (), random_closed_formula(rng, depth=1))
              for _ in range(rng.randint(0, 2))]
        Tm = Sat.morleyize(Sat.Theory(sig, ax), Sat.Fragment(), goals=[random_closed_formula(rng, depth=2)])
        if not Sat.morley_correspondence(Tm):
            return False, "correspondence fails on a random theory"
        checked += 1
    return True, f"{len(goals)} certificates, {checked} Morleyized fragments"


def disjunction_existence(n=500):
    rng = random.Random(SEED + 9)
    T = Sat.Theory(PROP_SIG, [])
    x = Var("x", "S")
    failures = 0
    for _ in range(n):
        ds = [random_closed_formula(rng) for _ in range(rng.randint(0, 2))] + [random_provable(rng)]
        rng.shuffle(ds)
        try:
            failures += Sat.disjunction_property(T, ds) is None
        except Sat.PropertyViolation:
            failures += 1
    for _ in range(n):
        phi = Exists((x,), random_provable(rng, variables=(x,)))
        try:
            failures += Sat.existence_property(T, phi) != ("c",)
        except Sat.PropertyViolation:
            failures += 1
    return failures == 0, f"{n} disjunctions, {n} existentials, {failures} failures"


CRITERIA = [
    (1, "soundness of all rules", soundness_suite),
    (2, "distributive axiom forced", distributive_axiom),
    (3, "distributive law derivations", distributive_law_derivations),
    (4, "prime filter construction", filter_construction),
    (5, "duality round-trips", duality),
    (6, "tree-distributivity iff distributivity", tree_distributivity),
    (7, "coherent entailment and countermodels", coherent_completeness),
    (8, "Kripke certificates and Morley correspondence", kripke_completeness),
    (9, "disjunction and existence properties", disjunction_existence),
]


def _line(num, name, ok, summary, seconds):
    return f"criterion {num} [{'PASS' if ok else 'FAIL'}] {name}: {summary} ({seconds:.1f}s)"


@pytest.mark.parametrize("num, name, body", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(num, name, body, capsys):
    t0 = time.perf_counter()
    ok, summary = body()
    with capsys.disabled():
        print("\n" + _line(num, name, ok, summary, time.perf_counter() - t0))
    assert ok, summary


def main():
    failed = 0
    for num, name, body in CRITERIA:
        t0 = time.perf_counter()
        ok, summary = body()
        failed += not ok
        print(_line(num, name, ok, summary, time.perf_counter() - t0), flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
