"""Command-line front end.

Exit status is 0 for accept/true/found, 1 for reject/false/none and 2 for
usage or input errors.  Reports start with ``key: value`` lines.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

from . import calculus, kripke, lattice, saturate
from .errors import IKError
from .syntax import Var, parse_formula, parse_sequent, print_sequent

OK, FAIL, ERROR = 0, 1, 2


class Report:
    def __init__(self, out):
        self.out = out

    def kv(self, key, value):
        self.out.write(f"{key}: {value}\n")

    def line(self, text=""):
        self.out.write(text.rstrip("\n") + "\n")


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _theory(path):
    return saturate.parse_theory(_read(path))


def _fragment(args):
    return saturate.Fragment(max_depth=args.fragment_depth)


def _elem_list(text):
    return [x for x in text.replace(",", " ").split() if x]


def _fmt_filter(F):
    return "{" + ", ".join(sorted(map(str, F.members))) + "}"


# ----------------------------------------------------------------------------
# commands


def cmd_check(args, rep):
    if not args.theory:
        raise IKError("check needs --theory (the signature comes from the theory file)")
    th = _theory(args.theory)
    d = calculus.parse_derivation(_read(args.derivation), th.sig)
    v = calculus.check_derivation(d, th.axioms, th.sig)
    rep.kv("result", "accept" if v else "reject")
    rep.kv("nodes", d.size())
    rep.kv("conclusion", print_sequent(d.conclusion))
    if not v:
        rep.kv("reason", v.reason)
        rep.kv("path", "/".join(map(str, v.where)) if v.where else "root")
    return OK if v else FAIL


def cmd_force(args, rep):
    m, _ = kripke.read_model_file(_read(args.model))
    env_names = dict(b.split("=", 1) for b in args.env)
    ctx = [Var(name, m.sig.default_sort) for name in env_names]
    phi = parse_formula(args.formula, m.sig, context=ctx)
    worlds = [args.world] if args.world else list(m.worlds)
    all_forced = True
    for w in worlds:
        if w not in m.structures:
            raise IKError(f"unknown world {w}")
        env = {v: env_names[v.name] for v in ctx}
        f = kripke.force(m, w, env, phi)
        all_forced &= f
        rep.kv(f"forced {w}", "yes" if f else "no")
    rep.kv("result", "true" if all_forced else "false")
    return OK if all_forced else FAIL


def cmd_holds(args, rep):
    m, _ = kripke.read_model_file(_read(args.model))
    v = kripke.validate_model(m)
    if not v:
        raise IKError(f"invalid model: {v.reason}")
    s = parse_sequent(args.sequent, m.sig)
    cex = kripke.sequent_counterexample(m, s)
    rep.kv("result", "true" if cex is None else "false")
    if cex:
        w, env = cex
        rep.kv("world", w)
        rep.kv("env", " ".join(f"{x.name}={e}" for x, e in env.items()) or "-")
    return OK if cex is None else FAIL


def cmd_lattice(args, rep):
    L, S = lattice.parse_lattice(_read(args.file))
    sub = args.sub
    rep.kv("elements", L.n)
    if sub == "distributive":
        w = lattice.distributivity_witness(L)
        rep.kv("result", "true" if w is None else "false")
        if w:
            rep.kv("witness", " ".join(map(str, w)))
        return OK if w is None else FAIL
    if sub == "tree-dist":
        v = lattice.is_tree_distributive(L, args.gamma, args.depth)
        rep.kv("result", "true" if v else "false")
        if not v:
            lab = v.details["labelling"]
            rep.kv("bar", " ".join(calculus.fmt_addr(f) for f in sorted(v.details["bar"])))
            rep.kv("labelling", " ".join(f"{calculus.fmt_addr(f)}={x}" for f, x in sorted(lab.items())))
        return OK if v else FAIL
    if sub == "primes":
        primes = lattice.prime_filters(L, S)
        rep.kv("count", len(primes))
        for P in primes:
            rep.line(_fmt_filter(P))
        return OK if primes else FAIL
    if sub == "construct":
        F, trace = lattice.construct_filter(L, S, args.a, args.b)
        rep.kv("filter", _fmt_filter(F))
        rep.kv("branch", " ".join(map(str, trace.values)))
        rep.kv("stabilized", trace.stabilized)
        return OK
    if sub == "extend":
        P = lattice.extend_filter(L, S, lattice.Filter(frozenset(_elem_list(args.filter))),
                                  frozenset(_elem_list(args.ideal)))
        rep.kv("filter", _fmt_filter(P))
        return OK
    if sub == "spectrum":
        sp = lattice.spectrum(L, S)
        rep.kv("points", len(sp.poset.points))
        rep.kv("separation", "ok" if sp.separation else "fails")
        names = {P: f"p{i}" for i, P in enumerate(sp.poset.points)}
        for P, name in names.items():
            rep.line(f"{name} = {_fmt_filter(P)}")
        for P, Q in sorted(sp.poset.leq, key=lambda pq: (names[pq[0]], names[pq[1]])):
            if P != Q:
                rep.line(f"{names[P]} <= {names[Q]}")
        return OK if sp.separation else FAIL
    if sub == "dual":
        r = lattice.duality_roundtrip(L, S)
        rep.kv("result", "isomorphism" if r else "rejected")
        if not r:
            rep.kv("reason", r.reason)
            if r.witness is not None:
                rep.kv("witness", " ".join(map(str, r.witness)))
        return OK if r else FAIL
    if sub == "rs":
        P, v = lattice.rs_filter(L, S.joins, S.meets, args.a, args.b)
        rep.kv("result", "found" if P is not None else "none")
        if P is not None:
            rep.kv("filter", _fmt_filter(P))
        else:
            for gen, why in v.details.get("exhausted", []):
                rep.line(f"up({gen}): {why}")
        return OK if P is not None else FAIL
    raise IKError(f"unknown lattice command {sub}")


def _coherent(path):
    return saturate.CoherentTheory.from_theory(_theory(path))


def cmd_entails(args, rep):
    T = _coherent(args.theory_file)
    s = parse_sequent(args.sequent, T.sig)
    a, _ = saturate.entails_enum(T, s)
    b, _ = saturate.entails_chase(T, s)
    rep.kv("enumeration", str(a).lower())
    rep.kv("chase", str(b).lower())
    if a != b:
        raise saturate.OracleDisagreement("entailment procedures disagree")
    rep.kv("result", str(a).lower())
    return OK if a else FAIL


def cmd_countermodel(args, rep):
    T = _coherent(args.theory_file)
    s = parse_sequent(args.sequent, T.sig)
    r = saturate.countermodel(T, s, _fragment(args))
    if r == saturate.ENTAILED:
        rep.kv("result", "entailed")
        return FAIL
    rep.kv("result", "countermodel")
    rep.kv("route", r.route)
    rep.kv("env", " ".join(f"{v.name}={c}" for v, c in r.env.items()) or "-")
    rep.kv("atoms", " ".join(r.model.listing()) or "-")
    return OK


def cmd_canonical(args, rep):
    th = _theory(args.theory_file)
    if th.coherent():
        Tm = saturate.CoherentTheory.from_theory(th)
    else:
        Tm = saturate.morleyize(th, _fragment(args))
    K = saturate.canonical_kripke(Tm)
    rep.kv("worlds", len(K.worlds))
    rep.kv("valid", "yes" if kripke.validate_model(K) else "no")
    rep.line(kripke.print_model(K, include_signature=True))
    return OK


def cmd_provable(args, rep):
    th = _theory(args.theory_file)
    s = parse_sequent(args.sequent, th.sig)
    r = saturate.provable_ik(th, _fragment(args), s)
    rep.kv("result", "provable" if r else "unprovable")
    rep.kv("worlds", len(r.model.worlds))
    if not r:
        rep.kv("refuted-at", r.world)
        text = r.certificate_text()
        if args.certificate:
            with open(args.certificate, "w", encoding="utf-8") as fh:
                fh.write(text)
            rep.kv("certificate", args.certificate)
        else:
            rep.line(text)
    return OK if r else FAIL


def cmd_props(args, rep):
    from . import gen
    suites = args.suite or ["soundness", "axiom", "lattices", "entails", "dp"]
    failures = 0
    for name in suites:
        rng = random.Random(args.seed)
        t0 = time.perf_counter()
        bad, total = PROP_SUITES[name](rng, args, gen)
        failures += bad
        rep.kv(name, f"{total - bad}/{total} passed ({time.perf_counter() - t0:.1f}s)")
    rep.kv("result", "pass" if failures == 0 else "fail")
    return OK if failures == 0 else FAIL


def _suite_soundness(rng, args, gen):
    bad = total = 0
    for k in range(args.trials):
        rule = calculus.RULES[k % len(calculus.RULES)]
        v = gen.soundness_trial(rule, rng, max_worlds=args.max_worlds, max_elems=args.max_elems)
        bad += not v
        total += 1
    return bad, total


def _suite_axiom(rng, args, gen):
    from .syntax import Atom, App, Imp, And, Or, Sequent, TOP
    c = App("c", (), "S")
    phi, psis = Atom("P", (c,)), [Atom(r, (c,)) for r in ("Q", "P", "Q", "P")]
    law = Imp(And(tuple(Or((phi, p)) for p in psis)), Or((phi, And(tuple(psis)))))
    bad = 0
    for _ in range(args.trials):
        m = kripke.random_model(gen.SMALL_SIG, rng, args.max_worlds, args.max_elems)
        bad += not kripke.holds_sequent(m, Sequent(TOP, (), law))
    return bad, args.trials


def _suite_lattices(rng, args, gen):
    from . import catalog
    bad = total = 0
    for L in catalog.lattices_upto(6):
        total += 1
        d = lattice.is_distributive(L)
        bad += not (d == bool(lattice.is_tree_distributive(L, 2, 2)) == bool(lattice.separates_points(L)))
    return bad, total


def _suite_entails(rng, args, gen):
    bad = 0
    for _ in range(args.trials):
        T = gen.random_coherent_theory(rng)
        s = gen.random_coherent_sequent(T.sig, rng)
        a, _ = saturate.entails_enum(T, s)
        b, _ = saturate.entails_chase(T, s)
        bad += a != b
    return bad, args.trials


def _suite_dp(rng, args, gen):
    from .syntax import Or
    bad = 0
    th = saturate.Theory(gen.PROP_SIG, [])
    for _ in range(args.trials):
        ds = [gen.random_closed_formula(rng) for _ in range(rng.randint(0, 2))] + [gen.random_provable(rng)]
        rng.shuffle(ds)
        try:
            bad += saturate.disjunction_property(th, ds, _fragment(args)) is None
        except saturate.PropertyViolation:
            bad += 1
    return bad, args.trials


PROP_SUITES = {
    "soundness": _suite_soundness,
    "axiom": _suite_axiom,
    "lattices": _suite_lattices,
    "entails": _suite_entails,
    "dp": _suite_dp,
}


# ----------------------------------------------------------------------------
# argument parsing


def _common():
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    c.add_argument("--trials", type=int, default=200)
    c.add_argument("--max-worlds", type=int, default=4)
    c.add_argument("--max-elems", type=int, default=3)
    c.add_argument("--fragment-depth", type=int, default=8)
    c.add_argument("--theory", help="theory file (signature and axioms)")
    return c


def build_parser():
    common = _common()
    p = argparse.ArgumentParser(prog="ikbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)

    s = add("check", help="check a derivation file")
    s.add_argument("derivation")
    s.set_defaults(func=cmd_check)

    s = add("force", help="evaluate a formula in a Kripke model")
    s.add_argument("model")
    s.add_argument("formula")
    s.add_argument("--world")
    s.add_argument("--env", nargs="*", default=[], help="bindings name=element")
    s.set_defaults(func=cmd_force)

    s = add("holds", help="check a sequent in a Kripke model")
    s.add_argument("model")
    s.add_argument("sequent")
    s.set_defaults(func=cmd_holds)

    s = add("lattice", help="finite lattice operations")
    s.add_argument("sub", choices=["distributive", "tree-dist", "primes", "construct", "extend",
                                   "spectrum", "dual", "rs"])
    s.add_argument("file")
    s.add_argument("a", nargs="?")
    s.add_argument("b", nargs="?")
    s.add_argument("--gamma", type=int, default=2)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--filter", default="")
    s.add_argument("--ideal", default="")
    s.set_defaults(func=cmd_lattice)

    for name, fn, helptext in (("entails", cmd_entails, "decide coherent entailment"),
                               ("countermodel", cmd_countermodel, "find a refuting Herbrand model"),
                               ("provable", cmd_provable, "decide provability in the canonical Kripke model")):
        s = add(name, help=helptext)
        s.add_argument("theory_file")
        s.add_argument("sequent")
        if name == "provable":
            s.add_argument("--certificate", help="write the Kripke countermodel here")
        s.set_defaults(func=fn)

    s = add("canonical", help="print the canonical Kripke model of a theory")
    s.add_argument("theory_file")
    s.set_defaults(func=cmd_canonical)

    s = add("props", help="run property suites")
    s.add_argument("--suite", action="append", choices=sorted(PROP_SUITES))
    s.set_defaults(func=cmd_props)
    return p


def _check_args(p, args):
    if args.command == "lattice" and args.sub in ("construct", "rs") and (args.a is None or args.b is None):
        p.error(f"lattice {args.sub} needs two elements")
    if args.trials < 0 or args.max_worlds < 1 or args.max_elems < 1 or args.fragment_depth < 0:
        p.error("numeric flags must be positive")


def run(argv=None, out=None):
    out = out or sys.stdout
    p = build_parser()
    args = p.parse_args(argv)
    _check_args(p, args)
    rep = Report(out)
    try:
        return args.func(args, rep)
    except (IKError, OSError) as exc:
        rep.kv("error", f"{type(exc).__name__}: {exc}")
        return ERROR


def main(argv=None):
    try:
        code = run(argv)
    except SystemExit as exc:           # argparse usage errors
        code = exc.code if isinstance(exc.code, int) else ERROR
    sys.exit(code)


if __name__ == "__main__":
    main()
