"""Random formulas and random well-formed rule instances for property suites."""

from __future__ import annotations

import itertools

from .calculus import (Bar, TreeFamily, addresses, dual_dist_conclusion, dual_dist_premises,
                       equations, trans_trans_conclusion, trans_trans_premises)
from .kripke import check_soundness, random_model
from .syntax import (And, App, Atom, BOT, Eq, Exists, Forall, Imp, Or, Sequent, TOP, Var,
                     free_vars, make_signature, ordered_vars, substitute, term_vars)

# Small one-sorted signature used by the soundness suites.
SMALL_SIG = make_signature(relations={"P": ["S"], "Q": ["S"], "R": ["S", "S"], "E": []},
                           constants={"c": "S"}, functions={"f": (["S"], "S")})


def random_term(sig, rng, variables, sort, depth=1):
    vs = [v for v in variables if v.sort == sort]
    consts = sig.constants(sort)
    funs = [(n, a) for n, (a, r) in sig.functions.items() if r == sort and a]
    choices = [("var", v) for v in vs] + [("const", c) for c in consts]
    if depth > 0 and funs and (not choices or rng.random() < 0.2):
        name, args = rng.choice(funs)
        return App(name, tuple(random_term(sig, rng, variables, s, depth - 1) for s in args), sort)
    if not choices:
        raise ValueError(f"no closed term of sort {sort}")
    kind, x = rng.choice(choices)
    return x if kind == "var" else App(x, (), sort)


def random_atom(sig, rng, variables):
    rels = sorted(sig.relations)
    if rng.random() < 0.15:
        sort = sig.default_sort
        return Eq(random_term(sig, rng, variables, sort), random_term(sig, rng, variables, sort))
    r = rng.choice(rels)
    return Atom(r, tuple(random_term(sig, rng, variables, s) for s in sig.relations[r]))


def random_formula(sig, rng, variables=(), depth=2, width=3, quantifiers=True, bound_names="uvw",
                   coherent=False):
    """A random formula whose free variables lie in ``variables``.

    With ``coherent`` set, only conjunction, disjunction and existentials occur.
    """
    variables = tuple(variables)
    if depth <= 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.06:
            return TOP
        if roll < 0.1:
            return BOT
        return random_atom(sig, rng, variables)
    if coherent:
        kinds = ["and", "or"] + (["ex"] if quantifiers else [])
    else:
        kinds = ["and", "or", "imp"] + (["ex", "all"] if quantifiers else [])
    kind = rng.choice(kinds)
    sub = lambda vs=variables: random_formula(sig, rng, vs, depth - 1, width, quantifiers, bound_names,
                                              coherent)
    if kind in ("and", "or"):
        parts = tuple(sub() for _ in range(rng.randint(0, width)))
        return And(parts) if kind == "and" else Or(parts)
    if kind == "imp":
        return Imp(sub(), sub())
    taken = {v.name for v in variables}
    names = [n for n in bound_names if n not in taken] or [f"{bound_names[0]}{len(taken)}"]
    k = rng.randint(1, min(2, len(names)))
    block = tuple(Var(n, sig.default_sort) for n in rng.sample(names, k))
    inner = tuple(v for v in variables if v not in block and v.name not in {b.name for b in block}) + block
    body = sub(inner)
    return Exists(block, body) if kind == "ex" else Forall(block, body)


# ----------------------------------------------------------------------------
# rule instances


def _vars(names, sort="S"):
    return tuple(Var(n, sort) for n in names)


def random_instance(rule, rng, sig=SMALL_SIG, width=3, depth=2):
    """A (payload, premises, conclusion) triple that instantiates ``rule``."""
    F = lambda vs, d=depth - 1: random_formula(sig, rng, vs, d, width)
    xs = _vars("xy")
    ctx_vars = xs[: rng.randint(0, 2)]

    if rule == "identity" or rule == "theory-axiom":
        phi = F(ctx_vars)
        psi = phi if rule == "identity" else F(ctx_vars)
        return {}, [], Sequent(phi, ctx_vars, psi)

    if rule == "cut":
        a, b, c = F(ctx_vars), F(ctx_vars), F(ctx_vars)
        return {}, [Sequent(a, ctx_vars, b), Sequent(b, ctx_vars, c)], Sequent(a, ctx_vars, c)

    if rule == "substitution":
        src = _vars("xy")
        target = _vars("xz")[: rng.randint(0, 2)]
        sub = {v: random_term(sig, rng, target, v.sort) for v in src if rng.random() < 0.8}
        a, b = F(src), F(src)
        full = {v: sub.get(v, v) for v in src}
        used = set()
        for t in full.values():
            used |= term_vars(t)
        target = ordered_vars(set(target) | used)
        prem = Sequent(a, src, b)
        concl = Sequent(substitute(a, full), target, substitute(b, full))
        return {"sub": sub, "target": target}, [prem], concl

    if rule == "eq-refl":
        x = Var("x", "S")
        return {}, [], Sequent(TOP, (x,), Eq(x, x))

    if rule == "eq-subst":
        n = rng.randint(1, 2)
        xs_, ys_, ws_ = _vars(["x1", "x2"][:n]), _vars(["y1", "y2"][:n]), _vars(["w1", "w2"][:n])
        extra = _vars("z")[: rng.randint(0, 1)]
        phi = F(ws_ + extra)
        ante = And((equations(xs_, ys_), substitute(phi, dict(zip(ws_, xs_)))))
        succ = substitute(phi, dict(zip(ws_, ys_)))
        return ({"xs": xs_, "ys": ys_, "w": ws_, "phi": phi}, [],
                Sequent(ante, xs_ + ys_ + extra, succ))

    if rule in ("conj-elim", "disj-intro"):
        parts = tuple(F(ctx_vars) for _ in range(rng.randint(1, width)))
        j = rng.randrange(len(parts))
        if rule == "conj-elim":
            return {"j": j}, [], Sequent(And(parts), ctx_vars, parts[j])
        return {"j": j}, [], Sequent(parts[j], ctx_vars, Or(parts))

    if rule == "conj-intro":
        phi = F(ctx_vars)
        parts = tuple(F(ctx_vars) for _ in range(rng.randint(0, width)))
        return {}, [Sequent(phi, ctx_vars, p) for p in parts], Sequent(phi, ctx_vars, And(parts))

    if rule == "disj-elim":
        theta = F(ctx_vars)
        parts = tuple(F(ctx_vars) for _ in range(rng.randint(0, width)))
        return {}, [Sequent(p, ctx_vars, theta) for p in parts], Sequent(Or(parts), ctx_vars, theta)

    if rule in ("imp-intro", "imp-elim"):
        phi, psi, eta = F(ctx_vars), F(ctx_vars), F(ctx_vars)
        top = Sequent(And((phi, psi)), ctx_vars, eta)
        bottom = Sequent(phi, ctx_vars, Imp(psi, eta))
        return ({}, [top], bottom) if rule == "imp-intro" else ({}, [bottom], top)

    if rule in ("ex-intro", "ex-elim", "all-intro", "all-elim"):
        outer = _vars("x")[: rng.randint(0, 1)]
        block = _vars("yz")[: rng.randint(1, 2)]
        inner, side = F(outer + block), F(outer)
        if rule.startswith("ex"):
            top = Sequent(inner, outer + block, side)
            bottom = Sequent(Exists(block, inner), outer, side)
        else:
            top = Sequent(side, outer + block, inner)
            bottom = Sequent(side, outer, Forall(block, inner))
        if rule.endswith("intro"):
            return {"block": block}, [top], bottom
        return {"block": block}, [bottom], top

    if rule == "dual-dist":
        gamma, d = rng.randint(1, width), rng.randint(1, 2)
        labels = {f: F(ctx_vars, 1) for f in addresses(gamma, d)}
        tree = TreeFamily(gamma, d, labels)
        bar = random_bar(gamma, d, rng)
        return ({"tree": tree, "bar": bar, "limit_premises": []}, dual_dist_premises(tree, ctx_vars),
                dual_dist_conclusion(tree, bar, ctx_vars))

    if rule == "trans-trans":
        tree = random_trans_tree(rng, sig, width)
        bar = random_bar(tree.gamma, tree.d, rng)
        return ({"tree": tree, "bar": bar, "limit_premises": []}, trans_trans_premises(tree),
                trans_trans_conclusion(tree, bar))

    raise ValueError(f"unknown rule {rule!r}")


def random_bar(gamma, d, rng):
    """Cut the tree at a random antichain meeting every branch."""
    nodes = set()

    def grow(f):
        if len(f) == d or (len(f) > 0 and rng.random() < 0.4) or (not f and rng.random() < 0.1):
            nodes.add(f)
            return
        for i in range(gamma):
            grow(f + (i,))

    grow(())
    return Bar(frozenset(nodes))


def random_trans_tree(rng, sig=SMALL_SIG, width=3):
    """A rule 9 tree whose labels meet the free-variable side conditions exactly."""
    gamma, d = rng.randint(1, width), rng.randint(1, 2)
    counter = itertools.count()
    labels, contexts, blocks = {}, {}, {}
    root_vars = _vars("x")[: rng.randint(0, 1)]

    def label_over(vs):
        phi = random_formula(sig, rng, vs, 1, width)
        missing = set(vs) - free_vars(phi)
        if missing:
            phi = And((phi,) + tuple(Atom("P", (v,)) for v in ordered_vars(missing)))
        return phi

    for f in addresses(gamma, d):
        if not f:
            fv = root_vars
        else:
            parent = contexts[f[:-1]]
            blocks[f] = tuple(Var(f"b{next(counter)}", "S") for _ in range(rng.randint(0, 1)))
            fv = tuple(parent) + blocks[f]
        labels[f] = label_over(fv)
        contexts[f] = ordered_vars(free_vars(labels[f]))
    return TreeFamily(gamma, d, labels, contexts, blocks)


def soundness_trial(rule, rng, sig=SMALL_SIG, width=3, **model_kw):
    """Instantiate ``rule`` at random and test it on one random model.

    A theory axiom is sound relative to models of its theory, so the axiom
    itself joins the premises.
    """
    payload, premises, conclusion = random_instance(rule, rng, sig, width)
    if rule == "theory-axiom":
        premises = premises + [conclusion]
    m = random_model(sig, rng, **model_kw)
    return check_soundness(premises, conclusion, m)


# ----------------------------------------------------------------------------
# theories


def random_constant_signature(rng, max_consts=3, max_rels=3, max_atoms=16):
    """Constants plus relations of arity at most 2, with few ground atoms."""
    while True:
        k = rng.randint(1, max_consts)
        consts = {n: "S" for n in "abc"[:k]}
        rels = {f"R{i}": ["S"] * rng.choice((0, 1, 1, 2)) for i in range(rng.randint(1, max_rels))}
        if sum(k ** len(a) for a in rels.values()) <= max_atoms:
            return make_signature(relations=rels, constants=consts, sorts=("S",))


def random_coherent_sequent(sig, rng, depth=2, width=2):
    ctx = _vars("x")[: rng.randint(0, 1)]
    F = lambda: random_formula(sig, rng, ctx, depth, width, bound_names="yz", coherent=True)
    return Sequent(F(), ctx, F())


def random_coherent_theory(rng, max_axioms=3, **sig_kw):
    """A signature of constants with a few random coherent axioms."""
    from .saturate import CoherentTheory
    sig = random_constant_signature(rng, **sig_kw)
    axioms = [random_coherent_sequent(sig, rng) for _ in range(rng.randint(0, max_axioms))]
    return CoherentTheory(sig, axioms)


# ----------------------------------------------------------------------------
# provable formulas for the disjunction and existence properties

PROP_SIG = make_signature(relations={"P": ["S"], "Q": ["S"]}, constants={"c": "S"})


def _templates(a, b):
    return [
        Imp(a, a),
        Imp(And((a, b)), a),
        Imp(a, Imp(b, a)),
        Imp(a, Or((a, b))),
        Imp(Imp(a, b), Imp(Imp(b, BOT), Imp(a, BOT))),
        Imp(Imp(Imp(Or((a, Imp(a, BOT))), BOT), BOT), TOP),
        Imp(Imp(Imp(Or((a, Imp(a, BOT))), BOT), BOT), Imp(Imp(a, BOT), Imp(a, BOT))),
        Imp(Imp(Imp(a, BOT), BOT), Imp(Imp(a, BOT), BOT)),
        Imp(BOT, a),
        Or((TOP, a)),
    ]


def random_closed_formula(rng, sig=PROP_SIG, depth=2):
    return random_formula(sig, rng, (), depth, 2, bound_names="x")


def random_provable(rng, sig=PROP_SIG, variables=()):
    """A formula provable by construction (an instance of a fixed intuitionistic law)."""
    a = random_formula(sig, rng, variables, 1, 2, bound_names="y")
    b = random_formula(sig, rng, variables, 1, 2, bound_names="y")
    return rng.choice(_templates(a, b))
