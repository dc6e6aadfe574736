"""Derivations in the infinitary sequent calculus and their checker.

Rule tags come in a fixed set.  The three invertible rules (implication,
existential, universal) get two tags each: ``*-intro`` reads the double line
downwards (the connective appears in the conclusion) and ``*-elim`` reads it
upwards.

The dual distributivity and transfinite transitivity rules carry a
``TreeFamily`` (a labelling of the ``gamma``-branching tree of height ``d``)
and a ``Bar``.  At finite height there are no limit levels, so their limit
premises are vacuous; a payload may still list them, but the list must be
empty.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field

from .errors import IKError, ParseError, PreconditionError
from .syntax import (And, Atom, Eq, Exists, Forall, Imp, Or, Sequent, TOP, Var, alpha_eq,
                     check_sequent, exists, free_vars, parse_context, parse_formula,
                     parse_sequent, parse_term, print_block, print_formula, print_sequent, print_term,
                     substitute, term_vars)
from .verdict import Verdict

RULES = (
    "identity", "substitution", "cut", "eq-refl", "eq-subst",
    "conj-elim", "conj-intro", "disj-intro", "disj-elim",
    "imp-intro", "imp-elim", "ex-intro", "ex-elim", "all-intro", "all-elim",
    "dual-dist", "trans-trans", "theory-axiom",
)


class MalformedPayload(IKError):
    pass


# ----------------------------------------------------------------------------
# trees and bars


def addresses(gamma, d):
    """All node addresses of the tree, by level then left to right."""
    out = []
    for n in range(d + 1):
        out.extend(itertools.product(range(gamma), repeat=n))
    return out


def successors(f, gamma):
    return [f + (i,) for i in range(gamma)]


@dataclass(frozen=True)
class Bar:
    nodes: frozenset

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(tuple(a) for a in self.nodes))

    def level(self, f):
        return len(f)

    def ordered(self):
        return sorted(self.nodes)

    @classmethod
    def level_bar(cls, gamma, level):
        return cls(frozenset(itertools.product(range(gamma), repeat=level)))


@dataclass
class TreeFamily:
    gamma: int
    d: int
    labels: dict
    contexts: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gamma < 1 or self.d < 1:
            raise MalformedPayload("tree needs gamma >= 1 and d >= 1")
        for f in addresses(self.gamma, self.d):
            if f not in self.labels:
                raise MalformedPayload(f"tree label missing at {fmt_addr(f)}")
        for f in self.labels:
            if len(f) > self.d or any(not 0 <= i < self.gamma for i in f):
                raise MalformedPayload(f"tree label at out-of-range address {fmt_addr(f)}")

    def path(self, f):
        """Labels of f|1, ..., f|len(f)."""
        return [self.labels[f[:k]] for k in range(1, len(f) + 1)]


def fmt_addr(f):
    return "<" + ",".join(map(str, f)) + ">"


def parse_addr(s):
    s = s.strip()
    if not (s.startswith("<") and s.endswith(">")):
        raise MalformedPayload(f"bad address {s!r}")
    inner = s[1:-1].strip()
    return tuple(int(x) for x in inner.split(",")) if inner else ()


def check_bar(gamma, d, bar):
    """Accept iff ``bar`` is an antichain meeting every branch of the tree."""
    nodes = bar.nodes if isinstance(bar, Bar) else frozenset(map(tuple, bar))
    for f in nodes:
        if len(f) > d or any(not 0 <= i < gamma for i in f):
            raise PreconditionError(f"address {fmt_addr(f)} outside the {gamma}-branching tree of height {d}")
    for f in sorted(nodes):
        for k in range(len(f)):
            if f[:k] in nodes:
                return Verdict.reject("bar is not an antichain", where=(f[:k], f))
    for leaf in itertools.product(range(gamma), repeat=d):
        if not any(leaf[:k] in nodes for k in range(d + 1)):
            return Verdict.reject("branch not met by the bar", where=leaf)
    return Verdict.accept()


# ----------------------------------------------------------------------------
# derivations


@dataclass
class Derivation:
    conclusion: Sequent
    rule: str
    payload: dict = field(default_factory=dict)
    premises: tuple = ()

    def __post_init__(self):
        self.premises = tuple(self.premises)

    def size(self):
        return 1 + sum(p.size() for p in self.premises)


def _ctx(s):
    return frozenset(s.context)


def _same_ctx(a, b):
    return frozenset(a) == frozenset(b)


def _fail(msg, where=None):
    return Verdict.reject(msg, where=where)


def _npremises(premises, n, rule):
    if len(premises) != n:
        return _fail(f"{rule} expects {n} premise(s), got {len(premises)}")
    return None


def check_rule_instance(rule, payload, premises, conclusion, sig=None, theory=None):
    """Check one rule application; reports the first failed condition."""
    if rule not in RULES:
        raise MalformedPayload(f"unknown rule tag {rule!r}")
    payload = payload or {}
    premises = list(premises)
    if sig is not None:
        for s in premises + [conclusion]:
            check_sequent(s, sig)
    return _CHECKERS[rule](payload, premises, conclusion, sig, theory)


def _identity(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "identity")
    if bad is not None:
        return bad
    if not alpha_eq(c.antecedent, c.succedent):
        return _fail("identity needs equal antecedent and succedent")
    return Verdict.accept()


def _substitution(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "substitution")
    if bad is not None:
        return bad
    if "sub" not in payload or "target" not in payload:
        raise MalformedPayload("substitution payload needs 'sub' and 'target'")
    p = prem[0]
    sub = dict(payload["sub"])
    target = tuple(payload["target"])
    for v in sub:
        if v not in p.context:
            return _fail(f"substituted variable {v.name} is not in the premise context")
        if v.sort != sub[v].sort:
            return _fail(f"substitution for {v.name} changes sort")
    full = {x: sub.get(x, x) for x in p.context}
    used = frozenset()
    for t in full.values():
        used |= term_vars(t)
    if not used <= frozenset(target):
        missing = sorted(v.name for v in used - frozenset(target))
        return _fail(f"target context must include all variables of the terms; missing {missing}")
    if not _same_ctx(c.context, target):
        return _fail("conclusion context differs from the substitution target context")
    if not alpha_eq(c.antecedent, substitute(p.antecedent, full)):
        return _fail("antecedent is not the substitution instance")
    if not alpha_eq(c.succedent, substitute(p.succedent, full)):
        return _fail("succedent is not the substitution instance")
    return Verdict.accept()


def _cut(payload, prem, c, sig, theory):
    bad = _npremises(prem, 2, "cut")
    if bad is not None:
        return bad
    a, b = prem
    if not (_same_ctx(a.context, c.context) and _same_ctx(b.context, c.context)):
        return _fail("cut premises and conclusion must share the context")
    if not alpha_eq(a.succedent, b.antecedent):
        return _fail("cut formula differs between the premises")
    if not alpha_eq(c.antecedent, a.antecedent):
        return _fail("conclusion antecedent differs from the first premise")
    if not alpha_eq(c.succedent, b.succedent):
        return _fail("conclusion succedent differs from the second premise")
    return Verdict.accept()


def _eq_refl(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "eq-refl")
    if bad is not None:
        return bad
    if c.antecedent != TOP:
        return _fail("eq-refl antecedent must be true")
    s = c.succedent
    if not (isinstance(s, Eq) and isinstance(s.lhs, Var) and s.lhs == s.rhs):
        return _fail("eq-refl succedent must be x = x for a variable x")
    if tuple(c.context) != (s.lhs,):
        return _fail("eq-refl context must be exactly the equated variable")
    return Verdict.accept()


def equations(xs, ys):
    """The formula ``xs = ys``: a single equation, or a conjunction of them."""
    eqs = tuple(Eq(x, y) for x, y in zip(xs, ys))
    return eqs[0] if len(eqs) == 1 else And(eqs)


def _eq_subst(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "eq-subst")
    if bad is not None:
        return bad
    try:
        xs, ys, ws, phi = (tuple(payload["xs"]), tuple(payload["ys"]),
                           tuple(payload["w"]), payload["phi"])
    except KeyError as exc:
        raise MalformedPayload(f"eq-subst payload lacks {exc}") from None
    if not (len(xs) == len(ys) == len(ws)):
        return _fail("eq-subst contexts must have the same length")
    for x, y, w in zip(xs, ys, ws):
        if not (x.sort == y.sort == w.sort):
            return _fail("eq-subst contexts must have the same type")
    for block in (xs, ys, ws):
        if len(set(block)) != len(block):
            return _fail("eq-subst contexts must list distinct variables")
    expect_a = And((equations(xs, ys), substitute(phi, dict(zip(ws, xs)))))
    expect_s = substitute(phi, dict(zip(ws, ys)))
    if not (set(xs) | set(ys)) <= _ctx(c):
        return _fail("eq-subst context must contain both variable strings")
    if not alpha_eq(c.antecedent, expect_a):
        return _fail("eq-subst antecedent mismatch")
    if not alpha_eq(c.succedent, expect_s):
        return _fail("eq-subst succedent mismatch")
    return Verdict.accept()


def _index(payload, n, rule):
    if "j" not in payload:
        raise MalformedPayload(f"{rule} payload needs index 'j'")
    j = payload["j"]
    if not isinstance(j, int) or not 0 <= j < n:
        return None
    return j


def _conj_elim(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "conj-elim")
    if bad is not None:
        return bad
    a = c.antecedent
    if not isinstance(a, And):
        return _fail("conj-elim antecedent must be a conjunction")
    j = _index(payload, len(a.parts), "conj-elim")
    if j is None:
        return _fail("conj-elim index out of range")
    if not alpha_eq(a.parts[j], c.succedent):
        return _fail(f"succedent is not conjunct {j}")
    return Verdict.accept()


def _conj_intro(payload, prem, c, sig, theory):
    s = c.succedent
    if not isinstance(s, And):
        return _fail("conj-intro succedent must be a conjunction")
    if len(prem) != len(s.parts):
        return _fail(f"conj-intro expects {len(s.parts)} premises, got {len(prem)}")
    for i, (p, part) in enumerate(zip(prem, s.parts)):
        if not _same_ctx(p.context, c.context):
            return _fail("premise context differs", where=i)
        if not alpha_eq(p.antecedent, c.antecedent):
            return _fail("premise antecedent differs", where=i)
        if not alpha_eq(p.succedent, part):
            return _fail(f"premise {i} does not prove conjunct {i}", where=i)
    return Verdict.accept()


def _disj_intro(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "disj-intro")
    if bad is not None:
        return bad
    s = c.succedent
    if not isinstance(s, Or):
        return _fail("disj-intro succedent must be a disjunction")
    j = _index(payload, len(s.parts), "disj-intro")
    if j is None:
        return _fail("disj-intro index out of range")
    if not alpha_eq(s.parts[j], c.antecedent):
        return _fail(f"antecedent is not disjunct {j}")
    return Verdict.accept()


def _disj_elim(payload, prem, c, sig, theory):
    a = c.antecedent
    if not isinstance(a, Or):
        return _fail("disj-elim antecedent must be a disjunction")
    if len(prem) != len(a.parts):
        return _fail(f"disj-elim expects {len(a.parts)} premises, got {len(prem)}")
    for i, (p, part) in enumerate(zip(prem, a.parts)):
        if not _same_ctx(p.context, c.context):
            return _fail("premise context differs", where=i)
        if not alpha_eq(p.succedent, c.succedent):
            return _fail("premise succedent differs", where=i)
        if not alpha_eq(p.antecedent, part):
            return _fail(f"premise {i} does not start from disjunct {i}", where=i)
    return Verdict.accept()


def _imp_pair(top, bottom):
    """top: phi & psi |- eta ; bottom: phi |- psi -> eta."""
    if not _same_ctx(top.context, bottom.context):
        return _fail("implication rule keeps the context")
    a = top.antecedent
    if not (isinstance(a, And) and len(a.parts) == 2):
        return _fail("upper antecedent must be a binary conjunction")
    s = bottom.succedent
    if not isinstance(s, Imp):
        return _fail("lower succedent must be an implication")
    if not alpha_eq(a.parts[0], bottom.antecedent):
        return _fail("left conjunct differs from the lower antecedent")
    if not alpha_eq(a.parts[1], s.ante):
        return _fail("right conjunct differs from the implication's antecedent")
    if not alpha_eq(top.succedent, s.cons):
        return _fail("upper succedent differs from the implication's consequent")
    return Verdict.accept()


def _imp_intro(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "imp-intro")
    return bad if bad is not None else _imp_pair(prem[0], c)


def _imp_elim(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "imp-elim")
    return bad if bad is not None else _imp_pair(c, prem[0])


def _quant_pair(top, bottom, payload, kind):
    """top: phi |-_{x y} psi ; bottom: Q y phi |-_x psi (ex) or phi |-_x Q y psi (all)."""
    q = bottom.antecedent if kind == "ex" else bottom.succedent
    cls = Exists if kind == "ex" else Forall
    if not isinstance(q, cls):
        side = "antecedent" if kind == "ex" else "succedent"
        return _fail(f"{kind} rule needs a quantified {side}")
    block = tuple(payload.get("block", q.block))
    if tuple(q.block) != block:
        return _fail("quantifier block differs from the payload block")
    if set(block) & _ctx(bottom):
        return _fail("quantified variables must not occur in the outer context")
    if _ctx(top) != _ctx(bottom) | frozenset(block):
        return _fail("upper context must be the outer context extended by the block")
    other_top = top.succedent if kind == "ex" else top.antecedent
    other_bottom = bottom.succedent if kind == "ex" else bottom.antecedent
    quant_top = top.antecedent if kind == "ex" else top.succedent
    if set(block) & free_vars(other_bottom):
        which = "succedent" if kind == "ex" else "antecedent"
        return _fail(f"a quantified variable is free in the {which}")
    if not alpha_eq(other_top, other_bottom):
        return _fail("side formula changed")
    if not alpha_eq(quant_top, q.body):
        return _fail("quantifier body differs")
    return Verdict.accept()


def _ex_intro(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "ex-intro")
    return bad if bad is not None else _quant_pair(prem[0], c, payload, "ex")


def _ex_elim(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "ex-elim")
    return bad if bad is not None else _quant_pair(c, prem[0], payload, "ex")


def _all_intro(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "all-intro")
    return bad if bad is not None else _quant_pair(prem[0], c, payload, "all")


def _all_elim(payload, prem, c, sig, theory):
    bad = _npremises(prem, 1, "all-elim")
    return bad if bad is not None else _quant_pair(c, prem[0], payload, "all")


def _tree_payload(payload, sig):
    try:
        tree, bar = payload["tree"], payload["bar"]
    except KeyError as exc:
        raise MalformedPayload(f"tree rule payload lacks {exc}") from None
    if payload.get("limit_premises"):
        return None, None, _fail("finite trees have no limit levels; limit premises must be empty")
    if sig is not None:
        if tree.gamma > sig.conn_bound:
            return None, None, _fail(f"branching {tree.gamma} exceeds the width bound")
        if tree.d > sig.arity_bound:
            return None, None, _fail(f"height {tree.d} exceeds the height bound")
    vb = check_bar(tree.gamma, tree.d, bar)
    if not vb:
        return None, None, Verdict.reject(f"invalid bar: {vb.reason}", where=vb.where)
    return tree, bar, None


def inner_nodes(tree):
    return [f for f in addresses(tree.gamma, tree.d) if len(f) < tree.d]


def dual_dist_premises(tree, context):
    return [Sequent(And(tuple(tree.labels[g] for g in successors(f, tree.gamma))), context, tree.labels[f])
            for f in inner_nodes(tree)]


def dual_dist_conclusion(tree, bar, context):
    ante = And(tuple(Or(tuple(tree.path(f))) for f in bar.ordered()))
    return Sequent(ante, context, tree.labels[()])


def _dual_dist(payload, prem, c, sig, theory):
    tree, bar, bad = _tree_payload(payload, sig)
    if bad is not None:
        return bad
    inner = inner_nodes(tree)
    if len(prem) != len(inner):
        return _fail(f"dual-dist expects {len(inner)} premises, got {len(prem)}")
    for i, (f, p) in enumerate(zip(inner, prem)):
        want = And(tuple(tree.labels[g] for g in successors(f, tree.gamma)))
        if not _same_ctx(p.context, c.context):
            return _fail(f"premise at {fmt_addr(f)} has a different context", where=i)
        if not alpha_eq(p.antecedent, want):
            return _fail(f"premise at {fmt_addr(f)} must start from the meet of the successors", where=i)
        if not alpha_eq(p.succedent, tree.labels[f]):
            return _fail(f"premise at {fmt_addr(f)} must end in the node label", where=i)
    want = dual_dist_conclusion(tree, bar, c.context)
    if not alpha_eq(c.succedent, want.succedent):
        return _fail("conclusion succedent must be the root label")
    if not alpha_eq(c.antecedent, want.antecedent):
        return _fail("conclusion antecedent must be the meet over the bar of the path joins")
    return Verdict.accept()


def trans_trans_premises(tree):
    out = []
    for f in inner_nodes(tree):
        succ = Or(tuple(exists(tree.blocks.get(g, ()), tree.labels[g]) for g in successors(f, tree.gamma)))
        out.append(Sequent(tree.labels[f], tree.contexts[f], succ))
    return out


def trans_trans_conclusion(tree, bar):
    disjuncts = []
    for f in bar.ordered():
        block = tuple(v for k in range(1, len(f) + 1) for v in tree.blocks.get(f[:k], ()))
        disjuncts.append(exists(block, And(tuple(tree.path(f)))))
    return Sequent(tree.labels[()], tree.contexts[()], Or(tuple(disjuncts)))


def canonical_contexts(tree):
    """Context of each node: ordered free variables of its label."""
    from .syntax import ordered_vars
    return {f: ordered_vars(free_vars(tree.labels[f])) for f in tree.labels}


def _trans_trans(payload, prem, c, sig, theory):
    tree, bar, bad = _tree_payload(payload, sig)
    if bad is not None:
        return bad
    for f in addresses(tree.gamma, tree.d):
        if f not in tree.contexts:
            raise MalformedPayload(f"trans-trans context missing at {fmt_addr(f)}")
        if not _same_ctx(tree.contexts[f], free_vars(tree.labels[f])):
            return _fail(f"context at {fmt_addr(f)} is not the canonical context of its label")
    for f in addresses(tree.gamma, tree.d):
        if not f:
            continue
        xf = frozenset(tree.blocks.get(f, ()))
        if len(xf) != len(tree.blocks.get(f, ())):
            return _fail(f"block at {fmt_addr(f)} repeats a variable")
        parent_fv = free_vars(tree.labels[f[:-1]])
        if xf & parent_fv:
            return _fail(f"FV side condition: block at {fmt_addr(f)} meets the free variables of its parent",
                         where=f)
        if free_vars(tree.labels[f]) != parent_fv | xf:
            return _fail(f"FV side condition: free variables at {fmt_addr(f)} must be the parent's plus the block",
                         where=f)
    inner = inner_nodes(tree)
    if len(prem) != len(inner):
        return _fail(f"trans-trans expects {len(inner)} premises, got {len(prem)}")
    for i, (p, want) in enumerate(zip(prem, trans_trans_premises(tree))):
        f = inner[i]
        if not _same_ctx(p.context, want.context):
            return _fail(f"premise at {fmt_addr(f)} has a different context", where=i)
        if not alpha_eq(p.antecedent, want.antecedent):
            return _fail(f"premise at {fmt_addr(f)} must start from the node label", where=i)
        if not alpha_eq(p.succedent, want.succedent):
            return _fail(f"premise at {fmt_addr(f)} must end in the join of the quantified successors", where=i)
    want = trans_trans_conclusion(tree, bar)
    if not _same_ctx(c.context, want.context):
        return _fail("conclusion context must be the root context")
    if not alpha_eq(c.antecedent, want.antecedent):
        return _fail("conclusion antecedent must be the root label")
    if not alpha_eq(c.succedent, want.succedent):
        return _fail("conclusion succedent must be the join over the bar of the quantified path meets")
    return Verdict.accept()


def sequent_in(s, theory):
    return any(_same_ctx(s.context, t.context) and alpha_eq(s.antecedent, t.antecedent)
               and alpha_eq(s.succedent, t.succedent) for t in theory)


def _theory_axiom(payload, prem, c, sig, theory):
    bad = _npremises(prem, 0, "theory-axiom")
    if bad is not None:
        return bad
    if theory is not None and not sequent_in(c, theory):
        return _fail("sequent is not an axiom of the theory")
    return Verdict.accept()


_CHECKERS = {
    "identity": _identity, "substitution": _substitution, "cut": _cut,
    "eq-refl": _eq_refl, "eq-subst": _eq_subst,
    "conj-elim": _conj_elim, "conj-intro": _conj_intro,
    "disj-intro": _disj_intro, "disj-elim": _disj_elim,
    "imp-intro": _imp_intro, "imp-elim": _imp_elim,
    "ex-intro": _ex_intro, "ex-elim": _ex_elim,
    "all-intro": _all_intro, "all-elim": _all_elim,
    "dual-dist": _dual_dist, "trans-trans": _trans_trans,
    "theory-axiom": _theory_axiom,
}


def check_derivation(d, theory=(), sig=None):
    """Check every node; the verdict's ``where`` is the premise-index path to the first failure."""
    theory = list(theory)
    stack = [(d, ())]
    while stack:
        node, path = stack.pop()
        try:
            v = check_rule_instance(node.rule, node.payload, [p.conclusion for p in node.premises],
                                    node.conclusion, sig=sig, theory=theory)
        except IKError as exc:
            return Verdict.reject(f"{node.rule}: {exc}", where=path)
        if not v:
            return Verdict.reject(f"{node.rule}: {v.reason}", where=path, detail=v.where)
        for i in reversed(range(len(node.premises))):
            stack.append((node.premises[i], path + (i,)))
    return Verdict.accept()


# ----------------------------------------------------------------------------
# the distributive law


def _ident(phi, ctx):
    return Derivation(Sequent(phi, ctx, phi), "identity")


def _cut_d(a, b):
    ca, cb = a.conclusion, b.conclusion
    return Derivation(Sequent(ca.antecedent, ca.context, cb.succedent), "cut", {}, (a, b))


def _disj_in(phi, disjunction, j, ctx):
    return Derivation(Sequent(phi, ctx, disjunction), "disj-intro", {"j": j})


def _conj_out(conjunction, j, ctx):
    return Derivation(Sequent(conjunction, ctx, conjunction.parts[j]), "conj-elim", {"j": j})


def derive_distributive_law(phi, psis, context=None, sig=None):
    """Derivation of ``and_i(phi | psi_i) |- phi | and_i psi_i`` through one dual-dist step.

    The tree has branching ``gamma = len(psis)`` and height 2; every level-1
    node carries the target ``R = phi | and(psis)``, node ``<i,j>`` carries
    ``psi_j``, and the bar is the whole second level.  Each bar conjunct
    ``R | psi_j`` follows from ``phi | psi_j``.
    """
    psis = tuple(psis)
    gamma = len(psis)
    if gamma < 1:
        raise PreconditionError("need at least one psi")
    if sig is not None and gamma > sig.conn_bound:
        raise PreconditionError(f"width {gamma} exceeds the width bound {sig.conn_bound}")
    fv = free_vars(phi)
    for p in psis:
        fv |= free_vars(p)
    if context is None:
        from .syntax import ordered_vars
        context = ordered_vars(fv)
    ctx = tuple(context)
    big_and = And(psis)
    target = Or((phi, big_and))
    antecedent = And(tuple(Or((phi, p)) for p in psis))

    labels = {(): target}
    for i in range(gamma):
        labels[(i,)] = target
        for j in range(gamma):
            labels[(i, j)] = psis[j]
    tree = TreeFamily(gamma, 2, labels)
    bar = Bar.level_bar(gamma, 2)

    root_prem = _conj_out(And((target,) * gamma), 0, ctx)
    level1 = [_disj_in(big_and, target, 1, ctx) for _ in range(gamma)]
    dd_concl = dual_dist_conclusion(tree, bar, ctx)
    dd = Derivation(dd_concl, "dual-dist", {"tree": tree, "bar": bar, "limit_premises": []},
                    [root_prem] + level1)

    # antecedent |- R | psi_j for every bar node <i,j>
    pieces = []
    for (i, j) in bar.ordered():
        wide = Or((target, psis[j]))
        phi_to = _cut_d(_disj_in(phi, target, 0, ctx), _disj_in(target, wide, 0, ctx))
        psi_to = _disj_in(psis[j], wide, 1, ctx)
        case = Derivation(Sequent(Or((phi, psis[j])), ctx, wide), "disj-elim", {}, (phi_to, psi_to))
        pieces.append(_cut_d(_conj_out(antecedent, j, ctx), case))
    gather = Derivation(Sequent(antecedent, ctx, dd_concl.antecedent), "conj-intro", {}, pieces)
    return _cut_d(gather, dd)


# ----------------------------------------------------------------------------
# derivation files

_LINE_RE = re.compile(r"^(\w+):\s*([\w-]+)\s+premises=\[([^\]]*)\]\s+payload=(\{.*\})\s+conclusion=(.+)$")


def _parse_payload(rule, raw, sig, premises, conclusion):
    out = {}
    if rule == "substitution":
        p = premises[0]
        target = parse_context(raw["target"], sig)
        byname = {v.name: v for v in p.context}
        sub = {}
        for name, text in raw.get("sub", {}).items():
            if name not in byname:
                raise MalformedPayload(f"substituted variable {name} is not in the premise context")
            sub[byname[name]] = parse_term(text, sig, context=target)
        out = {"sub": sub, "target": target}
    elif rule == "eq-subst":
        xs, ys, ws = (parse_context(raw[k], sig) for k in ("xs", "ys", "w"))
        ctx = tuple(conclusion.context) + ws
        seen, scope = set(), []
        for v in ctx:
            if v.name not in seen:
                seen.add(v.name)
                scope.append(v)
        out = {"xs": xs, "ys": ys, "w": ws, "phi": parse_formula(raw["phi"], sig, context=scope)}
    elif rule in ("conj-elim", "disj-intro"):
        out = {"j": raw["j"]}
    elif rule in ("ex-intro", "ex-elim", "all-intro", "all-elim"):
        if "block" in raw:
            out = {"block": parse_context(raw["block"], sig)}
    elif rule in ("dual-dist", "trans-trans"):
        gamma, d = int(raw["gamma"]), int(raw["d"])
        contexts = {}
        for entry in raw.get("contexts", []):
            a, _, ctx = entry.partition("->")
            contexts[parse_addr(a)] = parse_context(ctx, sig)
        blocks = {}
        for entry in raw.get("blocks", []):
            a, _, blk = entry.partition("->")
            blocks[parse_addr(a)] = parse_context(blk, sig)
        labels = {}
        for entry in raw.get("labels", []):
            a, _, text = entry.partition("->")
            f = parse_addr(a)
            scope = contexts.get(f, conclusion.context)
            labels[f] = parse_formula(text, sig, context=scope)
        out = {"tree": TreeFamily(gamma, d, labels, contexts, blocks),
               "bar": Bar(frozenset(parse_addr(a) for a in raw["bar"])),
               "limit_premises": list(raw.get("limit_premises", []))}
    return out


def parse_derivation(text, sig):
    """Read the line-oriented derivation format; the last node is the root."""
    nodes = {}
    last = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ParseError("malformed derivation line", line=i)
        nid, rule, prem_ids, payload_text, concl_text = m.groups()
        if rule not in RULES:
            raise ParseError(f"unknown rule tag {rule!r}", line=i)
        if nid in nodes:
            raise ParseError(f"duplicate node id {nid}", line=i)
        ids = [p.strip() for p in prem_ids.split(",") if p.strip()]
        for p in ids:
            if p not in nodes:
                raise ParseError(f"premise {p} is not defined before use", line=i)
        try:
            conclusion = parse_sequent(concl_text.strip(), sig)
            payload_raw = json.loads(payload_text)
            premises = [nodes[p] for p in ids]
            payload = _parse_payload(rule, payload_raw, sig, [p.conclusion for p in premises], conclusion)
        except (IKError, ValueError, KeyError) as exc:
            if isinstance(exc, ParseError) and exc.line is not None:
                raise
            raise ParseError(f"{type(exc).__name__}: {exc}", line=i) from None
        nodes[nid] = Derivation(conclusion, rule, payload, premises)
        last = nid
    if last is None:
        raise ParseError("empty derivation")
    return nodes[last]


def _payload_json(d):
    p = d.payload
    if d.rule == "substitution":
        return {"sub": {v.name: print_term(t) for v, t in p["sub"].items()}, "target": print_block(p["target"])}
    if d.rule == "eq-subst":
        return {"xs": print_block(p["xs"]), "ys": print_block(p["ys"]), "w": print_block(p["w"]),
                "phi": print_formula(p["phi"])}
    if d.rule in ("conj-elim", "disj-intro"):
        return {"j": p["j"]}
    if d.rule in ("ex-intro", "ex-elim", "all-intro", "all-elim") and "block" in p:
        return {"block": print_block(p["block"])}
    if d.rule in ("dual-dist", "trans-trans"):
        t = p["tree"]
        out = {"gamma": t.gamma, "d": t.d,
               "labels": [f"{fmt_addr(f)} -> {print_formula(t.labels[f])}" for f in addresses(t.gamma, t.d)],
               "bar": [fmt_addr(f) for f in p["bar"].ordered()],
               "limit_premises": list(p.get("limit_premises", []))}
        if t.contexts:
            out["contexts"] = [f"{fmt_addr(f)} -> {print_block(c)}" for f, c in sorted(t.contexts.items())]
        if t.blocks:
            out["blocks"] = [f"{fmt_addr(f)} -> {print_block(b)}" for f, b in sorted(t.blocks.items())]
        return out
    return {}


def print_derivation(d):
    lines = []
    counter = itertools.count()

    def emit(node):
        ids = [emit(p) for p in node.premises]
        nid = f"n{next(counter)}"
        lines.append(f"{nid}: {node.rule} premises=[{','.join(ids)}] "
                     f"payload={json.dumps(_payload_json(node))} conclusion={print_sequent(node.conclusion)}")
        return nid

    emit(d)
    return "\n".join(lines) + "\n"
