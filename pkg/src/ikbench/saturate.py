"""Decision procedures for theories over finitely many constants.

Quantifiers range over the named constants only.  Under this reading a
coherent theory has finitely many Herbrand models, so entailment, the
Lindenbaum algebra and countermodels are all computable.  Intuitionistic
theories are handled through Morleyization and a saturated canonical Kripke
model whose worlds are Herbrand models of the Morleyized theory.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import IKError, ParseError, PreconditionError, ResourceLimitExceeded
from .kripke import model_from_worlds, sequent_counterexample
from .lattice import DesignatedJoins, FinLattice, rs_filter
from .limits import Budget
from .verdict import Verdict
from .syntax import (And, Atom, BOT, Bot, Eq, Exists, Forall, Imp, Or, Sequent, TOP, Top, Var,
                     depth, free_vars, ordered_vars, parse_sequent, parse_signature,
                     print_sequent, print_signature, subformulas, substitute)

ENTAILED = "entailed"
MAX_ATOMS = 22


class OracleDisagreement(IKError):
    """The two entailment procedures returned different answers."""


class PropertyViolation(IKError):
    """A provable disjunction or existential without a provable witness."""


def is_coherent(phi):
    """True iff ``phi`` uses no implication and no universal quantifier."""
    return not any(isinstance(s, (Imp, Forall)) for s in subformulas(phi))


# ----------------------------------------------------------------------------
# theories


@dataclass
class Theory:
    sig: object
    axioms: list = field(default_factory=list)      # Sequents
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.axioms = list(self.axioms)
        if not self.names:
            self.names = [f"ax{i}" for i in range(len(self.axioms))]

    def coherent(self):
        return all(is_coherent(s.antecedent) and is_coherent(s.succedent) for s in self.axioms)


class CoherentTheory(Theory):
    """A theory of coherent sequents over a signature of constants.

    ``equality`` is ``"identity"`` (distinct constants are distinct) or
    ``"congruence"`` (equations between constants are atoms closed under the
    equivalence and congruence laws).
    """

    def __init__(self, sig, axioms=(), names=(), equality="identity", max_axioms=256, morley=None):
        super().__init__(sig, list(axioms), list(names))
        if equality not in ("identity", "congruence"):
            raise PreconditionError(f"unknown equality mode {equality!r}")
        self.equality = equality
        self.morley = morley
        for name, (args, _) in sig.functions.items():
            if args:
                raise PreconditionError(f"function symbol {name} is not a constant")
        if len(self.axioms) > max_axioms:
            raise ResourceLimitExceeded(f"theory has more than {max_axioms} axioms")
        for s in self.axioms:
            if not (is_coherent(s.antecedent) and is_coherent(s.succedent)):
                raise PreconditionError(f"axiom is not coherent: {print_sequent(s)}")
        self._herbrand = None
        self._models = None

    @classmethod
    def from_theory(cls, th, **kw):
        return cls(th.sig, th.axioms, th.names, **kw)

    def extended(self, axioms, names=()):
        return CoherentTheory(self.sig, self.axioms + list(axioms), self.names + list(names),
                              equality=self.equality)

    @property
    def herbrand(self):
        if self._herbrand is None:
            self._herbrand = Herbrand(self.sig, self.equality)
        return self._herbrand

    def ground_axioms(self):
        """(antecedent monomials, succedent monomials) for every ground instance."""
        H = self.herbrand
        out = []
        for s in self.axioms + H.equality_axioms():
            for env in H.assignments(s.context):
                out.append((H.dnf(s.antecedent, env), H.dnf(s.succedent, env)))
        return out

    def models(self):
        """All Herbrand models, as atom bitmasks (enumeration of atom subsets)."""
        if self._models is None:
            H = self.herbrand
            if H.n > MAX_ATOMS:
                raise ResourceLimitExceeded(f"{H.n} ground atoms exceed the enumeration bound {MAX_ATOMS}")
            masks = np.arange(1 << H.n, dtype=np.int64)
            ok = np.ones(masks.shape, dtype=bool)
            for ante, succ in self.ground_axioms():
                ok &= ~_sat(masks, ante) | _sat(masks, succ)
            self._models = masks[ok]
        return self._models


def _sat(masks, monomials):
    out = np.zeros(masks.shape, dtype=bool)
    for m in monomials:
        out |= (masks & m) == m
    return out


def _minimize(monos):
    monos = sorted(set(monos), key=lambda m: (bin(m).count("1"), m))
    kept = []
    for m in monos:
        if not any(k & m == k for k in kept):
            kept.append(m)
    return tuple(kept)


class Herbrand:
    """Ground atoms over the constants, with grounding and evaluation helpers."""

    def __init__(self, sig, equality="identity"):
        self.sig = sig
        self.equality = equality
        self.consts = {s: tuple(sorted(sig.constants(s))) for s in sig.sorts}
        atoms = []
        for rel in sorted(sig.relations):
            for args in itertools.product(*(self.consts[s] for s in sig.relations[rel])):
                atoms.append((rel, args))
        if equality == "congruence":
            for s in sig.sorts:
                for a, b in itertools.permutations(self.consts[s], 2):
                    atoms.append(("=", (a, b)))
        self.atoms = tuple(atoms)
        self.index = {a: i for i, a in enumerate(atoms)}
        self.n = len(atoms)
        self._dnf = {}

    def assignments(self, variables):
        variables = tuple(variables)
        for combo in itertools.product(*(self.consts.get(v.sort, ()) for v in variables)):
            yield dict(zip(variables, combo))

    def const(self, name):
        return self.sig.const(name)

    def ground(self, phi, env):
        return substitute(phi, {v: self.const(c) for v, c in env.items()})

    def _term(self, t, env):
        if isinstance(t, Var):
            return env[t]
        if t.args:
            raise PreconditionError(f"term {t} uses a function symbol")
        return t.name

    def atom_key(self, phi, env):
        return (phi.rel, tuple(self._term(a, env) for a in phi.args))

    def equality_axioms(self):
        """Equivalence and congruence laws, in congruence mode."""
        if self.equality != "congruence":
            return []
        out = []
        for s in self.sig.sorts:
            x, y, z = Var("x", s), Var("y", s), Var("z", s)
            out.append(Sequent(Eq(x, y), (x, y), Eq(y, x)))
            out.append(Sequent(And((Eq(x, y), Eq(y, z))), (x, y, z), Eq(x, z)))
        for rel, sorts in self.sig.relations.items():
            xs = tuple(Var(f"x{i}", s) for i, s in enumerate(sorts))
            for i, s in enumerate(sorts):
                y = Var("y", s)
                ys = xs[:i] + (y,) + xs[i + 1:]
                out.append(Sequent(And((Atom(rel, xs), Eq(xs[i], y))), xs + (y,), Atom(rel, ys)))
        return out

    def dnf(self, phi, env):
        """Monomials (atom bitmasks) of a coherent formula under ``env``."""
        fv = free_vars(phi)
        key = (phi, tuple(sorted(((v.name, v.sort), c) for v, c in env.items() if v in fv)))
        hit = self._dnf.get(key)
        if hit is None:
            hit = self._dnf[key] = self._compile(phi, env)
        return hit

    def _compile(self, phi, env):
        if isinstance(phi, Top):
            return (0,)
        if isinstance(phi, Bot):
            return ()
        if isinstance(phi, Atom):
            return (1 << self.index[self.atom_key(phi, env)],)
        if isinstance(phi, Eq):
            a, b = self._term(phi.lhs, env), self._term(phi.rhs, env)
            if a == b:
                return (0,)
            if self.equality == "congruence":
                return (1 << self.index[("=", (a, b))],)
            return ()
        if isinstance(phi, And):
            acc = (0,)
            for p in phi.parts:
                part = self.dnf(p, env)
                acc = _minimize(a | b for a in acc for b in part)
                if not acc:
                    break
            return acc
        if isinstance(phi, Or):
            return _minimize(m for p in phi.parts for m in self.dnf(p, env))
        if isinstance(phi, Exists):
            out = []
            for ext in self.assignments(phi.block):
                env2 = {v: c for v, c in env.items() if v not in phi.block}
                env2.update(ext)
                out.extend(self.dnf(phi.body, env2))
            return _minimize(out)
        raise PreconditionError(f"formula is not coherent: {phi}")

    def holds(self, phi, env, atoms):
        """Direct evaluation in the Herbrand structure with atom set ``atoms``."""
        if isinstance(phi, Top):
            return True
        if isinstance(phi, Bot):
            return False
        if isinstance(phi, Atom):
            return self.atom_key(phi, env) in atoms
        if isinstance(phi, Eq):
            a, b = self._term(phi.lhs, env), self._term(phi.rhs, env)
            return a == b or ("=", (a, b)) in atoms
        if isinstance(phi, And):
            return all(self.holds(p, env, atoms) for p in phi.parts)
        if isinstance(phi, Or):
            return any(self.holds(p, env, atoms) for p in phi.parts)
        if isinstance(phi, Exists):
            for ext in self.assignments(phi.block):
                env2 = dict(env)
                env2.update(ext)
                if self.holds(phi.body, env2, atoms):
                    return True
            return False
        raise PreconditionError(f"formula is not coherent: {phi}")

    def to_atoms(self, mask):
        return frozenset(a for i, a in enumerate(self.atoms) if mask >> i & 1)

    def to_mask(self, atoms):
        return sum(1 << self.index[a] for a in atoms)


@dataclass(frozen=True)
class HerbrandModel:
    atoms: frozenset            # ground atoms (rel, constant names)

    def listing(self):
        return sorted(_atom_str(a) for a in self.atoms)

    def __str__(self):
        return "{" + ", ".join(self.listing()) + "}"


def _atom_str(a):
    rel, args = a
    if rel == "=":
        return f"eq({args[0]},{args[1]})"
    return f"{rel}({','.join(args)})" if args else rel


def satisfies(T, model):
    """Direct check that a Herbrand model satisfies every axiom of ``T``."""
    H = T.herbrand
    for s in T.axioms + H.equality_axioms():
        for env in H.assignments(s.context):
            if H.holds(s.antecedent, env, model.atoms) and not H.holds(s.succedent, env, model.atoms):
                return False
    return True


# ----------------------------------------------------------------------------
# entailment


def _check_goal(s):
    if not (is_coherent(s.antecedent) and is_coherent(s.succedent)):
        raise PreconditionError(f"goal is not coherent: {print_sequent(s)}")


def entails_enum(T, s):
    """Entailment by enumerating every Herbrand model; returns (answer, refuting model or None)."""
    _check_goal(s)
    H = T.herbrand
    models = T.models()
    for env in H.assignments(s.context):
        bad = _sat(models, H.dnf(s.antecedent, env)) & ~_sat(models, H.dnf(s.succedent, env))
        if bad.any():
            return False, HerbrandModel(H.to_atoms(int(models[np.argmax(bad)])))
    return True, None


def chase(T, start, budget=None):
    """Leaves of the disjunctive chase from the fact set ``start`` (a bitmask)."""
    budget = budget or Budget(what="chase")
    rules = T.ground_axioms()
    stack = [start]
    while stack:
        M = stack.pop()
        budget.tick()
        for ante, succ in rules:
            if any(a & M == a for a in ante) and not any(c & M == c for c in succ):
                stack.extend(M | c for c in reversed(succ))
                break
        else:
            yield M


def entails_chase(T, s, budget=None):
    """Entailment by forward chaining with disjunction splitting."""
    _check_goal(s)
    H = T.herbrand
    budget = budget or Budget(what="chase")
    for env in H.assignments(s.context):
        succ = H.dnf(s.succedent, env)
        for start in H.dnf(s.antecedent, env):
            for leaf in chase(T, start, budget):
                if not any(c & leaf == c for c in succ):
                    return False, HerbrandModel(H.to_atoms(leaf))
    return True, None


def entails(T, s):
    """Whether every Herbrand model of ``T`` satisfies ``s``; both procedures must agree."""
    a, _ = entails_enum(T, s)
    b, _ = entails_chase(T, s)
    if a != b:
        raise OracleDisagreement(f"enumeration says {a}, chase says {b} on {print_sequent(s)}")
    return a


# ----------------------------------------------------------------------------
# theory files


_SIG_WORDS = ("sort", "rel", "fun", "const", "arity_bound", "conn_bound")


def parse_theory(text, sig=None):
    """Signature declarations followed by ``name: sequent`` lines."""
    sig_lines, axiom_lines = [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head = line.split()[0]
        if head in _SIG_WORDS and not axiom_lines:
            sig_lines.append(line)
        else:
            axiom_lines.append((n, line))
    if sig is None:
        sig = parse_signature("\n".join(sig_lines))
    elif sig_lines:
        raise ParseError("signature given twice")
    axioms, names = [], []
    for n, line in axiom_lines:
        name, sep, rest = line.partition(":")
        if not sep or not name.strip().isidentifier():
            raise ParseError("expected 'name: sequent'", line=n)
        try:
            axioms.append(parse_sequent(rest.strip(), sig))
        except ParseError as exc:
            raise ParseError(str(exc), line=n) from None
        except IKError as exc:
            raise ParseError(f"{type(exc).__name__}: {exc}", line=n) from None
        names.append(name.strip())
    if len(set(names)) != len(names):
        raise ParseError("duplicate axiom name")
    return Theory(sig, axioms, names)


def print_theory(T):
    lines = [print_signature(T.sig).rstrip()]
    lines += [f"{n}: {print_sequent(s)}" for n, s in zip(T.names, T.axioms)]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------
# fragments and the Lindenbaum algebra


@dataclass(frozen=True)
class Fragment:
    """Bounds that keep the formula universe finite."""

    max_depth: int = 8
    max_width: int = 4
    max_block: int = 2
    max_size: int = 4096          # formulas (or ground instances) in the universe
    max_lattice: int = 512        # elements of a materialized Lindenbaum lattice

    def check(self, phi):
        if depth(phi) > self.max_depth:
            raise ResourceLimitExceeded(f"formula depth {depth(phi)} exceeds the fragment bound {self.max_depth}")
        for s in subformulas(phi):
            if isinstance(s, (And, Or)) and len(s.parts) > self.max_width:
                raise ResourceLimitExceeded(f"connective width {len(s.parts)} exceeds the fragment bound")
            if isinstance(s, (Exists, Forall)) and len(s.block) > self.max_block:
                raise ResourceLimitExceeded(f"quantifier block {len(s.block)} exceeds the fragment bound")

    def universe(self, formulas):
        """Subformula closure of ``formulas`` plus true and false, children before parents."""
        out = {TOP: None, BOT: None}
        for phi in formulas:
            self.check(phi)
            for s in subformulas(phi):
                out.setdefault(s, None)
        if len(out) > self.max_size:
            raise ResourceLimitExceeded(f"fragment universe has {len(out)} formulas")
        return list(out)


@dataclass
class LindenbaumAlgebra:
    lattice: FinLattice
    designated: DesignatedJoins
    classes: dict                 # ground formula -> lattice element
    env: dict
    n_types: int

    def cls(self, phi):
        return self.classes[phi]


def _ground_universe(T, fragment, formulas, budget):
    H = T.herbrand
    ground = {}
    for chi in fragment.universe(formulas):
        for env in H.assignments(ordered_vars(free_vars(chi))):
            budget.tick()
            ground.setdefault(H.ground(chi, env), None)
            if len(ground) > fragment.max_size:
                raise ResourceLimitExceeded(f"more than {fragment.max_size} ground formulas")
    return list(ground)


def lindenbaum(T, fragment, goal, env=None, budget=None):
    """Entailment classes of the ground fragment formulas, closed to a lattice.

    Two formulas are identified when the same Herbrand models satisfy them,
    so a class is a set of models; models agreeing on the whole fragment are
    merged into one type first.  The lattice is generated by the classes
    under union and intersection.  Designated joins come from disjunctions
    and from each existential (the join of its instances); designated meets
    from conjunctions.
    """
    budget = budget or Budget(what="Lindenbaum algebra")
    H = T.herbrand
    env = env if env is not None else next(H.assignments(goal.context))
    formulas = [a for s in T.axioms for a in (s.antecedent, s.succedent)]
    formulas += [H.ground(goal.antecedent, env), H.ground(goal.succedent, env)]
    universe = _ground_universe(T, fragment, formulas, budget)
    models = T.models()
    truth = np.array([_sat(models, H.dnf(g, {})) for g in universe], dtype=bool).reshape(len(universe), len(models))
    cols, type_of = np.unique(truth.T, axis=0, return_inverse=True) if len(models) else (np.zeros((0, len(universe)), bool), [])
    n_types = len(cols)
    gen = {g: frozenset(np.flatnonzero(cols[:, i]).tolist()) for i, g in enumerate(universe)}
    everything = frozenset(range(n_types))
    irreducible = []
    for t in range(n_types):
        j = everything
        for g in universe:
            if t in gen[g]:
                j = j & gen[g]
        irreducible.append(j)
    elements = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for X in frontier:
            for J in irreducible:
                Y = X | J
                if Y not in elements:
                    budget.tick()
                    elements.add(Y)
                    nxt.append(Y)
                    if len(elements) > fragment.max_lattice:
                        raise ResourceLimitExceeded(
                            f"Lindenbaum lattice exceeds {fragment.max_lattice} elements")
        frontier = nxt
    elements = sorted(elements, key=lambda X: (len(X), sorted(X)))
    L = FinLattice.from_sets(elements)
    joins, meets = [], []
    for g in universe:
        if isinstance(g, Or):
            joins.append((gen[g], tuple(gen[p] for p in g.parts)))
        elif isinstance(g, Exists):
            inst = [H.ground(g.body, e) for e in H.assignments(g.block)]
            joins.append((gen[g], tuple(gen[i] for i in inst)))
        elif isinstance(g, And):
            meets.append((gen[g], tuple(gen[p] for p in g.parts)))
    S = DesignatedJoins(list(dict.fromkeys(joins)), list(dict.fromkeys(meets)))
    return LindenbaumAlgebra(L, S, gen, env, n_types)


def _refuting_env(T, s):
    H = T.herbrand
    for env in H.assignments(s.context):
        ante, succ = H.dnf(s.antecedent, env), H.dnf(s.succedent, env)
        models = T.models()
        if (_sat(models, ante) & ~_sat(models, succ)).any():
            return env
    return None


@dataclass
class Countermodel:
    model: HerbrandModel
    env: dict
    route: str                   # "filter" or "points"
    filter: object = None


def countermodel(T, s, fragment=None):
    """A Herbrand model of ``T`` refuting ``s``, or ``ENTAILED``.

    The model is read off a prime filter of the Lindenbaum algebra (atoms whose
    class lies in the filter).  When the algebra is too large to materialize,
    a model from the class of the antecedent minus that of the succedent is
    used instead.  Either way the result is re-checked by direct evaluation.
    """
    _check_goal(s)
    if entails(T, s):
        return ENTAILED
    fragment = fragment or Fragment()
    H = T.herbrand
    env = _refuting_env(T, s)
    ante, succ = H.ground(s.antecedent, env), H.ground(s.succedent, env)
    try:
        alg = lindenbaum(T, fragment, s, env)
        P, verdict = rs_filter(alg.lattice, alg.designated.joins, alg.designated.meets,
                               alg.cls(ante), alg.cls(succ))
        if P is None:
            raise IKError(f"no separating prime filter: {verdict.reason}")
        atoms = frozenset(H.atom_key(g, {}) for g, c in alg.classes.items()
                          if isinstance(g, Atom) and c in P)
        eqs = frozenset(("=", (g.lhs.name, g.rhs.name)) for g, c in alg.classes.items()
                        if isinstance(g, Eq) and c in P and g.lhs != g.rhs and T.equality == "congruence")
        result = Countermodel(HerbrandModel(atoms | eqs), env, "filter", P)
    except ResourceLimitExceeded:
        models = T.models()
        bad = _sat(models, H.dnf(ante, {})) & ~_sat(models, H.dnf(succ, {}))
        result = Countermodel(HerbrandModel(H.to_atoms(int(models[np.argmax(bad)]))), env, "points")
    m = result.model
    if not (satisfies(T, m) and H.holds(ante, {}, m.atoms) and not H.holds(succ, {}, m.atoms)):
        raise IKError("countermodel failed re-verification")
    return result


# ----------------------------------------------------------------------------
# Morleyization


@dataclass
class MorleyData:
    base_sig: object
    preds: dict                   # fragment formula -> predicate name
    order: list                   # fragment formulas, children first
    axioms: list                  # original sequents (over the base signature)

    def atom(self, chi, args=None):
        """``P_chi`` applied to the free variables of ``chi`` (or to ``args``)."""
        fv = ordered_vars(free_vars(chi))
        return Atom(self.preds[chi], tuple(fv) if args is None else tuple(args))

    def fv(self, chi):
        return ordered_vars(free_vars(chi))


def morleyize(T_full, fragment=None, goals=()):
    """Coherent theory with one predicate per fragment formula.

    Atoms, true, false, conjunction, disjunction, existentials and equations
    get two-way linkage axioms.  Implications and universals only get their
    elimination axioms (universals instantiated at every constant tuple).
    Each axiom ``phi |- psi`` becomes ``P_phi |- P_psi``.
    """
    fragment = fragment or Fragment()
    sig = T_full.sig
    for name, (args, _) in sig.functions.items():
        if args:
            raise PreconditionError(f"function symbol {name} is not a constant")
    formulas = [f for s in T_full.axioms for f in (s.antecedent, s.succedent)] + list(goals)
    order = fragment.universe(formulas)
    taken = set(sig.relations) | set(sig.functions)
    preds, new_rels = {}, {}
    counter = itertools.count()
    for chi in order:
        name = f"P{next(counter)}"
        while name in taken:
            name = f"P{next(counter)}"
        taken.add(name)
        preds[chi] = name
        new_rels[name] = tuple(v.sort for v in ordered_vars(free_vars(chi)))
    msig = sig.extend(relations=new_rels)
    data = MorleyData(sig, preds, order, list(T_full.axioms))
    H = Herbrand(sig)
    P = data.atom
    ax = []
    for chi in order:
        ctx = data.fv(chi)
        if isinstance(chi, (Atom, Eq)):
            ax += [Sequent(P(chi), ctx, chi), Sequent(chi, ctx, P(chi))]
        elif isinstance(chi, Top):
            ax.append(Sequent(TOP, ctx, P(chi)))
        elif isinstance(chi, Bot):
            ax.append(Sequent(P(chi), ctx, BOT))
        elif isinstance(chi, And):
            ax += [Sequent(P(chi), ctx, P(p)) for p in chi.parts]
            ax.append(Sequent(And(tuple(P(p) for p in chi.parts)), ctx, P(chi)))
        elif isinstance(chi, Or):
            ax += [Sequent(P(p), ctx, P(chi)) for p in chi.parts]
            ax.append(Sequent(P(chi), ctx, Or(tuple(P(p) for p in chi.parts))))
        elif isinstance(chi, Exists):
            inner = ctx + tuple(v for v in data.fv(chi.body) if v in chi.block)
            ax.append(Sequent(P(chi.body), inner, P(chi)))
            ax.append(Sequent(P(chi), ctx, Exists(chi.block, P(chi.body))))
        elif isinstance(chi, Imp):
            ax.append(Sequent(And((P(chi), P(chi.ante))), ctx, P(chi.cons)))
        elif isinstance(chi, Forall):
            body_fv = data.fv(chi.body)
            for env in H.assignments(chi.block):
                args = tuple(H.const(env[v]) if v in env else v for v in body_fv)
                ax.append(Sequent(P(chi), ctx, P(chi.body, args)))
    for s in T_full.axioms:
        ax.append(Sequent(P(s.antecedent), s.context, P(s.succedent)))
    return CoherentTheory(msig, ax, morley=data)


# ----------------------------------------------------------------------------
# the canonical Kripke model


def _morley_worlds(Tm, budget):
    """Herbrand models of a Morleyized theory, built formula by formula."""
    data = Tm.morley
    H = Herbrand(data.base_sig)
    nodes = []                                   # (chi, args) ground instances, children first
    for chi in data.order:
        for env in H.assignments(data.fv(chi)):
            nodes.append((chi, tuple(env[v] for v in data.fv(chi))))
    pos = {n: i for i, n in enumerate(nodes)}

    def sub_args(chi, args, sub_chi, extra=None):
        env = dict(zip(data.fv(chi), args))
        if extra:
            env.update(extra)
        return tuple(env[v] for v in data.fv(sub_chi))

    plans = []
    for chi, args in nodes:
        if isinstance(chi, (Atom, Eq)):
            plans.append(("base", H.atom_key(chi, dict(zip(data.fv(chi), args))) if isinstance(chi, Atom)
                          else (H._term(chi.lhs, dict(zip(data.fv(chi), args))) ==
                                H._term(chi.rhs, dict(zip(data.fv(chi), args))))))
        elif isinstance(chi, Top):
            plans.append(("const", True))
        elif isinstance(chi, Bot):
            plans.append(("const", False))
        elif isinstance(chi, (And, Or)):
            kids = [pos[(p, sub_args(chi, args, p))] for p in chi.parts]
            plans.append(("and" if isinstance(chi, And) else "or", kids))
        elif isinstance(chi, (Exists, Forall)):
            kids = [pos[(chi.body, sub_args(chi, args, chi.body, ext))] for ext in H.assignments(chi.block)]
            plans.append(("or" if isinstance(chi, Exists) else "all", kids))
        elif isinstance(chi, Imp):
            plans.append(("imp", (pos[(chi.ante, sub_args(chi, args, chi.ante))],
                                  pos[(chi.cons, sub_args(chi, args, chi.cons))])))
    checks = []
    for s in data.axioms:
        for env in H.assignments(s.context):
            checks.append((pos[(s.antecedent, tuple(env[v] for v in data.fv(s.antecedent)))],
                           pos[(s.succedent, tuple(env[v] for v in data.fv(s.succedent)))]))

    worlds = []
    for mask in range(1 << H.n):
        base = H.to_atoms(mask)
        vals = [False] * len(nodes)

        def assign(i):
            budget.tick()
            if i == len(nodes):
                if all(not vals[a] or vals[b] for a, b in checks):
                    worlds.append((base, tuple(vals)))
                return
            kind, arg = plans[i]
            if kind == "base":
                options = [arg in base] if isinstance(arg, tuple) else [arg]
            elif kind == "const":
                options = [arg]
            elif kind == "and":
                options = [all(vals[k] for k in arg)]
            elif kind == "or":
                options = [any(vals[k] for k in arg)]
            elif kind == "imp":
                a, b = arg
                options = [False, True] if (not vals[a] or vals[b]) else [False]
            else:                                   # universal
                options = [False, True] if all(vals[k] for k in arg) else [False]
            for o in options:
                vals[i] = o
                assign(i + 1)

        assign(0)
    return nodes, plans, worlds


def _saturate(nodes, plans, worlds):
    """Greatest set of worlds in which every false implication or universal has a refuting extension."""
    alive = set(range(len(worlds)))
    vals = [w[1] for w in worlds]

    def above(i, j):
        return all(b or not a for a, b in zip(vals[i], vals[j]))

    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            for k, (kind, arg) in enumerate(plans):
                if vals[i][k] or kind not in ("imp", "all"):
                    continue
                if kind == "imp":
                    a, b = arg
                    ok = any(above(i, j) and vals[j][a] and not vals[j][b] for j in alive)
                else:
                    ok = any(above(i, j) and not all(vals[j][x] for x in arg) for j in alive)
                if not ok:
                    alive.discard(i)
                    changed = True
                    break
    return sorted(alive)


def canonical_kripke(Tm, budget=None):
    """Kripke model whose worlds are Herbrand models of ``Tm``, ordered by inclusion.

    For a Morleyized theory the worlds are restricted to the largest family in
    which each false ``P_(phi -> psi)`` has an extension forcing ``phi`` but not
    ``psi`` (and likewise for universals).  Without that restriction a world
    could make ``P_(phi -> psi)`` false while every extension satisfies the
    implication, breaking the match between ``P_chi`` and forcing of ``chi``.
    """
    budget = budget or Budget(what="canonical model")
    H = Tm.herbrand if Tm.morley is None else Herbrand(Tm.morley.base_sig)
    domain = {s: H.consts[s] for s in Tm.sig.sorts}
    if Tm.morley is None:
        atom_sets = [Tm.herbrand.to_atoms(int(m)) for m in Tm.models()]
    else:
        nodes, plans, worlds = _morley_worlds(Tm, budget)
        data = Tm.morley
        atom_sets = []
        for i in _saturate(nodes, plans, worlds):
            base, vals = worlds[i]
            extra = {(data.preds[chi], args) for (chi, args), v in zip(nodes, vals) if v}
            atom_sets.append(frozenset(base) | frozenset(extra))
    names = [f"w{i}" for i in range(len(atom_sets))]
    at = dict(zip(names, atom_sets))
    leq = {(a, b) for a in names for b in names if at[a] <= at[b]}
    return model_from_worlds(Tm.sig, names, leq, at, domain)


def world_atoms(K, w):
    st = K.structures[w]
    return frozenset((r, t) for r, tups in st.relations.items() for t in tups)


def restrict(K, sig, root):
    """Sub-model on the worlds above ``root``, over the relations of ``sig``."""
    up = [v for v in K.worlds if (root, v) in K.leq]
    at = {v: {(r, t) for (r, t) in world_atoms(K, v) if r in sig.relations} for v in up}
    dom = K.structures[root].domains
    leq = {(a, b) for (a, b) in K.leq if a in at and b in at}
    return model_from_worlds(sig, up, leq, at, dom)


@dataclass
class IKResult:
    provable: bool
    model: object                 # the canonical model
    world: str = None
    env: dict = None
    certificate: object = None    # Kripke model refuting the sequent at ``world``

    def __bool__(self):
        return self.provable

    def certificate_text(self):
        from .kripke import print_model
        if self.certificate is None:
            return ""
        env = " ".join(f"{v.name}={c}" for v, c in (self.env or {}).items())
        return print_model(self.certificate, include_signature=True) + f"refuted-at {self.world} {env}".rstrip() + "\n"


def _as_theory(T):
    return T if isinstance(T, Theory) else Theory(T.sig, list(T))


def provable_ik(T_full, fragment, s, budget=None):
    """Decide ``s`` in the saturated canonical model of the Morleyized theory.

    An unprovable sequent comes with the up-set of a refuting world as a
    Kripke countermodel over the original signature.
    """
    T_full = _as_theory(T_full)
    Tm = morleyize(T_full, fragment, goals=(s.antecedent, s.succedent))
    K = canonical_kripke(Tm, budget)
    cex = sequent_counterexample(K, s)
    if cex is None:
        return IKResult(True, K)
    w, env = cex
    return IKResult(False, K, w, env, restrict(K, T_full.sig, w))


def _valid_in(K, phi):
    return sequent_counterexample(K, Sequent(TOP, (), phi)) is None


def disjunction_property(T_full, disjuncts, fragment=None):
    """Index of a provable disjunct when the disjunction is provable, else None."""
    T_full = _as_theory(T_full)
    disjuncts = tuple(disjuncts)
    whole = provable_ik(T_full, fragment, Sequent(TOP, (), Or(disjuncts)))
    if not whole:
        return None
    for i, d in enumerate(disjuncts):
        if _valid_in(whole.model, d) and provable_ik(T_full, fragment, Sequent(TOP, (), d)):
            return i
    raise PropertyViolation(f"{Or(disjuncts)} is provable but no disjunct is")


def existence_property(T_full, phi, fragment=None):
    """Constants witnessing a provable closed existential ``phi``, else None."""
    T_full = _as_theory(T_full)
    if not isinstance(phi, Exists) or free_vars(phi):
        raise PreconditionError("expected a closed existential formula")
    if not T_full.sig.constants():
        raise PreconditionError("the signature needs at least one constant")
    whole = provable_ik(T_full, fragment, Sequent(TOP, (), phi))
    if not whole:
        return None
    H = Herbrand(T_full.sig)
    for env in H.assignments(phi.block):
        inst = H.ground(phi.body, env)
        if provable_ik(T_full, fragment, Sequent(TOP, (), inst)):
            return tuple(env[v] for v in phi.block)
    raise PropertyViolation(f"{phi} is provable but has no provable instance")


def morley_correspondence(Tm, K=None):
    """Check ``P_chi(t)`` holds at a world exactly when the world forces ``chi(t)``."""
    from .kripke import force
    data = Tm.morley
    if data is None:
        raise PreconditionError("theory carries no Morleyization data")
    K = K if K is not None else canonical_kripke(Tm)
    H = Herbrand(data.base_sig)
    for w in K.worlds:
        atoms = world_atoms(K, w)
        for chi in data.order:
            fv = data.fv(chi)
            for env in H.assignments(fv):
                has = (data.preds[chi], tuple(env[v] for v in fv)) in atoms
                if has != force(K, w, env, chi):
                    return Verdict.reject("predicate and forcing disagree", where=(w, chi),
                                          env={v.name: c for v, c in env.items()})
    return Verdict.accept(worlds=len(K.worlds), formulas=len(data.order))
