"""Finite lattices: distributivity, prime filters, the filter construction and duality.

Elements are arbitrary hashable names.  Internally a lattice is a boolean
order matrix plus join and meet tables over element indices; the public
functions take and return names.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import IKError, ParseError, PreconditionError
from .limits import Budget
from .verdict import Verdict


class LatticeError(IKError):
    pass


class FinLattice:
    """A finite bounded lattice given by its order."""

    def __init__(self, elements, leq, join=None, meet=None, validate=True):
        self.elements = tuple(elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise LatticeError("repeated element name")
        self.n = len(self.elements)
        if self.n == 0:
            raise LatticeError("a lattice needs at least one element")
        self.leq = np.asarray(leq, dtype=bool)
        if validate:
            _check_partial_order(self)
        self.join = _bound_table(self.leq, upper=True) if join is None else np.asarray(join, dtype=np.intp)
        self.meet = _bound_table(self.leq, upper=False) if meet is None else np.asarray(meet, dtype=np.intp)
        below = self.leq.sum(axis=0)
        self.bot = int(np.argmin(below))
        self.top = int(np.argmax(below))
        if validate:
            _check_tables(self)

    @classmethod
    def from_order(cls, elements, pairs):
        """Lattice from generating ``a <= b`` pairs (reflexive-transitive closure is taken)."""
        elements = tuple(elements)
        idx = {e: i for i, e in enumerate(elements)}
        m = np.eye(len(elements), dtype=bool)
        for a, b in pairs:
            if a not in idx or b not in idx:
                raise LatticeError(f"unknown element in pair ({a}, {b})")
            m[idx[a], idx[b]] = True
        return cls(elements, transitive_closure(m))

    @classmethod
    def from_sets(cls, sets, names=None):
        """Lattice of a family of sets closed under union and intersection, ordered by inclusion."""
        sets = [frozenset(s) for s in sets]
        names = tuple(sets) if names is None else tuple(names)
        pos = {s: i for i, s in enumerate(sets)}
        n = len(sets)
        leq = np.array([[a <= b for b in sets] for a in sets], dtype=bool)
        try:
            join = np.array([[pos[a | b] for b in sets] for a in sets], dtype=np.intp).reshape(n, n)
            meet = np.array([[pos[a & b] for b in sets] for a in sets], dtype=np.intp).reshape(n, n)
        except KeyError:
            raise LatticeError("set family is not closed under union and intersection") from None
        return cls(names, leq, join, meet, validate=False)

    # name-level helpers
    def i(self, x):
        try:
            return self.index[x]
        except KeyError:
            raise LatticeError(f"{x!r} is not an element") from None

    @property
    def zero(self):
        return self.elements[self.bot]

    @property
    def one(self):
        return self.elements[self.top]

    def le(self, a, b):
        return bool(self.leq[self.i(a), self.i(b)])

    def join_of(self, *xs):
        acc = self.bot
        for x in xs:
            acc = self.join[acc, self.i(x)]
        return self.elements[acc]

    def meet_of(self, *xs):
        acc = self.top
        for x in xs:
            acc = self.meet[acc, self.i(x)]
        return self.elements[acc]

    def up(self, x):
        return frozenset(self.elements[j] for j in np.flatnonzero(self.leq[self.i(x)]))

    def down(self, x):
        return frozenset(self.elements[j] for j in np.flatnonzero(self.leq[:, self.i(x)]))

    def names(self, idxs):
        return frozenset(self.elements[int(j)] for j in idxs)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"FinLattice({self.n} elements)"


def transitive_closure(m):
    m = np.array(m, dtype=bool)
    for k in range(m.shape[0]):
        m |= m[:, k, None] & m[None, k, :]
    return m


def _check_partial_order(L):
    m = L.leq
    if m.shape != (L.n, L.n):
        raise LatticeError("order matrix has the wrong shape")
    if not m.diagonal().all():
        raise LatticeError("order is not reflexive")
    if (m & m.T & ~np.eye(L.n, dtype=bool)).any():
        a, b = np.argwhere(m & m.T & ~np.eye(L.n, dtype=bool))[0]
        raise LatticeError(f"order is not antisymmetric at {L.elements[a]!r}, {L.elements[b]!r}")
    if (transitive_closure(m) != m).any():
        raise LatticeError("order is not transitive")


def _bound_table(leq, upper):
    """Least upper (or greatest lower) bound table; -1 where none exists."""
    n = leq.shape[0]
    rel = leq if upper else leq.T
    size = rel.sum(axis=1)          # |up(u)| for upper bounds
    out = np.full((n, n), -1, dtype=np.intp)
    for a in range(n):
        ub = rel[a][None, :] & rel  # row b: common bounds of a and b
        score = np.where(ub, size[None, :], -1)
        cand = score.argmax(axis=1)
        # the least bound lies below every common bound
        ok = ub[np.arange(n), cand] & (~ub | rel[cand]).all(axis=1)
        out[a] = np.where(ok, cand, -1)
    return out


def _check_tables(L):
    for name, t in (("join", L.join), ("meet", L.meet)):
        if (t < 0).any():
            a, b = np.argwhere(t < 0)[0]
            raise LatticeError(f"{L.elements[a]!r} and {L.elements[b]!r} have no {name}")
    if not (L.leq[L.bot].all() and L.leq[:, L.top].all()):
        raise LatticeError("lattice is not bounded")


# ----------------------------------------------------------------------------
# distributivity


def distributivity_witness(L):
    """A triple (a, b, c) with a & (b | c) != (a & b) | (a & c), or None."""
    J, M = L.join, L.meet
    for a in range(L.n):
        lhs = M[a][J]
        rhs = J[M[a][:, None], M[a][None, :]]
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            b, c = bad[0]
            return L.elements[a], L.elements[b], L.elements[c]
    return None


def is_distributive(L):
    return distributivity_witness(L) is None


def _bars(gamma, d):
    """All bar shapes: "B" marks a bar node, a tuple lists the child shapes."""
    if d == 0:
        return ["B"]
    sub = _bars(gamma, d - 1)
    return ["B"] + [tuple(c) for c in itertools.product(sub, repeat=gamma)]


def _shape_nodes(shape, f=()):
    if shape == "B":
        return [f]
    out = []
    for i, s in enumerate(shape):
        out.extend(_shape_nodes(s, f + (i,)))
    return out


def is_tree_distributive(L, gamma, d, method="exhaustive", samples=10_000, rng=None, budget=None):
    """Check the tree condition on every labelling of the ``gamma``-branching tree of height ``d``.

    A labelling puts ``a_f <= join of a_g over the successors g of f``; the
    condition asks that the root be below the join, over any bar, of the
    meets along the paths from the root to the bar nodes.  A failing verdict
    carries a witness labelling and bar.
    """
    if gamma < 1 or d < 1:
        raise PreconditionError("need gamma >= 1 and d >= 1")
    budget = budget or Budget(what="tree-distributivity search")
    if method == "sample":
        return _tree_dist_sample(L, gamma, d, samples, rng or random.Random(0), budget)
    J, M, top = L.join, L.meet, L.top
    memo = {}
    child_labels = list(itertools.product(range(L.n), repeat=gamma))

    def ach(shape, m, a):
        """Reachable values of the bar join below a node with label a and path meet m.

        Returns {value: labelling of the subtree as {relative address: label}}.
        """
        key = (shape, m, a)
        if key in memo:
            return memo[key]
        if shape == "B":
            res = {m: {(): a}}
        else:
            res = {}
            for cs in child_labels:
                budget.tick()
                jc = L.bot
                for c in cs:
                    jc = J[jc, c]
                if not L.leq[a, jc]:
                    continue
                partial = {L.bot: {(): a}}
                for k, (c, sub) in enumerate(zip(cs, shape)):
                    nxt = {}
                    for v, wit in partial.items():
                        for v2, wit2 in ach(sub, M[m, c], c).items():
                            u = J[v, v2]
                            if u not in nxt:
                                merged = dict(wit)
                                merged.update({(k,) + p: lab for p, lab in wit2.items()})
                                nxt[u] = merged
                    partial = nxt
                for v, wit in partial.items():
                    res.setdefault(v, wit)
        memo[key] = res
        return res

    for shape in _bars(gamma, d):
        for r in range(L.n):
            for v, wit in ach(shape, r, r).items():
                if v != r:
                    return Verdict.reject(
                        "root is not below the bar join", where=None,
                        labelling=_complete_labelling(L, wit, gamma, d),
                        bar=frozenset(_shape_nodes(shape)),
                        root=L.elements[r], bar_join=L.elements[v])
    return Verdict.accept(method="exhaustive")


def _complete_labelling(L, partial, gamma, d):
    out = {}
    for n in range(d + 1):
        for f in itertools.product(range(gamma), repeat=n):
            out[f] = L.elements[partial.get(f, L.top)]
    return out


def _tree_dist_sample(L, gamma, d, samples, rng, budget):
    J, M = L.join, L.meet
    shapes = _bars(gamma, d)
    addrs = [f for n in range(d, -1, -1) for f in itertools.product(range(gamma), repeat=n)]
    for _ in range(samples):
        budget.tick()
        lab = {}
        for f in addrs:
            if len(f) == d:
                lab[f] = rng.randrange(L.n)
            else:
                j = L.bot
                for i in range(gamma):
                    j = J[j, lab[f + (i,)]]
                lab[f] = rng.choice(np.flatnonzero(L.leq[:, j]).tolist())
        shape = rng.choice(shapes)
        v = L.bot
        for f in _shape_nodes(shape):
            m = L.top
            for k in range(len(f) + 1):
                m = M[m, lab[f[:k]]]
            v = J[v, m]
        if v != lab[()]:
            return Verdict.reject("root is not below the bar join",
                                  labelling={f: L.elements[x] for f, x in lab.items()},
                                  bar=frozenset(_shape_nodes(shape)),
                                  root=L.elements[lab[()]], bar_join=L.elements[v])
    return Verdict.accept(method="sample", samples=samples)


# ----------------------------------------------------------------------------
# designated joins, filters


@dataclass
class DesignatedJoins:
    joins: list = field(default_factory=list)     # (target, family)
    meets: list = field(default_factory=list)

    def __post_init__(self):
        self.joins = [(c, tuple(fam)) for c, fam in self.joins]
        self.meets = [(d, tuple(fam)) for d, fam in self.meets]

    def validate(self, L):
        """Targets must be the actual join/meet, and each must distribute."""
        for c, fam in self.joins:
            if L.join_of(*fam) != c:
                return Verdict.reject(f"designated join target {c!r} is not the join of its family")
            for x in L.elements:
                if L.meet_of(x, c) != L.join_of(*(L.meet_of(x, a) for a in fam)):
                    return Verdict.reject(f"designated join {c!r} does not distribute", where=x)
        for dd, fam in self.meets:
            if L.meet_of(*fam) != dd:
                return Verdict.reject(f"designated meet target {dd!r} is not the meet of its family")
            for x in L.elements:
                if L.join_of(x, dd) != L.meet_of(*(L.join_of(x, b) for b in fam)):
                    return Verdict.reject(f"designated meet {dd!r} does not distribute", where=x)
        return Verdict.accept()


@dataclass(frozen=True)
class Filter:
    members: frozenset

    def __contains__(self, x):
        return x in self.members

    def __len__(self):
        return len(self.members)


def principal(L, x):
    return Filter(L.up(x))


def is_filter(L, F):
    members = F.members if isinstance(F, Filter) else frozenset(F)
    if L.one not in members:
        return False
    for x in members:
        if not L.up(x) <= members:
            return False
        for y in members:
            if L.meet_of(x, y) not in members:
                return False
    return True


def is_ideal(L, I):
    members = frozenset(I)
    if L.zero not in members:
        return False
    for x in members:
        if not L.down(x) <= members:
            return False
        for y in members:
            if L.join_of(x, y) not in members:
                return False
    return True


def filter_generator(L, F):
    """The least element of a filter of a finite lattice."""
    return L.meet_of(*F.members)


def prime_violation(L, F, S=None):
    """Reason why ``F`` is not a prime filter preserving ``S``, or None."""
    members = F.members if isinstance(F, Filter) else frozenset(F)
    if not is_filter(L, members):
        return "not a filter"
    if L.zero in members:
        return "not proper"
    idx = np.array(sorted(L.i(x) for x in members), dtype=np.intp)
    inside = np.zeros(L.n, dtype=bool)
    inside[idx] = True
    bad = inside[L.join] & ~(inside[:, None] | inside[None, :])
    if bad.any():
        a, b = np.argwhere(bad)[0]
        return f"join of {L.elements[a]!r} and {L.elements[b]!r} is in but neither part is"
    S = S or DesignatedJoins()
    for c, fam in S.joins:
        if c in members and not any(a in members for a in fam):
            return f"designated join {c!r} not preserved"
    for dd, fam in S.meets:
        if all(b in members for b in fam) and dd not in members:
            return f"designated meet {dd!r} not preserved"
    return None


def join_prime_indices(L):
    """Indices x != 0 such that x <= y | z implies x <= y or x <= z."""
    out = []
    lower_covers = _lower_cover_counts(L)
    for x in range(L.n):
        if x == L.bot or lower_covers[x] != 1:
            continue
        row = L.leq[x]
        if not (row[L.join] & ~(row[:, None] | row[None, :])).any():
            out.append(x)
    return out


def _lower_cover_counts(L):
    strict = L.leq & ~np.eye(L.n, dtype=bool)
    # y covers-below x iff y < x with nothing strictly between
    between = (strict.astype(np.int32) @ strict.astype(np.int32)) > 0
    covers = strict & ~between
    return covers.sum(axis=0)


def prime_filters(L, S=None):
    """All proper prime filters preserving the designated joins and meets of ``S``."""
    out = []
    for x in join_prime_indices(L):
        F = Filter(L.names(np.flatnonzero(L.leq[x])))
        if S is None or prime_violation(L, F, S) is None:
            out.append(F)
    return out


def separates_points(L, S=None):
    """Whether for every a not below b some prime filter contains a and not b."""
    primes = prime_filters(L, S)
    for a in L.elements:
        for b in L.elements:
            if not L.le(a, b) and not any(a in P and b not in P for P in primes):
                return Verdict.reject("no prime filter separates", where=(a, b))
    return Verdict.accept()


# ----------------------------------------------------------------------------
# the filter construction


def pair(beta, gamma):
    """Square well-ordering of pairs with pair(beta, gamma) >= gamma."""
    n = max(beta, gamma)
    return n * n + beta if beta < gamma else n * n + n + gamma


def unpair(k):
    n = int(k ** 0.5)
    while n * n > k:
        n -= 1
    while (n + 1) * (n + 1) <= k:
        n += 1
    r = k - n * n
    return (r, n) if r < n else (n, r - n)


class DecompositionSchedule:
    """Join decompositions of each element, listed in a fixed order.

    For small lattices every antichain (of at least two elements) whose join
    is the element is listed; above ``full_limit`` elements only binary
    decompositions are used, which already capture finite primeness.
    Designated join families are always included.
    """

    def __init__(self, L, S=None, full_limit=12):
        self.L = L
        self.S = S or DesignatedJoins()
        self.full = L.n <= full_limit
        self._cache = {}

    def decompositions(self, x):
        if x in self._cache:
            return self._cache[x]
        L = self.L
        below = [y for y in range(L.n) if L.leq[y, x] and y != x and y != L.bot]
        out = []
        sizes = range(2, len(below) + 1) if self.full else (2,)
        for k in sizes:
            for combo in itertools.combinations(below, k):
                if any(L.leq[a, b] for a in combo for b in combo if a != b):
                    continue
                j = L.bot
                for a in combo:
                    j = L.join[j, a]
                if j == x:
                    out.append(combo)
        for c, fam in self.S.joins:
            if L.i(c) == x:
                out.append(tuple(L.i(a) for a in fam))
        self._cache[x] = out
        return out

    @staticmethod
    def pair(beta, gamma):
        return pair(beta, gamma)

    @staticmethod
    def unpair(k):
        return unpair(k)


@dataclass
class BranchTrace:
    values: list
    steps: list = field(default_factory=list)   # (k, beta, gamma, chosen part) per step

    @property
    def stabilized(self):
        return self.values[-1]


def _unstable_parts(L, m, S):
    """A join above ``m`` none of whose parts is above ``m``, or None when m is prime."""
    row = L.leq[m]
    bad = np.argwhere(row[L.join] & ~(row[:, None] | row[None, :]))
    if len(bad):
        return tuple(int(i) for i in bad[0])
    for c, fam in S.joins:
        if L.leq[m, L.i(c)] and not any(L.leq[m, L.i(a)] for a in fam):
            return tuple(L.i(a) for a in fam)
    return None


def _refine(L, m, parts, bi, k):
    cands = [L.meet[m, p] for p in parts]
    if m in cands:
        return m
    ok = [c for c in cands if not L.leq[c, bi]]
    if not ok:
        raise PreconditionError(
            f"step {k}: every refinement of {L.elements[m]!r} lies below {L.elements[bi]!r}; "
            "the lattice is not distributive")
    return ok[0]


def construct_filter(L, S, a, b, budget=None):
    """A prime filter containing ``a`` but not ``b``, with the branch that produced it.

    The branch starts at ``a``.  Step ``k = pair(beta, gamma)`` takes the
    ``beta``-th decomposition (cycling) of the branch value at level
    ``gamma`` and moves to a meet of the current value with one of its parts,
    keeping the value when possible and otherwise choosing the first part
    whose meet stays off ``b``.  The run ends once the current value is
    prime for every decomposition.
    """
    S = S or DesignatedJoins()
    ai, bi = L.i(a), L.i(b)
    if L.leq[ai, bi]:
        raise PreconditionError(f"{a!r} is below {b!r}")
    budget = budget or Budget(what="filter construction")
    sched = DecompositionSchedule(L, S)
    trace = BranchTrace([a])
    m = ai
    k = stagnant = 0
    patience = 4 * L.n * L.n + 16
    while (witness := _unstable_parts(L, m, S)) is not None:
        budget.tick()
        beta, gamma = unpair(k)
        parts_list = sched.decompositions(L.i(trace.values[gamma]))
        if stagnant >= patience:
            # the scheduled decompositions stopped helping; refine along the witness join
            nxt = _refine(L, m, witness, bi, k)
            trace.steps.append((k, None, None, L.elements[nxt]))
        elif parts_list:
            nxt = _refine(L, m, parts_list[beta % len(parts_list)], bi, k)
            trace.steps.append((k, beta, gamma, L.elements[nxt]))
        else:
            nxt = m
        stagnant = 0 if nxt != m else stagnant + 1
        m = nxt
        trace.values.append(L.elements[m])
        k += 1
    return Filter(L.names(np.flatnonzero(L.leq[m]))), trace


def extend_filter(L, S, F, I):
    """A prime filter containing the filter ``F`` and disjoint from the ideal ``I``."""
    F = F if isinstance(F, Filter) else Filter(frozenset(F))
    I = frozenset(I)
    if not is_filter(L, F):
        raise PreconditionError("F is not a filter")
    if not is_ideal(L, I):
        raise PreconditionError("I is not an ideal")
    if F.members & I:
        raise PreconditionError("F and I overlap")
    f = filter_generator(L, F)
    i = L.join_of(*I)
    P, _ = construct_filter(L, S, f, i)
    assert F.members <= P.members and not (P.members & I)
    return P


# ----------------------------------------------------------------------------
# duality


@dataclass
class FinPoset:
    points: tuple
    leq: frozenset          # pairs (p, q) with p <= q, reflexive and transitive

    def le(self, p, q):
        return (p, q) in self.leq


def poset_from_pairs(points, pairs):
    points = tuple(points)
    idx = {p: i for i, p in enumerate(points)}
    m = np.eye(len(points), dtype=bool)
    for p, q in pairs:
        m[idx[p], idx[q]] = True
    m = transitive_closure(m)
    return FinPoset(points, frozenset((points[i], points[j]) for i, j in np.argwhere(m)))


@dataclass
class SpectralPoset:
    poset: FinPoset
    phi: dict               # element -> frozenset of points containing it
    separation: Verdict


def spectrum(L, S=None):
    """Prime filters ordered by inclusion, with the separation check of the clopen upsets."""
    primes = prime_filters(L, S)
    points = tuple(primes)
    leq = frozenset((P, Q) for P in points for Q in points if P.members <= Q.members)
    phi = {x: frozenset(P for P in points if x in P) for x in L.elements}
    sep = Verdict.accept()
    for P in points:
        for Q in points:
            if (P, Q) not in leq and not any(P in phi[z] and Q not in phi[z] for z in L.elements):
                sep = Verdict.reject("no clopen upset separates", where=(P, Q))
    return SpectralPoset(FinPoset(points, leq), phi, sep)


def upsets(P):
    """All up-closed subsets of a finite poset."""
    pts = list(P.points)
    above = {p: frozenset(q for q in pts if P.le(p, q)) for p in pts}
    out = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for U in frontier:
            for p in pts:
                if p not in U:
                    V = U | above[p]
                    if V not in out:
                        out.add(V)
                        nxt.append(V)
        frontier = nxt
    return sorted(out, key=lambda U: (len(U), sorted(map(repr, U))))


def upsets_lattice(P):
    return FinLattice.from_sets(upsets(P))


def downsets_lattice(P):
    """Lattice of down-closed subsets (Birkhoff's representation)."""
    rev = FinPoset(P.points, frozenset((q, p) for p, q in P.leq))
    return FinLattice.from_sets(upsets(rev))


@dataclass
class DualityReport:
    ok: bool
    mapping: dict = field(default_factory=dict)
    witness: object = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def duality_roundtrip(L, S=None):
    """Check ``a -> {P : a in P}`` is an isomorphism from L onto the upsets of its spectrum."""
    w = distributivity_witness(L)
    if w is not None:
        return DualityReport(False, witness=w, reason="lattice is not distributive")
    sp = spectrum(L, S)
    U = upsets_lattice(sp.poset)
    mapping = {x: sp.phi[x] for x in L.elements}
    if len(set(mapping.values())) != L.n or set(mapping.values()) != set(U.elements):
        return DualityReport(False, mapping, reason="representation map is not a bijection")
    for a in L.elements:
        for b in L.elements:
            if L.le(a, b) != (mapping[a] <= mapping[b]):
                return DualityReport(False, mapping, witness=(a, b), reason="order not preserved")
    return DualityReport(True, mapping)


def poset_roundtrip(P):
    """Check ``p -> {U : p in U}`` is an isomorphism from P onto the spectrum of its upsets."""
    U = upsets_lattice(P)
    sp = spectrum(U)
    mapping = {p: frozenset(u for u in U.elements if p in u) for p in P.points}
    pts = {F.members: F for F in sp.poset.points}
    if len(set(mapping.values())) != len(P.points) or set(mapping.values()) != set(pts):
        return DualityReport(False, mapping, reason="point map is not a bijection onto prime filters")
    for p in P.points:
        for q in P.points:
            if P.le(p, q) != (mapping[p] <= mapping[q]):
                return DualityReport(False, mapping, witness=(p, q), reason="order not preserved")
    return DualityReport(True, mapping)


def baire_shadow(L, S=None):
    """Every family of dense open sets of the spectrum has dense intersection.

    The topology is generated by the sets ``phi(a) minus phi(b)``; opens are
    enumerated exhaustively, so keep ``L`` small.
    """
    sp = spectrum(L, S)
    pts = sp.poset.points
    basis = {sp.phi[a] - sp.phi[b] for a in L.elements for b in L.elements}
    basis.discard(frozenset())
    opens = {frozenset()}
    for B in basis:
        opens |= {O | B for O in opens}
    dense = [O for O in opens if all(O & B for B in basis)]
    inter = frozenset(pts)
    for O in dense:
        inter &= O
    if pts and not all(inter & B for B in basis):
        return Verdict.reject("intersection of the dense opens is not dense")
    return Verdict.accept(opens=len(opens), dense=len(dense))


# ----------------------------------------------------------------------------
# Rasiowa-Sikorski style search


def rs_filter(L, joins, meets, a, b):
    """A prime filter containing ``a``, omitting ``b`` and preserving the designated joins and meets.

    The candidates are the prime filters; those preserving the most
    designated joins (the "dense" conditions) are tried first.  When none
    works the verdict lists, for every prime filter, why it was discarded.
    """
    S = DesignatedJoins(list(joins), list(meets))
    v = S.validate(L)
    if not v:
        raise PreconditionError(v.reason)
    if L.le(a, b):
        raise PreconditionError(f"{a!r} is below {b!r}")
    certificate = []
    candidates = [P for P in prime_filters(L) if a in P and b not in P]

    def score(P):
        return -sum(1 for c, fam in S.joins if c not in P or any(x in P for x in fam))

    candidates.sort(key=lambda P: (score(P), L.i(filter_generator(L, P))))
    for P in candidates:
        why = prime_violation(L, P, S)
        if why is None:
            return P, Verdict.accept()
        certificate.append((filter_generator(L, P), why))
    return None, Verdict.reject("none exists", exhausted=certificate)


# ----------------------------------------------------------------------------
# lattice files


def parse_lattice(text):
    """Read ``elements``, ``leq``, ``join`` and ``meet`` lines into a lattice and its designated data."""
    elements, pairs, joins, meets = None, [], [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "elements":
            elements = rest
        elif head == "leq":
            if len(rest) != 2:
                raise ParseError("leq expects two elements", line=n)
            pairs.append((rest[0], rest[1]))
        elif head in ("join", "meet"):
            if len(rest) < 2 or rest[1] != "=":
                raise ParseError(f"expected '{head} c = a1 a2 ...'", line=n)
            (joins if head == "join" else meets).append((rest[0], tuple(rest[2:])))
        else:
            raise ParseError(f"unknown directive {head!r}", line=n)
    if elements is None:
        raise ParseError("missing 'elements' line")
    known = set(elements)
    for a, b in pairs:
        if a not in known or b not in known:
            raise ParseError(f"unknown element in 'leq {a} {b}'")
    try:
        L = FinLattice.from_order(elements, pairs)
    except LatticeError as exc:
        raise ParseError(f"not a lattice: {exc}") from None
    for c, fam in joins + meets:
        for x in (c,) + fam:
            if x not in known:
                raise ParseError(f"unknown element {x!r} in designated join or meet")
    return L, DesignatedJoins(joins, meets)


def covers(L):
    strict = L.leq & ~np.eye(L.n, dtype=bool)
    between = (strict.astype(np.int32) @ strict.astype(np.int32)) > 0
    return [(L.elements[a], L.elements[b]) for a, b in np.argwhere(strict & ~between)]


def print_lattice(L, S=None):
    lines = ["elements " + " ".join(map(str, L.elements))]
    lines += [f"leq {a} {b}" for a, b in covers(L)]
    for c, fam in (S.joins if S else []):
        lines.append(f"join {c} = " + " ".join(map(str, fam)))
    for d, fam in (S.meets if S else []):
        lines.append(f"meet {d} = " + " ".join(map(str, fam)))
    return "\n".join(lines) + "\n"

