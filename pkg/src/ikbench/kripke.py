"""Finite Kripke models and the intuitionistic forcing relation.

A model is a finite poset of worlds, a structure at every world and, for each
pair ``w <= v``, a sort-indexed transition map from the domains at ``w`` to
the domains at ``v``.  Transitions are homomorphisms and need not be
injective; equality is decided in the current world.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field

from .errors import IKError, ParseError
from .syntax import (And, App, Atom, Bot, Eq, Exists, Forall, Imp, Or, Top, Var,
                     free_vars, print_signature)
from .verdict import Verdict


@dataclass
class Structure:
    domains: dict                  # sort -> tuple of elements
    relations: dict                # name -> frozenset of tuples
    functions: dict                # name -> {args tuple: value}


@dataclass
class KripkeModel:
    sig: object
    worlds: tuple
    leq: frozenset                 # pairs (w, v), reflexive and transitive
    structures: dict               # world -> Structure
    maps: dict = field(default_factory=dict)   # (w, v) -> {sort: {elem: elem}}

    def __post_init__(self):
        self.worlds = tuple(self.worlds)
        self.leq = frozenset(self.leq)
        self._up = {w: tuple(v for v in self.worlds if (w, v) in self.leq) for w in self.worlds}

    def up(self, w):
        return self._up[w]

    def domain(self, w, sort):
        return self.structures[w].domains.get(sort, ())

    def transport(self, env, w, v):
        if w == v:
            return env
        m = self.maps[(w, v)]
        return {x: m[x.sort][e] for x, e in env.items()}

    def environments(self, w, variables):
        variables = tuple(variables)
        doms = [self.domain(w, x.sort) for x in variables]
        for combo in itertools.product(*doms):
            yield dict(zip(variables, combo))


def order_closure(worlds, pairs):
    """Reflexive-transitive closure of ``pairs`` over ``worlds``."""
    rel = {(w, w) for w in worlds} | set(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(rel):
            for (c, d) in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return frozenset(rel)


def identity_maps(structures, leq):
    """Identity transitions for models whose domains only grow."""
    maps = {}
    for (w, v) in leq:
        maps[(w, v)] = {s: {e: e for e in dom} for s, dom in structures[w].domains.items()}
    return maps


# ----------------------------------------------------------------------------
# evaluation


class UnboundVariable(IKError):
    pass


def eval_term(m, w, env, t):
    if isinstance(t, Var):
        try:
            return env[t]
        except KeyError:
            raise UnboundVariable(f"environment misses variable {t.name}") from None
    args = tuple(eval_term(m, w, env, a) for a in t.args)
    return m.structures[w].functions[t.name][args]


def force(m, w, env, phi):
    """True iff world ``w`` forces ``phi`` under ``env``."""
    missing = free_vars(phi) - set(env)
    if missing:
        raise UnboundVariable(f"environment misses variable(s) {sorted(v.name for v in missing)}")
    return _force(m, w, env, phi)


def _force(m, w, env, phi):
    if isinstance(phi, Atom):
        args = tuple(eval_term(m, w, env, a) for a in phi.args)
        return args in m.structures[w].relations.get(phi.rel, ())
    if isinstance(phi, Eq):
        return eval_term(m, w, env, phi.lhs) == eval_term(m, w, env, phi.rhs)
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Bot):
        return False
    if isinstance(phi, And):
        return all(_force(m, w, env, p) for p in phi.parts)
    if isinstance(phi, Or):
        return any(_force(m, w, env, p) for p in phi.parts)
    if isinstance(phi, Imp):
        for v in m.up(w):
            env2 = m.transport(env, w, v)
            if _force(m, v, env2, phi.ante) and not _force(m, v, env2, phi.cons):
                return False
        return True
    if isinstance(phi, Exists):
        for ext in m.environments(w, phi.block):
            env2 = dict(env)
            env2.update(ext)
            if _force(m, w, env2, phi.body):
                return True
        return False
    if isinstance(phi, Forall):
        for v in m.up(w):
            base = m.transport(env, w, v)
            for ext in m.environments(v, phi.block):
                env2 = dict(base)
                env2.update(ext)
                if not _force(m, v, env2, phi.body):
                    return False
        return True
    raise TypeError(f"not a formula: {phi!r}")


def sequent_counterexample(m, s):
    """First (world, env) where the antecedent is forced and the succedent is not."""
    for w in m.worlds:
        for env in m.environments(w, s.context):
            if _force(m, w, env, s.antecedent) and not _force(m, w, env, s.succedent):
                return w, env
    return None


def holds_sequent(m, s):
    return sequent_counterexample(m, s) is None


def check_soundness(premises, conclusion, m):
    """If every premise holds in ``m`` the conclusion must hold too."""
    for i, p in enumerate(premises):
        if not holds_sequent(m, p):
            return Verdict.accept(vacuous=True, failed_premise=i)
    cex = sequent_counterexample(m, conclusion)
    if cex is None:
        return Verdict.accept(vacuous=False)
    w, env = cex
    return Verdict.reject("conclusion fails although all premises hold", where=w,
                          env={x.name: e for x, e in env.items()})


# ----------------------------------------------------------------------------
# validation


def validate_model(m):
    """Check order, structures and transition invariants; name the first violation."""
    sig = m.sig
    ws = set(m.worlds)
    if len(ws) != len(m.worlds):
        return Verdict.reject("duplicate world")
    for (a, b) in m.leq:
        if a not in ws or b not in ws:
            return Verdict.reject(f"order mentions unknown world {a if a not in ws else b}")
    for w in m.worlds:
        if (w, w) not in m.leq:
            return Verdict.reject("order is not reflexive", where=w)
    for (a, b) in m.leq:
        if a != b and (b, a) in m.leq:
            return Verdict.reject("order is not antisymmetric", where=(a, b))
        for c in m.up(b):
            if (a, c) not in m.leq:
                return Verdict.reject("order is not transitive", where=(a, b, c))
    for w in m.worlds:
        v = _validate_structure(sig, m.structures.get(w))
        if not v:
            v.where = w
            return v
    for (a, b) in sorted(m.leq, key=repr):
        mp = m.maps.get((a, b))
        if mp is None:
            return Verdict.reject("missing transition", where=(a, b))
        sa, sb = m.structures[a], m.structures[b]
        for s in sig.sorts:
            ms = mp.get(s, {})
            for e in sa.domains.get(s, ()):
                if e not in ms:
                    return Verdict.reject(f"transition undefined on {e}", where=(a, b))
                if ms[e] not in sb.domains.get(s, ()):
                    return Verdict.reject(f"transition sends {e} outside the target domain", where=(a, b))
                if a == b and ms[e] != e:
                    return Verdict.reject("transition of w<=w is not the identity", where=(a, b))
        for name, table in sa.functions.items():
            res = sig.functions[name][1]
            argsorts = sig.functions[name][0]
            for args, val in table.items():
                img = tuple(mp[s][x] for s, x in zip(argsorts, args))
                if sb.functions[name].get(img) != mp[res][val]:
                    return Verdict.reject(f"transition does not commute with {name}", where=(a, b))
        for name, tuples in sa.relations.items():
            argsorts = sig.relations[name]
            for tup in tuples:
                img = tuple(mp[s][x] for s, x in zip(argsorts, tup))
                if img not in sb.relations.get(name, ()):
                    return Verdict.reject(f"transition does not preserve {name}{tup}", where=(a, b))
    for (a, b) in m.leq:
        for c in m.up(b):
            for s in sig.sorts:
                for e in m.domain(a, s):
                    if m.maps[(b, c)][s][m.maps[(a, b)][s][e]] != m.maps[(a, c)][s][e]:
                        return Verdict.reject("transitions do not compose", where=(a, b, c))
    return Verdict.accept()


def _validate_structure(sig, st):
    if st is None:
        return Verdict.reject("world has no structure")
    for s in st.domains:
        if s not in sig.sorts:
            return Verdict.reject(f"domain for unknown sort {s}")
    for name, (argsorts, res) in sig.functions.items():
        table = st.functions.get(name)
        if table is None:
            return Verdict.reject(f"function {name} uninterpreted")
        for args in itertools.product(*(st.domains.get(s, ()) for s in argsorts)):
            if args not in table:
                return Verdict.reject(f"function {name} undefined at {args}")
            if table[args] not in st.domains.get(res, ()):
                return Verdict.reject(f"function {name} leaves its domain at {args}")
    for name, tuples in st.relations.items():
        if name not in sig.relations:
            return Verdict.reject(f"table for unknown relation {name}")
        argsorts = sig.relations[name]
        for tup in tuples:
            if len(tup) != len(argsorts) or any(x not in st.domains.get(s, ()) for s, x in zip(argsorts, tup)):
                return Verdict.reject(f"relation {name} holds of out-of-domain tuple {tup}")
    return Verdict.accept()


# ----------------------------------------------------------------------------
# random models


class _UF:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def classes(self):
        return sorted({self.find(x) for x in self.parent})


def random_model(sig, rng=None, max_worlds=4, max_elems=3, density=0.5, order_prob=0.5):
    """Random model satisfying every invariant by construction.

    Each world's domain is a partition of a growing pool of base atoms; a
    transition sends a class to the class containing its atoms.  Partitions
    only coarsen along the order, so transitions compose.
    """
    rng = rng or random.Random(0)
    n = rng.randint(1, max_worlds)
    worlds = tuple(f"w{i}" for i in range(n))
    pairs = [(worlds[i], worlds[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < order_prob]
    leq = order_closure(worlds, pairs)
    counter = itertools.count()
    sorts = sig.sorts
    ufs, funs, rels = {}, {}, {}
    for j, w in enumerate(worlds):
        preds = [v for v in worlds[:j] if (v, w) in leq]
        uf = {s: _UF() for s in sorts}
        for v in preds:
            for s in sorts:
                for a, root in ((a, ufs[v][s].find(a)) for a in ufs[v][s].parent):
                    uf[s].add(a)
                    uf[s].add(root)
                    uf[s].union(a, root)
        for s in sorts:
            have = len(uf[s].classes())
            lo = 1 if have == 0 else 0
            hi = max(lo, max_elems - have)
            for _ in range(rng.randint(lo, hi) if hi > 0 else lo):
                uf[s].add(next(counter))
        table = {}
        while True:
            _congruence(sig, uf, preds, funs, table)
            merged = False
            for s in sorts:
                cls = uf[s].classes()
                if len(cls) > max_elems:
                    a, b = rng.sample(cls, 2)
                    uf[s].union(a, b)
                    merged = True
            if not merged:
                break
        for name, (argsorts, res) in sig.functions.items():
            t = table.setdefault(name, {})
            rescls = uf[res].classes()
            for args in itertools.product(*(uf[s].classes() for s in argsorts)):
                if args not in t:
                    t[args] = rng.choice(rescls)
        rel = {}
        for name, argsorts in sig.relations.items():
            inherited = set()
            for v in preds:
                for tup in rels[v][name]:
                    inherited.add(tuple(uf[s].find(x) for s, x in zip(argsorts, tup)))
            for tup in itertools.product(*(uf[s].classes() for s in argsorts)):
                if tup in inherited or rng.random() < density:
                    inherited.add(tup)
            rel[name] = frozenset(inherited)
        ufs[w], funs[w], rels[w] = uf, table, rel
    structures, maps = {}, {}
    name = lambda a: f"e{a}"
    for w in worlds:
        doms = {s: tuple(name(a) for a in ufs[w][s].classes()) for s in sorts}
        fn = {f: {tuple(name(x) for x in args): name(v) for args, v in t.items()} for f, t in funs[w].items()}
        rl = {r: frozenset(tuple(name(x) for x in tup) for tup in ts) for r, ts in rels[w].items()}
        structures[w] = Structure(doms, rl, fn)
    for (a, b) in leq:
        maps[(a, b)] = {s: {name(x): name(ufs[b][s].find(x)) for x in ufs[a][s].classes()} for s in sorts}
    return KripkeModel(sig, worlds, leq, structures, maps)


def _congruence(sig, uf, preds, funs, table):
    """Make inherited function values agree, merging classes where they clash."""
    while True:
        table.clear()
        clash = False
        for v in preds:
            for fname, t in funs[v].items():
                argsorts, res = sig.functions[fname]
                dst = table.setdefault(fname, {})
                for args, val in t.items():
                    key = tuple(uf[s].find(x) for s, x in zip(argsorts, args))
                    img = uf[res].find(val)
                    old = dst.get(key)
                    if old is None:
                        dst[key] = img
                    elif uf[res].find(old) != img:
                        uf[res].union(old, img)
                        clash = True
        if not clash:
            for fname, dst in table.items():
                res = sig.functions[fname][1]
                for k in dst:
                    dst[k] = uf[res].find(dst[k])
            return


# ----------------------------------------------------------------------------
# model files

_SECTION_RE = re.compile(r"^(worlds|order|domain|rel|fun|map)\b\s*(.*)$")


def _set_items(body, line):
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ParseError("expected a {...} set", line=line)
    inner = body[1:-1].strip()
    return inner


def _split_top(s):
    out, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return out


def _tuple(s, line):
    s = s.strip()
    if s.startswith("("):
        if not s.endswith(")"):
            raise ParseError(f"bad tuple {s!r}", line=line)
        return tuple(x.strip() for x in s[1:-1].split(",") if x.strip())
    return (s,)


def parse_model(text, sig):
    """Read the sectioned model format; maps default to identity where omitted."""
    worlds, pairs, doms, rels, funs, maps = [], [], {}, {}, {}, {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("refuted-at"):
            continue
        m = _SECTION_RE.match(line)
        if not m:
            raise ParseError(f"unknown model line {line!r}", line=i)
        kind, rest = m.groups()
        if kind == "worlds":
            worlds.extend(rest.split())
            continue
        if kind == "order":
            for p in rest.split():
                a, sep, b = p.partition("<=")
                if not sep:
                    raise ParseError(f"bad order pair {p!r}", line=i)
                pairs.append((a, b))
            continue
        head, eq, body = rest.partition("=")
        if not eq:
            raise ParseError("expected '='", line=i)
        parts = head.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<world> <symbol>' before '=' in {line!r}", line=i)
        w, sym = parts
        inner = _set_items(body, i)
        items = _split_top(inner) if inner else []
        if kind == "domain":
            doms.setdefault(w, {})[sym] = tuple(items)
        elif kind == "rel":
            if sym not in sig.relations:
                raise ParseError(f"unknown relation {sym}", line=i)
            rels.setdefault(w, {})[sym] = frozenset(_tuple(x, i) if sig.relations[sym] else () for x in items)
        elif kind == "fun":
            t = {}
            for it in items:
                a, arrow, v = it.rpartition("->")
                if not arrow:
                    raise ParseError(f"bad function entry {it!r}", line=i)
                t[_tuple(a, i) if a.strip() != "()" else ()] = v.strip()
            funs.setdefault(w, {})[sym] = t
        else:
            a, sep, b = w.partition("<=")
            if not sep:
                raise ParseError(f"bad map pair {w!r}", line=i)
            t = {}
            for it in items:
                x, arrow, y = it.partition("->")
                if not arrow:
                    raise ParseError(f"bad map entry {it!r}", line=i)
                t[x.strip()] = y.strip()
            maps.setdefault((a, b), {})[sym] = t
    if not worlds:
        raise ParseError("model declares no worlds")
    for w in list(doms) + list(rels) + list(funs):
        if w not in worlds:
            raise ParseError(f"unknown world {w}")
    leq = order_closure(worlds, pairs)
    structures = {}
    for w in worlds:
        d = {s: tuple(doms.get(w, {}).get(s, ())) for s in sig.sorts}
        r = {name: rels.get(w, {}).get(name, frozenset()) for name in sig.relations}
        structures[w] = Structure(d, r, funs.get(w, {}))
    full = {}
    for (a, b) in leq:
        given = maps.get((a, b), {})
        full[(a, b)] = {s: given.get(s, {e: e for e in structures[a].domains[s]}) for s in sig.sorts}
    return KripkeModel(sig, tuple(worlds), leq, structures, full)


def print_model(m, include_signature=False):
    lines = []
    if include_signature:
        lines.append(print_signature(m.sig).rstrip())
    lines.append("worlds " + " ".join(m.worlds))
    covers = sorted((a, b) for (a, b) in m.leq if a != b)
    if covers:
        lines.append("order " + " ".join(f"{a}<={b}" for a, b in covers))
    for w in m.worlds:
        st = m.structures[w]
        for s in m.sig.sorts:
            lines.append(f"domain {w} {s} = {{{', '.join(st.domains.get(s, ()))}}}")
        for name in m.sig.relations:
            tups = sorted(st.relations.get(name, ()))
            lines.append(f"rel {w} {name} = {{{', '.join('(' + ','.join(t) + ')' for t in tups)}}}")
        for name in m.sig.functions:
            t = st.functions.get(name, {})
            lines.append(f"fun {w} {name} = {{{', '.join('(' + ','.join(k) + ')->' + v for k, v in sorted(t.items()))}}}")
    for (a, b) in covers:
        for s in m.sig.sorts:
            mp = m.maps[(a, b)][s]
            if any(k != v for k, v in mp.items()):
                lines.append(f"map {a}<={b} {s} = {{{', '.join(f'{k}->{v}' for k, v in sorted(mp.items()))}}}")
    return "\n".join(lines) + "\n"


def model_from_worlds(sig, worlds, leq, atoms_at, domain):
    """Constant-domain model with identity transitions.

    ``atoms_at[w]`` is a set of ground atoms ``(rel, args)`` over the constant
    names; ``domain`` maps sort -> tuple of constant names.
    """
    structures = {}
    for w in worlds:
        rels = {name: set() for name in sig.relations}
        for rel, args in atoms_at[w]:
            rels[rel].add(tuple(args))
        funs = {name: {(): name} for name, (a, r) in sig.functions.items() if not a}
        structures[w] = Structure(dict(domain), {k: frozenset(v) for k, v in rels.items()}, funs)
    leq = frozenset(leq)
    return KripkeModel(sig, tuple(worlds), leq, structures, identity_maps(structures, leq))


_SIG_WORDS = ("sort", "rel", "fun", "const", "arity_bound", "conn_bound")


def read_model_file(text, sig=None):
    """Model file with an optional leading signature block and ``refuted-at`` line.

    Returns ``(model, refuted)`` where ``refuted`` is ``None`` or a pair of the
    world name and a ``{variable name: element}`` mapping.
    """
    from .syntax import parse_signature
    sig_lines, model_lines, refuted = [], [], None
    for raw in text.splitlines():
        words = raw.split("#", 1)[0].split()
        if words and words[0] in _SIG_WORDS and "=" not in raw:
            sig_lines.append(raw)
            model_lines.append("")
        elif words and words[0] == "refuted-at":
            if len(words) < 2:
                raise ParseError("refuted-at needs a world")
            env = {}
            for item in words[2:]:
                k, sep, v = item.partition("=")
                if not sep:
                    raise ParseError(f"bad refuted-at binding {item!r}")
                env[k] = v
            refuted = (words[1], env)
            model_lines.append("")
        else:
            model_lines.append(raw)
    if sig_lines:
        parsed = parse_signature("\n".join(sig_lines))
        if sig is None:
            sig = parsed
    if sig is None:
        raise ParseError("model file has no signature")
    return parse_model("\n".join(model_lines), sig), refuted
