"""Sorted first-order syntax with wide conjunctions and disjunctions.

Formulas are immutable dataclasses.  Conjunctions and disjunctions carry an
ordered tuple of parts (duplicates allowed); quantifiers carry a block of
distinct variables.  A width-0 conjunction behaves as truth and a width-0
disjunction as falsity, but they stay syntactically distinct from ``true``
and ``false``.

Text grammar::

    true | false | R(t,...) | R | eq(t,t) | and(phi,...) | or(phi,...)
    | imp(phi,phi) | ex([x:S,...],phi) | all([x:S,...],phi)

Sequents are written ``phi |- [x:S,...] psi``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ArityError, ParseError, SortError

DEFAULT_SORT = "S"
FRESH_PREFIX = "_"
KEYWORDS = frozenset({"true", "false", "and", "or", "imp", "eq", "ex", "all"})


# ----------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Signature:
    sorts: tuple = (DEFAULT_SORT,)
    relations: Mapping[str, tuple] = field(default_factory=dict)
    functions: Mapping[str, tuple] = field(default_factory=dict)
    arity_bound: int = 4
    conn_bound: int = 16

    def __post_init__(self):
        object.__setattr__(self, "relations", dict(self.relations))
        object.__setattr__(self, "functions", dict(self.functions))
        if len(set(self.sorts)) != len(self.sorts):
            raise SortError("duplicate sort name")
        if self.arity_bound < 1 or self.conn_bound < 1:
            raise ArityError("bounds must be positive")
        clash = set(self.relations) & set(self.functions)
        if clash:
            raise SortError(f"name used as relation and function: {sorted(clash)[0]}")
        for name in list(self.relations) + list(self.functions):
            if name in KEYWORDS or name.startswith(FRESH_PREFIX):
                raise SortError(f"reserved symbol name {name!r}")
        for name, args in self.relations.items():
            self._check_sorts(name, args)
            if len(args) >= self.arity_bound:
                raise ArityError(f"relation {name} has arity {len(args)} >= {self.arity_bound}")
        for name, (args, res) in self.functions.items():
            self._check_sorts(name, tuple(args) + (res,))
            if len(args) >= self.arity_bound:
                raise ArityError(f"function {name} has arity {len(args)} >= {self.arity_bound}")

    def _check_sorts(self, name, sorts):
        for s in sorts:
            if s not in self.sorts:
                raise SortError(f"symbol {name} uses undeclared sort {s}")

    def __hash__(self):
        return hash((self.sorts, tuple(sorted(self.relations.items())),
                     tuple(sorted((k, (tuple(a), r)) for k, (a, r) in self.functions.items())),
                     self.arity_bound, self.conn_bound))

    @property
    def default_sort(self):
        return self.sorts[0]

    def constants(self, sort=None):
        return [name for name, (args, res) in self.functions.items()
                if not args and (sort is None or res == sort)]

    def const(self, name):
        args, res = self.functions[name]
        if args:
            raise SortError(f"{name} is not a constant")
        return App(name, (), res)

    def extend(self, relations=None, functions=None, **kw):
        rels = dict(self.relations)
        rels.update(relations or {})
        funs = dict(self.functions)
        funs.update(functions or {})
        opts = dict(sorts=self.sorts, arity_bound=self.arity_bound, conn_bound=self.conn_bound)
        opts.update(kw)
        return Signature(relations=rels, functions=funs, **opts)


def make_signature(relations=None, constants=None, functions=None, sorts=None, **kw):
    """Convenience builder; ``constants`` maps name -> sort."""
    funs = {}
    for name, spec in (functions or {}).items():
        funs[name] = (tuple(spec[0]), spec[1])
    for name, sort in (constants or {}).items():
        funs[name] = ((), sort)
    rels = {k: tuple(v) for k, v in (relations or {}).items()}
    if sorts is None:
        used = []
        for args in rels.values():
            used.extend(args)
        for args, res in funs.values():
            used.extend(args)
            used.append(res)
        sorts = tuple(dict.fromkeys(used)) or (DEFAULT_SORT,)
    return Signature(tuple(sorts), rels, funs, **kw)


_DECL_RE = re.compile(r"^\s*(sort|rel|fun|const|arity_bound|conn_bound)\b\s*(.*)$")


def parse_signature(text, line_offset=0):
    """Parse ``sort S`` / ``rel R : S,S`` / ``fun f : S -> S`` / ``const c : S`` lines."""
    sorts, rels, funs, opts = [], {}, {}, {}

    def add_sort(s):
        if s not in sorts:
            sorts.append(s)

    for i, raw in enumerate(text.splitlines(), start=1 + line_offset):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DECL_RE.match(line)
        if not m:
            raise ParseError(f"unknown declaration {line!r}", line=i)
        kind, rest = m.groups()
        try:
            if kind == "sort":
                for s in rest.replace(",", " ").split():
                    add_sort(s)
            elif kind in ("arity_bound", "conn_bound"):
                opts[kind] = int(rest)
            elif kind == "rel":
                name, _, args = rest.partition(":")
                name = name.strip()
                argl = tuple(a.strip() for a in args.split(",") if a.strip())
                if not name or name in rels or name in funs:
                    raise ParseError(f"bad or duplicate relation {name!r}", line=i)
                rels[name] = argl
            elif kind == "fun":
                name, _, body = rest.partition(":")
                args, arrow, res = body.partition("->")
                name = name.strip()
                if not arrow or not name or name in funs or name in rels:
                    raise ParseError(f"bad function declaration {line!r}", line=i)
                funs[name] = (tuple(a.strip() for a in args.split(",") if a.strip()), res.strip())
            else:
                name, _, sort = rest.partition(":")
                name, sort = name.strip(), sort.strip() or None
                if not name or name in funs or name in rels:
                    raise ParseError(f"bad constant declaration {line!r}", line=i)
                funs[name] = ((), sort)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), line=i) from None
    default = sorts[0] if sorts else DEFAULT_SORT
    for args in rels.values():
        for s in args:
            add_sort(s)
    for name, (args, res) in list(funs.items()):
        if res is None:
            funs[name] = (args, default)
        for s in funs[name][0] + (funs[name][1],):
            add_sort(s)
    if not sorts:
        sorts.append(DEFAULT_SORT)
    return Signature(tuple(sorts), rels, funs, **opts)


def print_signature(sig):
    lines = [f"sort {s}" for s in sig.sorts]
    for name, args in sig.relations.items():
        lines.append(f"rel {name} : {','.join(args)}" if args else f"rel {name} :")
    for name, (args, res) in sig.functions.items():
        if args:
            lines.append(f"fun {name} : {','.join(args)} -> {res}")
        else:
            lines.append(f"const {name} : {res}")
    lines.append(f"arity_bound {sig.arity_bound}")
    lines.append(f"conn_bound {sig.conn_bound}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------
# terms and formulas


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = DEFAULT_SORT

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    name: str
    args: tuple = ()
    sort: str = DEFAULT_SORT

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}({','.join(map(str, self.args))})"


class Formula:
    __slots__ = ()

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True, repr=False)
class Top(Formula):
    def __repr__(self):
        return "TOP"


@dataclass(frozen=True, repr=False)
class Bot(Formula):
    def __repr__(self):
        return "BOT"


TOP = Top()
BOT = Bot()


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    args: tuple = ()


@dataclass(frozen=True)
class Eq(Formula):
    lhs: object
    rhs: object


@dataclass(frozen=True)
class And(Formula):
    parts: tuple


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple


@dataclass(frozen=True)
class Imp(Formula):
    ante: Formula
    cons: Formula


@dataclass(frozen=True)
class Exists(Formula):
    block: tuple
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    block: tuple
    body: Formula


def conj(*parts):
    return And(tuple(parts))


def disj(*parts):
    return Or(tuple(parts))


def neg(phi):
    return Imp(phi, BOT)


def exists(block, body):
    """Existential over ``block``; an empty block returns ``body`` itself."""
    block = tuple(block)
    return Exists(block, body) if block else body


@dataclass(frozen=True)
class Sequent:
    antecedent: Formula
    context: tuple
    succedent: Formula

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        names = [v.name for v in self.context]
        if len(set(names)) != len(names):
            raise SortError(f"context repeats a variable: {names}")
        missing = (free_vars(self.antecedent) | free_vars(self.succedent)) - set(self.context)
        if missing:
            raise SortError(f"context misses free variable(s) {sorted(v.name for v in missing)}")

    def __str__(self):
        return print_sequent(self)


def term_vars(t):
    if isinstance(t, Var):
        return frozenset((t,))
    out = frozenset()
    for a in t.args:
        out |= term_vars(a)
    return out


def free_vars(phi):
    """Free variables of a formula (typed)."""
    if isinstance(phi, (Top, Bot)):
        return frozenset()
    if isinstance(phi, Atom):
        out = frozenset()
        for a in phi.args:
            out |= term_vars(a)
        return out
    if isinstance(phi, Eq):
        return term_vars(phi.lhs) | term_vars(phi.rhs)
    if isinstance(phi, (And, Or)):
        out = frozenset()
        for p in phi.parts:
            out |= free_vars(p)
        return out
    if isinstance(phi, Imp):
        return free_vars(phi.ante) | free_vars(phi.cons)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - frozenset(phi.block)
    raise TypeError(f"not a formula: {phi!r}")


def subformulas(phi):
    """All subformulas including ``phi``, children before parents, no repeats."""
    seen = {}

    def walk(f):
        if f in seen:
            return
        if isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Imp):
            walk(f.ante)
            walk(f.cons)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body)
        seen[f] = None

    walk(phi)
    return list(seen)


def depth(phi):
    if isinstance(phi, (And, Or)):
        return 1 + max((depth(p) for p in phi.parts), default=0)
    if isinstance(phi, Imp):
        return 1 + max(depth(phi.ante), depth(phi.cons))
    if isinstance(phi, (Exists, Forall)):
        return 1 + depth(phi.body)
    return 0


def all_vars(phi):
    """Every variable occurring in ``phi``, free or bound."""
    out = set(free_vars(phi))
    for f in subformulas(phi):
        if isinstance(f, (Exists, Forall)):
            out.update(f.block)
    return out


# ----------------------------------------------------------------------------
# substitution


def subst_term(t, sub):
    if isinstance(t, Var):
        return sub.get(t, t)
    if not t.args:
        return t
    return App(t.name, tuple(subst_term(a, sub) for a in t.args), t.sort)


def term_sort(t):
    return t.sort


def fresh_var(v, avoid):
    """A variable of ``v``'s sort in the reserved namespace, avoiding ``avoid`` names."""
    base = v.name.lstrip(FRESH_PREFIX).rstrip("0123456789'") or "v"
    taken = {a.name if isinstance(a, Var) else a for a in avoid}
    i = 1
    while f"{FRESH_PREFIX}{base}{i}" in taken:
        i += 1
    return Var(f"{FRESH_PREFIX}{base}{i}", v.sort)


def substitute(phi, sub):
    """Capture-avoiding simultaneous substitution ``phi[sub]``."""
    for v, t in sub.items():
        if v.sort != term_sort(t):
            raise SortError(f"cannot substitute {t} : {term_sort(t)} for {v.name} : {v.sort}")
    sub = {v: t for v, t in sub.items() if t != v}
    if not sub:
        return phi
    return _subst(phi, sub)


def _subst(phi, sub):
    if isinstance(phi, (Top, Bot)):
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.rel, tuple(subst_term(a, sub) for a in phi.args))
    if isinstance(phi, Eq):
        return Eq(subst_term(phi.lhs, sub), subst_term(phi.rhs, sub))
    if isinstance(phi, And):
        return And(tuple(_subst(p, sub) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(_subst(p, sub) for p in phi.parts))
    if isinstance(phi, Imp):
        return Imp(_subst(phi.ante, sub), _subst(phi.cons, sub))
    # quantifier
    fv = free_vars(phi)
    inner = {v: t for v, t in sub.items() if v in fv}
    if not inner:
        return phi
    incoming = frozenset()
    for t in inner.values():
        incoming |= term_vars(t)
    block = list(phi.block)
    avoid = set(incoming) | free_vars(phi.body) | set(block) | set(inner)
    for i, b in enumerate(block):
        if b in incoming:
            nb = fresh_var(b, avoid)
            avoid.add(nb)
            inner[b] = nb
            block[i] = nb
    return type(phi)(tuple(block), _subst(phi.body, inner))


def alpha_key(phi):
    """Hashable key equal for alpha-equivalent formulas.

    Empty quantifier blocks are dropped, so ``ex([], phi)`` and ``phi`` share a key.
    """
    return _akey(phi, {}, 0)


def _tkey(t, env):
    if isinstance(t, Var):
        return env.get(t, ("v", t.name, t.sort))
    return ("f", t.name, tuple(_tkey(a, env) for a in t.args))


def _akey(phi, env, level):
    if isinstance(phi, Top):
        return ("T",)
    if isinstance(phi, Bot):
        return ("F",)
    if isinstance(phi, Atom):
        return ("R", phi.rel, tuple(_tkey(a, env) for a in phi.args))
    if isinstance(phi, Eq):
        return ("=", _tkey(phi.lhs, env), _tkey(phi.rhs, env))
    if isinstance(phi, And):
        return ("&", tuple(_akey(p, env, level) for p in phi.parts))
    if isinstance(phi, Or):
        return ("|", tuple(_akey(p, env, level) for p in phi.parts))
    if isinstance(phi, Imp):
        return (">", _akey(phi.ante, env, level), _akey(phi.cons, env, level))
    if not phi.block:
        return _akey(phi.body, env, level)
    env2 = dict(env)
    sorts = []
    for i, b in enumerate(phi.block):
        env2[b] = ("b", level + i)
        sorts.append(b.sort)
    tag = "E" if isinstance(phi, Exists) else "A"
    return (tag, tuple(sorts), _akey(phi.body, env2, level + len(phi.block)))


def alpha_eq(a, b):
    return alpha_key(a) == alpha_key(b)


# ----------------------------------------------------------------------------
# well-sortedness


def check_term(t, sig):
    if isinstance(t, Var):
        if t.sort not in sig.sorts:
            raise SortError(f"variable {t.name} has undeclared sort {t.sort}")
        if t.name in sig.functions or t.name in sig.relations:
            raise SortError(f"variable {t.name} clashes with a symbol name")
        return t.sort
    if t.name not in sig.functions:
        raise SortError(f"unknown function symbol {t.name}")
    args, res = sig.functions[t.name]
    if len(args) != len(t.args):
        raise ArityError(f"{t.name} expects {len(args)} arguments, got {len(t.args)}")
    for want, a in zip(args, t.args):
        got = check_term(a, sig)
        if got != want:
            raise SortError(f"argument {a} of {t.name} has sort {got}, expected {want}")
    if t.sort != res:
        raise SortError(f"term {t} tagged with sort {t.sort}, symbol returns {res}")
    return res


def check_formula(phi, sig):
    """Raise SortError/ArityError unless ``phi`` is well-sorted over ``sig``."""
    if isinstance(phi, (Top, Bot)):
        return
    if isinstance(phi, Atom):
        if phi.rel not in sig.relations:
            raise SortError(f"unknown relation symbol {phi.rel}")
        want = sig.relations[phi.rel]
        if len(want) != len(phi.args):
            raise ArityError(f"{phi.rel} expects {len(want)} arguments, got {len(phi.args)}")
        for w, a in zip(want, phi.args):
            got = check_term(a, sig)
            if got != w:
                raise SortError(f"argument {a} of {phi.rel} has sort {got}, expected {w}")
        return
    if isinstance(phi, Eq):
        ls, rs = check_term(phi.lhs, sig), check_term(phi.rhs, sig)
        if ls != rs:
            raise SortError(f"equation {phi.lhs} = {phi.rhs} mixes sorts {ls} and {rs}")
        return
    if isinstance(phi, (And, Or)):
        if len(phi.parts) > sig.conn_bound:
            raise ArityError(f"connective width {len(phi.parts)} exceeds {sig.conn_bound}")
        for p in phi.parts:
            check_formula(p, sig)
        return
    if isinstance(phi, Imp):
        check_formula(phi.ante, sig)
        check_formula(phi.cons, sig)
        return
    if isinstance(phi, (Exists, Forall)):
        if len(set(phi.block)) != len(phi.block) or len({b.name for b in phi.block}) != len(phi.block):
            raise SortError("quantifier block repeats a variable")
        if len(phi.block) >= sig.arity_bound:
            raise ArityError(f"quantifier block of size {len(phi.block)} >= {sig.arity_bound}")
        for b in phi.block:
            check_term(b, sig)
        check_formula(phi.body, sig)
        return
    raise TypeError(f"not a formula: {phi!r}")


def check_sequent(s, sig):
    check_formula(s.antecedent, sig)
    check_formula(s.succedent, sig)
    for v in s.context:
        check_term(v, sig)


# ----------------------------------------------------------------------------
# printing


def print_term(t):
    return str(t)


def print_block(block):
    return "[" + ",".join(f"{v.name}:{v.sort}" for v in block) + "]"


def print_formula(phi):
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bot):
        return "false"
    if isinstance(phi, Atom):
        if not phi.args:
            return phi.rel
        return f"{phi.rel}({','.join(map(print_term, phi.args))})"
    if isinstance(phi, Eq):
        return f"eq({print_term(phi.lhs)},{print_term(phi.rhs)})"
    if isinstance(phi, And):
        return "and(" + ", ".join(map(print_formula, phi.parts)) + ")"
    if isinstance(phi, Or):
        return "or(" + ", ".join(map(print_formula, phi.parts)) + ")"
    if isinstance(phi, Imp):
        return f"imp({print_formula(phi.ante)}, {print_formula(phi.cons)})"
    if isinstance(phi, Exists):
        return f"ex({print_block(phi.block)}, {print_formula(phi.body)})"
    if isinstance(phi, Forall):
        return f"all({print_block(phi.block)}, {print_formula(phi.body)})"
    raise TypeError(f"not a formula: {phi!r}")


def print_sequent(s):
    return f"{print_formula(s.antecedent)} |- {print_block(s.context)} {print_formula(s.succedent)}"


# ----------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(r"\s*(?:(\|-)|(->)|([A-Za-z_][A-Za-z0-9_']*)|(.))")


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ParseError("unexpected character", pos=pos)
            break
        kind = "turnstile" if m.group(1) else "arrow" if m.group(2) else "id" if m.group(3) else "punct"
        val = m.group(m.lastindex)
        if kind == "punct" and val not in "()[],:":
            raise ParseError(f"unexpected character {val!r}", pos=m.start(m.lastindex))
        toks.append((kind, val, m.start(m.lastindex)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    """Two-stage parser: raw tree first, then scope and sort resolution."""

    def __init__(self, text, sig, allow_reserved):
        self.text = text
        self.sig = sig
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    # -- token helpers
    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val):
        tok = self.next()
        if tok[1] != val:
            raise ParseError(f"expected {val!r}, found {tok[1] or 'end of input'!r}", pos=tok[2])
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] != "id":
            raise ParseError(f"expected identifier, found {tok[1] or 'end of input'!r}", pos=tok[2])
        return tok

    # -- raw syntax
    def raw_block(self):
        self.expect("[")
        out = []
        if self.peek()[1] == "]":
            self.next()
            return out
        while True:
            tok = self.ident()
            sort = None
            if self.peek()[1] == ":":
                self.next()
                sort = self.ident()[1]
            out.append((tok[1], sort, tok[2]))
            sep = self.next()
            if sep[1] == "]":
                return out
            if sep[1] != ",":
                raise ParseError(f"expected ',' or ']', found {sep[1]!r}", pos=sep[2])

    def raw_term(self):
        _, name, pos = self.ident()
        if name in KEYWORDS:
            raise ParseError(f"keyword {name!r} used as a term", pos=pos)
        args = None
        if self.peek()[1] == "(":
            self.next()
            args = self.raw_list(self.raw_term)
        return ("t", name, args, pos)

    def raw_list(self, item):
        out = []
        if self.peek()[1] == ")":
            self.next()
            return out
        while True:
            out.append(item())
            sep = self.next()
            if sep[1] == ")":
                return out
            if sep[1] != ",":
                raise ParseError(f"expected ',' or ')', found {sep[1] or 'end of input'!r}", pos=sep[2])

    def raw_formula(self):
        kind, name, pos = self.next()
        if kind != "id":
            raise ParseError(f"expected formula, found {name or 'end of input'!r}", pos=pos)
        if name == "true":
            return ("top", pos)
        if name == "false":
            return ("bot", pos)
        if name in ("and", "or"):
            self.expect("(")
            return (name, self.raw_list(self.raw_formula), pos)
        if name == "imp":
            self.expect("(")
            a = self.raw_formula()
            self.expect(",")
            b = self.raw_formula()
            self.expect(")")
            return ("imp", a, b, pos)
        if name == "eq":
            self.expect("(")
            a = self.raw_term()
            self.expect(",")
            b = self.raw_term()
            self.expect(")")
            return ("eq", a, b, pos)
        if name in ("ex", "all"):
            self.expect("(")
            block = self.raw_block()
            self.expect(",")
            body = self.raw_formula()
            self.expect(")")
            return (name, block, body, pos)
        args = []
        if self.peek()[1] == "(":
            self.next()
            args = self.raw_list(self.raw_term)
        return ("atom", name, args, pos)

    def raw_sequent(self):
        ante = self.raw_formula()
        tok = self.next()
        if tok[0] != "turnstile":
            raise ParseError(f"expected '|-', found {tok[1] or 'end of input'!r}", pos=tok[2])
        ctx = self.raw_block()
        succ = self.raw_formula()
        return ante, ctx, succ

    def done(self):
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"trailing input {tok[1]!r}", pos=tok[2])

    # -- resolution
    def make_var(self, name, sort, pos):
        if name.startswith(FRESH_PREFIX) and not self.allow_reserved:
            raise ParseError(f"variable {name!r} uses the reserved prefix {FRESH_PREFIX!r}", pos=pos)
        if name in KEYWORDS:
            raise ParseError(f"keyword {name!r} used as a variable", pos=pos)
        sort = sort or self.sig.default_sort
        if sort not in self.sig.sorts:
            raise SortError(f"unknown sort {sort} for variable {name}")
        if name in self.sig.functions or name in self.sig.relations:
            raise SortError(f"variable {name} clashes with a symbol name")
        return Var(name, sort)

    def block(self, raw):
        vs = [self.make_var(n, s, p) for n, s, p in raw]
        if len({v.name for v in vs}) != len(vs):
            raise SortError("quantifier block repeats a variable")
        if len(vs) >= self.sig.arity_bound:
            raise ArityError(f"quantifier block of size {len(vs)} >= {self.sig.arity_bound}")
        return tuple(vs)

    def term(self, raw, scope, want, free, infer_only):
        _, name, args, pos = raw
        if args is None and name in scope:
            v = scope[name]
            if want is not None and v.sort != want:
                raise SortError(f"variable {name} has sort {v.sort}, expected {want}")
            return v
        if name in self.sig.functions:
            fargs, res = self.sig.functions[name]
            args = args or []
            if len(args) != len(fargs):
                raise ArityError(f"{name} expects {len(fargs)} arguments, got {len(args)}")
            if want is not None and res != want:
                raise SortError(f"term {name} has sort {res}, expected {want}")
            return App(name, tuple(self.term(a, scope, s, free, infer_only)
                                   for a, s in zip(args, fargs)), res)
        if args is not None:
            raise SortError(f"unknown function symbol {name}")
        if name in self.sig.relations:
            raise SortError(f"relation symbol {name} used as a term")
        # free variable of inferred sort
        known = free.get(name)
        if infer_only:
            if want is not None:
                if known is not None and known != want:
                    raise SortError(f"free variable {name} used at sorts {known} and {want}")
                free[name] = want
            return None
        sort = known or want or self.sig.default_sort
        if want is not None and sort != want:
            raise SortError(f"free variable {name} used at sorts {sort} and {want}")
        return self.make_var(name, sort, pos)

    def formula(self, raw, scope, free, infer_only=False):
        tag = raw[0]
        if tag == "top":
            return TOP
        if tag == "bot":
            return BOT
        if tag in ("and", "or"):
            parts = tuple(self.formula(r, scope, free, infer_only) for r in raw[1])
            if len(parts) > self.sig.conn_bound:
                raise ArityError(f"connective width {len(parts)} exceeds {self.sig.conn_bound}")
            return And(parts) if tag == "and" else Or(parts)
        if tag == "imp":
            return Imp(self.formula(raw[1], scope, free, infer_only),
                       self.formula(raw[2], scope, free, infer_only))
        if tag == "eq":
            a, b = raw[1], raw[2]
            if infer_only:
                # sort of one side constrains the other only when it is known
                sa = self._known_sort(a, scope, free)
                sb = self._known_sort(b, scope, free)
                self.term(a, scope, sb, free, True)
                self.term(b, scope, sa, free, True)
                return None
            sa = self._known_sort(a, scope, free)
            sb = self._known_sort(b, scope, free)
            lhs = self.term(a, scope, sb, free, False)
            rhs = self.term(b, scope, lhs.sort, free, False)
            if sa is not None and sa != rhs.sort:
                raise SortError(f"equation mixes sorts {sa} and {rhs.sort}")
            return Eq(lhs, rhs)
        if tag in ("ex", "all"):
            block = self.block(raw[1])
            inner = dict(scope)
            for v in block:
                inner[v.name] = v
            body = self.formula(raw[2], inner, free, infer_only)
            return (Exists if tag == "ex" else Forall)(block, body)
        _, name, args, pos = raw
        if name not in self.sig.relations:
            raise SortError(f"unknown relation symbol {name}")
        want = self.sig.relations[name]
        if len(want) != len(args):
            raise ArityError(f"{name} expects {len(want)} arguments, got {len(args)}")
        return Atom(name, tuple(self.term(a, scope, s, free, infer_only) for a, s in zip(args, want)))

    def _known_sort(self, raw, scope, free):
        _, name, args, _ = raw
        if args is None and name in scope:
            return scope[name].sort
        if name in self.sig.functions:
            return self.sig.functions[name][1]
        return free.get(name)


def _resolve(p, raw, context):
    scope = {v.name: v for v in context}
    free = {}
    p.formula(raw, scope, free, infer_only=True)
    return p.formula(raw, scope, free)


def parse_formula(text, sig, context=(), allow_reserved=False):
    """Parse ``text`` into a well-sorted formula.

    ``context`` fixes the sorts of free variables; other free variables get
    the sort their argument position demands (default sort in bare equations).
    """
    p = _Parser(text, sig, allow_reserved)
    raw = p.raw_formula()
    p.done()
    return _resolve(p, raw, tuple(context))


def parse_context(text, sig, allow_reserved=False):
    p = _Parser(text, sig, allow_reserved)
    block = p.raw_block()
    p.done()
    vs = tuple(p.make_var(n, s, pos) for n, s, pos in block)
    if len({v.name for v in vs}) != len(vs):
        raise SortError("context repeats a variable")
    return vs


def parse_sequent(text, sig, allow_reserved=False):
    p = _Parser(text, sig, allow_reserved)
    ante, ctx, succ = p.raw_sequent()
    p.done()
    context = tuple(p.make_var(n, s, pos) for n, s, pos in ctx)
    if len({v.name for v in context}) != len(context):
        raise SortError("context repeats a variable")
    return Sequent(_resolve(p, ante, context), context, _resolve(p, succ, context))


def parse_term(text, sig, context=(), allow_reserved=False):
    p = _Parser(text, sig, allow_reserved)
    raw = p.raw_term()
    p.done()
    scope = {v.name: v for v in context}
    return p.term(raw, scope, None, {}, False)


def ordered_vars(vs: Iterable[Var]):
    """Deterministic ordering of a variable set (by name, then sort)."""
    return tuple(sorted(vs, key=lambda v: (v.name, v.sort)))
