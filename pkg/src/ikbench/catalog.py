"""Small posets and lattices up to isomorphism.

Posets are grown one maximal element at a time: every finite poset has a
linear extension, so adding a new top-level point above each down-closed
set of the previous posets reaches every isomorphism type.  Duplicates are
removed with a graph hash and an exact isomorphism test.
"""

from __future__ import annotations

from functools import lru_cache

import networkx as nx
import numpy as np

from .lattice import FinLattice, FinPoset, LatticeError, downsets_lattice


def _downsets(n, below):
    """Down-closed subsets of {0..n-1}; ``below[i]`` is the strict down-set of i."""
    out = [frozenset()]
    for i in range(n):
        out += [D | {i} for D in out if below[i] <= D]
    return out


def _graph(n, below):
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((j, i) for i in range(n) for j in below[i])
    return g


class _IsoBuckets:
    def __init__(self):
        self.buckets = {}

    def add(self, g):
        """Insert ``g`` unless an isomorphic graph is already present."""
        key = (g.number_of_nodes(), g.number_of_edges(), nx.weisfeiler_lehman_graph_hash(g))
        bucket = self.buckets.setdefault(key, [])
        if any(nx.is_isomorphic(g, h) for h in bucket):
            return False
        bucket.append(g)
        return True


@lru_cache(maxsize=None)
def _posets(n, max_downsets=None):
    """Tuple of posets on {0..n-1} as tuples of strict down-sets, one per isomorphism type."""
    if n == 0:
        return ((),)
    seen = _IsoBuckets()
    out = []
    for below in _posets(n - 1, max_downsets):
        below = list(below)
        for D in _downsets(n - 1, below):
            cand = below + [frozenset(D)]
            if max_downsets is not None and len(_downsets(n, cand)) > max_downsets:
                continue
            if seen.add(_graph(n, cand)):
                out.append(tuple(cand))
    return tuple(out)


def posets(n):
    """All posets with ``n`` points up to isomorphism, as ``FinPoset`` over 0..n-1."""
    return [_to_poset(n, below) for below in _posets(n)]


def _to_poset(n, below):
    pairs = {(i, i) for i in range(n)} | {(j, i) for i in range(n) for j in below[i]}
    return FinPoset(tuple(range(n)), frozenset(pairs))


def _bounded(n, below):
    """Order matrix of the poset with a new bottom and top added."""
    m = np.eye(n + 2, dtype=bool)
    m[0, :] = True
    m[:, n + 1] = True
    for i in range(n):
        for j in below[i]:
            m[j + 1, i + 1] = True
    return m


@lru_cache(maxsize=None)
def _lattices(size):
    if size == 1:
        return (FinLattice(("0",), [[True]]),)
    out = []
    names = ("0",) + tuple(f"x{i}" for i in range(size - 2)) + ("1",)
    for below in _posets(size - 2):
        try:
            out.append(FinLattice(names, _bounded(size - 2, below)))
        except LatticeError:
            continue
    return tuple(out)


def lattices(size):
    """All lattices with exactly ``size`` elements up to isomorphism."""
    return list(_lattices(size))


def lattices_upto(max_size):
    return [L for k in range(1, max_size + 1) for L in _lattices(k)]


@lru_cache(maxsize=None)
def _distributive(size):
    # a poset with k points has at least k + 1 down-sets
    out = []
    for k in range(size):
        for below in _posets(k, size):
            if len(_downsets(k, list(below))) == size:
                out.append(downsets_lattice(_to_poset(k, below)))
    return tuple(out)


def distributive_lattices(size):
    """All distributive lattices with ``size`` elements, via down-set lattices of posets."""
    return list(_distributive(size))


def distributive_upto(max_size):
    return [L for k in range(1, max_size + 1) for L in _distributive(k)]


def named_lattices():
    """A few standard small lattices by name."""
    def mk(elements, pairs):
        return FinLattice.from_order(elements, pairs)
    return {
        "chain3": mk(["0", "m", "1"], [("0", "m"), ("m", "1")]),
        "square": mk(["0", "a", "b", "1"], [("0", "a"), ("0", "b"), ("a", "1"), ("b", "1")]),
        "M3": mk(["0", "a", "b", "c", "1"], [("0", x) for x in "abc"] + [(x, "1") for x in "abc"]),
        "N5": mk(["0", "a", "b", "c", "1"], [("0", "a"), ("a", "b"), ("b", "1"), ("0", "c"), ("c", "1")]),
    }
