"""Weighted simplicial complexes.

A weighted simplicial complex (wsc) on the vertex set ``{0, ..., n}`` assigns a
nonnegative integer weight to every subset of vertices, such that the weight of
a subset divides the weight of every superset with nonzero weight.  Only the
facets (inclusion-maximal simplices) and their multiplicities matter for the
decompositions in this package; lower simplices are needed only to validate the
axioms.

Weights are stored sparsely.  A simplex that is not stored explicitly gets the
gcd of the weights of the facets containing it.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property, reduce
from math import gcd
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "FacetCopy",
    "ValidationReport",
    "Wsc",
    "WscError",
    "validate_wsc",
    "facets",
    "facet_multiset",
    "incident",
    "is_connected",
    "standard_complex",
    "cayley_complex",
    "cayley_edge_copies",
    "scale_weights",
    "wsc_to_json",
    "wsc_from_json",
]

Simplex = tuple[int, ...]


class WscError(ValueError):
    """Raised when a complex is malformed or an operation is not applicable."""


class FacetCopy(NamedTuple):
    facet: Simplex
    copy: int


@dataclass
class ValidationReport:
    """Collected axiom violations; empty means valid."""

    violations: list[str] = field(default_factory=list)
    details: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str, **extra) -> None:
        self.violations.append(f"{kind}: {message}")
        self.details.append({"kind": kind, "message": message, **extra})

    def __bool__(self) -> bool:
        return self.ok


def _as_simplex(s: Iterable[int]) -> Simplex:
    out = tuple(sorted(set(int(v) for v in s)))
    return out


class Wsc:
    """A weighted simplicial complex on ``{0, ..., n}``.

    Parameters
    ----------
    n : int
        Largest vertex label; the complex has ``n + 1`` vertices.
    weights : mapping
        Explicit weights, keyed by iterables of vertices.  Absent sets get the
        gcd of the weights of the facets containing them (0 if none).  The
        empty set is ignored.

    Instances are treated as immutable.
    """

    def __init__(self, n: int, weights: Mapping[Iterable[int], int]):
        if int(n) < 0:
            raise WscError("n must be nonnegative")
        self.n = int(n)
        table: dict[Simplex, int] = {}
        for key, w in weights.items():
            s = _as_simplex(key)
            if not s:
                continue
            if s[0] < 0 or s[-1] > self.n:
                raise WscError(f"simplex {s} has a vertex outside [0..{self.n}]")
            table[s] = int(w)
        self._weights = table

    @property
    def num_vertices(self) -> int:
        return self.n + 1

    @property
    def explicit_weights(self) -> dict[Simplex, int]:
        return dict(self._weights)

    @cached_property
    def _facets(self) -> tuple[Simplex, ...]:
        support = [s for s, w in self._weights.items() if w > 0]
        maximal = [
            s for s in support
            if not any(len(t) > len(s) and set(s) <= set(t) for t in support)
        ]
        return tuple(sorted(maximal))

    def weight(self, s: Iterable[int]) -> int:
        """Weight of an arbitrary vertex set (0 outside the support)."""
        s = _as_simplex(s)
        if s in self._weights:
            return self._weights[s]
        containing = [self._weights[f] for f in self._facets if set(s) <= set(f)]
        if not containing:
            return 0
        return reduce(gcd, containing)

    @cached_property
    def support(self) -> tuple[Simplex, ...]:
        """All nonempty simplices of nonzero weight, sorted by size then lexicographically."""
        seen: set[Simplex] = set()
        for f in self._facets:
            for k in range(1, len(f) + 1):
                seen.update(itertools.combinations(f, k))
        return tuple(sorted(seen, key=lambda s: (len(s), s)))

    @cached_property
    def report(self) -> ValidationReport:
        return _validate(self)

    @cached_property
    def copies(self) -> tuple[FacetCopy, ...]:
        return tuple(
            FacetCopy(f, c) for f in self._facets for c in range(self._weights[f])
        )

    @cached_property
    def incident_positions(self) -> tuple[tuple[int, ...], ...]:
        """For each vertex, the positions in :attr:`copies` of its incident facet copies."""
        return tuple(
            tuple(p for p, x in enumerate(self.copies) if i in x.facet)
            for i in range(self.n + 1)
        )

    def facet_weights(self) -> dict[Simplex, int]:
        return {f: self._weights[f] for f in self._facets}

    def weight_table(self) -> dict[Simplex, int]:
        """The full weight function restricted to its support."""
        return {s: self.weight(s) for s in self.support}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Wsc):
            return NotImplemented
        return self.n == other.n and self.weight_table() == other.weight_table()

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(self.weight_table().items()))))

    def __repr__(self) -> str:
        fw = ", ".join(f"{list(f)}:{w}" for f, w in self.facet_weights().items())
        return f"Wsc(n={self.n}, facets={{{fw}}})"


def _validate(w: Wsc) -> ValidationReport:
    rep = ValidationReport()
    for s, val in w._weights.items():
        if val < 0:
            rep.add("nonnegativity", f"weight({list(s)}) = {val} < 0", simplex=list(s))
    for i in range(w.n + 1):
        if w.weight((i,)) == 0:
            rep.add("singleton", f"vertex {i} has weight 0", vertex=i)
    # Explicit zeros inside the support break monotonicity.
    for s, val in w._weights.items():
        if val == 0:
            sup = [f for f in w._facets if set(s) <= set(f)]
            if sup:
                rep.add(
                    "monotone_support",
                    f"{list(s)} has weight 0 but lies in facet {list(sup[0])}",
                    simplex=list(s),
                )
    # Divisibility along codimension-one inclusions suffices (transitivity).
    for s in w.support:
        ws = w.weight(s)
        if ws <= 0 or len(s) == 1:
            continue
        for v in s:
            t = tuple(x for x in s if x != v)
            wt = w.weight(t)
            if wt == 0:
                continue
            if ws % wt != 0:
                rep.add(
                    "divisibility",
                    f"weight({list(t)}) = {wt} does not divide weight({list(s)}) = {ws}",
                    sub=list(t),
                    sup=list(s),
                )
    return rep


def validate_wsc(w: Wsc) -> ValidationReport:
    """Check the wsc axioms; violations are returned, never raised."""
    return w.report


def _require_valid(w: Wsc) -> None:
    if not w.report.ok:
        raise WscError("invalid wsc: " + "; ".join(w.report.violations))


def facets(w: Wsc) -> frozenset[Simplex]:
    _require_valid(w)
    return frozenset(w._facets)


def facet_multiset(w: Wsc) -> tuple[FacetCopy, ...]:
    """Facet copies in canonical order (facets lexicographic, then copy index)."""
    _require_valid(w)
    return w.copies


def incident(w: Wsc, i: int) -> tuple[FacetCopy, ...]:
    """The facet copies whose facet contains vertex ``i``, in canonical order."""
    _require_valid(w)
    if not 0 <= i <= w.n:
        raise WscError(f"vertex {i} out of range [0..{w.n}]")
    return tuple(w.copies[p] for p in w.incident_positions[i])


def is_connected(w: Wsc) -> bool:
    _require_valid(w)
    parent = list(range(w.n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in w._facets:
        for v in f[1:]:
            a, b = find(f[0]), find(v)
            if a != b:
                parent[a] = b
    return len({find(i) for i in range(w.n + 1)}) == 1


def _with_singletons(n: int, facet_weights: Mapping[Simplex, int]) -> Wsc:
    table: dict[Simplex, int] = {(i,): 1 for i in range(n + 1)}
    table.update(facet_weights)
    return Wsc(n, table)


def cayley_edge_copies(mul: Sequence[Sequence[int]], gens: Iterable[int]) -> dict[tuple[int, int], FacetCopy]:
    """Map each directed Cayley edge ``(g, s)`` (the edge ``g -> g*s``) to its facet copy.

    A pair ``{g, h}`` joined in both directions has two copies: copy 0 is the
    edge leaving the smaller vertex, copy 1 the edge leaving the larger one.
    """
    mul = np.asarray(mul)
    gens = sorted(set(int(s) for s in gens))
    out = {}
    for g in range(len(mul)):
        for s in gens:
            h = int(mul[g, s])
            facet = (min(g, h), max(g, h))
            both = any(int(mul[h, t]) == g for t in gens)
            copy = 1 if (both and g > h) else 0
            out[(g, s)] = FacetCopy(facet, copy)
    return out


def cayley_complex(mul: Sequence[Sequence[int]], gens: Iterable[int]) -> Wsc:
    """The Cayley complex of a group given by its multiplication table.

    Vertices are group elements (0 is the identity).  A pair ``{g, h}`` gets
    weight 2 if both ``g -> h`` and ``h -> g`` are Cayley edges, 1 if exactly
    one is, and 0 otherwise.
    """
    mul = np.asarray(mul)
    order = len(mul)
    gens = sorted(set(int(s) for s in gens))
    if order < 2:
        raise WscError("Cayley complex needs a nontrivial group")
    if 0 in gens:
        raise WscError("the identity may not be a generator")
    if not gens:
        raise WscError("empty generating set")
    edges = {(g, int(mul[g, s])) for g in range(order) for s in gens}
    fw = {}
    for g in range(order):
        for h in range(g + 1, order):
            c = ((g, h) in edges) + ((h, g) in edges)
            if c:
                fw[(g, h)] = c
    return _with_singletons(order - 1, fw)


def standard_complex(family: str, n: int | None = None, *, mul=None, gens=None) -> Wsc:
    """Build one of the standard complexes.

    Parameters
    ----------
    family : {"simplex", "complete", "line", "circle", "double_edge", "edge", "cayley"}
        ``simplex`` is the n-simplex on ``[0..n]``; ``complete`` the complete
        graph on ``[0..n]``; ``line`` the path with n edges; ``circle`` the
        cycle with n vertices ``0..n-1`` (n >= 3); ``double_edge`` the edge with
        weight 2; ``edge`` the simple edge; ``cayley`` needs ``mul`` and ``gens``.
    """
    if family == "simplex":
        _need(n is not None and n >= 0, "simplex needs n >= 0")
        return _with_singletons(n, {tuple(range(n + 1)): 1})
    if family == "complete":
        _need(n is not None and n >= 1, "complete graph needs n >= 1")
        return _with_singletons(n, {p: 1 for p in itertools.combinations(range(n + 1), 2)})
    if family == "line":
        _need(n is not None and n >= 1, "line needs n >= 1")
        return _with_singletons(n, {(i, i + 1): 1 for i in range(n)})
    if family == "circle":
        _need(n is not None and n >= 3, "circle needs n >= 3")
        fw = {(i, i + 1): 1 for i in range(n - 1)}
        fw[(0, n - 1)] = 1
        return _with_singletons(n - 1, fw)
    if family == "edge":
        return _with_singletons(1, {(0, 1): 1})
    if family == "double_edge":
        return _with_singletons(1, {(0, 1): 2})
    if family == "cayley":
        _need(mul is not None and gens is not None, "cayley needs mul and gens")
        return cayley_complex(mul, gens)
    raise WscError(f"unknown family {family!r}")


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise WscError(msg)


def scale_weights(w: Wsc, m: int) -> Wsc:
    """Multiply every facet weight by ``m``; all lower simplices keep their weights."""
    _require_valid(w)
    if int(m) < 1:
        raise WscError("scale factor must be a positive integer")
    fac = set(w._facets)
    table = {s: (m * w.weight(s) if s in fac else w.weight(s)) for s in w.support}
    return Wsc(w.n, table)


def wsc_to_json(w: Wsc) -> dict:
    items = sorted(w.explicit_weights.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return {"n": w.n, "weights": [{"set": list(s), "w": v} for s, v in items if v != 0]}


def wsc_from_json(obj: dict | str) -> Wsc:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or set(obj) != {"n", "weights"}:
        raise WscError("wsc JSON must have exactly the keys 'n' and 'weights'")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise WscError("'n' must be an integer")
    table = {}
    for entry in obj["weights"]:
        if not isinstance(entry, dict) or set(entry) != {"set", "w"}:
            raise WscError("each weight entry must have exactly 'set' and 'w'")
        s, v = entry["set"], entry["w"]
        if not isinstance(v, int) or isinstance(v, bool):
            raise WscError("weights must be integers")
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in s):
            raise WscError("simplex entries must be integers")
        if len(set(s)) != len(s):
            raise WscError(f"duplicate vertex in {s}")
        key = _as_simplex(s)
        if key in table:
            raise WscError(f"simplex {list(key)} listed twice")
        table[key] = v
    return Wsc(n, table)
