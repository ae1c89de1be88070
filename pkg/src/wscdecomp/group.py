"""Finite groups acting on weighted simplicial complexes.

Groups are given by explicit multiplication tables with element 0 the
identity.  An action on a complex consists of a permutation of the vertices
for every group element, together with a permutation of the facet copies
(positions in the canonical facet multiset) that refines the induced action
on facets.
"""

from __future__ import annotations

import itertools
import json
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .complex import ValidationReport, Wsc, scale_weights, cayley_complex, cayley_edge_copies

__all__ = [
    "ActionError",
    "FiniteGroup",
    "WscAction",
    "validate_group",
    "validate_action",
    "is_free",
    "is_blending",
    "is_strongly_blending",
    "z_map",
    "free_refinement",
    "orbits",
    "restrict_action",
    "trivial_action",
    "action_from_vertex_perms",
    "circle_rotation_action",
    "line_reflection_action",
    "simplex_symmetric_action",
    "edge_swap_action",
    "double_edge_action",
    "cayley_action",
    "action_to_json",
    "action_from_json",
]


class ActionError(ValueError):
    """An action is malformed or lacks a property an operation requires."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class FiniteGroup:
    """A finite group given by its multiplication table.

    ``mul[a, b]`` is the product ``a*b``; element 0 must be the identity.
    """

    def __init__(self, mul: Sequence[Sequence[int]]):
        self.mul = np.array(mul, dtype=np.intp)
        if self.mul.ndim != 2 or self.mul.shape[0] != self.mul.shape[1] or self.mul.shape[0] == 0:
            raise ActionError("multiplication table must be a nonempty square array")
        self.mul.setflags(write=False)

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self) -> int:
        return self.order

    @cached_property
    def inv(self) -> np.ndarray:
        inv = np.full(self.order, -1, dtype=np.intp)
        for a in range(self.order):
            hit = np.nonzero(self.mul[a] == 0)[0]
            if len(hit):
                inv[a] = hit[0]
        inv.setflags(write=False)
        return inv

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and np.array_equal(self.mul, other.mul)

    def __hash__(self):
        return hash(self.mul.tobytes())

    def __repr__(self):
        return f"FiniteGroup(order={self.order})"

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls([[0]])

    @classmethod
    def cyclic(cls, k: int) -> "FiniteGroup":
        k = int(k)
        return cls([[(a + b) % k for b in range(k)] for a in range(k)])

    @classmethod
    def from_permutations(cls, perms: Sequence[Sequence[int]]) -> tuple["FiniteGroup", list[tuple[int, ...]]]:
        """Group of the given permutations (closed under composition).

        Returns the group and the list of permutations in element order; the
        identity is moved to position 0.  Composition is ``(a*b)(x) = a(b(x))``.
        """
        perms = [tuple(int(x) for x in p) for p in perms]
        if not perms:
            raise ActionError("empty permutation list")
        ident = tuple(range(len(perms[0])))
        elements = [ident] + [p for p in dict.fromkeys(perms) if p != ident]
        index = {p: k for k, p in enumerate(elements)}
        if len(index) != len(elements):
            raise ActionError("duplicate permutations")
        mul = np.empty((len(elements), len(elements)), dtype=np.intp)
        for a, pa in enumerate(elements):
            for b, pb in enumerate(elements):
                prod = tuple(pa[x] for x in pb)
                if prod not in index:
                    raise ActionError("permutations are not closed under composition")
                mul[a, b] = index[prod]
        return cls(mul), elements

    @classmethod
    def generated_by(cls, gens: Sequence[Sequence[int]]) -> tuple["FiniteGroup", list[tuple[int, ...]]]:
        """Close a set of generating permutations and return the group with its permutations."""
        gens = [tuple(int(x) for x in g) for g in gens]
        size = len(gens[0]) if gens else 0
        ident = tuple(range(size))
        seen = {ident: None}
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                for g in gens:
                    q = tuple(g[x] for x in p)
                    if q not in seen:
                        seen[q] = None
                        nxt.append(q)
            frontier = nxt
        rest = sorted(p for p in seen if p != ident)
        return cls.from_permutations([ident] + rest)

    @classmethod
    def symmetric(cls, k: int) -> tuple["FiniteGroup", list[tuple[int, ...]]]:
        return cls.from_permutations(list(itertools.permutations(range(k))))

    @classmethod
    def dihedral(cls, k: int) -> tuple["FiniteGroup", list[tuple[int, ...]]]:
        """Symmetries of a k-gon as permutations of its vertices."""
        rot = [(x + 1) % k for x in range(k)]
        ref = [(-x) % k for x in range(k)]
        return cls.generated_by([rot, ref])

    def is_subgroup(self, elements: Iterable[int]) -> bool:
        H = set(int(h) for h in elements)
        if 0 not in H:
            return False
        return all(int(self.mul[a, self.inv[b]]) in H for a in H for b in H)

    def is_normal(self, elements: Iterable[int]) -> bool:
        H = set(int(h) for h in elements)
        if not self.is_subgroup(H):
            return False
        return all(
            int(self.mul[self.mul[g, h], self.inv[g]]) in H for g in range(self.order) for h in H
        )

    def left_cosets(self, elements: Iterable[int]) -> np.ndarray:
        """Coset label of every element for the left cosets ``gH``.

        Cosets are numbered by their smallest element, so the identity coset
        is 0.
        """
        H = sorted(set(int(h) for h in elements))
        label = np.full(self.order, -1, dtype=np.intp)
        nxt = 0
        for g in range(self.order):
            if label[g] < 0:
                for h in H:
                    label[self.mul[g, h]] = nxt
                nxt += 1
        return label

    def subgroup(self, elements: Iterable[int]) -> tuple["FiniteGroup", list[int]]:
        """The subgroup as a group in its own right, with its elements in new order."""
        H = sorted(set(int(h) for h in elements))
        if not self.is_subgroup(H):
            raise ActionError(f"{H} is not a subgroup")
        index = {h: k for k, h in enumerate(H)}
        mul = [[index[int(self.mul[a, b])] for b in H] for a in H]
        return FiniteGroup(mul), H


def validate_group(G: FiniteGroup) -> ValidationReport:
    rep = ValidationReport()
    k = G.order
    mul = G.mul
    if mul.min() < 0 or mul.max() >= k:
        rep.add("closure", "table entries out of range")
        return rep
    if not (np.array_equal(mul[0], np.arange(k)) and np.array_equal(mul[:, 0], np.arange(k))):
        rep.add("identity", "element 0 is not a two-sided identity")
    for a in range(k):
        if sorted(mul[a]) != list(range(k)):
            rep.add("latin", f"row {a} is not a permutation")
    if np.any(G.inv < 0):
        rep.add("inverse", "some element has no inverse")
    # (ab)c == a(bc) for all triples
    lhs = mul[mul[:, :, None], np.arange(k)[None, None, :]]
    rhs = mul[np.arange(k)[:, None, None], mul[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        a, b, c = bad[0]
        rep.add("associativity", f"({a}*{b})*{c} != {a}*({b}*{c})")
    return rep


class WscAction:
    """An action of a finite group on a weighted simplicial complex.

    Parameters
    ----------
    group : FiniteGroup
    complex : Wsc
    vertex_act : array_like, shape (|G|, n + 1)
        ``vertex_act[g][i]`` is the image of vertex ``i`` under ``g``.
    copy_act : array_like, shape (|G|, number of facet copies)
        ``copy_act[g][p]`` is the canonical position of the image of the facet
        copy at position ``p``.
    """

    def __init__(self, group: FiniteGroup, complex: Wsc, vertex_act, copy_act):
        self.group = group
        self.complex = complex
        self.vertex_act = np.array(vertex_act, dtype=np.intp).reshape(group.order, complex.n + 1)
        self.copy_act = np.array(copy_act, dtype=np.intp).reshape(group.order, len(complex.copies))
        self.vertex_act.setflags(write=False)
        self.copy_act.setflags(write=False)

    def __repr__(self):
        return f"WscAction(order={self.group.order}, {self.complex!r})"

    @property
    def order(self) -> int:
        return self.group.order

    @cached_property
    def report(self) -> ValidationReport:
        return _validate_action(self)

    @cached_property
    def is_trivial(self) -> bool:
        return bool(
            np.all(self.vertex_act == np.arange(self.complex.n + 1))
            and np.all(self.copy_act == np.arange(len(self.complex.copies)))
        )

    @cached_property
    def vertex_orbits(self) -> list[list[int]]:
        return _orbits(self.vertex_act)

    @cached_property
    def copy_orbits(self) -> list[list[int]]:
        return _orbits(self.copy_act)

    @cached_property
    def orbit_of(self) -> np.ndarray:
        """Index of the vertex orbit containing each vertex."""
        out = np.empty(self.complex.n + 1, dtype=np.intp)
        for k, orb in enumerate(self.vertex_orbits):
            out[orb] = k
        return out

    def stabilizer(self, i: int) -> list[int]:
        return [g for g in range(self.order) if self.vertex_act[g, i] == i]

    @cached_property
    def transporters(self) -> list[int]:
        """For every vertex ``i``, the smallest ``g`` moving its orbit representative to ``i``."""
        out = [0] * (self.complex.n + 1)
        for orb in self.vertex_orbits:
            rep = orb[0]
            for i in orb:
                out[i] = next(g for g in range(self.order) if self.vertex_act[g, rep] == i)
        return out

    def pull_axes(self, g: int, i: int) -> list[int]:
        """Axis order that pulls a local table at ``g*i`` back to vertex ``i``.

        With ``T`` the table at ``g*i``, ``np.transpose(T, pull_axes(g, i) + [k])``
        is indexed by assignments on the copies of ``i``: its entry at ``beta``
        is the entry of ``T`` at the assignment ``q -> beta(g^-1 q)``.
        """
        P = self.complex.incident_positions
        gi = int(self.vertex_act[g, i])
        where = {q: a for a, q in enumerate(P[gi])}
        return [where[int(self.copy_act[g, p])] for p in P[i]]

    def pullback(self, table: np.ndarray, g: int, i: int) -> np.ndarray:
        ax = self.pull_axes(g, i)
        return np.transpose(table, ax + list(range(len(ax), table.ndim)))

    def pushforward(self, table: np.ndarray, g: int, i: int) -> np.ndarray:
        """Move a table at vertex ``i`` to vertex ``g*i`` (inverse of :meth:`pullback`)."""
        ax = list(np.argsort(self.pull_axes(g, i)))
        return np.transpose(table, ax + list(range(len(ax), table.ndim)))


def _orbits(perms: np.ndarray) -> list[list[int]]:
    m = perms.shape[1]
    seen = np.zeros(m, dtype=bool)
    out = []
    for x in range(m):
        if not seen[x]:
            orb = sorted(set(int(v) for v in perms[:, x]))
            seen[orb] = True
            out.append(orb)
    return out


def _is_perm(row: np.ndarray) -> bool:
    return sorted(row.tolist()) == list(range(len(row)))


def _validate_action(a: WscAction) -> ValidationReport:
    rep = ValidationReport()
    G, w = a.group, a.complex
    grep = validate_group(G)
    for v in grep.violations:
        rep.add("group", v)
    if not w.report.ok:
        for v in w.report.violations:
            rep.add("complex", v)
        return rep
    if not grep.ok:
        return rep
    for g in range(G.order):
        if not _is_perm(a.vertex_act[g]):
            rep.add("permutation", f"vertex_act[{g}] is not a permutation", element=g)
        if not _is_perm(a.copy_act[g]):
            rep.add("permutation", f"copy_act[{g}] is not a permutation", element=g)
    if not rep.ok:
        return rep
    if not np.array_equal(a.vertex_act[0], np.arange(w.n + 1)):
        rep.add("homomorphism", "identity does not fix all vertices")
    if not np.array_equal(a.copy_act[0], np.arange(len(w.copies))):
        rep.add("homomorphism", "identity does not fix all facet copies")
    for g in range(G.order):
        for h in range(G.order):
            gh = G.mul[g, h]
            if not np.array_equal(a.vertex_act[gh], a.vertex_act[g][a.vertex_act[h]]):
                rep.add("homomorphism", f"vertex action of {g}*{h} is not the composite", pair=[g, h])
            if not np.array_equal(a.copy_act[gh], a.copy_act[g][a.copy_act[h]]):
                rep.add("homomorphism", f"copy action of {g}*{h} is not the composite", pair=[g, h])
    for g in range(G.order):
        for s in w.support:
            gs = tuple(sorted(int(a.vertex_act[g, v]) for v in s))
            if w.weight(gs) != w.weight(s):
                rep.add(
                    "weight",
                    f"element {g} maps {list(s)} (weight {w.weight(s)}) to {list(gs)} (weight {w.weight(gs)})",
                    element=g,
                )
                break
    for g in range(G.order):
        for p, x in enumerate(w.copies):
            image = w.copies[a.copy_act[g, p]].facet
            expected = tuple(sorted(int(a.vertex_act[g, v]) for v in x.facet))
            if image != expected:
                rep.add(
                    "collapse",
                    f"element {g} sends a copy of {list(x.facet)} to a copy of {list(image)}, "
                    f"expected a copy of {list(expected)}",
                    element=g,
                    position=p,
                )
    return rep


def validate_action(a: WscAction) -> ValidationReport:
    return a.report


def _require_valid(a: WscAction) -> None:
    if not a.report.ok:
        raise ActionError("invalid action: " + "; ".join(a.report.violations[:5]))


def is_free(a: WscAction) -> bool:
    """True iff no non-identity element fixes a facet copy."""
    _require_valid(a)
    return _stabilizer_witness(a) is None


def _stabilizer_witness(a: WscAction):
    fixed = np.argwhere(a.copy_act[1:] == np.arange(a.copy_act.shape[1]))
    if len(fixed):
        g, p = fixed[0]
        return int(g) + 1, int(p)
    return None


def _realizability(a: WscAction, germs: np.ndarray) -> bool:
    """Backtracking over covering tuples of local behaviours.

    ``germs[i][g]`` encodes how ``g`` looks from vertex ``i``.  Returns True iff
    every choice of one germ per vertex whose vertex images form a bijection
    is realized by a single group element.  Branches whose candidate set is
    nonempty correspond to disjoint sets of group elements, so the search
    visits at most ``(n + 1) * |G|`` nodes before it either finishes or finds a
    counterexample.  Any partial choice extends to a covering tuple because
    images stay inside orbits, on which the group acts transitively.
    """
    n1 = a.complex.n + 1
    va = a.vertex_act

    def rec(i: int, used: frozenset, cand: list[int]) -> bool:
        if i == n1:
            return True
        tried = set()
        for g in range(a.order):
            gm = germs[i][g]
            if gm in tried:
                continue
            tried.add(gm)
            img = int(va[g, i])
            if img in used:
                continue
            nxt = [h for h in cand if germs[i][h] == gm]
            if not nxt or not rec(i + 1, used | {img}, nxt):
                return False
        return True

    return rec(0, frozenset(), list(range(a.order)))


def is_blending(a: WscAction) -> bool:
    """True iff every orbit-respecting bijection of vertices is realized by one element."""
    _require_valid(a)
    germs = [[int(a.vertex_act[g, i]) for g in range(a.order)] for i in range(a.complex.n + 1)]
    return _realizability(a, germs)


def is_strongly_blending(a: WscAction) -> bool:
    """Blending, where the realizing element must also agree on incident facet copies."""
    _require_valid(a)
    P = a.complex.incident_positions
    germs = [
        [(int(a.vertex_act[g, i]), tuple(int(a.copy_act[g, p]) for p in P[i])) for g in range(a.order)]
        for i in range(a.complex.n + 1)
    ]
    return _realizability(a, germs)


def z_map(a: WscAction) -> np.ndarray:
    """A G-linear map from facet copies to group elements.

    The smallest copy of every orbit is sent to the identity and ``g*x`` to
    ``g``.  Returns an array indexed by copy position.

    Raises
    ------
    ActionError
        If the action is not free; ``witness`` holds ``(g, position)`` with
        ``g`` fixing that copy.
    """
    _require_valid(a)
    wit = _stabilizer_witness(a)
    if wit is not None:
        raise ActionError(f"action is not free: element {wit[0]} fixes copy {wit[1]}", witness=wit)
    z = np.full(a.copy_act.shape[1], -1, dtype=np.intp)
    for orb in a.copy_orbits:
        rep = orb[0]
        for g in range(a.order):
            z[a.copy_act[g, rep]] = g
    return z


def free_refinement(a: WscAction) -> WscAction:
    """Free refinement on the complex with all facet weights multiplied by ``|G|``.

    Copy ``k`` of a facet is replaced by ``|G|`` duplicates ``k*|G| + h`` (one per
    group element ``h``), and ``g`` sends duplicate ``h`` of copy ``x`` to duplicate
    ``g*h`` of copy ``g*x``.
    """
    _require_valid(a)
    r = a.order
    w = a.complex
    wbar = scale_weights(w, r)
    new_pos = {x: p for p, x in enumerate(wbar.copies)}
    old = w.copies
    # old position p with copy index k of facet F -> new positions (F, k*r + h)
    base = [new_pos[(x.facet, x.copy * r)] for x in old]
    copy_act = np.empty((r, len(wbar.copies)), dtype=np.intp)
    for g in range(r):
        for p, x in enumerate(old):
            q = int(a.copy_act[g, p])
            for h in range(r):
                copy_act[g, base[p] + h] = base[q] + int(a.group.mul[g, h])
    return WscAction(a.group, wbar, a.vertex_act, copy_act)


def orbits(a: WscAction, on: str = "vertices") -> list[list[int]]:
    _require_valid(a)
    if on == "vertices":
        return [list(o) for o in a.vertex_orbits]
    if on == "copies":
        return [list(o) for o in a.copy_orbits]
    raise ValueError("on must be 'vertices' or 'copies'")


def restrict_action(a: WscAction, elements: Iterable[int]) -> WscAction:
    """The action of a subgroup, with the subgroup relabeled ``0..|H|-1`` in increasing order."""
    H, elems = a.group.subgroup(elements)
    return WscAction(H, a.complex, a.vertex_act[elems], a.copy_act[elems])


def trivial_action(w: Wsc) -> WscAction:
    return WscAction(FiniteGroup.trivial(), w, [list(range(w.n + 1))], [list(range(len(w.copies)))])


def action_from_vertex_perms(w: Wsc, group: FiniteGroup, vertex_perms: Sequence[Sequence[int]]) -> WscAction:
    """Action whose copy permutation sends copy ``k`` of ``F`` to copy ``k`` of ``g*F``."""
    pos = {x: p for p, x in enumerate(w.copies)}
    copy_act = []
    for perm in vertex_perms:
        row = []
        for x in w.copies:
            img = tuple(sorted(int(perm[v]) for v in x.facet))
            if (img, x.copy) not in pos:
                raise ActionError(f"vertex permutation {list(perm)} does not preserve facet weights")
            row.append(pos[(img, x.copy)])
        copy_act.append(row)
    return WscAction(group, w, vertex_perms, copy_act)


def circle_rotation_action(n: int) -> WscAction:
    """C_n rotating the circle with n vertices."""
    from .complex import standard_complex

    w = standard_complex("circle", n)
    G = FiniteGroup.cyclic(n)
    perms = [[(i + g) % n for i in range(n)] for g in range(n)]
    return action_from_vertex_perms(w, G, perms)


def line_reflection_action(n: int) -> WscAction:
    """C_2 reversing the line with n edges."""
    from .complex import standard_complex

    w = standard_complex("line", n)
    perms = [list(range(n + 1)), [n - i for i in range(n + 1)]]
    return action_from_vertex_perms(w, FiniteGroup.cyclic(2), perms)


def simplex_symmetric_action(n: int, weight: int = 1) -> WscAction:
    """The full symmetric group on the n-simplex (copies are fixed)."""
    from .complex import Wsc as _W

    table = {(i,): 1 for i in range(n + 1)}
    table[tuple(range(n + 1))] = weight
    w = _W(n, table)
    G, perms = FiniteGroup.symmetric(n + 1)
    return action_from_vertex_perms(w, G, perms)


def edge_swap_action() -> WscAction:
    """C_2 swapping the two ends of the simple edge."""
    from .complex import standard_complex

    return action_from_vertex_perms(standard_complex("edge"), FiniteGroup.cyclic(2), [[0, 1], [1, 0]])


def double_edge_action(swap_copies: bool = True) -> WscAction:
    """C_2 swapping the ends of the double edge, optionally also exchanging the two copies."""
    from .complex import standard_complex

    w = standard_complex("double_edge")
    copy_act = [[0, 1], [1, 0] if swap_copies else [0, 1]]
    return WscAction(FiniteGroup.cyclic(2), w, [[0, 1], [1, 0]], copy_act)


def cayley_action(group: FiniteGroup, gens: Iterable[int]) -> WscAction:
    """Left multiplication on the Cayley complex, acting on directed edges."""
    gens = sorted(set(int(s) for s in gens))
    mul = group.mul
    w = cayley_complex(mul, gens)
    pos = {x: p for p, x in enumerate(w.copies)}
    edge = cayley_edge_copies(mul, gens)
    label = {pos[c]: e for e, c in edge.items()}
    copy_act = np.empty((group.order, len(w.copies)), dtype=np.intp)
    for g in range(group.order):
        for p in range(len(w.copies)):
            h, s = label[p]
            copy_act[g, p] = pos[edge[(int(mul[g, h]), s)]]
    vertex_act = [[int(mul[g, h]) for h in range(group.order)] for g in range(group.order)]
    return WscAction(group, w, vertex_act, copy_act)


def action_to_json(a: WscAction, include_complex: bool = True) -> dict:
    from .complex import wsc_to_json

    out = {
        "group": {"order": a.order, "mul": a.group.mul.tolist()},
        "vertex_act": a.vertex_act.tolist(),
        "copy_act": a.copy_act.tolist(),
    }
    if include_complex:
        out["complex"] = wsc_to_json(a.complex)
    return out


def action_from_json(obj: dict | str, complex: Wsc | None = None) -> WscAction:
    from .complex import wsc_from_json

    if isinstance(obj, str):
        obj = json.loads(obj)
    required = {"group", "vertex_act", "copy_act"}
    if not isinstance(obj, dict) or not required <= set(obj) or set(obj) - required - {"complex"}:
        raise ActionError("action JSON must have keys 'group', 'vertex_act', 'copy_act' (and optionally 'complex')")
    if complex is None:
        if "complex" not in obj:
            raise ActionError("no complex given for the action")
        complex = wsc_from_json(obj["complex"])
    grp = obj["group"]
    if not isinstance(grp, dict) or set(grp) != {"order", "mul"}:
        raise ActionError("group must have keys 'order' and 'mul'")
    G = FiniteGroup(grp["mul"])
    if G.order != grp["order"]:
        raise ActionError("group order does not match the table")
    va = np.asarray(obj["vertex_act"])
    ca = np.asarray(obj["copy_act"])
    if va.shape != (G.order, complex.n + 1) or ca.shape != (G.order, len(complex.copies)):
        raise ActionError("action tables have the wrong shape for this complex")
    return WscAction(G, complex, va, ca)
