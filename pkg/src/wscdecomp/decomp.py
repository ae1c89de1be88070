"""The (Omega, G)-decomposition data model.

A decomposition with index set ``{0, ..., r-1}`` stores one local table per
vertex ``i``: an ndarray of shape ``(r,) * k_i + (d_i,)`` where ``k_i`` is the
number of facet copies incident to ``i``.  Axis ``a`` of the table at ``i``
is indexed by the value of the assignment on the ``a``-th incident copy in
canonical order; the trailing axis holds the local vector.  The represented
tensor is

    v = sum over alpha in I^copies of  v[0]_{alpha|0} x ... x v[n]_{alpha|n}.

Invariance (condition (b)) reads ``table_i == action.pullback(table_{g i}, g, i)``
for all ``g`` and ``i``.
"""

from __future__ import annotations

import json
import string
from typing import Sequence

import numpy as np
import opt_einsum as oe

from .complex import Wsc, WscError, is_connected, wsc_from_json, wsc_to_json
from .group import WscAction, action_from_json, action_to_json, trivial_action
from .tensor import (
    DEFAULT_TOL,
    ElementarySum,
    check_orbit_dims,
    complex_to_pairs,
    pairs_to_complex,
)

__all__ = [
    "DEFAULT_BUDGET",
    "DecompositionError",
    "BudgetExceeded",
    "Decomposition",
    "MatrixDecomposition",
    "contraction_cost",
    "contract",
    "to_operator",
    "site_tensor_to_operator",
    "operator_to_site_tensor",
    "check_condition_b",
    "verify",
    "from_elementary",
    "direct_sum",
    "product",
    "zero_decomposition",
    "random_invariant_tables",
    "random_invariant_decomposition",
    "decomposition_to_json",
    "decomposition_from_json",
]

DEFAULT_BUDGET = 10**8


class DecompositionError(ValueError):
    """Malformed decomposition data or incompatible operands."""


class BudgetExceeded(RuntimeError):
    """The estimated contraction cost is above the configured budget."""


def _as_action(x: WscAction | Wsc) -> WscAction:
    if isinstance(x, WscAction):
        return x
    if isinstance(x, Wsc):
        return trivial_action(x)
    raise TypeError("expected a WscAction or a Wsc")


class Decomposition:
    """Local tables of an (Omega, G)-decomposition.

    Parameters
    ----------
    action : WscAction or Wsc
        A bare complex means the trivial group.
    r : int
        Size of the index set.
    locals : sequence of ndarray
        ``locals[i]`` has shape ``(r,) * k_i + (d_i,)``.
    meta : dict, optional
        Free-form metadata (algebra mode, flags) carried through file I/O.
    """

    def __init__(self, action: WscAction | Wsc, r: int, locals: Sequence[np.ndarray], meta: dict | None = None):
        self.action = _as_action(action)
        self.r = int(r)
        if self.r < 0:
            raise DecompositionError("r must be nonnegative")
        w = self.action.complex
        if len(locals) != w.n + 1:
            raise DecompositionError(f"expected {w.n + 1} local tables, got {len(locals)}")
        tabs = []
        for i, t in enumerate(locals):
            t = np.asarray(t)
            if not np.iscomplexobj(t):
                t = t.astype(complex)
            k = len(w.incident_positions[i])
            if t.ndim != k + 1 or t.shape[:k] != (self.r,) * k:
                raise DecompositionError(
                    f"table at vertex {i} has shape {t.shape}, expected ({self.r},)*{k} + (d,)"
                )
            tabs.append(t)
        self.locals = tuple(tabs)
        self.meta = dict(meta or {})
        check_orbit_dims(self.action, self.dims)

    @property
    def complex(self) -> Wsc:
        return self.action.complex

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(t.shape[-1] for t in self.locals)

    @property
    def n(self) -> int:
        return self.complex.n

    def _replace(self, r: int, locals, meta: dict | None = None, action: WscAction | None = None):
        return type(self)(action or self.action, r, locals, self.meta if meta is None else meta)

    def __repr__(self):
        return f"{type(self).__name__}(r={self.r}, dims={self.dims}, {self.complex!r}, |G|={self.action.order})"


class MatrixDecomposition(Decomposition):
    """Decomposition whose local vectors are ``p_i x q_i`` matrices stored row-major.

    The global object is the operator from ``q_0 x ... x q_n`` to
    ``p_0 x ... x p_n`` obtained by contracting; see :func:`to_operator`.
    """

    def __init__(self, action, r, locals, meta=None, site_shapes=None):
        meta = dict(meta or {})
        if site_shapes is None:
            site_shapes = meta.get("site_shapes")
        if site_shapes is None:
            raise DecompositionError("matrix decomposition needs site shapes")
        self.site_shapes = tuple((int(p), int(q)) for p, q in site_shapes)
        meta["site_shapes"] = [list(s) for s in self.site_shapes]
        super().__init__(action, r, locals, meta)
        for i, (p, q) in enumerate(self.site_shapes):
            if self.dims[i] != p * q:
                raise DecompositionError(f"site {i} has {self.dims[i]} entries, expected {p}*{q}")

    def matrices(self, i: int) -> np.ndarray:
        """Local table at ``i`` with the trailing axis unfolded to ``(p_i, q_i)``."""
        t = self.locals[i]
        return t.reshape(t.shape[:-1] + self.site_shapes[i])

    def adjoint(self) -> "MatrixDecomposition":
        """Decomposition of the adjoint operator (conjugate transpose of each local)."""
        locs = []
        for i, (p, q) in enumerate(self.site_shapes):
            m = np.conj(np.swapaxes(self.matrices(i), -1, -2))
            locs.append(m.reshape(m.shape[:-2] + (p * q,)))
        meta = {k: v for k, v in self.meta.items() if k != "site_shapes"}
        return MatrixDecomposition(self.action, self.r, locs, meta, [(q, p) for p, q in self.site_shapes])


def _einsum_operands(d: Decomposition):
    P = d.complex.incident_positions
    m = len(d.complex.copies)
    terms = []
    for i in range(d.n + 1):
        terms.append("".join(oe.get_symbol(p) for p in P[i]) + oe.get_symbol(m + i))
    out = "".join(oe.get_symbol(m + i) for i in range(d.n + 1))
    return ",".join(terms) + "->" + out


def contraction_cost(d: Decomposition) -> float:
    """Estimated scalar operations of the contraction (greedy pairwise order)."""
    if d.r == 0:
        return 0.0
    _, info = oe.contract_path(_einsum_operands(d), *d.locals, optimize="greedy")
    return float(info.opt_cost)


def contract(d: Decomposition, budget: float | None = DEFAULT_BUDGET) -> np.ndarray:
    """The represented global tensor.

    Raises
    ------
    BudgetExceeded
        If the estimated cost exceeds ``budget`` (``None`` disables the guard).
    """
    if d.r == 0:
        return np.zeros(d.dims, dtype=complex)
    expr = _einsum_operands(d)
    path, info = oe.contract_path(expr, *d.locals, optimize="greedy")
    if budget is not None and info.opt_cost > budget:
        raise BudgetExceeded(f"contraction needs about {info.opt_cost:.3g} operations, budget is {budget:.3g}")
    return np.asarray(oe.contract(expr, *d.locals, optimize=path), dtype=complex)


def to_operator(d: MatrixDecomposition, budget: float | None = DEFAULT_BUDGET) -> np.ndarray:
    """Contract a matrix decomposition into a ``(prod p_i) x (prod q_i)`` matrix."""
    v = contract(d, budget)
    return site_tensor_to_operator(v, d.site_shapes)


def site_tensor_to_operator(v: np.ndarray, site_shapes) -> np.ndarray:
    ps = [p for p, _ in site_shapes]
    qs = [q for _, q in site_shapes]
    k = len(site_shapes)
    t = v.reshape([x for s in site_shapes for x in s])
    t = np.transpose(t, list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2)))
    return t.reshape(int(np.prod(ps)), int(np.prod(qs)))


def operator_to_site_tensor(m: np.ndarray, site_shapes) -> np.ndarray:
    k = len(site_shapes)
    t = np.asarray(m).reshape([p for p, _ in site_shapes] + [q for _, q in site_shapes])
    order = [x for i in range(k) for x in (i, k + i)]
    t = np.transpose(t, order)
    return t.reshape([p * q for p, q in site_shapes])


def check_condition_b(d: Decomposition, tol: float = 0.0):
    """List every ``(i, g)`` for which the invariance condition fails.

    Each entry records the number of violating assignments, the worst
    assignment (as a tuple of index values on the copies of ``i``) and the
    max deviation.  ``tol = 0`` demands bitwise equality.
    """
    from .complex import ValidationReport

    rep = ValidationReport()
    a = d.action
    if a.is_trivial:
        return rep
    for i in range(d.n + 1):
        for g in range(1, a.order):
            gi = int(a.vertex_act[g, i])
            dev = np.abs(d.locals[i] - a.pullback(d.locals[gi], g, i))
            if dev.size == 0:
                continue
            per_beta = dev.max(axis=-1)
            bad = per_beta > tol
            if np.any(bad):
                worst = np.unravel_index(int(np.argmax(per_beta)), per_beta.shape)
                rep.add(
                    "condition_b",
                    f"vertex {i}, element {g}: {int(bad.sum())} assignments deviate, "
                    f"max {float(per_beta.max()):.3g} at {tuple(int(x) for x in worst)}",
                    vertex=i,
                    element=g,
                    count=int(bad.sum()),
                    beta=[int(x) for x in worst],
                    deviation=float(per_beta.max()),
                )
    return rep


def verify(d: Decomposition, target: np.ndarray, tol: float = DEFAULT_TOL, budget: float | None = DEFAULT_BUDGET) -> bool:
    """Contraction matches ``target`` in max norm and condition (b) holds, both within ``tol``."""
    target = np.asarray(target)
    if tuple(target.shape) != d.dims:
        return False
    if not check_condition_b(d, tol).ok:
        return False
    return bool(np.max(np.abs(contract(d, budget) - target), initial=0.0) <= tol)


def _require_connected(w: Wsc, what: str) -> None:
    if not is_connected(w):
        raise DecompositionError(f"{what} needs a connected complex")


def from_elementary(w: Wsc, s: ElementarySum) -> Decomposition:
    """Spread an elementary sum over a connected complex along constant assignments."""
    _require_connected(w, "from_elementary")
    if len(s.factors) != w.n + 1:
        raise DecompositionError("number of sites does not match the complex")
    r = s.r
    locs = []
    for i, f in enumerate(s.factors):
        k = len(w.incident_positions[i])
        t = np.zeros((r,) * k + (f.shape[1],), dtype=complex)
        j = np.arange(r)
        t[(j,) * k] = f
        locs.append(t)
    return Decomposition(w, r, locs)


def _same_structure(d1: Decomposition, d2: Decomposition) -> None:
    a1, a2 = d1.action, d2.action
    if a1 is not a2 and not (
        a1.complex == a2.complex
        and a1.group == a2.group
        and np.array_equal(a1.vertex_act, a2.vertex_act)
        and np.array_equal(a1.copy_act, a2.copy_act)
    ):
        raise DecompositionError("decompositions live on different complexes or actions")


def direct_sum(d1: Decomposition, d2: Decomposition) -> Decomposition:
    """Block placement: assignments with all values in the first (second) index set only."""
    _same_structure(d1, d2)
    if d1.dims != d2.dims:
        raise DecompositionError(f"dimension mismatch {d1.dims} vs {d2.dims}")
    if isinstance(d1, MatrixDecomposition) != isinstance(d2, MatrixDecomposition):
        raise DecompositionError("cannot mix matrix and vector decompositions")
    if isinstance(d1, MatrixDecomposition) and d1.site_shapes != d2.site_shapes:
        raise DecompositionError("site shapes differ")
    _require_connected(d1.complex, "direct_sum")
    r1, r2 = d1.r, d2.r
    r = r1 + r2
    locs = []
    for t1, t2 in zip(d1.locals, d2.locals):
        k = t1.ndim - 1
        t = np.zeros((r,) * k + t1.shape[-1:], dtype=np.result_type(t1, t2))
        t[(slice(0, r1),) * k] = t1
        t[(slice(r1, r),) * k] = t2
        locs.append(t)
    return d1._replace(r, locs)


def _interleave(t1: np.ndarray, t2: np.ndarray, k: int, site: str) -> np.ndarray:
    letters = string.ascii_letters
    if 2 * k + 3 > len(letters):
        raise DecompositionError("too many incident copies for the product")
    a = letters[:k]
    b = letters[k:2 * k]
    x, y, z = letters[2 * k:2 * k + 3]
    pair = "".join(u + v for u, v in zip(a, b))
    if site == "entrywise":
        expr = f"{a}{x},{b}{x}->{pair}{x}"
    else:
        expr = f"{a}{x}{y},{b}{y}{z}->{pair}{x}{z}"
    return np.einsum(expr, t1, t2)


def product(d1: Decomposition, d2: Decomposition, mode: str = "entrywise") -> Decomposition:
    """Sitewise product; the index set is the product of the two index sets.

    ``mode="entrywise"`` multiplies local vectors entrywise; ``mode="matrix"``
    multiplies the local matrices of two :class:`MatrixDecomposition` objects.
    The new index of the pair ``(j1, j2)`` is ``j1 * r2 + j2``.
    """
    _same_structure(d1, d2)
    r = d1.r * d2.r
    locs = []
    if mode == "entrywise":
        if d1.dims != d2.dims:
            raise DecompositionError(f"dimension mismatch {d1.dims} vs {d2.dims}")
        for t1, t2 in zip(d1.locals, d2.locals):
            k = t1.ndim - 1
            t = _interleave(t1, t2, k, "entrywise")
            locs.append(t.reshape((r,) * k + t.shape[-1:]))
        meta = dict(d1.meta, product="entrywise")
        return d1._replace(r, locs, meta)
    if mode == "matrix":
        if not (isinstance(d1, MatrixDecomposition) and isinstance(d2, MatrixDecomposition)):
            raise DecompositionError("matrix products need matrix decompositions")
        shapes = []
        for i in range(d1.n + 1):
            (p, q1), (q2, s) = d1.site_shapes[i], d2.site_shapes[i]
            if q1 != q2:
                raise DecompositionError(f"site {i}: cannot multiply {p}x{q1} by {q2}x{s}")
            k = d1.locals[i].ndim - 1
            t = _interleave(d1.matrices(i), d2.matrices(i), k, "matrix")
            locs.append(t.reshape((r,) * k + (p * s,)))
            shapes.append((p, s))
        meta = {k: v for k, v in d1.meta.items() if k != "site_shapes"}
        meta["product"] = "matrix"
        return MatrixDecomposition(d1.action, r, locs, meta, shapes)
    raise DecompositionError(f"unknown product mode {mode!r}; use 'entrywise' or 'matrix'")


def zero_decomposition(action: WscAction | Wsc, dims: Sequence[int]) -> Decomposition:
    """The empty decomposition (``r = 0``) of the zero tensor."""
    a = _as_action(action)
    locs = [np.zeros((0,) * len(a.complex.incident_positions[i]) + (int(dims[i]),), dtype=complex)
            for i in range(a.complex.n + 1)]
    return Decomposition(a, 0, locs)


def random_invariant_tables(a: WscAction, r: int, dims: Sequence[int], rng: np.random.Generator,
                            kind: str = "complex", density: float = 1.0,
                            shape_fn=None) -> list[np.ndarray]:
    """Random local tables satisfying condition (b) exactly.

    A random table at each orbit representative is averaged over its
    stabilizer and transported along the orbit.

    Parameters
    ----------
    kind : {"complex", "real", "nonneg"}
    density : float
        Fraction of assignments that carry a nonzero vector before averaging.
    shape_fn : callable, optional
        ``shape_fn(i)`` gives the trailing shape at vertex ``i``; defaults to ``(dims[i],)``.
    """
    check_orbit_dims(a, dims)
    P = a.complex.incident_positions
    tabs: list[np.ndarray | None] = [None] * (a.complex.n + 1)
    for orb in a.vertex_orbits:
        rep = orb[0]
        tail = tuple(shape_fn(rep)) if shape_fn else (int(dims[rep]),)
        shape = (r,) * len(P[rep]) + tail
        if kind == "complex":
            t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        elif kind == "real":
            t = rng.standard_normal(shape).astype(complex)
        elif kind == "nonneg":
            t = rng.random(shape).astype(complex)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        if density < 1.0:
            mask = rng.random(shape[:-len(tail)] if tail else shape) < density
            t = t * mask.reshape(mask.shape + (1,) * len(tail))
        stab = a.stabilizer(rep)
        # sorted summation makes the average bitwise stabilizer-invariant
        t = np.sort(np.stack([a.pullback(t, h, rep) for h in stab]), axis=0).sum(axis=0) / len(stab)
        for i in orb:
            tabs[i] = a.pushforward(t, a.transporters[i], rep)
    return tabs


def random_invariant_decomposition(a: WscAction | Wsc, r: int, dims: Sequence[int],
                                   rng: np.random.Generator | int | None = None,
                                   kind: str = "complex", density: float = 1.0) -> Decomposition:
    """A random decomposition satisfying condition (b) bitwise; see :func:`random_invariant_tables`."""
    a = _as_action(a)
    rng = np.random.default_rng(rng)
    return Decomposition(a, r, random_invariant_tables(a, r, dims, rng, kind, density))


def decomposition_to_json(d: Decomposition) -> dict:
    out = {
        "complex": wsc_to_json(d.complex),
        "action": action_to_json(d.action, include_complex=False),
        "r": d.r,
        "dims": list(d.dims),
        "locals": [complex_to_pairs(t.reshape(-1, t.shape[-1])) for t in d.locals],
    }
    if d.meta:
        out["meta"] = d.meta
    return out


def decomposition_from_json(obj: dict | str) -> Decomposition:
    if isinstance(obj, str):
        obj = json.loads(obj)
    required = {"complex", "action", "r", "dims", "locals"}
    if not isinstance(obj, dict) or not required <= set(obj) or set(obj) - required - {"meta"}:
        raise DecompositionError(
            "decomposition JSON must have keys 'complex', 'action', 'r', 'dims', 'locals' (and optionally 'meta')"
        )
    try:
        w = wsc_from_json(obj["complex"])
    except WscError as exc:
        raise DecompositionError(str(exc)) from exc
    a = action_from_json(obj["action"], complex=w)
    r = int(obj["r"])
    dims = [int(x) for x in obj["dims"]]
    if len(dims) != w.n + 1 or len(obj["locals"]) != w.n + 1:
        raise DecompositionError("dims and locals must have one entry per vertex")
    locs = []
    for i, raw in enumerate(obj["locals"]):
        k = len(w.incident_positions[i])
        arr = pairs_to_complex(raw) if len(raw) else np.zeros((0, dims[i]), dtype=complex)
        if arr.shape != (r ** k, dims[i]):
            raise DecompositionError(f"vertex {i}: expected {r ** k} vectors of length {dims[i]}")
        locs.append(arr.reshape((r,) * k + (dims[i],)))
    meta = obj.get("meta") or {}
    if "site_shapes" in meta:
        return MatrixDecomposition(a, r, locs, meta)
    return Decomposition(a, r, locs, meta)
