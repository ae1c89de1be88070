"""Constructive invariantization and change-of-structure transforms.

Every function here takes explicit decomposition data and returns a new
decomposition together with the guarantee that both contract to the same
tensor.  Invariantizations produce a positive multiple of the target tensor
first; that scalar is removed by scaling every table in the orbit of vertex 0
by the same positive root, which keeps condition (b) exact and preserves
nonnegativity and positive semidefiniteness of the locals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import ceil

import numpy as np

from .complex import Wsc, cayley_complex, cayley_edge_copies, is_connected, scale_weights
from .decomp import (
    DEFAULT_BUDGET,
    Decomposition,
    check_condition_b,
    contract,
    direct_sum,
    zero_decomposition,
)
from .group import (
    FiniteGroup,
    WscAction,
    is_blending,
    is_free,
    is_strongly_blending,
    restrict_action,
    z_map,
)
from .tensor import DEFAULT_TOL, ElementarySum, basis_expansion, is_invariant

__all__ = [
    "ConstructionError",
    "IndicatorCoefficients",
    "indicator_coefficients",
    "indicator_residual",
    "invariantize_free",
    "change_group",
    "invariantize_blending",
    "invariantize_strong_blending",
    "change_complex_constant",
    "change_complex_power",
    "change_complex_cayley",
    "scale_orbit_of_zero",
]


class ConstructionError(ValueError):
    """A transform's hypotheses do not hold for the given input."""


@dataclass(frozen=True)
class IndicatorCoefficients:
    """Numbers ``d[i, l]`` whose symmetric sum is the covering indicator.

    ``sum_l d[i0, l] * ... * d[in, l]`` is 1 when ``{i0, ..., in}`` is all of
    ``{0, ..., n}`` and 0 otherwise.
    """

    n: int
    d: np.ndarray

    @property
    def r(self) -> int:
        return self.d.shape[1]

    def residual(self) -> float:
        return indicator_residual(self.d)


def indicator_residual(d: np.ndarray) -> float:
    """Max deviation from the covering indicator over all index multisets."""
    d = np.asarray(d)
    n1 = d.shape[0]
    worst = 0.0
    for combo in itertools.combinations_with_replacement(range(n1), n1):
        val = np.prod(d[list(combo)], axis=0).sum()
        target = 1.0 if len(set(combo)) == n1 else 0.0
        worst = max(worst, abs(val - target))
    return float(worst)


def indicator_coefficients(n: int, form: str = "polarization", check: bool = True) -> IndicatorCoefficients:
    """Closed-form indicator coefficients.

    Parameters
    ----------
    n : int
        Largest vertex label (``n >= 1``).
    form : {"polarization", "sign"}
        ``polarization`` uses one term per nonempty subset ``S`` with
        ``d[i, S] = lambda_S * [i in S]`` and ``lambda_S^(n+1) = (-1)^(n+1-|S|)``,
        so ``r = 2^(n+1) - 1``.  ``sign`` uses the ``2^n`` terms of
        ``(n+1)! x_0...x_n = 2^-n sum_eps (prod eps) (x_0 + sum eps_i x_i)^(n+1)``.
    check : bool
        Verify the residual is at most 1e-10 before returning.
    """
    n = int(n)
    if n < 1:
        raise ConstructionError("indicator coefficients need n >= 1")
    n1 = n + 1
    cols = []
    if form == "polarization":
        for size in range(1, n1 + 1):
            sign = (-1) ** (n1 - size)
            lam = 1.0 if sign > 0 else np.exp(1j * np.pi / n1)
            for S in itertools.combinations(range(n1), size):
                col = np.zeros(n1, dtype=complex)
                col[list(S)] = lam
                cols.append(col)
    elif form == "sign":
        for eps in itertools.product((1, -1), repeat=n):
            s = np.prod(eps) / 2.0**n
            c = abs(s) ** (1.0 / n1) * (1.0 if s > 0 else np.exp(1j * np.pi / n1))
            cols.append(c * np.array((1,) + eps, dtype=complex))
    else:
        raise ConstructionError(f"unknown form {form!r}")
    out = IndicatorCoefficients(n, np.stack(cols, axis=1))
    if check:
        res = out.residual()
        if res > 1e-10:
            raise ConstructionError(f"indicator residual {res:.3g} exceeds 1e-10")
    return out


def scale_orbit_of_zero(d: Decomposition, c: float) -> Decomposition:
    """Divide the represented tensor by the positive number ``c``.

    All tables in the orbit of vertex 0 are multiplied by ``c^(-1/|orbit|)``.
    """
    if c <= 0:
        raise ConstructionError("scale factor must be positive")
    orb = d.action.vertex_orbits[int(d.action.orbit_of[0])]
    f = float(c) ** (-1.0 / len(orb))
    locs = [t * f if i in orb else t for i, t in enumerate(d.locals)]
    return d._replace(d.r, locs)


def _check_input_invariant(a: WscAction, d: Decomposition, tol: float, budget) -> None:
    v = contract(d, budget)
    if not is_invariant(a, v, tol * max(1.0, float(np.max(np.abs(v), initial=0.0)))):
        raise ConstructionError("input tensor is not invariant under the action")


def _coset_lift(a: WscAction, tables, r: int, cosets: np.ndarray, reps: list[int]) -> list[np.ndarray]:
    """Place pulled-back tables on the quotient z-map patterns.

    The new index of ``(j, c)`` is ``j * |G/H| + c`` with ``c`` a coset label.
    """
    z = z_map(a)
    mul = a.group.mul
    P = a.complex.incident_positions
    m = len(reps)
    out = []
    for i in range(a.complex.n + 1):
        k = len(P[i])
        d_i = tables[i].shape[-1]
        t = np.zeros((r, m) * k + (d_i,), dtype=tables[i].dtype)
        for g in reps:
            pattern = [int(cosets[mul[g, z[p]]]) for p in P[i]]
            gi = int(a.vertex_act[g, i])
            idx = tuple(x for c in pattern for x in (slice(None), c))
            t[idx] = a.pullback(tables[gi], g, i)
        out.append(t.reshape((r * m,) * k + (d_i,)))
    return out


def invariantize_free(a: WscAction, d: Decomposition, *, check: bool = True, tol: float = DEFAULT_TOL,
                      budget: float | None = DEFAULT_BUDGET) -> Decomposition:
    """Invariant decomposition from a plain one, for a free action.

    The index set becomes ``I x G`` (``r_out = |G| * r``).  At vertex ``i`` the
    table is nonzero only on the patterns ``p -> g*z(p)``, where it equals the
    input table at ``g*i`` pulled back along ``g``.  The raw contraction is
    ``|G| * v``; the scale is removed on the orbit of vertex 0.

    Parameters
    ----------
    check : bool
        Contract the input and confirm it is invariant (subject to ``budget``).
    """
    if d.complex != a.complex:
        raise ConstructionError("decomposition and action live on different complexes")
    if not d.action.is_trivial:
        raise ConstructionError("input must be a decomposition without group")
    if not is_connected(a.complex):
        raise ConstructionError("complex is not connected")
    if not is_free(a):
        raise ConstructionError("action is not free")
    if check:
        _check_input_invariant(a, d, tol, budget)
    G = a.order
    tabs = _coset_lift(a, d.locals, d.r, np.arange(G), list(range(G)))
    raw = d._replace(d.r * G, tabs, action=a)
    return scale_orbit_of_zero(raw, G)


def change_group(a: WscAction, H, d: Decomposition, *, check: bool = True, tol: float = DEFAULT_TOL,
                 budget: float | None = DEFAULT_BUDGET) -> Decomposition:
    """Lift a decomposition invariant under a normal subgroup ``H`` to the whole group.

    ``r_out = |G/H| * r_in``.  ``d`` may carry the restricted action of ``H``
    (elements relabeled in increasing order) or no group at all when
    ``H`` is trivial.
    """
    H = sorted(set(int(h) for h in H))
    G = a.group
    if not G.is_subgroup(H):
        raise ConstructionError(f"{H} is not a subgroup")
    if not G.is_normal(H):
        raise ConstructionError(f"{H} is not a normal subgroup")
    if not is_free(a):
        raise ConstructionError("action is not free")
    if not is_connected(a.complex):
        raise ConstructionError("complex is not connected")
    if d.complex != a.complex:
        raise ConstructionError("decomposition and action live on different complexes")
    aH = restrict_action(a, H)
    if not d.action.is_trivial or len(H) > 1:
        dH = d._replace(d.r, d.locals, action=aH)
        if not check_condition_b(dH, tol).ok:
            raise ConstructionError("input does not satisfy condition (b) for the subgroup")
    if check:
        _check_input_invariant(a, d, tol, budget)
    cosets = G.left_cosets(H)
    m = int(cosets.max()) + 1
    reps = [int(np.argmax(cosets == c)) for c in range(m)]
    tabs = _coset_lift(a, d.locals, d.r, cosets, reps)
    raw = d._replace(d.r * m, tabs, action=a)
    return scale_orbit_of_zero(raw, m)


def _image_size(a: WscAction) -> int:
    return len({tuple(row) for row in a.vertex_act.tolist()})


def _resolve_coefficients(n: int, coeffs) -> IndicatorCoefficients:
    if coeffs is None:
        return indicator_coefficients(n)
    if isinstance(coeffs, IndicatorCoefficients):
        if coeffs.n != n:
            raise ConstructionError(f"coefficients are for n={coeffs.n}, complex has n={n}")
        return coeffs
    arr = np.asarray(coeffs, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != n + 1:
        raise ConstructionError("coefficients must have shape (n + 1, r)")
    return IndicatorCoefficients(n, arr)


def invariantize_blending(a: WscAction, v, coeffs=None, *, check: bool = True,
                          tol: float = DEFAULT_TOL) -> Decomposition:
    """Invariant decomposition of an invariant tensor under a blending action.

    Parameters
    ----------
    v : ndarray or ElementarySum
        The target tensor, or an elementary sum representing it (the seed).
        A dense tensor is expanded in the standard basis.
    coeffs : IndicatorCoefficients or array, optional
        Defaults to :func:`indicator_coefficients`.

    Notes
    -----
    For each coefficient column ``l`` the table at vertex ``i`` is diagonal,
    carrying ``sum_{k in orbit(i)} d[k, l] * w_j[k]`` on the constant
    assignment ``j``.  The direct sum over ``l`` contracts to ``c * v`` with
    ``c`` the number of vertex permutations realized by the group; ``c`` is
    removed on the orbit of vertex 0.  ``r_out = coeffs.r * r_seed``.
    """
    w = a.complex
    if not is_connected(w):
        raise ConstructionError("complex is not connected")
    if not is_blending(a):
        raise ConstructionError("action is not blending")
    s = v if isinstance(v, ElementarySum) else basis_expansion(np.asarray(v))
    if len(s.factors) != w.n + 1:
        raise ConstructionError("seed has the wrong number of sites")
    if check:
        from .tensor import contract_elementary

        dense = contract_elementary(s)
        if not is_invariant(a, dense, tol * max(1.0, float(np.max(np.abs(dense), initial=0.0)))):
            raise ConstructionError("input tensor is not invariant under the action")
    C = _resolve_coefficients(w.n, coeffs)
    P = w.incident_positions
    rs = s.r
    out = zero_decomposition(a, s.dims)
    for l in range(C.r):
        locs = [None] * (w.n + 1)
        for orb in a.vertex_orbits:
            u = sum(C.d[k, l] * s.factors[k] for k in orb)
            for i in orb:
                t = np.zeros((rs,) * len(P[i]) + (s.dims[i],), dtype=complex)
                t[(np.arange(rs),) * len(P[i])] = u
                locs[i] = t
        out = direct_sum(out, Decomposition(a, rs, locs))
    return scale_orbit_of_zero(out, _image_size(a))


def invariantize_strong_blending(a: WscAction, d: Decomposition, coeffs=None, *, check: bool = True,
                                 tol: float = DEFAULT_TOL, budget: float | None = DEFAULT_BUDGET) -> Decomposition:
    """Invariant decomposition from a plain one under a strongly blending action.

    For each coefficient column ``l`` the table at vertex ``i`` is
    ``sum_g d[g i, l] * pullback(W_{g i}, g, i)``; the direct sum over ``l``
    contracts to ``|image| * prod_i |Stab(i)| * v``.  ``r_out = coeffs.r * r_in``.
    With the trivial group the input is returned unchanged.

    Tables are computed at orbit representatives with an order-independent
    summation and transported, so condition (b) holds bitwise.
    """
    w = a.complex
    if d.complex != w:
        raise ConstructionError("decomposition and action live on different complexes")
    if not d.action.is_trivial:
        raise ConstructionError("input must be a decomposition without group")
    if a.order == 1:
        return d
    if not is_connected(w):
        raise ConstructionError("complex is not connected")
    if not is_strongly_blending(a):
        raise ConstructionError("action is not strongly blending")
    if check:
        _check_input_invariant(a, d, tol, budget)
    C = _resolve_coefficients(w.n, coeffs)
    pulled = {}
    for orb in a.vertex_orbits:
        rep = orb[0]
        pulled[rep] = np.stack([a.pullback(d.locals[int(a.vertex_act[g, rep])], g, rep) for g in range(a.order)])
    out = zero_decomposition(a, d.dims)
    for l in range(C.r):
        locs = [None] * (w.n + 1)
        for orb in a.vertex_orbits:
            rep = orb[0]
            coef = C.d[a.vertex_act[:, rep], l]
            terms = coef.reshape((-1,) + (1,) * (pulled[rep].ndim - 1)) * pulled[rep]
            t = np.sort(terms, axis=0).sum(axis=0)
            for i in orb:
                locs[i] = a.pushforward(t, a.transporters[i], rep)
        out = direct_sum(out, Decomposition(a, d.r, locs))
    c = _image_size(a) * int(np.prod([len(a.stabilizer(i)) for i in range(w.n + 1)]))
    return scale_orbit_of_zero(out, c)


def _mixed_radix_assignments(r: int, m: int) -> np.ndarray:
    """All assignments ``r^m`` in row-major order, shape ``(r**m, m)``."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.intp)
    return np.array(list(itertools.product(range(r), repeat=m)), dtype=np.intp).reshape(-1, m)


def change_complex_constant(d: Decomposition, target: Wsc) -> Decomposition:
    """Move a decomposition on any complex to a connected complex on the same vertices.

    The new index set is the set of assignments ``I^copies`` of the source
    complex (``r_out = r^|copies|``, mixed radix with copy 0 most
    significant).  Target tables are diagonal: at the constant assignment
    ``alpha`` vertex ``i`` carries the source vector at ``alpha|i``.
    """
    if not d.action.is_trivial:
        raise ConstructionError("change of complex needs a decomposition without group")
    if target.n != d.n:
        raise ConstructionError("complexes have different vertex sets")
    if not is_connected(target):
        raise ConstructionError("target complex is not connected")
    src = d.complex
    m = len(src.copies)
    r_out = d.r ** m
    Pt = target.incident_positions
    locs = []
    for i in range(d.n + 1):
        inc = src.incident_positions[i]
        # source table broadcast over all source copies, then flattened
        shape = [1] * m + [d.dims[i]]
        for p in inc:
            shape[p] = d.r
        full = np.broadcast_to(d.locals[i].reshape(shape), (d.r,) * m + (d.dims[i],)).reshape(r_out, d.dims[i])
        t = np.zeros((r_out,) * len(Pt[i]) + (d.dims[i],), dtype=complex)
        t[(np.arange(r_out),) * len(Pt[i])] = full
        locs.append(t)
    return Decomposition(target, r_out, locs, d.meta)


def _root_ceil(r: int, m: int) -> int:
    s = max(1, int(round(r ** (1.0 / m))))
    while s**m < r:
        s += 1
    while s > 1 and (s - 1) ** m >= r:
        s -= 1
    return s


def change_complex_power(d: Decomposition, m: int, direction: str) -> Decomposition:
    """Move between a complex and its weight multiple ``m * Omega``.

    ``direction="to_multiple"``: the input lives on ``Omega`` with index size
    ``r``; the output lives on ``m * Omega`` with index size ``s``, the
    smallest integer with ``s^m >= r``.  Index values are encoded as ``m``
    base-``s`` digits spread over the ``m`` copies that replace each copy.

    ``direction="from_multiple"``: the input lives on ``m * Omega``; the output
    lives on ``Omega`` with index size ``r^m``.

    In ``m * Omega`` copy ``c`` of a facet ``F`` of weight ``w`` in ``Omega``
    corresponds to digit ``c // w`` of copy ``c % w``.
    """
    m = int(m)
    if m < 1:
        raise ConstructionError("m must be a positive integer")
    if not d.action.is_trivial:
        raise ConstructionError("change of complex needs a decomposition without group")
    if direction in ("to_multiple", "to_mOmega"):
        return _to_multiple(d, m)
    if direction in ("from_multiple", "from_mOmega"):
        return _from_multiple(d, m)
    raise ConstructionError(f"unknown direction {direction!r}")


def _digit_axes(base: Wsc, big: Wsc, m: int, i: int) -> list[tuple[int, int]]:
    """For each incident copy of ``big`` at ``i``: (position of base copy among base copies at i, digit)."""
    fw = base.facet_weights()
    base_pos = {x: a for a, x in enumerate(base.copies[p] for p in base.incident_positions[i])}
    out = []
    for p in big.incident_positions[i]:
        x = big.copies[p]
        w = fw[x.facet]
        out.append((base_pos[(x.facet, x.copy % w)], x.copy // w))
    return out


def _to_multiple(d: Decomposition, m: int) -> Decomposition:
    base = d.complex
    big = scale_weights(base, m)
    r = d.r
    s = _root_ceil(r, m) if r > 0 else 0
    locs = []
    for i in range(d.n + 1):
        k = len(base.incident_positions[i])
        t = d.locals[i]
        padded = np.zeros((s**m,) * k + t.shape[-1:], dtype=t.dtype)
        padded[(slice(0, r),) * k] = t
        split = padded.reshape((s,) * (m * k) + t.shape[-1:])
        # split axis a*m + x is digit x (most significant first) of base copy a
        order = [a * m + x for a, x in _digit_axes(base, big, m, i)]
        locs.append(np.transpose(split, order + [m * k]))
    return Decomposition(big, s, locs, d.meta)


def _from_multiple(d: Decomposition, m: int) -> Decomposition:
    big = d.complex
    fw = big.facet_weights()
    if any(w % m for w in fw.values()):
        raise ConstructionError(f"facet weights {sorted(set(fw.values()))} are not multiples of {m}")
    base = Wsc(big.n, {s: (w // m if s in fw else big.weight(s)) for s, w in big.weight_table().items()})
    if scale_weights(base, m) != big:
        raise ConstructionError("input complex is not a weight multiple")
    r = d.r
    locs = []
    for i in range(d.n + 1):
        k = len(base.incident_positions[i])
        slot = {ax: pos for pos, ax in enumerate(_digit_axes(base, big, m, i))}
        order = [slot[(a, x)] for a in range(k) for x in range(m)]
        t = np.transpose(d.locals[i], order + [m * k])
        locs.append(t.reshape((r**m,) * k + t.shape[-1:]))
    return Decomposition(base, r**m, locs, d.meta)


def change_complex_cayley(d: Decomposition, group: FiniteGroup, T, S) -> Decomposition:
    """Move a decomposition on the Cayley complex of ``(G, T)`` to that of ``(G, S)``.

    Each generator ``t`` is sent injectively to a pair ``(x, s)`` with
    ``x < ceil(|T|/|S|)``, preferring ``s = t``.  The directed edge
    ``(g, g t)`` is carried by component ``x`` of the index on the edge
    ``(g, g s)``; unused components are pinned to 0.  The index size becomes
    ``r^ceil(|T|/|S|)``.

    Raises
    ------
    ConstructionError
        If some ``T``-edge is not incident, at one of its ends, to the
        ``S``-edge that carries it.  This happens whenever a generator
        ``t`` is sent to some ``s != t``; then the contraction cannot be
        preserved in general.
    """
    T = sorted(set(int(t) for t in T))
    S = sorted(set(int(s) for s in S))
    mul = group.mul
    src = cayley_complex(mul, T)
    if d.complex != src:
        raise ConstructionError("decomposition does not live on the Cayley complex of T")
    if not d.action.is_trivial:
        raise ConstructionError("change of complex needs a decomposition without group")
    dst = cayley_complex(mul, S)
    if not is_connected(dst):
        raise ConstructionError("S does not generate the group")
    q = ceil(len(T) / len(S))
    phi = _cayley_injection(T, S, q)
    e_src = cayley_edge_copies(mul, T)
    e_dst = cayley_edge_copies(mul, S)
    pos_src = {x: p for p, x in enumerate(src.copies)}
    pos_dst = {x: p for p, x in enumerate(dst.copies)}
    # carrier[src copy position] = (dst copy position, component)
    carrier = {}
    for (g, t), x in e_src.items():
        xi, s = phi[t]
        carrier[pos_src[x]] = (pos_dst[e_dst[(g, s)]], xi)
    for (g, t), x in e_src.items():
        ends = set(src.copies[pos_src[x]].facet)
        dpos = carrier[pos_src[x]][0]
        for v in ends:
            if dpos not in dst.incident_positions[v]:
                raise ConstructionError(
                    f"edge {g}->{int(mul[g, t])} is carried by an S-edge not incident to vertex {v}; "
                    "the edge map does not respect incidence"
                )
    r = d.r
    r_out = r**q
    digits = _mixed_radix_assignments(r, q)
    used = {(c, x) for c, x in carrier.values()}
    locs = []
    for i in range(d.n + 1):
        Pd = dst.incident_positions[i]
        Ps = src.incident_positions[i]
        k = len(Pd)
        t = np.zeros((r_out,) * k + (d.dims[i],), dtype=complex)
        for beta in itertools.product(range(r_out), repeat=k):
            comps = {Pd[a]: digits[beta[a]] for a in range(k)}
            if any(comps[c][x] != 0 for c in Pd for x in range(q) if (c, x) not in used):
                continue
            src_idx = tuple(int(comps[carrier[p][0]][carrier[p][1]]) for p in Ps)
            t[beta] = d.locals[i][src_idx]
        locs.append(t)
    return Decomposition(dst, r_out, locs, d.meta)


def _cayley_injection(T: list[int], S: list[int], q: int) -> dict[int, tuple[int, int]]:
    phi = {}
    free = [(x, s) for x in range(q) for s in S]
    for t in T:
        if t in S:
            phi[t] = (0, t)
            free.remove((0, t))
    for t in T:
        if t not in phi:
            phi[t] = free.pop(0)
    return phi
