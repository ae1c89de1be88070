"""Separable decompositions, purifications and psd decompositions.

Operators on ``H_0 x ... x H_n`` are handled through
:class:`~wscdecomp.decomp.MatrixDecomposition`, whose local vectors are
row-major ``p_i x q_i`` matrices.  A purification of ``sigma`` is a matrix
decomposition of some ``xi`` with ``xi^* xi = sigma``.

Nonnegative tensors enter through the diagonal embedding
``sigma = sum_j M_j E_{j0 j0} x ... x E_{jn jn}``.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np
import opt_einsum as oe

from .complex import ValidationReport, Wsc, wsc_from_json, wsc_to_json
from .decomp import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Decomposition,
    DecompositionError,
    MatrixDecomposition,
    operator_to_site_tensor,
)
from .group import WscAction, action_from_json, action_to_json, is_blending, is_free, trivial_action
from .tensor import basis_expansion, check_orbit_dims, complex_to_pairs, pairs_to_complex

__all__ = [
    "PSD_TOL",
    "PositivityError",
    "PsdFamily",
    "check_separable",
    "psd_sqrt",
    "purify_separable",
    "sqrt_purification",
    "diag_embed",
    "nn_to_sep",
    "sep_to_nn",
    "psd_decomp_to_purification",
    "purification_to_psd_decomp",
    "evaluate_psd_decomp",
    "random_psd_family",
    "psd_family_to_json",
    "psd_family_from_json",
]

PSD_TOL = 1e-10


class PositivityError(ValueError):
    """A positivity hypothesis (psd, nonnegative, diagonal) fails."""


def _scale(m: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(m), initial=0.0)))


def _min_eig(m: np.ndarray) -> float:
    h = (m + m.conj().T) / 2
    return float(np.linalg.eigvalsh(h).min()) if h.size else 0.0


def psd_sqrt(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Positive square root of a Hermitian psd matrix.

    Eigenvalues down to ``-tol * max|m|`` are clamped to zero; anything more
    negative raises :class:`PositivityError`.
    """
    m = np.asarray(m, dtype=complex)
    h = (m + m.conj().T) / 2
    if np.max(np.abs(m - h), initial=0.0) > tol * _scale(m):
        raise PositivityError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(h)
    if vals.size and vals.min() < -tol * _scale(m):
        raise PositivityError(f"matrix has eigenvalue {vals.min():.3g}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def check_separable(d: MatrixDecomposition, tol: float = PSD_TOL) -> ValidationReport:
    """Report every local matrix that is not Hermitian psd."""
    rep = ValidationReport()
    for i, (p, q) in enumerate(d.site_shapes):
        if p != q:
            raise DecompositionError(f"site {i} is {p}x{q}, not square")
        mats = d.matrices(i).reshape(-1, p, p)
        for b, m in enumerate(mats):
            herm = np.max(np.abs(m - m.conj().T), initial=0.0)
            ev = _min_eig(m)
            if herm > tol * _scale(m) or ev < -tol * _scale(m):
                beta = np.unravel_index(b, d.matrices(i).shape[:-2])
                rep.add(
                    "separable",
                    f"vertex {i}, assignment {tuple(int(x) for x in beta)}: "
                    f"hermiticity defect {herm:.3g}, min eigenvalue {ev:.3g}",
                    vertex=i,
                    beta=[int(x) for x in beta],
                    min_eigenvalue=ev,
                )
    return rep


def _require_trivial_stabilizers(a: WscAction, what: str) -> None:
    for orb in a.vertex_orbits:
        rep = orb[0]
        P = a.complex.incident_positions[rep]
        for h in a.stabilizer(rep):
            if any(int(a.copy_act[h, p]) != p for p in P):
                raise PositivityError(
                    f"{what} needs vertex stabilizers to fix incident copies; element {h} moves a copy at vertex {rep}"
                )


def _transport_from_reps(a: WscAction, rep_tables: dict[int, np.ndarray]) -> list[np.ndarray]:
    out = [None] * (a.complex.n + 1)
    for orb in a.vertex_orbits:
        rep = orb[0]
        for i in orb:
            out[i] = a.pushforward(rep_tables[rep], a.transporters[i], rep)
    return out


def purify_separable(d: MatrixDecomposition, tol: float = PSD_TOL) -> MatrixDecomposition:
    """Purification with the same index set from a separable decomposition.

    At vertex ``i`` the local map for assignment ``beta`` sends ``h`` to
    ``e_beta x sqrt(sigma_beta) h``, so ``xi_beta^* xi_gamma`` is
    ``sigma_beta`` when ``beta == gamma`` and 0 otherwise.  Block labels are
    taken in the frame of each orbit representative, which keeps condition
    (b) when vertex stabilizers fix their incident copies.
    """
    rep_report = check_separable(d, tol)
    if not rep_report.ok:
        raise PositivityError("decomposition is not separable: " + rep_report.violations[0])
    a = d.action
    _require_trivial_stabilizers(a, "purification")
    rep_tabs = {}
    shapes = [None] * (d.n + 1)
    for orb in a.vertex_orbits:
        rep = orb[0]
        m = d.site_shapes[rep][0]
        mats = d.matrices(rep)
        lead = mats.shape[:-2]
        R = int(np.prod(lead, dtype=int))
        flat = mats.reshape(R, m, m)
        xi = np.zeros((R, R, m, m), dtype=complex)
        for b in range(R):
            xi[b, b] = psd_sqrt(flat[b], tol)
        rep_tabs[rep] = xi.reshape(lead + (R * m * m,))
        for i in orb:
            shapes[i] = (R * m, m)
    locs = _transport_from_reps(a, rep_tabs)
    meta = {k: v for k, v in d.meta.items() if k != "site_shapes"}
    meta["kind"] = "purification"
    return MatrixDecomposition(a, d.r, locs, meta, shapes)


def sqrt_purification(a: WscAction, sigma: np.ndarray, site_dims: Sequence[int], method: str = "auto",
                      tol: float = PSD_TOL, budget: float | None = DEFAULT_BUDGET) -> MatrixDecomposition:
    """Invariant purification ``xi = sqrt(sigma)`` decomposed by an invariantization route.

    Parameters
    ----------
    sigma : ndarray
        Hermitian psd operator of size ``prod(site_dims)``, invariant under
        the permutation of tensor factors.
    method : {"auto", "free", "blending"}
        ``auto`` prefers the free route and falls back to blending.
    """
    from .construct import ConstructionError, invariantize_blending, invariantize_free
    from .decomp import from_elementary
    from .tensor import is_invariant

    site_dims = [int(m) for m in site_dims]
    shapes = [(m, m) for m in site_dims]
    N = int(np.prod(site_dims))
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (N, N):
        raise PositivityError(f"operator has shape {sigma.shape}, expected {(N, N)}")
    xi = psd_sqrt(sigma, tol)
    v = operator_to_site_tensor(xi, shapes)
    if not is_invariant(a, operator_to_site_tensor(sigma, shapes), 1e-9 * _scale(sigma)):
        raise PositivityError("operator is not invariant under the action")
    if method == "auto":
        method = "free" if is_free(a) else ("blending" if is_blending(a) else None)
        if method is None:
            raise ConstructionError("action is neither free nor blending; no route applies")
    seed = basis_expansion(v)
    if method == "free":
        d = invariantize_free(a, from_elementary(a.complex, seed), check=False, budget=budget)
    elif method == "blending":
        d = invariantize_blending(a, seed, check=False)
    else:
        raise ConstructionError(f"unknown method {method!r}")
    return MatrixDecomposition(a, d.r, d.locals, {"kind": "purification", "route": method}, shapes)


def diag_embed(M: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Site tensor of the diagonal operator carrying the entries of ``M``.

    The result has dims ``d_i^2``; reshape with
    :func:`~wscdecomp.decomp.site_tensor_to_operator` for the matrix.
    """
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.max(np.abs(M.imag), initial=0.0) > tol * _scale(M):
        raise PositivityError("tensor has non-real entries")
    Mr = np.real(M)
    if Mr.size and Mr.min() < -tol * _scale(M):
        raise PositivityError(f"tensor has negative entry {Mr.min():.3g}")
    out = np.zeros([d * d for d in M.shape], dtype=complex)
    idx = np.indices(M.shape).reshape(M.ndim, -1)
    diag_idx = tuple(j * (M.shape[k] + 1) for k, j in enumerate(idx))
    out[diag_idx] = M.reshape(-1)
    return out


def nn_to_sep(d: Decomposition, tol: float = PSD_TOL) -> MatrixDecomposition:
    """Lift a nonnegative decomposition to a separable one with diagonal locals."""
    locs = []
    for i, t in enumerate(d.locals):
        s = _scale(t)
        if np.max(np.abs(t.imag), initial=0.0) > tol * s or (t.size and t.real.min() < -tol * s):
            raise PositivityError(f"vertex {i} has local entries that are not nonnegative")
        dim = t.shape[-1]
        m = np.zeros(t.shape + (dim,), dtype=complex)
        m[..., np.arange(dim), np.arange(dim)] = np.clip(t.real, 0.0, None)
        locs.append(m.reshape(t.shape[:-1] + (dim * dim,)))
    meta = dict(d.meta, kind="separable")
    return MatrixDecomposition(d.action, d.r, locs, meta, [(x, x) for x in d.dims])


def sep_to_nn(d: MatrixDecomposition, tol: float = PSD_TOL) -> Decomposition:
    """Extract the diagonals of a separable decomposition with diagonal locals."""
    locs = []
    for i, (p, q) in enumerate(d.site_shapes):
        if p != q:
            raise DecompositionError(f"site {i} is not square")
        m = d.matrices(i)
        diag = np.diagonal(m, axis1=-2, axis2=-1)
        off = m.copy()
        off[..., np.arange(p), np.arange(p)] = 0
        if np.max(np.abs(off), initial=0.0) > tol * _scale(m):
            raise PositivityError(f"vertex {i} has non-diagonal local matrices")
        if diag.size and (np.max(np.abs(diag.imag)) > tol * _scale(m) or diag.real.min() < -tol * _scale(m)):
            raise PositivityError(f"vertex {i} has diagonal entries that are not nonnegative")
        locs.append(np.array(diag))
    meta = {k: v for k, v in d.meta.items() if k not in ("site_shapes", "kind")}
    return Decomposition(d.action, d.r, locs, meta)


class PsdFamily:
    """Psd matrices ``E[i][j]`` of size ``r^k_i``, one per site and physical index.

    ``E[i]`` has shape ``(d_i, R_i, R_i)`` with ``R_i = r^k_i``; rows and
    columns are assignments on the copies incident to ``i`` in mixed-radix
    order.
    """

    def __init__(self, action: WscAction | Wsc, r: int, E: Sequence[np.ndarray]):
        self.action = action if isinstance(action, WscAction) else trivial_action(action)
        self.r = int(r)
        w = self.action.complex
        if len(E) != w.n + 1:
            raise PositivityError(f"expected {w.n + 1} sites")
        mats = []
        for i, e in enumerate(E):
            e = np.asarray(e, dtype=complex)
            R = self.r ** len(w.incident_positions[i])
            if e.ndim != 3 or e.shape[1:] != (R, R):
                raise PositivityError(f"site {i}: expected shape (d, {R}, {R}), got {e.shape}")
            mats.append(e)
        self.E = tuple(mats)
        check_orbit_dims(self.action, self.dims)

    @property
    def complex(self) -> Wsc:
        return self.action.complex

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(e.shape[0] for e in self.E)

    def unfolded(self, i: int) -> np.ndarray:
        """``E[i]`` with rows and columns split into one axis per incident copy."""
        k = len(self.complex.incident_positions[i])
        return self.E[i].reshape((self.dims[i],) + (self.r,) * (2 * k))

    def _pull(self, e: np.ndarray, g: int, i: int) -> np.ndarray:
        ax = self.action.pull_axes(g, i)
        k = len(ax)
        return np.transpose(e, [0] + [1 + x for x in ax] + [1 + k + x for x in ax])

    @classmethod
    def from_representatives(cls, action: WscAction, r: int, reps: dict[int, np.ndarray]) -> "PsdFamily":
        """Materialize a family from one psd block per vertex orbit.

        Each representative block is averaged over its stabilizer, then moved
        along the orbit, so the orbit symmetry holds by construction.
        """
        w = action.complex
        out = [None] * (w.n + 1)
        for orb in action.vertex_orbits:
            rep = orb[0]
            if rep not in reps:
                raise PositivityError(f"no block for orbit representative {rep}")
            k = len(w.incident_positions[rep])
            e = np.asarray(reps[rep], dtype=complex)
            e = e.reshape((e.shape[0],) + (r,) * (2 * k))
            tmp = cls.__new__(cls)
            tmp.action = action
            stab = action.stabilizer(rep)
            e = np.sort(np.stack([tmp._pull(e, h, rep) for h in stab]), axis=0).sum(axis=0) / len(stab)
            for i in orb:
                t = action.transporters[i]
                ax = list(np.argsort(action.pull_axes(t, rep)))
                moved = np.transpose(e, [0] + [1 + x for x in ax] + [1 + k + x for x in ax])
                out[i] = moved.reshape(e.shape[0], r**k, r**k)
        return cls(action, r, out)

    def check(self, tol: float = PSD_TOL) -> ValidationReport:
        """Psd test for every matrix plus the orbit symmetry."""
        rep = ValidationReport()
        for i, e in enumerate(self.E):
            for j, m in enumerate(e):
                if np.max(np.abs(m - m.conj().T), initial=0.0) > tol * _scale(m) or _min_eig(m) < -tol * _scale(m):
                    rep.add("psd", f"site {i}, index {j} is not Hermitian psd", vertex=i, index=j)
        a = self.action
        for i in range(self.complex.n + 1):
            for g in range(1, a.order):
                gi = int(a.vertex_act[g, i])
                dev = np.max(np.abs(self.unfolded(i) - self._pull(self.unfolded(gi), g, i)), initial=0.0)
                if dev > tol * _scale(self.E[i]):
                    rep.add("orbit_symmetry", f"vertex {i}, element {g}: deviation {dev:.3g}", vertex=i, element=g)
        return rep


def random_psd_family(action: WscAction | Wsc, r: int, dims: Sequence[int], rng=None, rank: int | None = None) -> PsdFamily:
    """Random orbit-symmetric psd family built from Gram matrices."""
    a = action if isinstance(action, WscAction) else trivial_action(action)
    rng = np.random.default_rng(rng)
    reps = {}
    for orb in a.vertex_orbits:
        rep = orb[0]
        R = r ** len(a.complex.incident_positions[rep])
        k = rank or R
        X = rng.standard_normal((int(dims[rep]), k, R)) + 1j * rng.standard_normal((int(dims[rep]), k, R))
        reps[rep] = np.einsum("jkb,jkc->jbc", X.conj(), X)
    return PsdFamily.from_representatives(a, r, reps)


def _gram_vectors(e: np.ndarray, tol: float) -> np.ndarray:
    """``a[j, beta]`` = column ``beta`` of ``sqrt(E_j)``; shape ``(d, R, R)`` as (j, beta, coordinate)."""
    return np.stack([psd_sqrt(m, tol).T for m in e])


def psd_decomp_to_purification(E: PsdFamily, tol: float = PSD_TOL) -> MatrixDecomposition:
    """Purification of ``diag_embed(evaluate_psd_decomp(E))`` with the same index set.

    The local map for assignment ``beta`` sends ``e_j`` to ``a[j, beta] x e_j``
    where ``a[j, beta]`` is column ``beta`` of ``sqrt(E_j)``.  Coordinates are
    those of the orbit representative, so condition (b) holds whenever vertex
    stabilizers fix their incident copies.
    """
    rep_report = E.check(tol)
    if not rep_report.ok:
        raise PositivityError("family is invalid: " + rep_report.violations[0])
    a = E.action
    _require_trivial_stabilizers(a, "purification")
    rep_tabs = {}
    shapes = [None] * (E.complex.n + 1)
    for orb in a.vertex_orbits:
        rep = orb[0]
        d = E.dims[rep]
        k = len(E.complex.incident_positions[rep])
        R = E.r**k
        A = _gram_vectors(E.E[rep], tol)  # (j, beta, coord)
        tau = np.zeros((R, R, d, d), dtype=complex)  # (beta, coord, j_out, j_in)
        for j in range(d):
            tau[:, :, j, j] = A[j]
        rep_tabs[rep] = tau.reshape((E.r,) * k + (R * d * d,))
        for i in orb:
            shapes[i] = (R * d, d)
    locs = _transport_from_reps(a, rep_tabs)
    return MatrixDecomposition(a, E.r, locs, {"kind": "purification"}, shapes)


def purification_to_psd_decomp(xi: MatrixDecomposition) -> PsdFamily:
    """``E_j[beta, beta'] = (xi_beta^* xi_beta')_{jj}`` at every site."""
    mats = []
    for i, (p, q) in enumerate(xi.site_shapes):
        T = xi.matrices(i)
        R = int(np.prod(T.shape[:-2], dtype=int))
        T = T.reshape(R, p, q)
        mats.append(np.einsum("bkj,ckj->jbc", T.conj(), T))
    return PsdFamily(xi.action, xi.r, mats)


def evaluate_psd_decomp(E: PsdFamily, budget: float | None = DEFAULT_BUDGET) -> np.ndarray:
    """``M[j] = sum_{alpha, alpha'} prod_i E_{j_i}[alpha|i, alpha'|i]``."""
    w = E.complex
    m = len(w.copies)
    if E.r == 0:
        return np.zeros(E.dims, dtype=complex)
    terms = []
    for i in range(w.n + 1):
        P = w.incident_positions[i]
        terms.append(
            oe.get_symbol(2 * m + i)
            + "".join(oe.get_symbol(p) for p in P)
            + "".join(oe.get_symbol(m + p) for p in P)
        )
    expr = ",".join(terms) + "->" + "".join(oe.get_symbol(2 * m + i) for i in range(w.n + 1))
    ops = [E.unfolded(i) for i in range(w.n + 1)]
    path, info = oe.contract_path(expr, *ops, optimize="greedy")
    if budget is not None and info.opt_cost > budget:
        raise BudgetExceeded(f"evaluation needs about {info.opt_cost:.3g} operations")
    return np.asarray(oe.contract(expr, *ops, optimize=path), dtype=complex)


def psd_family_to_json(E: PsdFamily) -> dict:
    return {
        "complex": wsc_to_json(E.complex),
        "action": action_to_json(E.action, include_complex=False),
        "r": E.r,
        "E": [[complex_to_pairs(m) for m in e] for e in E.E],
    }


def psd_family_from_json(obj: dict | str) -> PsdFamily:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or set(obj) != {"complex", "action", "r", "E"}:
        raise PositivityError("psd family JSON must have keys 'complex', 'action', 'r', 'E'")
    w = wsc_from_json(obj["complex"])
    a = action_from_json(obj["action"], complex=w)
    E = []
    for i, site in enumerate(obj["E"]):
        R = int(obj["r"]) ** len(w.incident_positions[i])
        mats = [pairs_to_complex(m).reshape(R, R) for m in site]
        E.append(np.stack(mats) if mats else np.zeros((0, R, R), dtype=complex))
    return PsdFamily(a, int(obj["r"]), E)
