"""Desk-scale rank oracles.

Searches certify upper bounds only.  A failed search reports its best
residual and says nothing about lower bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import opt_einsum as oe
from scipy.optimize import least_squares

from .construct import IndicatorCoefficients, indicator_coefficients, invariantize_blending, invariantize_free
from .decomp import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Decomposition,
    check_condition_b,
    contract,
    contraction_cost,
    direct_sum,
    from_elementary,
    zero_decomposition,
)
from .group import WscAction, is_blending, is_free, trivial_action
from .complex import Wsc, is_connected
from .tensor import basis_expansion, check_orbit_dims

__all__ = [
    "SearchResult",
    "exact_edge_rank",
    "numeric_rank_search",
    "indicator_search",
]


@dataclass
class SearchResult:
    """Outcome of a randomized search.

    ``result`` is None when nothing within tolerance was found; ``residual``
    is then the best max-norm residual seen.
    """

    result: Any
    residual: float
    restart: int | None
    residuals: list[float] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.result is not None


def exact_edge_rank(M: np.ndarray, tol: float = 1e-10) -> int:
    """Matrix rank: singular values above ``tol * sigma_max``."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"edge rank needs a matrix (n = 1), got {M.ndim} axes")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _pad(d: Decomposition, r: int) -> Decomposition:
    if d.r == r:
        return d
    locs = [np.zeros((r - d.r,) * (t.ndim - 1) + t.shape[-1:], dtype=complex) for t in d.locals]
    return direct_sum(d, Decomposition(d.action, r - d.r, locs))


def _constructive(a: WscAction, v: np.ndarray, r: int, budget) -> Decomposition | None:
    """A decomposition of size exactly ``r`` from the constructions, if they fit."""
    if not is_connected(a.complex):
        return None
    seed = basis_expansion(v)
    nnz = seed.r
    if a.is_trivial and nnz <= r:
        return _pad(from_elementary(a.complex, seed), r)
    if is_free(a) and a.order * nnz <= r:
        return _pad(invariantize_free(a, from_elementary(a.complex, seed), check=False), r)
    if is_blending(a):
        C = indicator_coefficients(a.complex.n)
        if C.r * nnz <= r:
            return _pad(invariantize_blending(a, seed, check=False), r)
    return None


class _Model:
    """Parameterization of invariant tables by their orbit representatives."""

    def __init__(self, a: WscAction, r: int, dims):
        self.a = a
        self.r = r
        self.dims = tuple(int(x) for x in dims)
        P = a.complex.incident_positions
        self.reps = [orb[0] for orb in a.vertex_orbits]
        self.shapes = {rep: (r,) * len(P[rep]) + (self.dims[rep],) for rep in self.reps}
        self.sizes = {rep: int(np.prod(s)) for rep, s in self.shapes.items()}
        self.nparam = sum(self.sizes.values())
        m = len(a.complex.copies)
        terms = ["".join(oe.get_symbol(p) for p in P[i]) + oe.get_symbol(m + i) for i in range(a.complex.n + 1)]
        self.expr = ",".join(terms) + "->" + "".join(oe.get_symbol(m + i) for i in range(a.complex.n + 1))
        self.terms = terms
        self.m = m

    def tables(self, z: np.ndarray) -> list[np.ndarray]:
        a = self.a
        out = [None] * (a.complex.n + 1)
        off = 0
        for rep in self.reps:
            t = z[off:off + self.sizes[rep]].reshape(self.shapes[rep])
            off += self.sizes[rep]
            stab = a.stabilizer(rep)
            if len(stab) > 1:
                t = np.sort(np.stack([a.pullback(t, h, rep) for h in stab]), axis=0).sum(axis=0) / len(stab)
            for i in a.vertex_orbits[self.reps.index(rep)]:
                out[i] = a.pushforward(t, a.transporters[i], rep)
        return out

    def flatten(self, tables) -> np.ndarray:
        return np.concatenate([tables[rep].reshape(-1) for rep in self.reps])

    def contract(self, tables) -> np.ndarray:
        return oe.contract(self.expr, *tables, optimize="greedy")

    def environment(self, tables, i: int) -> np.ndarray:
        """Contraction of all tables but ``i``, shape ``(R_i, prod of other dims)``."""
        n1 = self.a.complex.n + 1
        P = self.a.complex.incident_positions[i]
        ops = [tables[j] for j in range(n1) if j != i]
        terms = [self.terms[j] for j in range(n1) if j != i]
        out = "".join(oe.get_symbol(p) for p in P) + "".join(oe.get_symbol(self.m + j) for j in range(n1) if j != i)
        env = oe.contract(",".join(terms) + "->" + out, *ops, optimize="greedy")
        return env.reshape(self.r ** len(P), -1)


def _als_sweeps(model: _Model, tables, v, iters: int, tol: float):
    n1 = len(tables)
    scale = max(1.0, float(np.max(np.abs(v))))
    for _ in range(iters):
        for i in range(n1):
            env = model.environment(tables, i)
            rhs = np.moveaxis(v, i, 0).reshape(v.shape[i], -1)
            x, *_ = np.linalg.lstsq(env.T, rhs.T, rcond=None)
            tables[i] = x.reshape(tables[i].shape)
        res = float(np.max(np.abs(model.contract(tables) - v)))
        if res <= tol * scale or not np.isfinite(res):
            break
    return tables


def _table_maps(model: _Model) -> list[np.ndarray]:
    """Matrices of the linear maps from parameters to each flattened table."""
    cols = [model.tables(e) for e in np.eye(model.nparam, dtype=complex)]
    return [np.stack([c[i].reshape(-1) for c in cols], axis=1) for i in range(len(cols[0]))]


def _jacobian(model: _Model, tables, maps) -> np.ndarray:
    """Holomorphic Jacobian of the contraction with respect to the parameters."""
    dims = model.dims
    N = int(np.prod(dims))
    J = np.zeros((N, model.nparam), dtype=complex)
    for i, L in enumerate(maps):
        env = model.environment(tables, i)  # (R_i, N_others)
        d = dims[i]
        Ji = np.einsum("xy,bo->xoby", np.eye(d), env)  # (x_i, others, beta, x_i')
        Ji = Ji.reshape((d,) + tuple(dims[j] for j in range(len(dims)) if j != i) + (-1,))
        Ji = np.moveaxis(Ji, 0, i).reshape(N, -1)
        J += Ji @ L
    return J


def _polish(model: _Model, z0: np.ndarray, v: np.ndarray, iters: int):
    target = v.reshape(-1)
    maps = _table_maps(model)
    p = model.nparam

    def fun(x):
        diff = model.contract(model.tables(x[:p] + 1j * x[p:])).reshape(-1) - target
        return np.concatenate([diff.real, diff.imag])

    def jac(x):
        J = _jacobian(model, model.tables(x[:p] + 1j * x[p:]), maps)
        return np.block([[J.real, -J.imag], [J.imag, J.real]])

    x0 = np.concatenate([z0.real, z0.imag])
    sol = least_squares(fun, x0, jac=jac, method="trf", max_nfev=iters, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x[:p] + 1j * sol.x[p:]


def numeric_rank_search(a: WscAction | Wsc, v: np.ndarray, r: int, restarts: int = 32, iters: int = 200,
                        tol: float = 1e-6, seed: int = 0, budget: float | None = DEFAULT_BUDGET,
                        constructive: bool = True) -> SearchResult:
    """Look for an invariant decomposition of ``v`` with index size ``r``.

    Without a group, alternating least squares on the local tables is
    followed by a trust-region polish.  With a group, the tables at orbit
    representatives are the parameters (projected onto stabilizer
    invariants and transported), so condition (b) holds by construction,
    and the trust-region solver runs on them directly.  Restarts use seeds
    ``seed, seed + 1, ...``; the first success wins.

    If ``constructive`` is set and a construction of this package already
    fits into ``r``, it is returned without searching.
    """
    a = a if isinstance(a, WscAction) else trivial_action(a)
    v = np.asarray(v, dtype=complex)
    check_orbit_dims(a, v.shape)
    r = int(r)
    if r < 0:
        raise ValueError("r must be nonnegative")
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    if r == 0:
        res = float(np.max(np.abs(v), initial=0.0))
        found = zero_decomposition(a, v.shape) if res <= tol * scale else None
        return SearchResult(found, res, None, [res])
    if constructive:
        d = _constructive(a, v, r, budget)
        if d is not None:
            res = float(np.max(np.abs(contract(d, budget) - v)))
            if res <= tol * scale:
                return SearchResult(d, res, None, [res])
    model = _Model(a, r, v.shape)
    cost = contraction_cost(Decomposition(a, r, model.tables(np.zeros(model.nparam, dtype=complex))))
    if budget is not None and cost > budget:
        raise BudgetExceeded(f"one contraction needs about {cost:.3g} operations, budget is {budget:.3g}")
    best_res, best_k = np.inf, None
    history = []
    for k in range(restarts):
        rng = np.random.default_rng(seed + k)
        z = (rng.standard_normal(model.nparam) + 1j * rng.standard_normal(model.nparam))
        z *= (scale ** (1.0 / len(v.shape))) / np.sqrt(r)
        if a.is_trivial:
            tables = _als_sweeps(model, model.tables(z), v, iters, tol)
            z = model.flatten(tables)
        res = float(np.max(np.abs(model.contract(model.tables(z)) - v)))
        if not np.isfinite(res) or res > tol * scale:
            if not np.all(np.isfinite(z)):
                z = rng.standard_normal(model.nparam) + 1j * rng.standard_normal(model.nparam)
            z = _polish(model, z, v, iters * 10)
            res = float(np.max(np.abs(model.contract(model.tables(z)) - v)))
        history.append(res)
        if res < best_res:
            best_res, best_k = res, k
        if res <= tol * scale:
            d = Decomposition(a, r, model.tables(z), {"search": {"restart": k, "residual": res}})
            if check_condition_b(d).ok:
                return SearchResult(d, res, k, history)
    return SearchResult(None, float(best_res), best_k, history)


def _multiset_exponents(n: int) -> tuple[np.ndarray, np.ndarray]:
    n1 = n + 1
    rows, target = [], []
    for combo in itertools.combinations_with_replacement(range(n1), n1):
        e = np.bincount(combo, minlength=n1)
        rows.append(e)
        target.append(1.0 if np.all(e == 1) else 0.0)
    return np.array(rows), np.array(target, dtype=complex)


def indicator_search(n: int, r: int, restarts: int = 32, iters: int = 2000, tol: float = 1e-8,
                     seed: int = 0) -> SearchResult:
    """Randomized least-squares search for ``r`` indicator coefficients.

    Residuals are taken over index multisets; the Jacobian is the
    holomorphic derivative expanded into real and imaginary parts.  On
    success ``result`` is an :class:`~wscdecomp.construct.IndicatorCoefficients`
    whose full residual is at most ``tol``.
    """
    n, r = int(n), int(r)
    if r < 1:
        raise ValueError("r must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    E, target = _multiset_exponents(n)
    n1 = n + 1
    size = n1 * r

    def unpack(x):
        return (x[:size] + 1j * x[size:]).reshape(n1, r)

    def values(d):
        # powers[m, i, l] = d[i, l] ** E[m, i]
        return np.prod(d[None, :, :] ** E[:, :, None], axis=1)

    def fun(x):
        F = values(unpack(x)).sum(axis=1) - target
        return np.concatenate([F.real, F.imag])

    def jac(x):
        d = unpack(x)
        pw = d[None, :, :] ** E[:, :, None]
        J = np.zeros((len(E), n1, r), dtype=complex)
        for i in range(n1):
            others = np.prod(np.delete(pw, i, axis=1), axis=1)
            e = E[:, i][:, None]
            J[:, i, :] = np.where(e > 0, e * d[i][None, :] ** np.maximum(e - 1, 0), 0) * others
        J = J.reshape(len(E), size)
        return np.block([[J.real, -J.imag], [J.imag, J.real]])

    best_res, best_k, history = np.inf, None, []
    for k in range(restarts):
        rng = np.random.default_rng(seed + k)
        x0 = rng.standard_normal(2 * size)
        sol = least_squares(fun, x0, jac=jac, method="trf", max_nfev=iters, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        coeffs = IndicatorCoefficients(n, unpack(sol.x))
        res = coeffs.residual()
        history.append(res)
        if res < best_res:
            best_res, best_k = res, k
        if res <= tol:
            return SearchResult(coeffs, res, k, history)
    return SearchResult(None, float(best_res), best_k, history)
