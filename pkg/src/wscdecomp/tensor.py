"""Dense global tensors, the induced group action, and elementary sums.

A global tensor is a complex ndarray with one axis per vertex.  The action of
a group element ``g`` moves the factor at vertex ``i`` to vertex ``g*i``, which
makes :func:`act` a left action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .group import ActionError, WscAction

__all__ = [
    "DEFAULT_TOL",
    "ElementarySum",
    "act",
    "is_invariant",
    "symmetrize",
    "basis_expansion",
    "contract_elementary",
    "symmetrize_elementary",
    "check_orbit_dims",
    "complex_to_pairs",
    "pairs_to_complex",
    "tensor_to_json",
    "tensor_from_json",
]

DEFAULT_TOL = 1e-9


def check_orbit_dims(a: WscAction, dims) -> None:
    """Raise if two vertices in one orbit carry different local dimensions."""
    dims = tuple(int(x) for x in dims)
    if len(dims) != a.complex.n + 1:
        raise ActionError(f"expected {a.complex.n + 1} local dimensions, got {len(dims)}")
    for orb in a.vertex_orbits:
        if len({dims[i] for i in orb}) > 1:
            raise ActionError(f"vertices {orb} lie in one orbit but have dimensions {[dims[i] for i in orb]}")


def act(a: WscAction, g: int, v: np.ndarray) -> np.ndarray:
    """Apply group element ``g`` to a global tensor.

    The output axis ``k`` is the input axis ``g^-1(k)``, so that
    ``act(a, g, act(a, h, v)) == act(a, g*h, v)``.
    """
    v = np.asarray(v)
    check_orbit_dims(a, v.shape)
    ginv = int(a.group.inv[g])
    return np.transpose(v, a.vertex_act[ginv])


def is_invariant(a: WscAction, v: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Max-norm invariance test over all group elements."""
    v = np.asarray(v)
    check_orbit_dims(a, v.shape)
    return all(np.max(np.abs(act(a, g, v) - v), initial=0.0) <= tol for g in range(a.order))


def symmetrize(a: WscAction, v: np.ndarray) -> np.ndarray:
    """Average of ``act(a, g, v)`` over the group."""
    v = np.asarray(v)
    out = np.zeros(v.shape, dtype=np.result_type(v.dtype, np.float64))
    for g in range(a.order):
        out = out + act(a, g, v)
    return out / a.order


@dataclass(frozen=True)
class ElementarySum:
    """A finite sum of elementary tensors ``sum_j w_j[0] x ... x w_j[n]``.

    ``factors[i]`` has shape ``(r, d_i)``; row ``j`` is the factor of term ``j``
    at vertex ``i``.
    """

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        if not fs:
            raise ValueError("an elementary sum needs at least one site")
        if any(f.ndim != 2 for f in fs):
            raise ValueError("factors must be 2-d arrays of shape (r, d_i)")
        if len({f.shape[0] for f in fs}) != 1:
            raise ValueError("all sites must have the same number of terms")
        object.__setattr__(self, "factors", fs)

    @property
    def r(self) -> int:
        return self.factors[0].shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[1] for f in self.factors)

    def __len__(self) -> int:
        return self.r

    def term(self, j: int) -> tuple[np.ndarray, ...]:
        return tuple(f[j] for f in self.factors)


def basis_expansion(v: np.ndarray) -> ElementarySum:
    """One term ``v[idx] * e_idx0 x ... x e_idxn`` per nonzero entry, in row-major order.

    The coefficient goes into the factor at vertex 0, so the expansion is exact.
    """
    v = np.asarray(v, dtype=complex)
    idx = np.argwhere(v != 0)
    factors = []
    for i, d in enumerate(v.shape):
        f = np.zeros((len(idx), d), dtype=complex)
        f[np.arange(len(idx)), idx[:, i]] = 1.0
        factors.append(f)
    if len(idx):
        factors[0][np.arange(len(idx)), idx[:, 0]] = v[tuple(idx.T)]
    return ElementarySum(tuple(factors))


def contract_elementary(s: ElementarySum) -> np.ndarray:
    """Dense sum of the outer products."""
    out = np.zeros(s.dims, dtype=complex)
    for j in range(s.r):
        term = s.factors[0][j]
        for f in s.factors[1:]:
            term = np.multiply.outer(term, f[j])
        out += term
    return out


def symmetrize_elementary(a: WscAction, s: ElementarySum) -> ElementarySum:
    """Elementary sum of ``symmetrize(a, contract_elementary(s))`` with ``|G|*r`` terms.

    Useful for building invariant tensors whose elementary seed stays small.
    """
    check_orbit_dims(a, s.dims)
    blocks = [[] for _ in s.factors]
    for g in range(a.order):
        ginv = a.vertex_act[int(a.group.inv[g])]
        for k in range(len(s.factors)):
            blocks[k].append(s.factors[int(ginv[k])])
    factors = [np.concatenate(b, axis=0) for b in blocks]
    factors[0] = factors[0] / a.order
    return ElementarySum(tuple(factors))


def complex_to_pairs(x: np.ndarray) -> list:
    x = np.asarray(x, dtype=complex)
    return np.stack([x.real, x.imag], axis=-1).tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        return np.zeros(arr.shape[:-1] if arr.ndim > 1 else (0,), dtype=complex)
    if arr.shape[-1] != 2:
        raise ValueError("complex numbers must be given as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def tensor_to_json(v: np.ndarray) -> dict:
    v = np.asarray(v, dtype=complex)
    return {"dims": list(v.shape), "entries": complex_to_pairs(v.reshape(-1))}


def tensor_from_json(obj: dict | str) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or set(obj) != {"dims", "entries"}:
        raise ValueError("tensor JSON must have exactly the keys 'dims' and 'entries'")
    dims = [int(x) for x in obj["dims"]]
    if any(x <= 0 for x in dims):
        raise ValueError("dimensions must be positive")
    entries = pairs_to_complex(obj["entries"])
    if entries.shape != (int(np.prod(dims)),):
        raise ValueError(f"expected {int(np.prod(dims))} entries, got {entries.shape[0]}")
    return entries.reshape(dims)
