"""The acceptance matrix as reusable checks.

Each ``check_*`` function runs one criterion and returns a :class:`CheckResult`
with measured quantities.  :func:`run_suite` runs them all for the CLI.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .complex import Wsc, standard_complex, validate_wsc
from .construct import (
    ConstructionError,
    change_complex_cayley,
    change_complex_constant,
    change_complex_power,
    change_group,
    indicator_coefficients,
    invariantize_blending,
    invariantize_free,
)
from .decomp import (
    Decomposition,
    check_condition_b,
    contract,
    direct_sum,
    from_elementary,
    product,
    random_invariant_decomposition,
    to_operator,
    verify,
)
from .group import (
    FiniteGroup,
    cayley_action,
    circle_rotation_action,
    double_edge_action,
    edge_swap_action,
    free_refinement,
    is_blending,
    is_free,
    line_reflection_action,
    restrict_action,
    simplex_symmetric_action,
    trivial_action,
)
from .positivity import (
    diag_embed,
    evaluate_psd_decomp,
    nn_to_sep,
    purification_to_psd_decomp,
    purify_separable,
)
from .decomp import site_tensor_to_operator
from .search import indicator_search, numeric_rank_search
from .tensor import ElementarySum, contract_elementary, is_invariant, symmetrize, symmetrize_elementary

__all__ = ["CheckResult", "CHECKS", "run_suite"] + [f"check_{k}" for k in range(1, 13)]


@dataclass
class CheckResult:
    criterion: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.criterion:>2}: {self.title} ({self.seconds:.2f} s)"


def _timed(criterion: int, title: str, limit: float | None):
    def deco(fn: Callable[..., dict]):
        def run(seed: int = 7) -> CheckResult:
            t0 = time.perf_counter()
            passed, details = fn(seed)
            dt = time.perf_counter() - t0
            if limit is not None and dt > limit:
                passed = False
                details["timeout"] = f"took {dt:.1f} s, limit {limit} s"
            return CheckResult(criterion, title, bool(passed), details, dt, limit)

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return deco


def _random_elementary(rng, dims, r=1, real=True):
    if real:
        return ElementarySum(tuple(rng.standard_normal((r, d)) for d in dims))
    return ElementarySum(tuple(rng.standard_normal((r, d)) + 1j * rng.standard_normal((r, d)) for d in dims))


@_timed(1, "wsc axioms on standard families and random divisibility violations", 1.0)
def check_1(seed):
    rng = np.random.default_rng(seed)
    C5 = FiniteGroup.cyclic(5)
    good = {
        "simplex(3)": standard_complex("simplex", 3),
        "complete(3)": standard_complex("complete", 3),
        "line(4)": standard_complex("line", 4),
        "circle(5)": standard_complex("circle", 5),
        "double_edge": standard_complex("double_edge"),
        "cayley(C5,{1,2})": standard_complex("cayley", mul=C5.mul, gens=[1, 2]),
    }
    accepted = {k: validate_wsc(w).ok for k, w in good.items()}
    rejected = []
    for _ in range(10):
        n = int(rng.integers(1, 4))
        facet = tuple(range(n + 1))
        sub_w = int(rng.integers(2, 6))
        fw = sub_w * int(rng.integers(1, 4)) + int(rng.integers(1, sub_w))  # not a multiple
        sub = tuple(sorted(rng.choice(n + 1, size=int(rng.integers(1, n + 1)), replace=False).tolist()))
        table = {(i,): 1 for i in range(n + 1)}
        table[sub] = sub_w
        table[facet] = fw
        rep = validate_wsc(Wsc(n, table))
        rejected.append(any(d["kind"] == "divisibility" for d in rep.details))
    return all(accepted.values()) and all(rejected), {"accepted": accepted, "rejected": rejected}


def _table_actions():
    return {
        "S3/simplex(2)": simplex_symmetric_action(2),
        "C2/line(2)": line_reflection_action(2),
        "C2/line(3)": line_reflection_action(3),
        "C2/line(4)": line_reflection_action(4),
        "C3/circle(3)": circle_rotation_action(3),
        "C4/circle(4)": circle_rotation_action(4),
        "C2/edge": edge_swap_action(),
        "C2/double_edge_swap": double_edge_action(True),
    }


@_timed(2, "free/blending classification of the standard examples", 1.0)
def check_2(seed):
    A = _table_actions()
    expected = [
        ("S3/simplex(2)", "blending", True),
        ("S3/simplex(2)", "free", False),
        ("C2/line(2)", "free", True),
        ("C2/line(3)", "free", False),
        ("C2/line(2)", "blending", True),
        ("C2/line(3)", "blending", False),
        ("C3/circle(3)", "free", True),
        ("C4/circle(4)", "blending", False),
        ("C2/edge", "blending", True),
        ("C2/double_edge_swap", "free", True),
    ]
    fns = {"free": is_free, "blending": is_blending}
    got = [(name, prop, fns[prop](A[name]), want) for name, prop, want in expected]
    # the edge is also not free, and the circle is also not blending
    extra = [("C2/edge", "free", is_free(A["C2/edge"]), False),
             ("C3/circle(3)", "blending", is_blending(A["C3/circle(3)"]), False),
             ("C2/line(4)", "free", is_free(A["C2/line(4)"]), True)]
    rows = got + extra
    ok = all(g == w for _, _, g, w in rows)
    return ok, {"checks": [{"action": a, "property": p, "got": g, "expected": w} for a, p, g, w in rows]}


@_timed(3, "free refinement is free and scales facet weights by |G|", 1.0)
def check_3(seed):
    out = {}
    for name, a in _table_actions().items():
        if a.order > 6:
            continue
        b = free_refinement(a)
        scaled = all(b.complex.weight(f) == a.order * w for f, w in a.complex.facet_weights().items())
        out[name] = {"free": is_free(b), "weights_scaled": scaled, "valid": b.report.ok}
    return all(all(v.values()) for v in out.values()), out


def _nonneg_multiple(u: np.ndarray, pool: np.ndarray, tol: float = 1e-12) -> bool:
    for w in pool:
        ww = float(np.vdot(w, w).real)
        if ww == 0:
            continue
        c = np.vdot(w, u) / ww
        if abs(c.imag) <= tol and c.real >= -tol and np.max(np.abs(u - c.real * w)) <= tol * max(1.0, np.max(np.abs(u))):
            return True
    return False


def _locals_are_seed_multiples(out: Decomposition, seed: Decomposition) -> bool:
    a = out.action
    for i in range(out.n + 1):
        orb = a.vertex_orbits[int(a.orbit_of[i])]
        pool = np.concatenate([seed.locals[k].reshape(-1, seed.dims[k]) for k in orb])
        pool = pool[np.any(pool != 0, axis=1)]
        vecs = out.locals[i].reshape(-1, out.dims[i])
        for u in vecs[np.any(vecs != 0, axis=1)]:
            if not _nonneg_multiple(u, pool):
                return False
    return True


@_timed(4, "free-action invariantization round trip", 30.0)
def check_4(seed):
    rng = np.random.default_rng(seed)
    C5 = FiniteGroup.cyclic(5)
    fams = {
        "C3/circle(3)": circle_rotation_action(3),
        "C4/circle(4)": circle_rotation_action(4),
        "C2/double_edge_swap": double_edge_action(True),
        "C5/cayley(C5,{1})": cayley_action(C5, [1]),
    }
    rows = []
    for t in range(20):
        name = list(fams)[t % 4]
        a = fams[name]
        dims = [2] * (a.complex.n + 1)
        s = symmetrize_elementary(a, _random_elementary(rng, dims, 1))
        v = contract_elementary(s)
        d = from_elementary(a.complex, s)
        out = invariantize_free(a, d)
        rows.append({
            "family": name,
            "verified": verify(out, v, 1e-9),
            "r_ok": out.r == d.r * a.order,
            "bitwise_b": check_condition_b(out, 0.0).ok,
            "nonneg_multiples": _locals_are_seed_multiples(out, d),
        })
    ok = all(all(v for k, v in r.items() if k != "family") for r in rows)
    return ok, {"trials": rows}


@_timed(5, "indicator coefficients and blending invariantization", 30.0)
def check_5(seed):
    rng = np.random.default_rng(seed)
    residuals = {n: indicator_coefficients(n, check=False).residual() for n in range(1, 7)}
    a = simplex_symmetric_action(2)
    recon = []
    for _ in range(10):
        v = symmetrize(a, rng.standard_normal((2, 2, 2)))
        d = invariantize_blending(a, v)
        recon.append(verify(d, v, 1e-9))
    ok = all(r <= 1e-10 for r in residuals.values()) and all(recon)
    return ok, {"residuals": residuals, "reconstructed": recon}


@_timed(6, "three indicator coefficients for n = 2", 60.0)
def check_6(seed):
    res = indicator_search(2, 3, restarts=32, seed=seed)
    four = indicator_search(2, 4, restarts=32, seed=seed)
    return res.found and res.residual <= 1e-8, {
        "best_residual_r3": res.residual,
        "residual_r4": four.residual,
        "found_r4": four.found,
    }


@_timed(7, "subadditivity of direct sums and products", 10.0)
def check_7(seed):
    rng = np.random.default_rng(seed)
    a = circle_rotation_action(3)
    rows = []
    for _ in range(10):
        r1, r2 = (int(x) for x in rng.integers(1, 4, size=2))
        d1 = random_invariant_decomposition(a, r1, [2, 2, 2], rng)
        d2 = random_invariant_decomposition(a, r2, [2, 2, 2], rng)
        v1, v2 = contract(d1), contract(d2)
        s = direct_sum(d1, d2)
        p = product(d1, d2)
        scale = max(1.0, float(np.max(np.abs(v1 + v2))))
        rows.append({
            "sum_r": s.r == r1 + r2,
            "sum_contract": float(np.max(np.abs(contract(s) - (v1 + v2)))) <= 1e-12 * scale,
            "prod_r": p.r == r1 * r2,
            "prod_contract": verify(p, v1 * v2, 1e-9 * max(1.0, float(np.max(np.abs(v1 * v2))))),
        })
    return all(all(r.values()) for r in rows), {"pairs": rows}


@_timed(8, "group change on C6 acting on the 6-circle", 30.0)
def check_8(seed):
    rng = np.random.default_rng(seed)
    a = circle_rotation_action(6)
    s = symmetrize_elementary(a, _random_elementary(rng, [2] * 6, 1))
    v = contract_elementary(s)
    d = from_elementary(a.complex, s)
    H = [0, 2, 4]
    dH = invariantize_free(restrict_action(a, H), d)
    dG = change_group(a, H, dH)
    de = change_group(a, [0], d)
    det = {
        "r_in_H": dH.r, "r_out_H": dG.r, "verify_H": verify(dG, v, 1e-9),
        "r_in_e": d.r, "r_out_e": de.r, "verify_e": verify(de, v, 1e-9),
    }
    ok = dG.r == 2 * dH.r and det["verify_H"] and de.r == 6 * d.r and det["verify_e"]
    return ok, det


def cayley_counterexample():
    """Product of maximally entangled pairs on the edges of the Cayley complex of ``(C5, {1, 2})``.

    Returns the decomposition (index size 2), the tensor, and the Schmidt
    rank across the cut ``{0, 1} | {2, 3, 4}``.  Any decomposition on the
    5-circle with index size ``r`` has Schmidt rank at most ``r^2`` across
    this cut, since exactly two circle edges cross it.
    """
    C5 = FiniteGroup.cyclic(5)
    w = standard_complex("cayley", mul=C5.mul, gens=[1, 2])
    locs = []
    for i in range(5):
        k = len(w.incident_positions[i])
        t = np.zeros((2,) * k + (2**k,), dtype=complex)
        for beta in itertools.product(range(2), repeat=k):
            flat = int(np.ravel_multi_index(beta, (2,) * k))
            t[beta + (flat,)] = 1.0
        locs.append(t)
    d = Decomposition(w, 2, locs)
    v = contract(d, None)
    dims = v.shape
    schmidt = int(np.linalg.matrix_rank(v.reshape(dims[0] * dims[1], -1)))
    return d, v, schmidt


@_timed(9, "change of complex: constant, weight multiples, Cayley generators", 30.0)
def check_9(seed):
    rng = np.random.default_rng(seed)
    det = {}
    # (a) simplex to other connected complexes
    parts_a = []
    for n, target in [(2, standard_complex("line", 2)), (2, standard_complex("circle", 3)), (3, standard_complex("complete", 3))]:
        r = int(rng.integers(1, 4))
        s = _random_elementary(rng, [2] * (n + 1), r, real=False)
        d = from_elementary(standard_complex("simplex", n), s)
        out = change_complex_constant(d, target)
        parts_a.append(out.r == r and verify(out, contract_elementary(s), 1e-9))
    det["a_constant"] = parts_a
    # (b) edge and double edge
    edge, dbl = standard_complex("edge"), standard_complex("double_edge")
    parts_b = []
    for r in (2, 3, 4, 5):
        s = _random_elementary(rng, [3, 3], r, real=False)
        d = from_elementary(edge, s)
        up = change_complex_power(d, 2, "to_multiple")
        want = int(np.ceil(np.sqrt(r) - 1e-12))
        parts_b.append(up.r == want and up.complex == dbl and verify(up, contract(d), 1e-9))
    for r in (1, 2, 3):
        d = random_invariant_decomposition(dbl, r, [3, 3], rng)
        down = change_complex_power(d, 2, "from_multiple")
        parts_b.append(down.r == r**2 and down.complex == edge and verify(down, contract(d), 1e-9))
    det["b_power"] = parts_b
    # (c) Cayley complexes of C5 with T = {1, 2} and S = {1}
    C5 = FiniteGroup.cyclic(5)
    dT = random_invariant_decomposition(standard_complex("cayley", mul=C5.mul, gens=[1, 2]), 2, [2] * 5, rng)
    try:
        out = change_complex_cayley(dT, C5, [1, 2], [1])
        part_c = out.r <= dT.r**2 and verify(out, contract(dT), 1e-9)
        det["c_cayley"] = {"r_in": dT.r, "r_out": out.r, "verified": part_c}
    except ConstructionError as exc:
        part_c = False
        _, _, schmidt = cayley_counterexample()
        det["c_cayley"] = {
            "error": str(exc),
            "counterexample_schmidt_rank": schmidt,
            "implied_circle_rank_at_least": int(np.ceil(np.sqrt(schmidt))),
            "claimed_bound": 4,
        }
    ok = all(parts_a) and all(parts_b) and part_c
    return ok, det


@_timed(10, "positivity chain on planted nonnegative decompositions", 60.0)
def check_10(seed):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(10):
        a = trivial_action(standard_complex("edge")) if t < 5 else circle_rotation_action(3)
        n1 = a.complex.n + 1
        dnn = random_invariant_decomposition(a, 2, [2] * n1, rng, kind="nonneg")
        M = contract(dnn).real
        sep = nn_to_sep(dnn)
        sigma = site_tensor_to_operator(diag_embed(M), sep.site_shapes)
        xi = purify_separable(sep)
        X = to_operator(xi, None)
        E = purification_to_psd_decomp(xi)
        sq = product(xi.adjoint(), xi, "matrix")
        rows.append({
            "nn_to_sep_r": sep.r == dnn.r and verify(sep, contract(sep), 0) and
            float(np.max(np.abs(to_operator(sep) - sigma))) <= 1e-10,
            "purification_r": xi.r == dnn.r,
            "purification_gram": float(np.max(np.abs(X.conj().T @ X - sigma))) <= 1e-8,
            "psd_r": E.r == dnn.r,
            "psd_evaluates": float(np.max(np.abs(evaluate_psd_decomp(E) - M))) <= 1e-8,
            "square_r": sq.r == xi.r**2,
            "square_contract": float(np.max(np.abs(to_operator(sq, None) - sigma))) <= 1e-8,
        })
    return all(all(r.values()) for r in rows), {"trials": rows}


@_timed(11, "condition (b) implies invariance", 10.0)
def check_11(seed):
    rng = np.random.default_rng(seed)
    C5 = FiniteGroup.cyclic(5)
    acts = [circle_rotation_action(3), circle_rotation_action(4), double_edge_action(True),
            line_reflection_action(2), simplex_symmetric_action(2), cayley_action(C5, [1])]
    ok = []
    for t in range(50):
        a = acts[t % len(acts)]
        r = int(rng.integers(1, 3))
        d = random_invariant_decomposition(a, r, [2] * (a.complex.n + 1), rng)
        ok.append(check_condition_b(d, 0.0).ok and is_invariant(a, contract(d), 1e-10))
    return all(ok), {"invariant": ok}


@_timed(12, "planted rank recovery by numeric search", 120.0)
def check_12(seed):
    fams = {"line(2)": trivial_action(standard_complex("line", 2)), "C3/circle(3)": circle_rotation_action(3)}
    rates = {}
    for name, a in fams.items():
        for r in (1, 2, 3):
            hits = 0
            for t in range(20):
                planted = random_invariant_decomposition(a, r, [2] * (a.complex.n + 1), seed * 1000 + 50 * r + t)
                v = contract(planted)
                res = numeric_rank_search(a, v, r, seed=seed * 1000 + t, constructive=False)
                hits += res.found and res.residual <= 1e-6
            rates[f"{name}, r={r}"] = hits / 20
    return all(x >= 0.9 for x in rates.values()), {"success_rates": rates}


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10, check_11, check_12]


def run_suite(seed: int = 7, only=None) -> list[CheckResult]:
    return [chk(seed) for k, chk in enumerate(CHECKS, start=1) if only is None or k in only]


def report_json(results: list[CheckResult]) -> dict:
    return {
        "passed": sum(r.passed for r in results),
        "total": len(results),
        "checks": [asdict(r) for r in results],
    }
