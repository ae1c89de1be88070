import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wscdecomp.complex import Wsc, scale_weights, standard_complex
from wscdecomp.construct import (
    ConstructionError,
    change_complex_cayley,
    change_complex_constant,
    change_complex_power,
    change_group,
    indicator_coefficients,
    indicator_residual,
    invariantize_blending,
    invariantize_free,
    invariantize_strong_blending,
    scale_orbit_of_zero,
)
from wscdecomp.decomp import (
    Decomposition,
    check_condition_b,
    contract,
    from_elementary,
    random_invariant_decomposition,
    verify,
)
from wscdecomp.group import (
    FiniteGroup,
    circle_rotation_action,
    double_edge_action,
    edge_swap_action,
    line_reflection_action,
    restrict_action,
    simplex_symmetric_action,
    trivial_action,
)
from wscdecomp.suite import cayley_counterexample
from wscdecomp.tensor import ElementarySum, contract_elementary, symmetrize_elementary


def full_tuple_residual(d):
    """Max deviation over every ordered tuple in {0..n}^(n+1)."""
    n1 = d.shape[0]
    worst = 0.0
    for tup in itertools.product(range(n1), repeat=n1):
        val = np.prod(d[list(tup)], axis=0).sum()
        worst = max(worst, abs(val - (1.0 if len(set(tup)) == n1 else 0.0)))
    return worst


def invariant_seed(a, rng, r=1, dim=2):
    """Elementary sum of a random invariant tensor with |G|*r terms."""
    f = tuple(rng.standard_normal((r, dim)) + 1j * rng.standard_normal((r, dim)) for _ in range(a.complex.n + 1))
    return symmetrize_elementary(a, ElementarySum(f))


def plain(a, s):
    return from_elementary(a.complex, s)


class TestIndicator:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("form", ["polarization", "sign"])
    def test_full_tuple_oracle(self, n, form):
        c = indicator_coefficients(n, form)
        assert full_tuple_residual(c.d) <= 1e-10

    @pytest.mark.parametrize("n", range(1, 7))
    def test_sizes(self, n):
        assert indicator_coefficients(n).r == 2 ** (n + 1) - 1
        assert indicator_coefficients(n, "sign").r == 2**n

    def test_two_vertex_closed_form(self):
        s = 1 / np.sqrt(2)
        d = np.array([[s, 1j * s], [s, -1j * s]])
        assert indicator_residual(d) < 1e-15
        assert full_tuple_residual(d) < 1e-15

    def test_single_column_impossible_for_edge(self):
        # d0*d1 = 1 forces d0 != 0, then d0^2 = 0 fails
        d = np.array([[1.0], [1.0]])
        assert indicator_residual(d) == 1.0

    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_residual_symmetric_in_tuples(self, n, seed):
        d = np.random.default_rng(seed).standard_normal((n + 1, 3))
        assert abs(indicator_residual(d) - full_tuple_residual(d)) < 1e-12

    def test_unknown_form(self):
        with pytest.raises(ConstructionError):
            indicator_coefficients(2, "cube")
        with pytest.raises(ConstructionError):
            indicator_coefficients(0)


class TestScale:
    def test_orbit_scaling(self):
        a = line_reflection_action(2)
        d = random_invariant_decomposition(a, 2, [2, 2, 2], 0)
        e = scale_orbit_of_zero(d, 4.0)
        np.testing.assert_allclose(contract(e), contract(d) / 4, atol=1e-13)
        assert check_condition_b(e).ok
        assert np.array_equal(e.locals[1], d.locals[1])


class TestInvariantizeFree:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_circle(self, n):
        a = circle_rotation_action(n)
        s = invariant_seed(a, np.random.default_rng(n))
        d = plain(a, s)
        out = invariantize_free(a, d)
        v = contract_elementary(s)
        assert out.r == n * d.r
        assert check_condition_b(out).ok
        assert verify(out, v, 1e-9)

    def test_double_edge(self):
        a = double_edge_action(True)
        rng = np.random.default_rng(1)
        v = rng.standard_normal((3, 3))
        v = v + v.T
        d = Decomposition(a.complex, 3, [np.eye(3)[:, None, :] * np.ones((3, 3, 1)), v[:, None, :] * np.eye(3)[:, :, None]])
        assert np.allclose(contract(d), v)
        out = invariantize_free(a, d)
        assert out.r == 6 and verify(out, v, 1e-9)

    def test_line_even(self):
        a = line_reflection_action(4)
        s = invariant_seed(a, np.random.default_rng(2))
        out = invariantize_free(a, plain(a, s))
        assert verify(out, contract_elementary(s), 1e-9)

    def test_rejects_non_free(self):
        a = edge_swap_action()
        with pytest.raises(ConstructionError):
            invariantize_free(a, Decomposition(a.complex, 1, [np.ones((1, 2)), np.ones((1, 2))]))

    def test_rejects_non_invariant(self):
        a = circle_rotation_action(3)
        rng = np.random.default_rng(3)
        s = ElementarySum(tuple(rng.standard_normal((1, 2)) for _ in range(3)))
        with pytest.raises(ConstructionError):
            invariantize_free(a, plain(a, s))


class TestChangeGroup:
    def test_c3_to_c6(self):
        a = circle_rotation_action(6)
        H = [0, 2, 4]
        aH = restrict_action(a, H)
        s = invariant_seed(a, np.random.default_rng(0))
        dH = invariantize_free(aH, plain(a, s))
        out = change_group(a, H, dH)
        assert out.r == 2 * dH.r
        assert verify(out, contract_elementary(s), 1e-9)

    def test_trivial_subgroup_matches_free(self):
        a = circle_rotation_action(3)
        s = invariant_seed(a, np.random.default_rng(1))
        d = plain(a, s)
        out = change_group(a, [0], d)
        ref = invariantize_free(a, d)
        assert out.r == ref.r
        assert all(np.array_equal(x, y) for x, y in zip(out.locals, ref.locals))

    def test_whole_group_keeps_rank(self):
        a = circle_rotation_action(4)
        d = random_invariant_decomposition(a, 2, [2] * 4, 0)
        out = change_group(a, list(range(4)), d)
        assert out.r == 2 and verify(out, contract(d), 1e-9)

    def test_non_normal_rejected(self):
        G, perms = FiniteGroup.dihedral(3)
        from wscdecomp.group import action_from_vertex_perms

        a = action_from_vertex_perms(standard_complex("circle", 3), G, perms)
        reflection = next(g for g in range(G.order) if G.mul[g, g] == 0 and g != 0)
        with pytest.raises(ConstructionError):
            change_group(a, [0, reflection], random_invariant_decomposition(a.complex, 1, [2] * 3, 0))


BLENDING = {
    "S3/simplex(2)": simplex_symmetric_action(2),
    "S4/simplex(3)": simplex_symmetric_action(3),
    "C2/edge": edge_swap_action(),
    "C2/line(2)": line_reflection_action(2),
    "C2/line(1)": line_reflection_action(1),
}


class TestInvariantizeBlending:
    @pytest.mark.parametrize("name", list(BLENDING))
    def test_exact(self, name):
        a = BLENDING[name]
        s = invariant_seed(a, np.random.default_rng(4))
        out = invariantize_blending(a, s)
        assert out.r == indicator_coefficients(a.complex.n).r * s.r
        assert check_condition_b(out).ok
        assert verify(out, contract_elementary(s), 1e-9, budget=None)

    def test_dense_input_and_sign_form(self):
        a = simplex_symmetric_action(2)
        s = invariant_seed(a, np.random.default_rng(5))
        v = contract_elementary(s)
        out = invariantize_blending(a, v, indicator_coefficients(2, "sign"))
        assert verify(out, v, 1e-9)

    def test_rejects_non_blending(self):
        a = circle_rotation_action(4)
        with pytest.raises(ConstructionError):
            invariantize_blending(a, invariant_seed(a, np.random.default_rng(6)))

    def test_rejects_non_invariant(self):
        a = edge_swap_action()
        with pytest.raises(ConstructionError):
            invariantize_blending(a, np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestInvariantizeStrong:
    @pytest.mark.parametrize("name", ["S3/simplex(2)", "S4/simplex(3)", "C2/edge", "C2/line(1)"])
    def test_exact(self, name):
        a = BLENDING[name]
        s = invariant_seed(a, np.random.default_rng(7))
        d = plain(a, s)
        out = invariantize_strong_blending(a, d)
        assert out.r == indicator_coefficients(a.complex.n).r * d.r
        assert check_condition_b(out).ok
        assert verify(out, contract_elementary(s), 1e-9, budget=None)

    def test_trivial_group_unchanged(self):
        w = standard_complex("line", 2)
        d = random_invariant_decomposition(w, 2, [2, 2, 2], 0)
        assert invariantize_strong_blending(trivial_action(w), d) is d

    @pytest.mark.parametrize("a", [circle_rotation_action(3), line_reflection_action(2)], ids=["circle", "line"])
    def test_requires_strong(self, a):
        # the reflection of line(2) fixes vertex 1 but swaps its two copies
        with pytest.raises(ConstructionError):
            invariantize_strong_blending(a, plain(a, invariant_seed(a, np.random.default_rng(8))))


class TestChangeComplex:
    def test_line_to_circle(self):
        w = standard_complex("line", 2)
        d = random_invariant_decomposition(w, 2, [2, 2, 2], 0)
        out = change_complex_constant(d, standard_complex("circle", 3))
        assert out.r == 4
        np.testing.assert_allclose(contract(out), contract(d), atol=1e-12)

    def test_simplex_to_line(self):
        w = standard_complex("simplex", 2)
        d = random_invariant_decomposition(w, 2, [2, 2, 2], 1)
        out = change_complex_constant(d, standard_complex("line", 2))
        assert out.r == 2
        np.testing.assert_allclose(contract(out), contract(d), atol=1e-12)

    def test_disconnected_target(self):
        w = standard_complex("line", 3)
        d = random_invariant_decomposition(w, 1, [2] * 4, 2)
        bad = Wsc(3, {(0,): 1, (1,): 1, (2,): 1, (3,): 1, (0, 1): 1, (2, 3): 1})
        with pytest.raises(ConstructionError):
            change_complex_constant(d, bad)

    @pytest.mark.parametrize("r,m,s", [(2, 2, 2), (4, 2, 2), (5, 2, 3), (3, 3, 2), (8, 3, 2), (9, 3, 3)])
    def test_to_multiple(self, r, m, s):
        w = standard_complex("circle", 3)
        d = random_invariant_decomposition(w, r, [2, 2, 2], r)
        out = change_complex_power(d, m, "to_multiple")
        assert out.complex == scale_weights(w, m) and out.r == s
        np.testing.assert_allclose(contract(out, None), contract(d), atol=1e-10)

    @pytest.mark.parametrize("m", [2, 3])
    def test_from_multiple(self, m):
        w = scale_weights(standard_complex("line", 2), m)
        d = random_invariant_decomposition(w, 2, [2, 2, 2], m)
        out = change_complex_power(d, m, "from_multiple")
        assert out.complex == standard_complex("line", 2) and out.r == 2**m
        np.testing.assert_allclose(contract(out), contract(d, None), atol=1e-10)

    def test_round_trip_power(self):
        w = standard_complex("double_edge")
        d = random_invariant_decomposition(w, 3, [2, 2], 0)
        back = change_complex_power(change_complex_power(d, 2, "to_multiple"), 2, "from_multiple")
        np.testing.assert_allclose(contract(back), contract(d), atol=1e-12)

    def test_cayley_subset_to_superset(self):
        C5 = FiniteGroup.cyclic(5)
        w = standard_complex("cayley", mul=C5.mul, gens=[1])
        d = random_invariant_decomposition(w, 2, [2] * 5, 3)
        out = change_complex_cayley(d, C5, [1], [1, 2])
        assert out.r == 2
        np.testing.assert_allclose(contract(out), contract(d), atol=1e-12)

    def test_cayley_same_generators(self):
        S3, _ = FiniteGroup.symmetric(3)
        w = standard_complex("cayley", mul=S3.mul, gens=[1, 2])
        d = random_invariant_decomposition(w, 2, [2] * 6, 4)
        out = change_complex_cayley(d, S3, [1, 2], [1, 2])
        np.testing.assert_allclose(contract(out, None), contract(d, None), atol=1e-11)

    def test_cayley_fewer_generators_refused(self):
        d, _, _ = cayley_counterexample()
        with pytest.raises(ConstructionError):
            change_complex_cayley(d, FiniteGroup.cyclic(5), [1, 2], [1])


class TestCayleyCounterexample:
    def test_schmidt_rank_exceeds_circle_capacity(self):
        d, v, schmidt = cayley_counterexample()
        assert d.r == 2
        # four Bell pairs cross the cut {0,1}|{2,3,4}, each contributing rank 4
        assert schmidt == 64
        # a 5-circle decomposition with index size 4 has Schmidt rank at most 4^2
        assert schmidt > 4**2

    def test_circle_bound_holds_for_random_circle_decompositions(self):
        w = standard_complex("circle", 5)
        for r in (2, 3):
            d = random_invariant_decomposition(w, r, [2] * 5, r)
            v = contract(d)
            assert np.linalg.matrix_rank(v.reshape(4, -1)) <= r**2
