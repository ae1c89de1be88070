import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wscdecomp.complex import standard_complex
from wscdecomp.construct import indicator_coefficients
from wscdecomp.decomp import check_condition_b, contract, random_invariant_decomposition, verify
from wscdecomp.group import circle_rotation_action, edge_swap_action, line_reflection_action
from wscdecomp.search import exact_edge_rank, indicator_search, numeric_rank_search


def power_sum(d, x):
    """sum_l (sum_i d[i, l] x_i)^(n+1) at the point x."""
    return np.sum((x @ d) ** d.shape[0])


class TestEdgeRank:
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_product_of_factors(self, m, n, k, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
        assert exact_edge_rank(M) == min(k, m, n)

    def test_zero(self):
        assert exact_edge_rank(np.zeros((3, 3))) == 0

    def test_needs_matrix(self):
        with pytest.raises(ValueError):
            exact_edge_rank(np.zeros((2, 2, 2)))


class TestNumericSearch:
    def test_line_recovers_rank(self):
        w = standard_complex("line", 2)
        v = contract(random_invariant_decomposition(w, 2, [3, 3, 3], 0))
        res = numeric_rank_search(w, v, 2, restarts=8, constructive=False)
        assert res.found and verify(res.result, v, 1e-6 * np.abs(v).max())

    def test_line_too_small(self):
        w = standard_complex("line", 2)
        v = contract(random_invariant_decomposition(w, 2, [3, 3, 3], 1))
        res = numeric_rank_search(w, v, 1, restarts=4, constructive=False)
        assert not res.found and res.residual > 1e-3
        assert len(res.residuals) == 4

    def test_invariant_circle(self):
        a = circle_rotation_action(3)
        v = contract(random_invariant_decomposition(a, 2, [2, 2, 2], 2))
        res = numeric_rank_search(a, v, 2, restarts=16, constructive=False)
        assert res.found
        assert check_condition_b(res.result).ok
        assert np.max(np.abs(contract(res.result) - v)) <= 1e-6 * max(1.0, np.abs(v).max())

    def test_constructive_shortcut(self):
        a = edge_swap_action()
        v = np.array([[1.0, 2.0], [2.0, 0.0]])
        res = numeric_rank_search(a, v, 40, restarts=1)
        assert res.found and res.result.r == 40
        assert verify(res.result, v, 1e-9)

    def test_zero_rank(self):
        w = standard_complex("line", 1)
        assert numeric_rank_search(w, np.zeros((2, 2)), 0).found
        assert not numeric_rank_search(w, np.eye(2), 0).found

    def test_deterministic(self):
        a = line_reflection_action(2)
        v = contract(random_invariant_decomposition(a, 2, [2, 2, 2], 3))
        r1 = numeric_rank_search(a, v, 2, restarts=3, seed=5, constructive=False)
        r2 = numeric_rank_search(a, v, 2, restarts=3, seed=5, constructive=False)
        assert r1.residuals == r2.residuals


class TestIndicatorSearch:
    def test_edge_two_terms(self):
        res = indicator_search(1, 2, restarts=4)
        assert res.found and res.result.residual() <= 1e-8

    def test_edge_one_term_impossible(self):
        res = indicator_search(1, 1, restarts=4)
        assert not res.found

    def test_triangle_three_terms_fail(self):
        # the covering indicator for n = 2 has symmetric rank 4, the Waring rank of x0*x1*x2
        res = indicator_search(2, 3, restarts=16)
        assert not res.found and res.residual > 0.1

    def test_triangle_four_terms(self):
        res = indicator_search(2, 4, restarts=8)
        assert res.found

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_power_sum_identity(self, n):
        # a valid table gives sum_l (sum_i d_il x_i)^(n+1) = (n+1)! x_0 ... x_n
        c = indicator_coefficients(n, "sign")
        x = np.random.default_rng(n).standard_normal(n + 1)
        assert abs(power_sum(c.d, x) - math.factorial(n + 1) * np.prod(x)) < 1e-10
