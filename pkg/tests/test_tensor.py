import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wscdecomp.complex import standard_complex
from wscdecomp.group import (
    ActionError,
    circle_rotation_action,
    edge_swap_action,
    line_reflection_action,
    simplex_symmetric_action,
    trivial_action,
)
from wscdecomp.tensor import (
    ElementarySum,
    act,
    basis_expansion,
    check_orbit_dims,
    contract_elementary,
    is_invariant,
    symmetrize,
    symmetrize_elementary,
    tensor_from_json,
    tensor_to_json,
)


def random_tensor(rng, dims):
    return rng.standard_normal(dims) + 1j * rng.standard_normal(dims)


def entrywise_act(a, g, v):
    """(g.v)[x_0..x_n] = v[x_{g(0)}..x_{g(n)}], written with explicit loops."""
    out = np.empty_like(v)
    perm = a.vertex_act[g]
    for idx in itertools.product(*[range(d) for d in v.shape]):
        out[idx] = v[tuple(idx[perm[i]] for i in range(len(idx)))]
    return out


ACTIONS = {
    "C3/circle(3)": circle_rotation_action(3),
    "C4/circle(4)": circle_rotation_action(4),
    "S3/simplex(2)": simplex_symmetric_action(2),
    "C2/line(3)": line_reflection_action(3),
    "C2/edge": edge_swap_action(),
}


class TestAct:
    @pytest.mark.parametrize("name", list(ACTIONS))
    def test_matches_entrywise_definition(self, name):
        a = ACTIONS[name]
        v = random_tensor(np.random.default_rng(1), (2,) * (a.complex.n + 1))
        for g in range(a.order):
            assert np.array_equal(act(a, g, v), entrywise_act(a, g, v))

    @pytest.mark.parametrize("name", list(ACTIONS))
    def test_left_action(self, name):
        a = ACTIONS[name]
        v = random_tensor(np.random.default_rng(2), (2,) * (a.complex.n + 1))
        for g, h in itertools.product(range(a.order), repeat=2):
            assert np.array_equal(act(a, g, act(a, h, v)), act(a, a.group.mul[g, h], v))

    def test_cyclic_shift_entry(self):
        a = circle_rotation_action(3)
        v = np.zeros((2, 2, 2))
        v[1, 0, 0] = 1.0
        # the generator moves the factor at vertex 0 to vertex 1
        assert act(a, 1, v)[0, 1, 0] == 1.0

    def test_orbit_dims_enforced(self):
        with pytest.raises(ActionError):
            act(circle_rotation_action(3), 1, np.zeros((2, 3, 2)))
        check_orbit_dims(line_reflection_action(2), (2, 5, 2))


class TestSymmetrize:
    @pytest.mark.parametrize("name", list(ACTIONS))
    def test_invariant_and_idempotent(self, name):
        a = ACTIONS[name]
        v = random_tensor(np.random.default_rng(3), (2,) * (a.complex.n + 1))
        s = symmetrize(a, v)
        assert is_invariant(a, s, 1e-12)
        np.testing.assert_allclose(symmetrize(a, s), s, atol=1e-14)

    def test_trivial_group_identity(self):
        a = trivial_action(standard_complex("line", 2))
        v = random_tensor(np.random.default_rng(4), (2, 3, 4))
        assert np.array_equal(symmetrize(a, v), v)

    def test_generic_tensor_not_invariant(self):
        a = circle_rotation_action(3)
        assert not is_invariant(a, random_tensor(np.random.default_rng(5), (2, 2, 2)))


class TestElementary:
    @given(st.lists(st.integers(1, 3), min_size=1, max_size=4), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_basis_expansion_exact(self, dims, seed):
        rng = np.random.default_rng(seed)
        v = random_tensor(rng, dims) * (rng.random(dims) < 0.6)
        s = basis_expansion(v)
        assert s.r == np.count_nonzero(v)
        assert np.array_equal(contract_elementary(s), v)

    def test_basis_expansion_order(self):
        v = np.array([[0, 2], [3, 0]])
        s = basis_expansion(v)
        assert s.r == 2
        assert np.array_equal(s.factors[0], [[2, 0], [0, 3]])
        assert np.array_equal(s.factors[1], [[0, 1], [1, 0]])

    def test_contract_outer_product(self):
        s = ElementarySum((np.array([[1, 2]]), np.array([[3, 4, 5]])))
        assert np.array_equal(contract_elementary(s), np.outer([1, 2], [3, 4, 5]))

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            ElementarySum((np.ones((2, 3)), np.ones((3, 3))))
        with pytest.raises(ValueError):
            ElementarySum(())

    @pytest.mark.parametrize("name", list(ACTIONS))
    def test_symmetrize_elementary(self, name):
        a = ACTIONS[name]
        rng = np.random.default_rng(6)
        s = ElementarySum(tuple(random_tensor(rng, (2, 2)) for _ in range(a.complex.n + 1)))
        t = symmetrize_elementary(a, s)
        assert t.r == a.order * s.r
        np.testing.assert_allclose(contract_elementary(t), symmetrize(a, contract_elementary(s)), atol=1e-13)


class TestJson:
    @given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip(self, dims, seed):
        v = random_tensor(np.random.default_rng(seed), dims)
        assert np.array_equal(tensor_from_json(tensor_to_json(v)), v)

    def test_layout(self):
        obj = tensor_to_json(np.array([[1 + 2j, 0], [0, 3]]))
        assert obj == {"dims": [2, 2], "entries": [[1.0, 2.0], [0.0, 0.0], [0.0, 0.0], [3.0, 0.0]]}

    @pytest.mark.parametrize("bad", [
        {"dims": [2], "entries": [[1, 0]]},
        {"dims": [0], "entries": []},
        {"dims": [1], "entries": [[1, 0, 0]]},
        {"dims": [1]},
    ])
    def test_malformed(self, bad):
        with pytest.raises(ValueError):
            tensor_from_json(bad)
