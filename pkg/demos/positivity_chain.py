"""
From nonnegative tensors to purifications and back
==================================================

A nonnegative decomposition of M lifts to a separable decomposition of the
diagonal operator diag(M).  Taking square roots of the local blocks gives a
purification xi with xi^* xi = diag(M), and the Gram matrices of xi give a
psd decomposition that evaluates back to M.  Index sizes never change.
"""

import numpy as np

from wscdecomp.decomp import check_condition_b, contract, product, random_invariant_decomposition, to_operator
from wscdecomp.group import circle_rotation_action
from wscdecomp.positivity import (
    evaluate_psd_decomp,
    nn_to_sep,
    purification_to_psd_decomp,
    purify_separable,
)

a = circle_rotation_action(3)
d = random_invariant_decomposition(a, 2, [2, 2, 2], 3, kind="nonneg")
M = contract(d).real
print("M is entrywise nonnegative:", bool((M >= 0).all()))

sep = nn_to_sep(d)
xi = purify_separable(sep)
X = to_operator(xi)
print("separable r =", sep.r, " purification r =", xi.r)
print("xi^* xi = diag(M):", np.allclose(X.conj().T @ X, np.diag(M.reshape(-1))))
print("purification keeps the orbit identification:", check_condition_b(xi).ok)

E = purification_to_psd_decomp(xi)
print("psd family r =", E.r, " re-evaluates M:", np.allclose(evaluate_psd_decomp(E), M))

# squaring the purification sitewise gives a decomposition of size r^2
sq = product(xi.adjoint(), xi, "matrix")
print("product size", sq.r, " equals diag(M):", np.allclose(to_operator(sq), np.diag(M.reshape(-1))))
