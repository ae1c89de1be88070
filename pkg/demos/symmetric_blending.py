"""
Symmetric tensors through blending actions
==========================================

The full symmetric group on the vertices of a simplex is blending but not
free.  Invariant decompositions then come from indicator coefficients: a
short list of numbers whose products pick out the tuples covering every
vertex.
"""

import numpy as np

from wscdecomp.construct import indicator_coefficients, invariantize_blending
from wscdecomp.decomp import check_condition_b, contract
from wscdecomp.group import is_blending, is_free, simplex_symmetric_action
from wscdecomp.tensor import ElementarySum, contract_elementary, symmetrize_elementary

rng = np.random.default_rng(1)
a = simplex_symmetric_action(2)
print("S3 on the triangle  free:", is_free(a), " blending:", is_blending(a))

# a random symmetric tensor in (C^3)^{x3}
s = symmetrize_elementary(a, ElementarySum(tuple(rng.standard_normal((2, 3)) for _ in range(3))))
v = contract_elementary(s)

for form in ("polarization", "sign"):
    c = indicator_coefficients(2, form)
    d = invariantize_blending(a, s, c)
    print(f"{form:>12}: {c.r} coefficients, index size {d.r}, "
          f"error {np.abs(contract(d) - v).max():.1e}, condition (b) {check_condition_b(d).ok}")

# Each table is diagonal in the index, so the result is a symmetric
# decomposition sum_j u_j x u_j x u_j with a shared vector per term.
