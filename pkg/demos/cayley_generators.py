"""
Changing Cayley generators can cost more than a square
======================================================

On the Cayley complex of C5 with generators {1, 2} (the complete graph
K5), place a maximally entangled pair of qubits on every edge.  This needs
index size 2.  Across the cut {0, 1} | {2, 3, 4}, six edges cross and the
Schmidt rank is 2^6 = 64.  A decomposition on the 5-circle (generator {1})
with index size r crosses that cut on two edges, so its Schmidt rank is at
most r^2.  Index size 2^2 = 4 therefore cannot work: the circle needs at
least 8.
"""

import numpy as np

from wscdecomp.construct import ConstructionError, change_complex_cayley
from wscdecomp.decomp import random_invariant_decomposition, contract
from wscdecomp.complex import standard_complex
from wscdecomp.group import FiniteGroup
from wscdecomp.suite import cayley_counterexample

d, v, schmidt = cayley_counterexample()
print("index size on K5:", d.r)
print("Schmidt rank across {0,1}|{2,3,4}:", schmidt)
print("circle index size needed at least:", int(np.ceil(np.sqrt(schmidt))))

# random circle decompositions (local dimension 4) respect the r^2 cap
w = standard_complex("circle", 5)
for r in (2, 3, 4):
    u = contract(random_invariant_decomposition(w, r, [4] * 5, r))
    print(f"circle r = {r}: Schmidt rank {np.linalg.matrix_rank(u.reshape(16, -1))} <= {r * r}")

# the library refuses the edge map that would be needed
try:
    change_complex_cayley(d, FiniteGroup.cyclic(5), [1, 2], [1])
except ConstructionError as exc:
    print("refused:", exc)

# the other direction, adding generators, keeps the index size
C5 = FiniteGroup.cyclic(5)
small = random_invariant_decomposition(standard_complex("cayley", mul=C5.mul, gens=[1]), 2, [2] * 5, 0)
big = change_complex_cayley(small, C5, [1], [1, 2])
print("{1} -> {1,2}: r", small.r, "->", big.r, " exact:", np.allclose(contract(big), contract(small)))
