"""
How many indicator coefficients are needed?
===========================================

Indicator coefficients for n+1 vertices are the same thing as a Waring
decomposition of the monomial x_0 x_1 ... x_n.  The Waring rank of that
monomial is 2^n, so two terms suffice for an edge, four (not three) for a
triangle and eight for a tetrahedron.  The numeric search below agrees.
"""

from wscdecomp.construct import indicator_coefficients
from wscdecomp.search import indicator_search

for n in (1, 2, 3):
    closed = indicator_coefficients(n, "sign")
    print(f"n = {n}: closed form with {closed.r} terms, residual {closed.residual():.1e}")
    for r in range(1, 2**n + 1):
        res = indicator_search(n, r, restarts=16)
        tag = "found" if res.found else "none"
        print(f"   r = {r}: {tag:>5}  best residual {res.residual:.2e}")
        if res.found:
            break
