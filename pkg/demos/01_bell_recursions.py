"""
Denoiser polynomials from partial Bell polynomials
==================================================

Each correction term h_k of the transport denoiser is a polynomial in the
score ratios r_m = q^(m-1)/q of the observation density.  Here we build the
first few, check that they solve their defining equation and look at their
structure.
"""

from otdenoise.combinatorics import bell_polynomial, enumerate_partitions
from otdenoise.expansion import derive_g_sequence, derive_h_sequence, verify_recursion_residual

# B_{4,2}(x1, x2, x3) = 4 x1 x3 + 3 x2^2
for term in enumerate_partitions(4, 2):
    print("B_{4,2} term", term.multiplicities, "coefficient", term.coefficient)
print("B_{6,3} has", len(bell_polynomial(6, 3)), "monomials")

# The h_k (observation side) and g_k (signal side)
hs = derive_h_sequence(5)
for k, h in enumerate(hs, start=1):
    print(f"h_{k} ({len(h.terms)} terms): {h}")
for k, g in enumerate(derive_g_sequence(3), start=1):
    print(f"g_{k}: {g}")

# every h_k solves its order-k equation exactly (rational arithmetic)
print("residuals zero:", [verify_recursion_residual(hs, k).is_zero() for k in range(1, 6)])

# each monomial of h_k carries total weight sum(m - 1) = 2k - 1
print("gradings:", [sorted(h.gradings()) for h in hs])
