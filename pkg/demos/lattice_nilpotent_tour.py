"""Integer lattices orthogonal to a primitive vector, and square-zero matrices."""
from __future__ import annotations

import numpy as np

from torogrow import classify_pair, membership, orthogonal_generators, square_zero_factor

# Generators of {m in Z^3 : m . c = 0}.
for c in ((1, 1, 1), (6, 10, 15), (0, 3, 5)):
    basis = orthogonal_generators(c)
    print(c, "->", basis.a, basis.b, "minor gcd", basis.minor_gcd)

basis = orthogonal_generators((6, 10, 15))
print("coefficients of (5, -6, 2):", membership(basis, (5, -6, 2)))
print("(1, 0, 0) is not orthogonal:", membership(basis, (1, 0, 0)))

# A square-zero matrix is an outer product u v^T with v . u = 0.
u = np.array([1.0, 2.0, 2.0])
A = np.outer(u, (2.0, -1.0, 0.0))
fac = square_zero_factor(A)
print("column", fac.column.round(6), "row", fac.row.round(6))
print("2x2 canonical form of [[2,-4],[1,-2]]:", square_zero_factor([[2, -4], [1, -2]]).canonical_2x2())

# Two square-zero matrices whose products vanish share a column or a row.
B = np.outer(u, (2.0, 0.0, -1.0))
pc = classify_pair(A, B)
print(pc.kind.value, "shared", np.round(pc.shared, 6))
