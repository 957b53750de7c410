"""Polynomial growth of derivative cocycles for skew products on the 3-torus.

Run with ``python3 demos/growth_tour.py``; everything prints to stdout.
"""
from __future__ import annotations

import numpy as np

from torogrow import (Automorphism, CircleFunction, Torus2Function, TwoStep, derivative_cocycle,
                      estimate_growth, stolz_average, theoretical_limit)

alpha = np.sqrt(2) - 1

# A two-step skew product
#   T(x1, x2, x3) = (x1 + alpha, x2 + beta(x1), x3 + gamma(x1, x2))
# with beta of degree 1 and gamma of degree 1 in x2.  The middle entry of
# DT^n grows linearly, and the corner entry sums it up, so it grows like n^2.
beta = CircleFunction(1, (), (1 / (2 * np.pi),))
gamma = Torus2Function((0, 1), ((1, 0, 0.0, 1 / (4 * np.pi)),))
T = TwoStep(alpha, beta, gamma)

x = np.zeros(3)
for n in (10, 100, 1000):
    M = derivative_cocycle(T, x, n)
    print(f"n={n:5d}  (2,1)/n = {M[1, 0] / n:.5f}   (3,1)/n^2 = {M[2, 0] / n**2:.5f}")

# The corner limit is d(beta) d2(gamma) / 2.  theoretical_limit knows it.
tau, L = theoretical_limit(T)
print("closed form: tau =", tau, " limit (3,1) =", L[2, 0])

# The 1/2 comes from a Cesaro-type average of gamma_x2 along the planar orbit.
print("Stolz average at n=2000:", float(stolz_average(T, x, 2000)))

# Fitting the exponent on a coarse grid of starting points.
u = np.arange(8) / 8
grid = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
rep = estimate_growth(T, grid, [125, 250, 500, 1000])
print(f"tau_fit = {rep.tau_fit:.4f}, sup residual to the limit = {rep.residual_sup:.2e}")
print(rep.to_csv())

# Linear automorphisms behave the same way when unipotent.
K = Automorphism(((1, 0, 0), (1, 1, 0), (0, 2, 1)))
print("unipotent K:", estimate_growth(K, np.zeros((1, 3)), [100, 200, 400, 800]).tau_fit)

# A hyperbolic block grows exponentially and gets flagged.
A = Automorphism(((2, 1, 0), (1, 1, 0), (0, 0, 1)))
print("hyperbolic flags:", estimate_growth(A, np.zeros((1, 3)), [2**k for k in range(4, 12)]).flags)
