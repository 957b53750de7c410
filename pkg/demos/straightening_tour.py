"""Straightening an area-preserving map of the 2-torus along a first integral.

If ``xi(f(x)) = xi(x) + alpha`` then the level curves of ``xi`` are permuted by
``f``; flowing along them gives coordinates ``psi(s, t)`` in which ``f``
becomes ``(s, t) -> (s + alpha, t + phi(s))``.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from torogrow import (Anzai, CircleFunction, FirstIntegral, LinearMap, Shear, Torus2Function,
                      build_conjugacy, conjugate, verify_conjugacy)

alpha = np.sqrt(2) - 1
phi0 = CircleFunction(1, (0.05,), (0.1,))
T = Anzai(alpha, phi0)

# Hide the skew product behind a nonlinear shear.  The shear sends x1 to
# x1 - sin(2 pi x2)/(4 pi), so xi = x1 + sin(2 pi x2)/(4 pi) is a first integral.
c = 1 / (4 * np.pi)
f = conjugate(Shear(CircleFunction(0, (), (-c,))), T)
xi = FirstIntegral((1, 0), Torus2Function((0, 0), ((0, 1, 0.0, c),)))

res = build_conjugacy(f, xi, alpha, grid_sizes=(32, 32))
ver = verify_conjugacy(f, res)
print(f"epsilon = {res.epsilon}, tau = {res.tau_period:.9f}, degree of phi = {res.phi.degree}")
print(f"residual on grid {res.residual_sup:.2e}, offset grid {ver.residual_offset:.2e}")
print(f"|xi(psi) - s| {ver.level_sup:.2e}, |det Dpsi - 1| {ver.det_sup:.2e}")

# The recovered phi is not phi0 itself, only cohomologous to it, but the
# degrees agree and the mean shift is invariant.
print("phi0 mean:", phi0.constant, " recovered mean:", round(res.phi.constant, 6))

# An integer change of basis R works too; the first integral is the first
# row of R^-1 applied to x.
R = LinearMap(((2, 1), (1, 1)))
res = build_conjugacy(conjugate(R, T), FirstIntegral((1, -1)), alpha, grid_sizes=(32, 32))
print("linear conjugate: q =", res.q, " residual", f"{res.residual_sup:.2e}")

# Perturbing a single grid value is caught immediately.
P = res.psi_grid.copy()
P[3, 4] += 0.01
print("corrupted residual:", f"{verify_conjugacy(conjugate(R, T), replace(res, psi_grid=P)).residual_sup:.2e}")
