"""Straightening an area-preserving map of the 2-torus along the level sets of a first integral.

Given ``f`` and ``xi`` with ``xi(f(x)) = xi(x) + alpha`` (mod 1), the map
``psi(s, t)`` sends the vertical circle ``{s} x T`` onto the level set
``{xi = s}``: start on a transversal curve ``gamma(s)`` with ``xi(gamma(s)) = s``
and follow the Hamiltonian field ``X = (-xi_x2, xi_x1)`` for time ``t``
(rescaled so that one turn around the level curve takes unit time).  Then
``f(psi(s, t)) = psi(s + alpha, eps*t + phi(s))`` for a circle map ``phi``.

Everything is computed on lifts to ``R^2``; comparisons on the torus use
:func:`torus_distance`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _parallel
from .errors import HypothesisFailure, InputError, StructuralError
from .lattice import bezout_min_norm
from .systems import Automorphism, _PlanarSkew
from .torus import CircleFunction, Torus2Function, as_integer_matrix

DEFAULT_ODE_STEP = 1e-3
DEFAULT_HYPOTHESIS_TOL = 1e-8
DEFAULT_RESIDUAL_TOL = 1e-4
DEFAULT_GRID = (64, 64)


def torus_distance(a, b) -> np.ndarray:
    """Max-abs distance on the torus between lifted points (last axis = coordinates)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d - np.round(d)
    return np.max(np.abs(d), axis=-1)


# --- first integrals ----------------------------------------------------

@dataclass(frozen=True)
class FirstIntegral:
    """``xi(x) = p1*x1 + p2*x2 + periodic(x) + constant`` with coprime integer ``p``."""

    p: tuple[int, int]
    periodic: Torus2Function = field(default_factory=Torus2Function)
    constant: float = 0.0

    def __post_init__(self):
        p1, p2 = self.p
        if int(p1) != p1 or int(p2) != p2:
            raise InputError(f"p must be an integer pair, got {self.p!r}")
        p1, p2 = int(p1), int(p2)
        if (p1, p2) == (0, 0):
            raise InputError("p must be nonzero")
        if math.gcd(p1, p2) != 1:
            raise StructuralError(f"p={self.p} is not a pair of coprime integers")
        if not self.periodic.is_periodic:
            raise InputError("periodic part of a first integral must have degrees (0, 0)")
        object.__setattr__(self, "p", (p1, p2))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def function(self) -> Torus2Function:
        return Torus2Function(self.p, self.periodic.terms, self.periodic.constant + self.constant)

    @property
    def q(self) -> tuple[int, int]:
        """Minimal-norm integer pair with ``p . q = 1``."""
        return bezout_min_norm(*self.p)

    @property
    def displacement(self) -> tuple[int, int]:
        """``(-p2, p1)``; ``xi(x + D) = xi(x)`` and ``det[q, D] = 1``."""
        return (-self.p[1], self.p[0])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.function(x[..., 0], x[..., 1])

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g1, g2 = self.function.grad(x[..., 0], x[..., 1])
        return np.stack([g1, g2], axis=-1)

    def hamiltonian_field(self, x) -> np.ndarray:
        g = self.grad(x)
        return np.stack([-g[..., 1], g[..., 0]], axis=-1)

    def gradient_field(self, x) -> np.ndarray:
        """``grad xi / |grad xi|^2``; moves across level sets at unit speed in ``xi``."""
        g = self.grad(x)
        return g / np.sum(g * g, axis=-1, keepdims=True)

    def normalized(self) -> FirstIntegral:
        """Shift the constant so that ``xi(0, 0) = 0``."""
        return FirstIntegral(self.p, self.periodic, self.constant - float(self(np.zeros(2))))

    def min_grad_norm(self, n: int = 128) -> float:
        u = np.arange(n) / n
        X1, X2 = np.meshgrid(u, u, indexing="ij")
        g = self.grad(np.stack([X1, X2], axis=-1))
        return float(np.sqrt(np.sum(g * g, axis=-1)).min())

    def to_dict(self) -> dict:
        return {"p": list(self.p), "periodic": self.periodic.to_dict(), "constant": self.constant}


# --- composable torus maps ----------------------------------------------

class TorusMap:
    """A diffeomorphism of the 2-torus acting on lifts; subclasses define ``step`` and ``inverse``."""

    dim = 2

    def step(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def inverse(self) -> TorusMap:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, x):
        return self.step(np.asarray(x, dtype=float))

    def then(self, other: TorusMap) -> Composition:
        """``other o self``."""
        return Composition((as_map(other), self))


@dataclass(frozen=True)
class LinearMap(TorusMap):
    """``x -> R x`` for ``R`` in ``GL_2(Z)``."""

    R: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        M = as_integer_matrix(self.R)
        if M.shape != (2, 2):
            raise InputError("LinearMap expects a 2x2 matrix")
        object.__setattr__(self, "R", tuple(tuple(int(v) for v in row) for row in M))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.R, dtype=float)

    def step(self, x):
        return x @ self.matrix.T

    def inverse(self) -> LinearMap:
        (a, b), (c, d) = self.R
        det = a * d - b * c
        return LinearMap(((d * det, -b * det), (-c * det, a * det)))


@dataclass(frozen=True)
class Shear(TorusMap):
    """``(x1 + h(x2), x2)`` for ``axis=0``, or ``(x1, x2 + h(x1))`` for ``axis=1``."""

    h: CircleFunction
    axis: int = 0

    def __post_init__(self):
        if self.axis not in (0, 1):
            raise InputError("axis must be 0 or 1")

    def step(self, x):
        y = x.copy()
        if self.axis == 0:
            y[..., 0] = x[..., 0] + self.h(x[..., 1])
        else:
            y[..., 1] = x[..., 1] + self.h(x[..., 0])
        return y

    def inverse(self) -> Shear:
        return Shear(-self.h, self.axis)


@dataclass(frozen=True)
class SpecMap(TorusMap):
    """Adapter for planar system specs (Anzai, SkewFlip, 2x2 Automorphism)."""

    spec: object
    inverted: bool = False

    def step(self, x):
        return self.spec.inverse_step(x) if self.inverted else self.spec.step(x)

    def inverse(self) -> SpecMap:
        return SpecMap(self.spec, not self.inverted)


@dataclass(frozen=True)
class Composition(TorusMap):
    """``maps[0] o maps[1] o ... o maps[-1]``."""

    maps: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(as_map(m) for m in self.maps))
        if not self.maps:
            raise InputError("empty composition")

    def step(self, x):
        for m in reversed(self.maps):
            x = m.step(x)
        return x

    def inverse(self) -> Composition:
        return Composition(tuple(m.inverse() for m in reversed(self.maps)))


def as_map(obj) -> TorusMap:
    """Accept a TorusMap or a planar system spec."""
    if isinstance(obj, TorusMap):
        return obj
    if isinstance(obj, _PlanarSkew) or (isinstance(obj, Automorphism) and obj.dim == 2):
        return SpecMap(obj)
    raise InputError(f"cannot use {type(obj).__name__} as a map of the 2-torus")


def conjugate(phi, g) -> Composition:
    """``phi o g o phi^-1``."""
    phi = as_map(phi)
    return Composition((phi, as_map(g), phi.inverse()))


def numeric_jacobian_det(f: TorusMap, x, h: float = 1e-5) -> np.ndarray:
    """``det Df`` by central differences."""
    x = np.asarray(x, dtype=float)
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    c1 = (f.step(x + e1) - f.step(x - e1)) / (2 * h)
    c2 = (f.step(x + e2) - f.step(x - e2)) / (2 * h)
    return c1[..., 0] * c2[..., 1] - c1[..., 1] * c2[..., 0]


# --- integration --------------------------------------------------------

def rk4_step(field_fn, x, h):
    """One classical Runge-Kutta step; ``h`` is a scalar or one step per point."""
    h = np.asarray(h, dtype=float)
    if h.ndim:
        h = h[..., None]
    k1 = field_fn(x)
    k2 = field_fn(x + 0.5 * h * k1)
    k3 = field_fn(x + 0.5 * h * k2)
    k4 = field_fn(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def flow(field_fn, x, T, ode_step: float):
    """Integrate ``x' = field(x)`` for time ``T`` (per point, any sign) with steps of size at most ``ode_step``."""
    x = np.asarray(x, dtype=float)
    T = np.broadcast_to(np.asarray(T, dtype=float), x.shape[:-1])
    n = max(1, int(math.ceil(float(np.max(np.abs(T), initial=0.0)) / ode_step)))
    h = T / n
    for _ in range(n):
        x = rk4_step(field_fn, x, h)
    return x


def transversal_curve(xi: FirstIntegral, s_grid, ode_step: float = DEFAULT_ODE_STEP, *,
                      periodic: bool = False, grad_floor: float = 1e-6) -> np.ndarray:
    """Curve ``gamma`` with ``xi(gamma(s)) = s`` and ``gamma(0) = (0, 0)`` for a normalised ``xi``.

    With ``periodic=False`` this is the gradient-flow curve
    ``d gamma / ds = grad xi / |grad xi|^2`` started at the origin.  With
    ``periodic=True`` the segment ``s*q`` is pushed onto level ``s`` along the
    same flow, which additionally gives ``gamma(s + 1) = gamma(s) + q`` exactly
    and a smooth periodic extension.

    Raises
    ------
    StructuralError
        If ``|grad xi|`` drops below ``grad_floor`` on the torus or along the curve.
    """
    s = np.asarray(s_grid, dtype=float)
    if not np.all(np.isfinite(s)):
        raise InputError("s_grid must be finite")
    xi = xi.normalized()
    if xi.min_grad_norm() < grad_floor:
        raise StructuralError("gradient of the first integral vanishes (below the floor)")
    if periodic:
        start = s[..., None] * np.array(xi.q, dtype=float)
        sigma = s - xi(start)
    else:
        start = np.zeros(s.shape + (2,))
        sigma = s
    out = flow(xi.gradient_field, start, sigma, ode_step)
    g = xi.grad(out)
    if np.any(np.sqrt(np.sum(g * g, axis=-1)) < grad_floor):
        raise StructuralError("gradient norm fell below the floor along the transversal curve")
    return out


# --- the straightening map ----------------------------------------------

@dataclass(frozen=True)
class _Straightener:
    """Evaluates ``psi(s, t) = Phi_{t * t_star}(gamma(s))`` for every real ``s`` and ``t``."""

    xi: FirstIntegral
    ode_step: float
    t_star: float = 1.0

    @property
    def D(self) -> np.ndarray:
        return np.array(self.xi.displacement, dtype=float)

    def gamma(self, s):
        return transversal_curve(self.xi, s, self.ode_step, periodic=True, grad_floor=0.0)

    def flow(self, x, T):
        return flow(self.xi.hamiltonian_field, x, T, self.ode_step)

    def psi(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        shape = s.shape
        pts = np.stack([s.ravel(), t.ravel()], axis=-1)

        def run(chunk):
            k = np.floor(chunk[:, 1])
            base = self.gamma(chunk[:, 0])
            return self.flow(base, (chunk[:, 1] - k) * self.t_star) + k[:, None] * self.D

        return _parallel.chunked_map(run, pts, min_chunk=2048).reshape(shape + (2,))

    def locate(self, z, s):
        """Real ``eta`` with ``psi(s, eta) = z`` for points ``z`` already on the level ``xi = s`` (lift)."""
        z = np.asarray(z, dtype=float)
        s = np.asarray(s, dtype=float)
        X = self.xi.hamiltonian_field
        K = max(8, int(math.ceil(self.t_star / self.ode_step)))
        dt = self.t_star / K
        y = self.gamma(s)
        poly = [y]
        for _ in range(K):
            y = rk4_step(X, y, dt)
            poly.append(y)
        poly = np.stack(poly)  # (K+1, M, 2)
        q = np.array(self.xi.q, dtype=float)
        bcoord = lambda v: q[0] * v[..., 1] - q[1] * v[..., 0]
        j0 = np.floor(bcoord(z) - bcoord(poly[0]))
        best_d = np.full(z.shape[:-1], np.inf)
        best_j = np.zeros(z.shape[:-1])
        best_k = np.zeros(z.shape[:-1], dtype=int)
        for dj in (-1.0, 0.0, 1.0):
            j = j0 + dj
            target = z - j[:, None] * self.D
            d = np.sum((poly - target[None]) ** 2, axis=-1)
            k = np.argmin(d, axis=0)
            dk = d[k, np.arange(d.shape[1])]
            better = dk < best_d
            best_d = np.where(better, dk, best_d)
            best_j = np.where(better, j, best_j)
            best_k = np.where(better, k, best_k)
        y = poly[best_k, np.arange(z.shape[0])] + best_j[:, None] * self.D
        t = best_j * self.t_star + best_k * dt
        for _ in range(12):
            v = X(y)
            delta = -np.sum((y - z) * v, axis=-1) / np.sum(v * v, axis=-1)
            y = rk4_step(X, y, delta)
            t = t + delta
            if np.max(np.abs(delta)) < 1e-15:
                break
        if np.max(np.abs(y - z)) > 1e-8:
            raise StructuralError("failed to locate a point on its level curve")
        return t / self.t_star


def _return_times(S: _Straightener, x0, t_max: float):
    """First ``t > 0`` with ``Phi_t(x0) = x0 + D``, by crossing detection then Newton refinement."""
    X = S.xi.hamiltonian_field
    D = S.D
    h = S.ode_step
    target = x0 + D
    u = X(x0)
    u = u / np.sum(u * u, axis=-1, keepdims=True)
    g = lambda y: np.sum((y - target) * u, axis=-1)
    near = max(0.05, 20 * h * float(np.max(np.linalg.norm(X(x0), axis=-1))))
    M = x0.shape[0]
    y = x0.copy()
    gy = g(y)
    t = 0.0
    done = np.zeros(M, dtype=bool)
    left = np.zeros(M, dtype=bool)
    t_last = np.zeros(M)
    y_last = x0.copy()
    tau = np.zeros(M)
    while not done.all():
        if t > t_max:
            raise StructuralError("level curve did not return to its displaced start within t_max")
        y_new = rk4_step(X, y, h)
        g_new = g(y_new)
        dist_target = np.max(np.abs(y_new - target), axis=-1)
        dist_start = np.max(np.abs(y_new - x0), axis=-1)
        left |= dist_start > near
        closed = left & (dist_start < 2 * h) & ~done
        if closed.any():
            raise StructuralError("level curve closes up before reaching the displaced start")
        cross = (~done) & (gy < 0) & (g_new >= 0) & (dist_target < near)
        t_last = np.where(cross, t, t_last)
        y_last = np.where(cross[:, None], y, y_last)
        done |= cross
        if cross.any():
            # initial partial step from linear interpolation of g
            denom = np.where(cross, g_new - gy, 1.0)
            tau = np.where(cross, -h * gy / denom, tau)
        y, gy = y_new, g_new
        t += h
    # Newton on the partial step from the last pre-crossing point
    for _ in range(12):
        yt = rk4_step(X, y_last, tau)
        step = -g(yt) / np.sum(u * X(yt), axis=-1)
        tau = tau + step
        if np.max(np.abs(step)) < 1e-15:
            break
    yt = rk4_step(X, y_last, tau)
    if np.max(np.abs(yt - target)) > 1e-8:
        raise StructuralError("return-time refinement did not reach the displaced start")
    return t_last + tau


# --- results ------------------------------------------------------------

@dataclass
class ConjugacyResult:
    """Sampled straightening ``psi`` with ``f o psi = psi o T_{alpha, phi, epsilon}``.

    ``psi_grid[i, j]`` is the lift of ``psi(s_grid[i], t_grid[j])``.
    ``tau_period`` is the signed flow time (before rescaling) after which
    ``psi(s, tau) = psi(s, 0) + (p2, -p1)``.
    """

    psi_grid: np.ndarray
    s_grid: np.ndarray
    t_grid: np.ndarray
    phi: CircleFunction
    epsilon: int
    tau_period: float
    tau_spread: float
    p: tuple[int, int]
    q: tuple[int, int]
    alpha: float
    level_shift: int
    residual_sup: float
    phi_fit_error: float
    xi: FirstIntegral
    ode_step: float
    tolerance: float = DEFAULT_RESIDUAL_TOL
    phi_samples: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.residual_sup) and self.residual_sup <= self.tolerance)

    @property
    def _straightener(self) -> _Straightener:
        return _Straightener(self.xi, self.ode_step, abs(self.tau_period))

    def psi(self, s, t) -> np.ndarray:
        """Evaluate ``psi`` off the grid (any real ``s``, ``t``) by re-integration."""
        return self._straightener.psi(s, t)

    def normal_form(self, x) -> np.ndarray:
        """``T_{alpha, phi, epsilon}`` on lifted ``(s, t)`` points."""
        x = np.asarray(x, dtype=float)
        s, t = x[..., 0], x[..., 1]
        return np.stack([s + self.alpha, self.epsilon * t + self.phi(s)], axis=-1)

    def to_dict(self, include_grid: bool = True) -> dict:
        d = {
            "phi": self.phi.to_dict(),
            "epsilon": self.epsilon,
            "tau_period": self.tau_period,
            "tau_spread": self.tau_spread,
            "p": list(self.p),
            "q": list(self.q),
            "alpha": self.alpha,
            "level_shift": self.level_shift,
            "residual_sup": self.residual_sup,
            "phi_fit_error": self.phi_fit_error,
            "ode_step": self.ode_step,
            "tolerance": self.tolerance,
            "ok": self.ok,
            "xi": self.xi.to_dict(),
            "grid_shape": list(self.psi_grid.shape[:2]),
        }
        if include_grid:
            d["s_grid"] = self.s_grid.tolist()
            d["t_grid"] = self.t_grid.tolist()
            d["psi_grid"] = self.psi_grid.tolist()
        return d

    def to_json(self, include_grid: bool = True) -> str:
        return json.dumps(self.to_dict(include_grid), sort_keys=True, indent=2)


def _spot_grid(n: int, offset: float = 0.37) -> np.ndarray:
    u = (np.arange(n) + offset) / n
    X1, X2 = np.meshgrid(u, u, indexing="ij")
    return np.stack([X1.ravel(), X2.ravel()], axis=-1)


def check_first_integral(f: TorusMap, xi: FirstIntegral, alpha: float,
                         tol: float = DEFAULT_HYPOTHESIS_TOL, n: int = 16) -> int:
    """Verify ``xi o f - xi - alpha`` is one integer ``k`` on a spot grid; return ``k``.

    Raises
    ------
    HypothesisFailure
        If the defect is not within ``tol`` of a common integer.
    """
    pts = _spot_grid(n)
    defect = xi(f.step(pts)) - xi(pts) - alpha
    k = np.round(defect)
    err = float(np.max(np.abs(defect - k)))
    if err > tol or np.ptp(k) != 0:
        raise HypothesisFailure(f"xi(f(x)) - xi(x) - alpha is not an integer: defect {err:.3e}")
    return int(k[0])


def check_area_preserving(f: TorusMap, tol: float = 1e-6, n: int = 8) -> int:
    """Sign of ``det Df`` if ``|det Df| = 1`` within ``tol`` on a spot grid."""
    det = numeric_jacobian_det(f, _spot_grid(n, 0.21))
    if np.max(np.abs(np.abs(det) - 1.0)) > tol or np.ptp(np.sign(det)) != 0:
        raise HypothesisFailure("map is not area-preserving on the spot-check grid")
    return int(np.sign(det[0]))


def fit_circle_function(samples: np.ndarray, degree: int, max_harmonics: Optional[int] = None) -> CircleFunction:
    """Trigonometric interpolation of ``samples[i] - degree*s_i`` at ``s_i = i/N``."""
    N = samples.shape[0]
    s = np.arange(N) / N
    c = np.fft.rfft(samples - degree * s) / N
    K = N // 2 - 1 if N % 2 == 0 else N // 2
    if max_harmonics is not None:
        K = min(K, max_harmonics)
    cos = 2 * c.real[1:K + 1]
    sin = -2 * c.imag[1:K + 1]
    return CircleFunction(degree, tuple(cos), tuple(sin), float(c.real[0]))


def _shifted(P: np.ndarray, k: int, axis: int, period: np.ndarray) -> np.ndarray:
    """``P`` at index ``i + k`` along ``axis`` using ``P[i + N] = P[i] + period``."""
    N = P.shape[axis]
    idx = np.arange(N) + k
    wraps = np.floor_divide(idx, N)
    out = np.take(P, np.mod(idx, N), axis=axis)
    shape = [1, 1, 1]
    shape[axis] = N
    return out + wraps.reshape(shape) * period


def det_sup_fd(result: ConjugacyResult) -> float:
    """``sup |det D psi - 1|`` by fourth-order periodic differences of ``psi_grid``."""
    P = result.psi_grid
    Ns, Nt = P.shape[:2]
    q = np.array(result.q, dtype=float)
    D = np.array(result.xi.displacement, dtype=float)

    def deriv(axis, period, h):
        return (-_shifted(P, 2, axis, period) + 8 * _shifted(P, 1, axis, period)
                - 8 * _shifted(P, -1, axis, period) + _shifted(P, -2, axis, period)) / (12 * h)

    ds = deriv(0, q, 1.0 / Ns)
    dt = deriv(1, D, 1.0 / Nt)
    det = ds[..., 0] * dt[..., 1] - ds[..., 1] * dt[..., 0]
    return float(np.max(np.abs(det - 1.0)))


def _residual(f: TorusMap, result: ConjugacyResult, S: _Straightener, s, t, P) -> np.ndarray:
    lhs = f.step(P)
    rhs = S.psi(s + result.alpha, result.epsilon * t + result.phi(s))
    return torus_distance(lhs, rhs)


def build_conjugacy(f, xi: FirstIntegral, alpha: float, grid_sizes: Sequence[int] = DEFAULT_GRID,
                    ode_step: float = DEFAULT_ODE_STEP, *,
                    hypothesis_tol: float = DEFAULT_HYPOTHESIS_TOL,
                    residual_tol: float = DEFAULT_RESIDUAL_TOL,
                    tau_tol: float = 1e-6, t_max: float = 100.0,
                    max_harmonics: Optional[int] = None) -> ConjugacyResult:
    """Construct ``psi`` with ``f o psi = psi o T_{alpha, phi, epsilon}``.

    Parameters
    ----------
    f : TorusMap or planar system spec
        Area-preserving map given on lifts.
    xi : FirstIntegral
        Must satisfy ``xi o f = xi + alpha`` (mod 1) within ``hypothesis_tol``.
    grid_sizes : (Ns, Nt)
        Sampling lattice ``s_i = i/Ns``, ``t_j = j/Nt``.
    ode_step : float
        RK4 step for every integration.

    Raises
    ------
    HypothesisFailure
        The first-integral identity or area preservation fails on the spot grid.
    StructuralError
        Return times vary with ``s`` by more than ``tau_tol``, a level curve is
        closed, or a point cannot be located on its level curve.
    """
    f = as_map(f)
    Ns, Nt = (int(v) for v in grid_sizes)
    if Ns < 4 or Nt < 4:
        raise InputError("grid sizes must be at least 4")
    if not ode_step > 0:
        raise InputError("ode_step must be positive")
    xi = xi.normalized()
    level_shift = check_first_integral(f, xi, alpha, hypothesis_tol)
    check_area_preserving(f)
    if xi.min_grad_norm() <= 0:
        raise StructuralError("gradient of the first integral vanishes")
    q = np.array(xi.q, dtype=float)

    s_grid = np.arange(Ns) / Ns
    t_grid = np.arange(Nt) / Nt
    S0 = _Straightener(xi, ode_step)
    base = S0.gamma(s_grid)
    times = _return_times(S0, base, t_max)
    spread = float(np.ptp(times))
    if spread > tau_tol:
        raise StructuralError(f"return time varies along the transversal by {spread:.3e}")
    t_star = float(np.mean(times))
    S = _Straightener(xi, ode_step, t_star)

    # sample psi on the grid, recording every m-th step
    m = max(1, int(math.ceil(t_star / (Nt * ode_step))))
    dt = t_star / (Nt * m)
    y = base.copy()
    cols = []
    for j in range(Nt):
        cols.append(y)
        for _ in range(m):
            y = rk4_step(xi.hamiltonian_field, y, dt)
    psi_grid = np.stack(cols, axis=1)

    # phi(s) = eta(s, 0) with f(psi(s, 0)) = psi(s + alpha, eta); include s = 1 for the degree
    s_ext = np.arange(Ns + 1) / Ns
    z = f.step(S.gamma(s_ext)) - level_shift * q
    phi_samples = S.locate(z, s_ext + alpha)
    deg_real = phi_samples[-1] - phi_samples[0]
    degree = int(round(deg_real))
    if abs(deg_real - degree) > 1e-6:
        raise StructuralError(f"extracted circle map has non-integer degree {deg_real:.6f}")
    phi = fit_circle_function(phi_samples[:Ns], degree, max_harmonics)
    mid = (np.arange(Ns) + 0.5) / Ns
    z_mid = f.step(S.gamma(mid)) - level_shift * q
    phi_mid = S.locate(z_mid, mid + alpha)
    phi_fit_error = float(np.max(np.abs(phi(mid) - phi_mid)))

    # orientation: eta(s, 1/Nt) - eta(s, 0) = eps / Nt
    z1 = f.step(psi_grid[:, 1]) - level_shift * q
    diff = (S.locate(z1, s_grid + alpha) - phi_samples[:Ns]) * Nt
    eps = 1 if np.median(diff) > 0 else -1
    if np.max(np.abs(diff - eps)) > 1e-3:
        raise StructuralError("fibre map is not a rigid rotation/reflection in straightened time")

    result = ConjugacyResult(psi_grid=psi_grid, s_grid=s_grid, t_grid=t_grid, phi=phi, epsilon=eps,
                             tau_period=-t_star, tau_spread=spread, p=xi.p, q=xi.q, alpha=float(alpha),
                             level_shift=level_shift, residual_sup=float("nan"),
                             phi_fit_error=phi_fit_error, xi=xi, ode_step=ode_step,
                             tolerance=residual_tol, phi_samples=phi_samples)
    Sg, Tg = np.meshgrid(s_grid, t_grid, indexing="ij")
    res = _residual(f, result, S, Sg, Tg, psi_grid)
    result.residual_sup = float(np.max(res))
    return result


@dataclass(frozen=True)
class VerificationReport:
    """``residual_sup`` is the larger of the stored-grid and offset-grid residuals."""

    residual_sup: float
    residual_stored: float
    residual_offset: float
    level_sup: float
    det_sup: float

    def to_dict(self) -> dict:
        return {"residual_sup": self.residual_sup, "residual_stored": self.residual_stored,
                "residual_offset": self.residual_offset, "level_sup": self.level_sup,
                "det_sup": self.det_sup}


def verify_conjugacy(f, result: ConjugacyResult, verification_grid: Optional[Sequence[int]] = None) -> VerificationReport:
    """Recheck ``f o psi = psi o T`` on the stored grid and on an offset grid.

    The offset grid has ``verification_grid = (Ms, Mt)`` points (default 1.5x
    the stored grid) shifted by half a cell.  Also reports
    ``sup |xi(psi(s, t)) - s|`` and ``sup |det D psi - 1|``.
    """
    f = as_map(f)
    S = result._straightener
    Ns, Nt = result.psi_grid.shape[:2]
    Sg, Tg = np.meshgrid(result.s_grid, result.t_grid, indexing="ij")
    stored = _residual(f, result, S, Sg, Tg, result.psi_grid)
    level = np.abs(result.xi(result.psi_grid) - Sg)
    if verification_grid is None:
        verification_grid = (Ns + Ns // 2, Nt + Nt // 2)
    Ms, Mt = (int(v) for v in verification_grid)
    so = (np.arange(Ms) + 0.5) / Ms
    to = (np.arange(Mt) + 0.5) / Mt
    So, To = np.meshgrid(so, to, indexing="ij")
    P = S.psi(So, To)
    offset = _residual(f, result, S, So, To, P)
    level_off = np.abs(result.xi(P) - So)
    r_stored, r_off = float(np.max(stored)), float(np.max(offset))
    return VerificationReport(max(r_stored, r_off), r_stored, r_off,
                              float(max(level.max(), level_off.max())), det_sup_fd(result))
