"""Structured torus maps: skew products over rotations, automorphisms, random and special-flow data.

All maps act on lifts (points of ``R^d``) so that Birkhoff sums of functions
carrying a topological degree are exact; :func:`evaluate` and :func:`iterate`
reduce to ``[0, 1)^d`` only on output.  Points are arrays whose last axis is
the coordinate axis; leading axes are batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .errors import InputError
from .torus import CircleFunction, Torus2Function, as_integer_matrix, frac, reduce


def _points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise InputError(f"expected points of dimension {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("points must be finite")
    return x


@dataclass(frozen=True)
class Rotation:
    """Circle rotation ``x -> x + alpha``; used to drive one-dimensional Birkhoff sums."""

    alpha: float
    dim = 1

    def step(self, x):
        return x + self.alpha

    def inverse_step(self, x):
        return x - self.alpha

    def jacobian(self, x):
        return np.ones(x.shape[:-1] + (1, 1))


class _PlanarSkew:
    """Shared formulas for ``(x1, x2) -> (x1 + alpha, epsilon*x2 + phi(x1))``."""

    dim = 2

    def step(self, x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x1 + self.alpha, self.epsilon * x2 + self.phi(x1)], axis=-1)

    def inverse_step(self, x):
        y1 = x[..., 0] - self.alpha
        y2 = self.epsilon * (x[..., 1] - self.phi(y1))
        return np.stack([y1, y2], axis=-1)

    def jacobian(self, x):
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0
        J[..., 1, 0] = self.phi.derivative(x[..., 0])
        J[..., 1, 1] = self.epsilon
        return J


@dataclass(frozen=True)
class Anzai(_PlanarSkew):
    """Anzai skew product ``(x1, x2) -> (x1 + alpha, x2 + phi(x1))``."""

    alpha: float
    phi: CircleFunction
    epsilon = 1


@dataclass(frozen=True)
class SkewFlip(_PlanarSkew):
    """``(x1, x2) -> (x1 + alpha, epsilon*x2 + phi(x1))`` on the 2-torus."""

    alpha: float
    epsilon: int
    phi: CircleFunction

    def __post_init__(self):
        if self.epsilon not in (-1, 1):
            raise InputError(f"epsilon must be +-1, got {self.epsilon!r}")


@dataclass(frozen=True)
class TwoStep:
    """``(x1, x2, x3) -> (x1 + alpha, flip*x2 + beta(x1), x3 + gamma(x1, x2))`` on the 3-torus."""

    alpha: float
    beta: CircleFunction
    gamma: Torus2Function
    flip: int = 1
    dim = 3

    def __post_init__(self):
        if self.flip not in (-1, 1):
            raise InputError(f"flip must be +-1, got {self.flip!r}")

    def step(self, x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([x1 + self.alpha, self.flip * x2 + self.beta(x1), x3 + self.gamma(x1, x2)], axis=-1)

    def inverse_step(self, x):
        y1 = x[..., 0] - self.alpha
        y2 = self.flip * (x[..., 1] - self.beta(y1))
        y3 = x[..., 2] - self.gamma(y1, y2)
        return np.stack([y1, y2, y3], axis=-1)

    def jacobian(self, x):
        x1, x2 = x[..., 0], x[..., 1]
        g1, g2 = self.gamma.grad(x1, x2)
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 0] = self.beta.derivative(x1)
        J[..., 1, 1] = self.flip
        J[..., 2, 0] = g1
        J[..., 2, 1] = g2
        J[..., 2, 2] = 1.0
        return J


@dataclass(frozen=True)
class Automorphism:
    """Linear torus automorphism ``x -> N x`` with ``N`` in ``GL_d(Z)`` (d = 2 or 3)."""

    N: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        arr = as_integer_matrix(self.N)
        if arr.shape[0] not in (2, 3):
            raise InputError("automorphisms are supported on the 2- and 3-torus")
        object.__setattr__(self, "N", tuple(tuple(int(v) for v in row) for row in arr))

    @property
    def dim(self) -> int:
        return len(self.N)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.N, dtype=float)

    @property
    def inverse_matrix(self) -> np.ndarray:
        return np.round(np.linalg.inv(self.matrix))

    def step(self, x):
        return x @ self.matrix.T

    def inverse_step(self, x):
        return x @ self.inverse_matrix.T

    def jacobian(self, x):
        return np.broadcast_to(self.matrix, x.shape[:-1] + (self.dim, self.dim)).copy()


SystemSpec = Union[Anzai, SkewFlip, TwoStep, Automorphism]


# --- orbit evaluation ---------------------------------------------------

def evaluate(spec, x) -> np.ndarray:
    """One application of the map, reduced to ``[0, 1)^d``."""
    x = _points(x, spec.dim)
    return reduce(spec.step(x))


def jacobian(spec, x) -> np.ndarray:
    """Exact Jacobian matrix at ``x`` (batch shape preserved)."""
    return spec.jacobian(_points(x, spec.dim))


def _has_rotation_base(spec) -> bool:
    return isinstance(spec, (_PlanarSkew, TwoStep, Rotation))


def trajectory(spec, x, n: int) -> Iterator[np.ndarray]:
    """Yield lifted orbit points ``x_0, x_1, ..., x_n`` (``n + 1`` arrays).

    For skew products the base coordinate is recomputed as ``x1 + k*alpha`` at
    every step so that no rounding accumulates in the rotation.  Negative
    ``n`` walks backwards using the closed-form inverse.
    """
    x = _points(x, spec.dim)
    cur = x.copy()
    yield cur
    base = x[..., 0]
    sgn = 1 if n >= 0 else -1
    move = spec.step if n >= 0 else spec.inverse_step
    for k in range(1, abs(n) + 1):
        cur = move(cur)
        if _has_rotation_base(spec):
            cur[..., 0] = base + sgn * k * spec.alpha
        yield cur


def orbit_lift(spec, x, n: int) -> np.ndarray:
    """Lift of ``f^n(x)`` without reduction."""
    last = None
    for last in trajectory(spec, x, n):
        pass
    return last


def iterate(spec, x, n: int) -> np.ndarray:
    """``f^n(x)`` reduced to ``[0, 1)^d``; ``n`` may be negative."""
    return reduce(orbit_lift(spec, x, n))


def two_step_closed_form(spec: TwoStep, x, n: int) -> np.ndarray:
    """Lift of ``T^n x = (x1 + n alpha, x2 + beta^(n)(x1), x3 + gamma^(n)(x1, x2))`` for ``flip = +1``.

    Sums are taken along the planar factor ``(x1, x2) -> (x1 + alpha, x2 + beta(x1))``.
    """
    if spec.flip != 1:
        raise InputError("closed form requires flip = +1")
    x = _points(x, 3)
    base = Anzai(spec.alpha, spec.beta)
    planar = x[..., :2]
    beta_n = birkhoff_sum(spec.beta, Rotation(spec.alpha), x[..., :1], n, reduce_args=False)
    gamma_n = birkhoff_sum(spec.gamma, base, planar, n, reduce_args=False)
    return np.stack([x[..., 0] + n * spec.alpha, x[..., 1] + beta_n, x[..., 2] + gamma_n], axis=-1)


class _Compensated:
    """Vectorised Neumaier summation."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, v):
        t = self.s + v
        big = np.abs(self.s) >= np.abs(v)
        self.c += np.where(big, (self.s - t) + v, (v - t) + self.s)
        self.s = t

    @property
    def total(self):
        return self.s + self.c


def _evaluate_observable(f, pts, reduce_args: bool):
    if isinstance(f, CircleFunction):
        u = pts[..., 0]
        return f(frac(u)) if reduce_args else f(u)
    if isinstance(f, Torus2Function):
        u, v = pts[..., 0], pts[..., 1]
        return f(frac(u), frac(v)) if reduce_args else f(u, v)
    if callable(f):
        return f(pts)
    raise InputError(f"unsupported observable {type(f).__name__}")


def birkhoff_sum(f, spec, x, n: int, *, reduce_args: bool = True) -> np.ndarray:
    """``sum_{k<n} f(f^k x)`` along the orbit driven by ``spec``.

    ``f`` is a CircleFunction (read on the first coordinate), a Torus2Function
    (first two coordinates) or a callable on point arrays.  With
    ``reduce_args`` (default) the observable sees reduced coordinates, which
    is the right reading for periodic observables; pass False to evaluate on
    the lift.  Uses compensated summation when ``n > 10**4``.
    """
    if n < 0:
        raise InputError("n must be >= 0")
    x = _points(x, spec.dim)
    acc = _Compensated(x.shape[:-1]) if n > 10**4 else None
    total = np.zeros(x.shape[:-1])
    for k, pts in enumerate(trajectory(spec, x, n)):
        if k == n:
            break
        v = _evaluate_observable(f, pts, reduce_args)
        if acc is not None:
            acc.add(v)
        else:
            total = total + v
    return acc.total if acc is not None else total


# --- random Anzai -------------------------------------------------------

@dataclass(frozen=True)
class RandomAnzaiSpec:
    """Random Anzai skew product over the base rotation ``omega -> omega + theta``.

    The fibre map is ``(x1, x2) -> (x1 + alpha(omega), x2 + phi(omega, x1))`` with
    ``phi(omega, x) = degree*x + constant(omega) + sum_k cos_k(omega) cos 2pi k x + sin_k(omega) sin 2pi k x``.
    """

    theta: float
    alpha: CircleFunction
    degree: int = 0
    constant: CircleFunction = field(default_factory=CircleFunction)
    cos: tuple[CircleFunction, ...] = ()
    sin: tuple[CircleFunction, ...] = ()

    def __post_init__(self):
        if self.alpha.degree != 0:
            raise InputError("alpha(omega) must be a periodic function of omega")
        object.__setattr__(self, "cos", tuple(self.cos))
        object.__setattr__(self, "sin", tuple(self.sin))

    def phi(self, omega, x):
        omega = np.asarray(omega, dtype=float)
        x = np.asarray(x, dtype=float)
        u = 2 * np.pi * frac(x)
        out = self.degree * x + self.constant(omega)
        for k, c in enumerate(self.cos, start=1):
            out = out + c(omega) * np.cos(k * u)
        for k, s in enumerate(self.sin, start=1):
            out = out + s(omega) * np.sin(k * u)
        return out

    def dphi(self, omega, x):
        omega = np.asarray(omega, dtype=float)
        u = 2 * np.pi * frac(np.asarray(x, dtype=float))
        out = np.full(np.broadcast(omega, u).shape, float(self.degree))
        for k, c in enumerate(self.cos, start=1):
            out = out - 2 * np.pi * k * c(omega) * np.sin(k * u)
        for k, s in enumerate(self.sin, start=1):
            out = out + 2 * np.pi * k * s(omega) * np.cos(k * u)
        return out

    def mean_degree(self) -> float:
        return float(self.degree)


def random_step(spec: RandomAnzaiSpec, state):
    """Advance ``(omega, x1, x2)`` by one step of the random system (reduced output)."""
    state = np.asarray(state, dtype=float)
    w, x1, x2 = state[..., 0], state[..., 1], state[..., 2]
    out = np.stack([w + spec.theta, x1 + spec.alpha(w), x2 + spec.phi(w, x1)], axis=-1)
    return reduce(out)


# --- special flow data --------------------------------------------------

@dataclass(frozen=True)
class SpecialFlowSpec:
    """Roof ``b > 0`` with mean one over the rotation by ``a``, plus the commuting skew data ``(alpha, beta)``."""

    a: float
    b: CircleFunction
    alpha: float
    beta: CircleFunction = field(default_factory=CircleFunction)
    check_points: int = 4096

    def __post_init__(self):
        if self.b.degree != 0 or self.beta.degree != 0:
            raise InputError("roof b and cocycle beta must have degree 0")
        if abs(self.b.mean() - 1.0) > 1e-12:
            raise InputError(f"roof must have mean 1, got {self.b.mean()}")
        if self.roof_bounds()[0] <= 0:
            raise InputError("roof function must be strictly positive")

    def roof_bounds(self) -> tuple[float, float]:
        """``(min b, max b)`` sampled on a fine grid."""
        grid = np.arange(self.check_points) / self.check_points
        vals = self.b(grid)
        return float(vals.min()), float(vals.max())


def signed_birkhoff(f: CircleFunction, alpha: float, x, n) -> np.ndarray:
    """Birkhoff sums ``f^(n)(x)`` under ``x -> x + alpha`` for integer arrays ``n`` of any sign.

    Uses ``f^(0) = 0`` and ``f^(-m)(x) = -sum_{k=1}^{m} f(x - k alpha)``.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n)
    x, n = np.broadcast_arrays(x, n)
    out = np.zeros(x.shape)
    for k in range(int(np.max(np.abs(n), initial=0))):
        pos = n > k
        neg = -n > k
        if pos.any():
            out = out + np.where(pos, f(frac(x + k * alpha)), 0.0)
        if neg.any():
            out = out - np.where(neg, f(frac(x - (k + 1) * alpha)), 0.0)
    return out


def return_index(spec: SpecialFlowSpec, x1, x2) -> np.ndarray:
    """The integer ``n`` with ``b^(n)(x1) <= x2 < b^(n+1)(x1)`` (Birkhoff sums under rotation by ``a``)."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    n = np.zeros(x1.shape, dtype=np.int64)
    lo = np.zeros(x1.shape)
    b, a = spec.b, spec.a
    # forward: advance while x2 >= b^(n+1)
    active = x2 >= 0
    while active.any():
        nxt = lo + b(frac(x1 + n * a))
        move = active & (x2 >= nxt)
        lo = np.where(move, nxt, lo)
        n = n + move
        active = move
    # backward: retreat while x2 < b^(n)
    active = x2 < lo
    while active.any():
        prv = lo - b(frac(x1 + (n - 1) * a))
        lo = np.where(active, prv, lo)
        n = n - active
        active = active & (x2 < lo)
    return n
