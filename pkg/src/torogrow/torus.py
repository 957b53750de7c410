"""Torus arithmetic and trigonometric-polynomial maps of the circle and 2-torus.

Points of the d-torus are real arrays whose last axis has length d.  Functions
``T -> T`` and ``T^2 -> T`` are stored as an integer linear part (the
topological degree) plus a finite trigonometric polynomial, which makes
degrees and derivatives exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, StructuralError

TWO_PI = 2.0 * np.pi

#: Default number of harmonics per axis accepted from configuration files.
MAX_HARMONICS = 16


def reduce(x) -> np.ndarray:
    """Reduce real coordinates to the fundamental domain ``[0, 1)``.

    >>> reduce([1.25, -0.25])
    array([0.25, 0.75])
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("cannot reduce non-finite coordinates")
    y = x - np.floor(x)
    # floor can round x - floor(x) up to exactly 1.0 for tiny negative x
    return np.where(y >= 1.0, 0.0, y)


def frac(x):
    """Fractional part without validation; used on hot paths."""
    y = x - np.floor(x)
    return np.where(y >= 1.0, 0.0, y)


def _as_coeffs(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class CircleFunction:
    """Lift of a circle map ``x -> degree*x + constant + sum_k (a_k cos 2pi k x + b_k sin 2pi k x)``.

    ``cos[k-1]`` and ``sin[k-1]`` hold the coefficients of frequency ``k``.
    A degree-0 instance is an ordinary periodic real function.
    """

    degree: int = 0
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        if int(self.degree) != self.degree:
            raise InputError(f"degree must be an integer, got {self.degree!r}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "cos", _as_coeffs(self.cos))
        object.__setattr__(self, "sin", _as_coeffs(self.sin))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def const(cls, value: float) -> CircleFunction:
        return cls(constant=value)

    @property
    def n_harmonics(self) -> int:
        return max(len(self.cos), len(self.sin))

    @property
    def is_constant(self) -> bool:
        return self.degree == 0 and not any(self.cos) and not any(self.sin)

    def _coeff_arrays(self):
        n = self.n_harmonics
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.cos)] = self.cos
        b[: len(self.sin)] = self.sin
        return np.arange(1, n + 1), a, b

    def periodic(self, x):
        """The 1-periodic part ``value(x) - degree*x``."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.constant)
        if self.n_harmonics:
            u = TWO_PI * frac(x)
            k, a, b = self._coeff_arrays()
            for kk, ak, bk in zip(k, a, b):
                if ak:
                    out = out + ak * np.cos(kk * u)
                if bk:
                    out = out + bk * np.sin(kk * u)
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree * x + self.periodic(x)

    def derivative(self, x):
        """Exact derivative at ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.degree))
        if self.n_harmonics:
            u = TWO_PI * frac(x)
            k, a, b = self._coeff_arrays()
            for kk, ak, bk in zip(k, a, b):
                w = TWO_PI * kk
                if ak:
                    out = out - ak * w * np.sin(kk * u)
                if bk:
                    out = out + bk * w * np.cos(kk * u)
        return out

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        if self.n_harmonics:
            u = TWO_PI * frac(x)
            k, a, b = self._coeff_arrays()
            for kk, ak, bk in zip(k, a, b):
                w2 = (TWO_PI * kk) ** 2
                out = out - w2 * (ak * np.cos(kk * u) + bk * np.sin(kk * u))
        return out

    def deriv(self) -> CircleFunction:
        """Derivative as a new (degree 0) CircleFunction."""
        k, a, b = self._coeff_arrays()
        w = TWO_PI * k
        return CircleFunction(0, cos=b * w, sin=-a * w, constant=self.degree)

    def __neg__(self) -> CircleFunction:
        return CircleFunction(-self.degree, [-c for c in self.cos], [-s for s in self.sin], -self.constant)

    def scaled(self, factor: float) -> CircleFunction:
        """``factor * self``; only allowed when the result keeps an integer degree."""
        d = factor * self.degree
        if d != int(d):
            raise InputError("scaling would produce a non-integer degree")
        return CircleFunction(int(d), [factor * c for c in self.cos], [factor * s for s in self.sin],
                              factor * self.constant)

    def mean(self) -> float:
        """Mean of the periodic part over one period."""
        return self.constant

    def sup_bounds(self) -> tuple[float, float]:
        """Crude lower/upper bounds for a degree-0 function (constant -/+ sum of |coeffs|)."""
        r = sum(abs(c) for c in self.cos) + sum(abs(s) for s in self.sin)
        return self.constant - r, self.constant + r

    def to_dict(self) -> dict:
        d = {"degree": self.degree, "cos": list(self.cos), "sin": list(self.sin)}
        if self.constant:
            d["constant"] = self.constant
        return d


def circle_eval(f: CircleFunction, x):
    return f(x)


def circle_deriv(f: CircleFunction, x):
    return f.derivative(x)


@dataclass(frozen=True)
class Torus2Function:
    """Lift of a map ``T^2 -> T``.

    ``value(x1, x2) = d1*x1 + d2*x2 + constant + sum a cos 2pi(k1 x1 + k2 x2) + b sin 2pi(k1 x1 + k2 x2)``
    with ``terms`` a tuple of ``(k1, k2, a, b)``.
    """

    degrees: tuple[int, int] = (0, 0)
    terms: tuple[tuple[int, int, float, float], ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        d1, d2 = self.degrees
        if int(d1) != d1 or int(d2) != d2:
            raise InputError(f"degrees must be integers, got {self.degrees!r}")
        object.__setattr__(self, "degrees", (int(d1), int(d2)))
        clean = []
        for t in self.terms:
            k1, k2, a, b = t
            if int(k1) != k1 or int(k2) != k2:
                raise InputError(f"frequencies must be integers, got {(k1, k2)!r}")
            clean.append((int(k1), int(k2), float(a), float(b)))
        object.__setattr__(self, "terms", tuple(clean))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_circle(cls, f: CircleFunction, axis: int = 0) -> Torus2Function:
        """Embed a circle function of ``x1`` (axis 0) or ``x2`` (axis 1)."""
        terms = []
        for k in range(1, f.n_harmonics + 1):
            a = f.cos[k - 1] if k <= len(f.cos) else 0.0
            b = f.sin[k - 1] if k <= len(f.sin) else 0.0
            terms.append((k, 0, a, b) if axis == 0 else (0, k, a, b))
        deg = (f.degree, 0) if axis == 0 else (0, f.degree)
        return cls(deg, tuple(terms), f.constant)

    @property
    def depends_only_on_first(self) -> bool:
        return self.degrees[1] == 0 and all(k2 == 0 or (a == 0 and b == 0) for _, k2, a, b in self.terms)

    @property
    def is_periodic(self) -> bool:
        return self.degrees == (0, 0)

    def _phases(self, x1, x2):
        # reduce before multiplying by frequencies to keep phases accurate on long lifts
        u1 = TWO_PI * frac(np.asarray(x1, dtype=float))
        u2 = TWO_PI * frac(np.asarray(x2, dtype=float))
        for k1, k2, a, b in self.terms:
            if a == 0.0 and b == 0.0:
                continue
            yield k1, k2, a, b, k1 * u1 + k2 * u2

    def periodic(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        out = np.full(x1.shape, self.constant)
        for _, _, a, b, ph in self._phases(x1, x2):
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return out

    def __call__(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        d1, d2 = self.degrees
        return d1 * x1 + d2 * x2 + self.periodic(x1, x2)

    def grad(self, x1, x2):
        """Exact partial derivatives ``(d/dx1, d/dx2)``."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        g1 = np.full(x1.shape, float(self.degrees[0]))
        g2 = np.full(x1.shape, float(self.degrees[1]))
        for k1, k2, a, b, ph in self._phases(x1, x2):
            common = TWO_PI * (b * np.cos(ph) - a * np.sin(ph))
            if k1:
                g1 = g1 + k1 * common
            if k2:
                g2 = g2 + k2 * common
        return g1, g2

    def dx1(self, x1, x2):
        return self.grad(x1, x2)[0]

    def dx2(self, x1, x2):
        return self.grad(x1, x2)[1]

    def hessian(self, x1, x2):
        """Second partials ``(f_11, f_12, f_22)``."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        h11 = np.zeros(x1.shape)
        h12 = np.zeros(x1.shape)
        h22 = np.zeros(x1.shape)
        for k1, k2, a, b, ph in self._phases(x1, x2):
            c = -(TWO_PI**2) * (a * np.cos(ph) + b * np.sin(ph))
            h11 = h11 + k1 * k1 * c
            h12 = h12 + k1 * k2 * c
            h22 = h22 + k2 * k2 * c
        return h11, h12, h22

    def shifted(self, delta: float) -> Torus2Function:
        return Torus2Function(self.degrees, self.terms, self.constant + delta)

    def to_dict(self) -> dict:
        d = {"degrees": list(self.degrees),
             "terms": [[k1, k2, a, b] for k1, k2, a, b in self.terms]}
        if self.constant:
            d["constant"] = self.constant
        return d


# --- integer linear parts -------------------------------------------------

def as_integer_matrix(N, *, unimodular: bool = True) -> np.ndarray:
    """Validate an integer square matrix (optionally with determinant +-1)."""
    arr = np.asarray(N)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.astype(float))) or np.any(np.round(arr) != arr):
        raise InputError("matrix entries must be integers")
    arr = np.round(arr).astype(np.int64)
    if unimodular:
        det = int(round(np.linalg.det(arr.astype(float))))
        if det not in (-1, 1):
            raise StructuralError(f"linear part must have determinant +-1, got {det}")
    return arr


def integer_matrix_power(N, n: int) -> np.ndarray:
    """Exact ``N**n`` for ``n >= 0`` using Python integers (no overflow)."""
    M = [[int(v) for v in row] for row in np.asarray(N)]
    d = len(M)

    def mul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(d)) for j in range(d)] for i in range(d)]

    result = [[int(i == j) for j in range(d)] for i in range(d)]
    base = M
    while n > 0:
        if n & 1:
            result = mul(result, base)
        base = mul(base, base)
        n >>= 1
    return np.array(result, dtype=object)


def unipotent_power_growth(K) -> tuple[float, np.ndarray]:
    """Growth exponent and limit of ``n**-tau K**n`` for lower unitriangular integer ``K``.

    Uses ``(K^n)_21 = n K_21``, ``(K^n)_32 = n K_32`` and
    ``(K^n)_31 = n K_31 + n(n-1)/2 K_21 K_32``.

    Returns
    -------
    tau : float
        2 if ``K21*K32 != 0``, 1 if some strictly-lower entry is nonzero, 0 for the identity.
    limit : ndarray, shape (3, 3)
    """
    K = as_integer_matrix(K, unimodular=False)
    if K.shape != (3, 3):
        raise InputError("expected a 3x3 matrix")
    if np.any(np.diag(K) != 1) or K[0, 1] or K[0, 2] or K[1, 2]:
        raise StructuralError("matrix is not lower unitriangular")
    k21, k31, k32 = int(K[1, 0]), int(K[2, 0]), int(K[2, 1])
    limit = np.zeros((3, 3))
    if k21 * k32 != 0:
        limit[2, 0] = k21 * k32 / 2.0
        return 2.0, limit
    if k21 or k31 or k32:
        limit[1, 0] = k21
        limit[2, 0] = k31
        limit[2, 1] = k32
        return 1.0, limit
    return 0.0, limit
