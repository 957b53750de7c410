"""Rank-one structure of square-zero matrices.

A nonzero real matrix with ``A @ A == 0`` (2x2 or 3x3) has rank one and factors
as ``A = outer(column, row)`` with ``row . column == 0``.  Two such matrices
with ``AB = BA = 0`` share either their column or their row.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, StructuralError

DEFAULT_TOL = 1e-9


def _normalize_sign(v: np.ndarray) -> float:
    """Return +1/-1 so that ``sign * v`` has its first non-negligible entry positive."""
    scale = np.max(np.abs(v))
    for x in v:
        if abs(x) > 1e-12 * scale:
            return 1.0 if x > 0 else -1.0
    return 1.0


def _matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] not in (2, 3):
        raise InputError(f"{name} must be a 2x2 or 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    return A


@dataclass(frozen=True)
class Rank1Factorization:
    """``matrix == outer(column, row)``; ``column`` has unit norm and a positive leading entry."""

    column: np.ndarray
    row: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.column, self.row)

    def canonical_2x2(self) -> tuple[float, float, bool]:
        """Write a 2x2 factorisation as ``h * [c; 1] [1, -c]``.

        Returns ``(h, c, swapped)``.  When the column is proportional to
        ``(1, 0)`` the form ``h [1; 0][0, 1]`` is reported as ``c = 0`` after
        interchanging the coordinates, with ``swapped=True``.
        """
        if self.column.shape != (2,):
            raise InputError("canonical form only applies to 2x2 factorizations")
        u, v = self.column, self.row
        if abs(u[1]) > 1e-12 * np.linalg.norm(u):
            c = u[0] / u[1]
            return float(u[1] * v[0]), float(c), False
        # interchange coordinates: P A P with P the swap, column becomes (0, u0)
        return float(u[0] * v[1]), 0.0, True


def square_zero_factor(A, tol: float = DEFAULT_TOL) -> Rank1Factorization:
    """Factor a square-zero matrix as ``outer(column, row)``.

    The largest column of ``A`` (in Euclidean norm) is taken as the column
    direction; the row is its least-squares companion.

    Raises
    ------
    StructuralError
        If ``A == 0``, ``A @ A`` is not zero within ``tol * |A|^2``, or ``A`` has
        numerical rank at least two.
    """
    A = _matrix(A)
    nA = np.linalg.norm(A)
    if nA == 0.0:
        raise StructuralError("input is the zero matrix")
    if np.linalg.norm(A @ A) > tol * nA * nA:
        raise StructuralError("input is not square-zero")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[1] > 1e3 * tol * sv[0]:
        raise StructuralError("input has numerical rank >= 2")
    j = int(np.argmax(np.linalg.norm(A, axis=0)))
    col = A[:, j] / np.linalg.norm(A[:, j])
    col = _normalize_sign(col) * col
    # least squares for row: minimise |A - col row^T|, i.e. row = A^T col / |col|^2
    row = A.T @ col
    fac = Rank1Factorization(col, row)
    if np.linalg.norm(fac.matrix - A) > 1e-12 * nA * 10:
        raise StructuralError("rank-one reconstruction failed")
    return fac


class PairKind(enum.Enum):
    COMMON_COLUMN = "common_column"
    COMMON_ROW = "common_row"


@dataclass(frozen=True)
class PairClassification:
    """Shared factor of a pair with ``A^2 = B^2 = AB = BA = 0``.

    For ``COMMON_COLUMN``: ``A = outer(shared, first)``, ``B = outer(shared, second)``.
    For ``COMMON_ROW``: ``A = outer(first, shared)``, ``B = outer(second, shared)``.
    ``shared`` is a unit vector with positive leading entry.
    """

    kind: PairKind
    shared: np.ndarray
    first: np.ndarray
    second: np.ndarray

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind is PairKind.COMMON_COLUMN:
            return np.outer(self.shared, self.first), np.outer(self.shared, self.second)
        return np.outer(self.first, self.shared), np.outer(self.second, self.shared)


def classify_pair(A, B, tol: float = DEFAULT_TOL) -> PairClassification:
    """Decide whether two mutually annihilating square-zero 3x3 matrices share a column or a row."""
    A, B = _matrix(A, "A"), _matrix(B, "B")
    if A.shape != (3, 3) or B.shape != (3, 3):
        raise InputError("classify_pair expects 3x3 matrices")
    nA, nB = np.linalg.norm(A), np.linalg.norm(B)
    if nA == 0 or nB == 0:
        raise StructuralError("matrices must be nonzero")
    for label, P, scale in (("A^2", A @ A, nA * nA), ("B^2", B @ B, nB * nB),
                            ("AB", A @ B, nA * nB), ("BA", B @ A, nA * nB)):
        if np.linalg.norm(P) > tol * scale:
            raise StructuralError(f"{label} is not zero")
    fa = square_zero_factor(A, tol)
    fb = square_zero_factor(B, tol)
    a1, a2 = fa.column, fa.row
    b1, b2 = fb.column, fb.row
    o = np.cross(a1, a2)
    o /= np.linalg.norm(o)
    # b1 lies in span(a1, o) and b2 in span(a2, o); d12 d22 = 0 decides the case
    d12 = abs(b1 @ o) / np.linalg.norm(b1)
    d22 = abs(b2 @ o) / np.linalg.norm(b2)
    if d12 <= d22:
        # columns parallel (b1 = d11 a1); rows re-fitted against the shared column
        shared = a1
        first, second = A.T @ shared, B.T @ shared
        kind = PairKind.COMMON_COLUMN
    else:
        # rows parallel (b2 = d21 a2)
        shared = b2 / np.linalg.norm(b2)
        first, second = A @ shared, B @ shared
        kind = PairKind.COMMON_ROW
    sign = _normalize_sign(shared)
    shared, first, second = sign * shared, sign * first, sign * second
    return PairClassification(kind, shared, first, second)
