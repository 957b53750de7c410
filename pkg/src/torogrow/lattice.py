"""Generators of the orthogonal lattice ``G(c) = {m in Z^3 : m.c = 0}``.

For primitive ``c`` with nonzero entries the generators come from the
pairwise-gcd factorisation ``c1 = k1 p2 p3``, ``c2 = p1 k2 p3``,
``c3 = p1 p2 k3`` with ``p1 = gcd(c2, c3)`` etc.  Vectors with zero entries
use a direct construction.  Everything is exact integer arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Optional

from .errors import InputError, StructuralError

Vec3 = tuple[int, int, int]


def _vec(v, name: str = "vector") -> Vec3:
    try:
        items = [int(x) for x in v]
        exact = all(int(x) == x for x in v)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be an integer 3-vector") from exc
    if len(items) != 3 or not exact:
        raise InputError(f"{name} must be an integer 3-vector, got {v!r}")
    return tuple(items)  # type: ignore[return-value]


def dot(u, v) -> int:
    return sum(int(a) * int(b) for a, b in zip(u, v))


def cross(u, v) -> Vec3:
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y = g = gcd(a, b) >= 0``."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def bezout_min_norm(a: int, b: int) -> tuple[int, int]:
    """Minimal-norm integer solution of ``a*x + b*y = 1``.

    Ties are broken towards larger ``x``, so ``(1, 1) -> (1, 0)``.
    """
    g, x, y = ext_gcd(a, b)
    if g != 1:
        raise StructuralError(f"{a} and {b} are not coprime")
    if a == 0 or b == 0:
        return x, y
    # general solution (x + b t, y - a t); minimise x^2 + y^2 over t
    t0 = -(x * b - y * a) / (a * a + b * b)
    best = None
    for t in range(int(t0) - 2, int(t0) + 3):
        cand = (x + b * t, y - a * t)
        key = (cand[0] ** 2 + cand[1] ** 2, -cand[0])
        if best is None or key < best[0]:
            best = (key, cand)
    return best[1]


def primitive_part(c) -> Vec3:
    """Divide ``c`` by the gcd of its entries."""
    c = _vec(c, "c")
    g = gcd(gcd(abs(c[0]), abs(c[1])), abs(c[2]))
    if g == 0:
        raise InputError("zero vector has no primitive part")
    return tuple(x // g for x in c)  # type: ignore[return-value]


def minors(a, b) -> Vec3:
    """The three 2x2 minors of the stacked matrix ``[a; b]``, columns (12, 13, 23)."""
    return (a[0] * b[1] - a[1] * b[0], a[0] * b[2] - a[2] * b[0], a[1] * b[2] - a[2] * b[1])


@dataclass(frozen=True)
class LatticeBasis:
    c: Vec3
    a: Vec3
    b: Vec3
    minors: Vec3
    minor_gcd: int

    @property
    def full(self) -> bool:
        return self.minor_gcd == 1

    def to_dict(self) -> dict:
        return {"c": list(self.c), "a": list(self.a), "b": list(self.b),
                "minors": list(self.minors), "minor_gcd": self.minor_gcd}


def _generic_generators(c: Vec3) -> tuple[Vec3, Vec3]:
    c1, c2, c3 = c
    p1, p2, p3 = gcd(c2, c3), gcd(c3, c1), gcd(c1, c2)
    k1, k2, k3 = c1 // (p2 * p3), c2 // (p1 * p3), c3 // (p1 * p2)
    x, y = bezout_min_norm(k2, k3)
    a = (p1, -p2 * k1 * x, -p3 * k1 * y)
    b = (0, -p2 * k3, p3 * k2)
    return a, b


def _degenerate_generators(c: Vec3) -> tuple[Vec3, Vec3]:
    zeros = [i for i in range(3) if c[i] == 0]
    if len(zeros) == 2:
        # c = +-e_j: the other two unit vectors, in increasing index order
        e = [[int(i == j) for i in range(3)] for j in zeros]
        return tuple(e[0]), tuple(e[1])  # type: ignore[return-value]
    # exactly one zero at index z; (ci, cj) coprime in the other slots
    z = zeros[0]
    i, j = [k for k in range(3) if k != z]
    a = [0, 0, 0]
    a[i], a[j] = -c[j], c[i]
    b = [0, 0, 0]
    b[z] = 1
    return tuple(a), tuple(b)  # type: ignore[return-value]


def orthogonal_generators(c) -> LatticeBasis:
    """Generators ``a, b`` of ``G(c)`` with ``Lambda(a, b) = Z^2`` for primitive ``c``.

    >>> orthogonal_generators((6, 10, 15)).a
    (5, -3, 0)
    """
    c = _vec(c, "c")
    if c == (0, 0, 0):
        raise InputError("c must be nonzero")
    if primitive_part(c) != c:
        raise StructuralError(f"c={c} is not primitive; call primitive_part first")
    if 0 in c:
        a, b = _degenerate_generators(c)
    else:
        a, b = _generic_generators(c)
    assert dot(a, c) == 0 and dot(b, c) == 0
    m = minors(a, b)
    return LatticeBasis(c, a, b, m, gcd(gcd(abs(m[0]), abs(m[1])), abs(m[2])))


def is_full_image(a, b) -> tuple[bool, int]:
    """Whether ``{(a.m, b.m) : m in Z^3} = Z^2``; returns ``(flag, gcd of minors)``."""
    a, b = _vec(a, "a"), _vec(b, "b")
    m = minors(a, b)
    g = gcd(gcd(abs(m[0]), abs(m[1])), abs(m[2]))
    if g == 0:
        raise StructuralError("a and b are linearly dependent")
    return g == 1, g


def image_preimages(a, b) -> Optional[tuple[Vec3, Vec3]]:
    """Integer ``m, m'`` with ``(a.m, b.m) = (1, 0)`` and ``(a.m', b.m') = (0, 1)``.

    Constructive witness for fullness, found by composing Bezout solutions
    on the rows of ``[a; b]``; returns None when the image is a proper sublattice.
    """
    a, b = _vec(a, "a"), _vec(b, "b")
    full, _ = is_full_image(a, b)
    if not full:
        return None
    # Hermite-style column reduction of the 2x3 matrix [a; b] tracking a unimodular U.
    rows = [list(a), list(b)]
    U = [[int(i == j) for j in range(3)] for i in range(3)]

    def col_op(j, k, q):
        # column j -= q * column k
        for r in rows:
            r[j] -= q * r[k]
        for r in U:
            r[j] -= q * r[k]

    def swap(j, k):
        for r in rows:
            r[j], r[k] = r[k], r[j]
        for r in U:
            r[j], r[k] = r[k], r[j]

    for i in range(2):
        while True:
            nz = [j for j in range(i, 3) if rows[i][j] != 0]
            if len(nz) <= 1:
                break
            piv = min(nz, key=lambda j: abs(rows[i][j]))
            for j in nz:
                if j != piv:
                    col_op(j, piv, rows[i][j] // rows[i][piv])
        nz = [j for j in range(i, 3) if rows[i][j] != 0]
        if not nz:
            return None
        swap(i, nz[0])
    # now rows = [[h11, 0, 0], [h21, h22, 0]] with |h11| = |h22| = 1
    h11, h21, h22 = rows[0][0], rows[1][0], rows[1][1]
    if abs(h11) != 1 or abs(h22) != 1:
        return None
    col = lambda j: [U[r][j] for r in range(3)]
    u0, u1 = col(0), col(1)
    # m' = u1 / h22 gives (0, 1); m = (u0 - h21 * m') / h11 gives (1, 0)
    mp = [x * h22 for x in u1]
    m = [(u0[r] - h21 * mp[r]) * h11 for r in range(3)]
    m, mp = tuple(m), tuple(mp)
    assert (dot(a, m), dot(b, m)) == (1, 0) and (dot(a, mp), dot(b, mp)) == (0, 1)
    return m, mp  # type: ignore[return-value]


def membership(basis: LatticeBasis, m) -> Optional[tuple[int, int]]:
    """Integers ``(u, v)`` with ``m = u*a + v*b`` when ``m.c = 0``, else None."""
    m = _vec(m, "m")
    if dot(m, basis.c) != 0:
        return None
    n = cross(basis.a, basis.b)
    den = dot(n, n)
    u_num = dot(cross(m, basis.b), n)
    v_num = dot(cross(basis.a, m), n)
    if u_num % den or v_num % den:
        return None
    u, v = u_num // den, v_num // den
    if tuple(u * x + v * y for x, y in zip(basis.a, basis.b)) != m:
        return None
    return u, v
