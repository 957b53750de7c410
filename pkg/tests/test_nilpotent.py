from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from torogrow.errors import InputError, StructuralError
from torogrow.nilpotent import PairKind, classify_pair, square_zero_factor

vec = arrays(float, 3, elements=st.floats(-3, 3, allow_nan=False))


def orthogonal_pair(u, w):
    """A vector orthogonal to u built from w (None when degenerate)."""
    nu = u @ u
    if nu < 1e-2:
        return None
    v = w - (w @ u) / nu * u
    return v if v @ v > 1e-2 else None


def test_factor_examples():
    A = np.zeros((3, 3))
    A[2, 0] = 1
    f = square_zero_factor(A)
    assert np.allclose(f.column, (0, 0, 1)) and np.allclose(f.row, (1, 0, 0))
    f = square_zero_factor([[2, -4], [1, -2]])
    assert np.allclose(f.matrix, [[2, -4], [1, -2]], atol=1e-14)
    assert f.column[0] / f.column[1] == pytest.approx(2.0)
    h, c, swapped = f.canonical_2x2()
    assert (h, c, swapped) == (pytest.approx(1.0), pytest.approx(2.0), False)
    assert np.allclose(h * np.outer([c, 1], [1, -c]), [[2, -4], [1, -2]])
    B = np.outer((1, 2, 3), (3, 0, -1))
    f = square_zero_factor(B)
    assert np.abs(f.matrix - B).max() <= 1e-12 * np.abs(B).max()
    assert abs(f.row @ f.column) < 1e-12


def test_canonical_swapped_case():
    f = square_zero_factor([[0, 3], [0, 0]])
    h, c, swapped = f.canonical_2x2()
    assert swapped and c == 0.0 and h == pytest.approx(3.0)


def test_factor_errors():
    with pytest.raises(StructuralError, match="not square-zero"):
        square_zero_factor(np.eye(3))
    with pytest.raises(StructuralError):
        square_zero_factor(np.zeros((3, 3)))
    with pytest.raises(InputError):
        square_zero_factor(np.zeros((4, 4)))
    with pytest.raises(InputError):
        square_zero_factor([[np.nan, 0], [0, 0]])


@given(vec, vec)
def test_factor_round_trip(u, w):
    v = orthogonal_pair(u, w)
    if v is None:
        return
    A = np.outer(u, v)
    f = square_zero_factor(A)
    assert np.abs(f.matrix - A).max() <= 1e-12 * max(1.0, np.abs(A).max())
    assert np.linalg.norm(f.column) == pytest.approx(1.0)
    assert abs(f.row @ f.column) <= 1e-12 * np.linalg.norm(f.row)


def test_pair_examples():
    A = np.zeros((3, 3)); A[2, 0] = 1
    B = np.zeros((3, 3)); B[2, 1] = 1
    pc = classify_pair(A, B)
    assert pc.kind is PairKind.COMMON_COLUMN
    assert np.allclose(pc.shared, (0, 0, 1)) and np.allclose(pc.first, (1, 0, 0)) and np.allclose(pc.second, (0, 1, 0))
    A = np.zeros((3, 3)); A[1, 0] = 1
    B = np.zeros((3, 3)); B[2, 0] = 1
    pc = classify_pair(A, B)
    assert pc.kind is PairKind.COMMON_ROW
    assert np.allclose(pc.shared, (1, 0, 0)) and np.allclose(pc.first, (0, 1, 0)) and np.allclose(pc.second, (0, 0, 1))
    u = np.array([1.0, 1, 1])
    A, B = np.outer(u, (1, -1, 0)), np.outer(u, (1, 1, -2))
    pc = classify_pair(A, B)
    assert pc.kind is PairKind.COMMON_COLUMN
    assert np.allclose(pc.shared, u / np.sqrt(3))
    RA, RB = pc.reconstruct()
    assert np.allclose(RA, A, atol=1e-14) and np.allclose(RB, B, atol=1e-14)
    # orthogonality of the shared vector to the per-matrix vectors
    assert abs(pc.shared @ pc.first) < 1e-12 and abs(pc.shared @ pc.second) < 1e-12


def test_pair_errors():
    A = np.zeros((3, 3)); A[2, 0] = 1
    with pytest.raises(StructuralError):
        classify_pair(A, A.T)
    with pytest.raises(StructuralError):
        classify_pair(A, np.zeros((3, 3)))
    with pytest.raises(InputError):
        classify_pair(np.zeros((2, 2)), np.zeros((2, 2)))


@given(vec, vec, vec, st.booleans())
def test_pair_round_trip_and_symmetry(u, w1, w2, common_column):
    v1, v2 = orthogonal_pair(u, w1), orthogonal_pair(u, w2)
    if v1 is None or v2 is None:
        return
    if common_column:
        A, B = np.outer(u, v1), np.outer(u, v2)
    else:
        A, B = np.outer(v1, u), np.outer(v2, u)
    pc = classify_pair(A, B)
    RA, RB = pc.reconstruct()
    scale = max(np.abs(A).max(), np.abs(B).max(), 1.0)
    assert np.abs(RA - A).max() <= 1e-12 * scale and np.abs(RB - B).max() <= 1e-12 * scale
    swapped = classify_pair(B, A)
    parallel = np.linalg.matrix_rank(np.stack([A.ravel(), B.ravel()]), tol=1e-9) == 1
    if not parallel:
        assert swapped.kind is pc.kind
        assert pc.kind is (PairKind.COMMON_COLUMN if common_column else PairKind.COMMON_ROW)
