from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torogrow.errors import InputError, StructuralError
from torogrow.torus import (CircleFunction, Torus2Function, circle_deriv, circle_eval, integer_matrix_power,
                            reduce, unipotent_power_growth)

coeff = st.floats(-2.0, 2.0, allow_nan=False)


@st.composite
def circle_functions(draw, max_h=6):
    n = draw(st.integers(0, max_h))
    return CircleFunction(draw(st.integers(-5, 5)), draw(st.lists(coeff, min_size=n, max_size=n)),
                          draw(st.lists(coeff, min_size=0, max_size=n)), draw(coeff))


@pytest.mark.parametrize("x, expected", [
    ((0.0, 0.0), (0.0, 0.0)),
    ((1.25, -0.25), (0.25, 0.75)),
    ((3.0, 2.5, -1.5), (0.0, 0.5, 0.5)),
])
def test_reduce_examples(x, expected):
    assert np.array_equal(reduce(x), expected)


def test_reduce_rounding_edge_maps_to_zero():
    # -1e-18 - floor(-1e-18) rounds to exactly 1.0
    assert reduce([-1e-18])[0] == 0.0


@pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf], [0.0, -np.inf]])
def test_reduce_rejects_non_finite(bad):
    with pytest.raises(InputError):
        reduce(bad)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=3))
def test_reduce_idempotent_and_in_range(x):
    y = reduce(x)
    assert np.all((0 <= y) & (y < 1))
    assert np.array_equal(reduce(y), y)


def test_circle_examples():
    f = CircleFunction(1)
    assert circle_eval(f, 0.3) == pytest.approx(0.3)
    assert circle_deriv(f, 0.3) == 1.0
    g = CircleFunction(0, cos=(1.0,))
    assert circle_eval(g, 0.0) == 1.0
    assert circle_deriv(g, 0.0) == 0.0
    h = CircleFunction(2, sin=(1 / (2 * math.pi),))
    assert circle_deriv(h, 0.25) == pytest.approx(2.0, abs=1e-15)


@given(circle_functions(), st.floats(-50, 50))
def test_circle_degree_shift(f, x):
    scale = 1 + abs(x) + sum(map(abs, f.cos)) + sum(map(abs, f.sin)) + abs(f.constant)
    assert f(x + 1) - f(x) == pytest.approx(f.degree, abs=1e-13 * scale * (1 + abs(f.degree)))


@given(circle_functions(), st.floats(0, 1))
def test_circle_derivative_matches_central_difference(f, x):
    h = 1e-6
    fd = (f(x + h) - f(x - h)) / (2 * h)
    scale = 1 + sum(abs(c) * k for k, c in enumerate(f.cos, 1)) + sum(abs(c) * k for k, c in enumerate(f.sin, 1))
    assert abs(fd - f.derivative(x)) <= 1e-6 * max(1.0, abs(f.derivative(x))) + 1e-6 * scale * 40


@given(circle_functions())
def test_derivative_mean_is_degree(f):
    x = np.arange(256) / 256
    assert f.derivative(x).mean() == pytest.approx(f.degree, abs=1e-12 * (1 + 10 * f.n_harmonics))
    assert f.deriv().mean() == f.degree
    assert np.allclose(f.deriv()(x), f.derivative(x), atol=1e-12)


def test_second_derivative_against_fd():
    f = CircleFunction(3, (0.2, -0.1), (0.3,), 0.5)
    x = np.linspace(0, 1, 17)
    h = 1e-4
    fd = (f.derivative(x + h) - f.derivative(x - h)) / (2 * h)
    assert np.allclose(fd, f.second_derivative(x), atol=1e-5)


def test_circle_validation():
    with pytest.raises(InputError):
        CircleFunction(1.5)
    assert CircleFunction.const(0.7)(0.3) == pytest.approx(0.7)
    assert CircleFunction(2, (1.0,)).scaled(-1) == -CircleFunction(2, (1.0,))
    with pytest.raises(InputError):
        CircleFunction(1).scaled(0.5)


@st.composite
def torus_functions(draw):
    n = draw(st.integers(0, 4))
    terms = [(draw(st.integers(-3, 3)), draw(st.integers(-3, 3)), draw(coeff), draw(coeff)) for _ in range(n)]
    return Torus2Function((draw(st.integers(-4, 4)), draw(st.integers(-4, 4))), tuple(terms), draw(coeff))


@given(torus_functions(), st.floats(-5, 5), st.floats(-5, 5))
def test_torus2_degree_shifts(g, x1, x2):
    d1, d2 = g.degrees
    assert g(x1 + 1, x2) - g(x1, x2) == pytest.approx(d1, abs=1e-11)
    assert g(x1, x2 + 1) - g(x1, x2) == pytest.approx(d2, abs=1e-11)


@given(torus_functions(), st.floats(0, 1), st.floats(0, 1))
def test_torus2_gradient_matches_fd(g, x1, x2):
    h = 1e-6
    g1, g2 = g.grad(x1, x2)
    assert (g(x1 + h, x2) - g(x1 - h, x2)) / (2 * h) == pytest.approx(float(g1), abs=1e-5)
    assert (g(x1, x2 + h) - g(x1, x2 - h)) / (2 * h) == pytest.approx(float(g2), abs=1e-5)


def test_torus2_hessian_and_from_circle():
    g = Torus2Function((1, 2), ((1, 1, 0.3, -0.2), (2, 0, 0.0, 0.1)))
    x1, x2, h = 0.31, 0.77, 1e-5
    h11, h12, h22 = g.hessian(x1, x2)
    assert (g.dx1(x1 + h, x2) - g.dx1(x1 - h, x2)) / (2 * h) == pytest.approx(float(h11), abs=1e-5)
    assert (g.dx1(x1, x2 + h) - g.dx1(x1, x2 - h)) / (2 * h) == pytest.approx(float(h12), abs=1e-5)
    assert (g.dx2(x1, x2 + h) - g.dx2(x1, x2 - h)) / (2 * h) == pytest.approx(float(h22), abs=1e-5)
    f = CircleFunction(2, (0.1,), (0.2,), 0.3)
    e = Torus2Function.from_circle(f, axis=0)
    assert e.depends_only_on_first
    assert e(0.4, 0.9) == pytest.approx(f(0.4))
    assert Torus2Function.from_circle(f, axis=1)(0.9, 0.4) == pytest.approx(f(0.4))
    assert not g.depends_only_on_first


def brute_power(K, n):
    """Oracle: exact integer power converted to floats."""
    P = integer_matrix_power(K, n)
    return np.array([[float(P[i][j]) for j in range(3)] for i in range(3)])


def test_unipotent_examples():
    tau, L = unipotent_power_growth([[1, 0, 0], [1, 1, 0], [0, 2, 1]])
    assert tau == 2 and L[2, 0] == 1.0 and np.count_nonzero(L) == 1
    tau, L = unipotent_power_growth(np.eye(3, dtype=int))
    assert tau == 0 and not L.any()
    tau, L = unipotent_power_growth([[1, 0, 0], [0, 1, 0], [1, 0, 1]])
    assert tau == 1 and L[2, 0] == 1 and np.count_nonzero(L) == 1


def test_unipotent_tau_from_brute_force_fit():
    K = [[1, 0, 0], [1, 1, 0], [0, 2, 1]]
    ns = [250, 500, 1000]
    top = [abs(brute_power(K, n)[2, 0]) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(top), 1)[0]
    assert slope == pytest.approx(2.0, abs=5e-3)
    assert brute_power(K, 1000)[2, 0] / 1000**2 == pytest.approx(1.0, abs=3e-3)


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_unipotent_closed_form_exact(k21, k31, k32):
    K = [[1, 0, 0], [k21, 1, 0], [k31, k32, 1]]
    n = 37
    P = integer_matrix_power(K, n)
    assert P[1][0] == n * k21 and P[2][1] == n * k32
    assert P[2][0] == n * k31 + n * (n - 1) // 2 * k21 * k32


def test_unipotent_rejects_non_unitriangular():
    with pytest.raises(StructuralError):
        unipotent_power_growth([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(StructuralError):
        unipotent_power_growth([[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(InputError):
        unipotent_power_growth([[1, 0], [0, 1]])
