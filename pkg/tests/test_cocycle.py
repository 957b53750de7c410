from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import GOLDEN, SQRT2M1
from torogrow.cocycle import (GrowthReport, check_limit_identities, cocycle_path, derivative_cocycle,
                              drift_grid, entry_norm, estimate_growth, fit_exponent, random_growth_mc,
                              stolz_average, sublinear_drift, theoretical_limit, trajectory_endpoint)
from torogrow.errors import InputError
from torogrow.systems import (Anzai, Automorphism, RandomAnzaiSpec, SkewFlip, SpecialFlowSpec, TwoStep)
from torogrow.torus import CircleFunction, Torus2Function

TWO_PI = 2 * math.pi
QUADRATIC = TwoStep(SQRT2M1, CircleFunction(1, (), (1 / TWO_PI,)), Torus2Function((0, 1), ((1, 0, 0.0, 1 / (2 * TWO_PI)),)))
UNIPOTENT = Automorphism(((1, 0, 0), (1, 1, 0), (0, 2, 1)))
SPECS = [
    Anzai(SQRT2M1, CircleFunction(1, (0.05,), (0.1,))),
    SkewFlip(GOLDEN, -1, CircleFunction(2, (), (0.07,))),
    QUADRATIC,
    TwoStep(GOLDEN, CircleFunction(0, (0.1,), (), 0.3),
            Torus2Function((2, 3), ((1, 0, 0.05, 0.0), (0, 1, 0.0, 0.03)))),
    TwoStep(SQRT2M1, CircleFunction(1, (), (1 / TWO_PI,)), Torus2Function((1, 0), ((1, 0, 0.0, 0.05),)), flip=-1),
    UNIPOTENT,
]


def _grid(dim, k):
    u = (np.arange(k) + 0.5) / k
    return np.stack(np.meshgrid(*([u] * dim), indexing="ij"), axis=-1).reshape(-1, dim)


def _naive_product(spec, x, n):
    """Oracle: scalar loop over explicit 64-bit matrix products."""
    x = np.asarray(x, dtype=float)
    M = np.eye(spec.dim)
    for _ in range(n):
        M = spec.jacobian(x) @ M
        x = spec.step(x)
    return M


def test_derivative_cocycle_examples():
    N = ((1, 0, 0), (1, 1, 0), (0, 2, 1))
    assert np.array_equal(derivative_cocycle(UNIPOTENT, np.zeros(3), 5), np.linalg.matrix_power(np.array(N), 5))
    spec = SPECS[0]
    x = np.array([0.3, 0.8])
    assert np.allclose(derivative_cocycle(spec, x, 1), spec.jacobian(x), atol=0)
    ts = TwoStep(SQRT2M1, CircleFunction(1), Torus2Function((0, 1)))
    M = derivative_cocycle(ts, np.zeros(3), 100)
    assert M[2, 0] == 4950.0


def test_derivative_cocycle_rejects_nonpositive_n():
    with pytest.raises(InputError):
        derivative_cocycle(QUADRATIC, np.zeros(3), 0)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
def test_closed_form_matches_naive(spec, rng):
    x = rng.random((16, spec.dim))
    ns = [1, 2, 7, 50, 200]
    fast = cocycle_path(spec, x, ns)
    slow = cocycle_path(spec, x, ns, method="naive")
    for n in ns:
        scale = max(1.0, float(entry_norm(slow[n]).max()))
        assert np.abs(fast[n] - slow[n]).max() <= 1e-9 * scale
    for i in range(2):
        assert np.allclose(fast[50][i], _naive_product(spec, x[i], 50), rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
@settings(max_examples=15)
@given(n=st.integers(1, 500), m=st.integers(1, 500))
def test_cocycle_law(spec, n, m):
    x = np.linspace(0.15, 0.85, spec.dim)[None]
    whole = derivative_cocycle(spec, x, n + m)
    mid = trajectory_endpoint(spec, x, n)
    split = derivative_cocycle(spec, mid, m) @ derivative_cocycle(spec, x, n)
    assert np.abs(whole - split).max() <= 1e-8 * max(1.0, float(np.abs(whole).max()))


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
def test_determinant_of_cocycle(spec, rng):
    x = rng.random((8, spec.dim))
    det1 = np.sign(np.linalg.det(spec.jacobian(x)))
    for n in (1, 10, 333, 1000):
        d = np.linalg.det(derivative_cocycle(spec, x, n))
        assert np.all(np.sign(d) == det1**n)
        assert np.abs(np.abs(d) - 1).max() <= 1e-6


def test_growth_unipotent():
    rep = estimate_growth(UNIPOTENT, np.zeros((1, 3)), [10, 50, 100, 250, 500, 1000])
    assert rep.tau_fit == pytest.approx(2.0, abs=0.05)
    assert rep.tau_theoretical == 2.0
    # K21 = 1, K32 = 2: (3,1) entry of K^n is K32 K21 n(n-1)/2
    assert rep.limit_estimate[0, 2, 0] == pytest.approx(999 / 1000)


def test_growth_anzai_linear():
    rep = estimate_growth(SPECS[0], _grid(2, 16), [2**k for k in range(6, 13)])
    assert rep.tau_fit == pytest.approx(1.0, abs=0.05)
    assert rep.residual_sup < 0.05
    assert "degenerate" not in rep.flags


def test_growth_identity_is_degenerate():
    rep = estimate_growth(Automorphism(np.eye(3, dtype=int).tolist()), _grid(3, 2), [16, 64, 256, 1024])
    assert abs(rep.tau_fit) < 1e-12
    assert "degenerate" in rep.flags
    assert rep.tau_theoretical is None


def test_growth_anosov_flagged():
    anosov = Automorphism(((2, 1, 0), (1, 1, 0), (0, 0, 1)))
    rep = estimate_growth(anosov, np.zeros((1, 3)), [2**k for k in range(4, 12)])
    assert "non_polynomial" in rep.flags
    diag = check_limit_identities(anosov, rep, np.zeros((1, 3)))
    assert not diag.ok(1.0)


def test_growth_schedule_validation():
    with pytest.raises(InputError):
        estimate_growth(QUADRATIC, np.zeros((1, 3)), [100])
    with pytest.raises(InputError):
        estimate_growth(QUADRATIC, np.zeros((1, 3)), [100, 50])
    with pytest.raises(InputError):
        fit_exponent([5, 5], [1.0, 2.0])


def test_fit_exponent_exact_power():
    ns = [10, 100, 1000]
    assert fit_exponent(ns, [3 * n**1.5 for n in ns]) == pytest.approx(1.5, abs=1e-12)


def test_theoretical_limit_examples():
    const_beta = TwoStep(SQRT2M1, CircleFunction.const(GOLDEN), Torus2Function((2, 3)))
    tau, L = theoretical_limit(const_beta)
    assert tau == 1.0 and L[2].tolist() == [2.0, 3.0, 0.0] and not L[:2].any()
    tau, L = theoretical_limit(QUADRATIC)
    assert tau == 2.0 and L[2, 0] == 0.5 and np.count_nonzero(L) == 1
    for db in (0, 1, 3):
        flip = TwoStep(SQRT2M1, CircleFunction(db), Torus2Function((1, 0)), flip=-1)
        tau, L = theoretical_limit(flip)
        assert tau == 1.0 and L[2, 0] == 1.0 and np.count_nonzero(L) == 1
    x1_only = TwoStep(SQRT2M1, CircleFunction(0, (0.1,)), Torus2Function((4, 0), ((2, 0, 0.1, 0.0),)))
    tau, L = theoretical_limit(x1_only)
    assert tau == 1.0 and L[2, 0] == 4.0
    tau, L = theoretical_limit(Anzai(SQRT2M1, CircleFunction(3)))
    assert tau == 1.0 and L[1, 0] == 3.0


def test_theoretical_limit_absent():
    assert theoretical_limit(Anzai(SQRT2M1, CircleFunction(0, (0.1,)))) is None
    general = TwoStep(SQRT2M1, CircleFunction(0, (0.1,)), Torus2Function((1, 1), ((0, 1, 0.1, 0.0),)))
    assert theoretical_limit(general) is None
    assert theoretical_limit(Automorphism(((2, 1), (1, 1)))) is None


def test_limit_identities_unipotent_exact():
    rep = estimate_growth(UNIPOTENT, _grid(3, 3), [10, 20, 40])
    diag = check_limit_identities(UNIPOTENT, rep.limit_theoretical, _grid(3, 3), n_probe=3)
    assert (diag.square, diag.cocycle, diag.product, diag.invariance) == (0.0, 0.0, 0.0, 0.0)
    assert diag.g_sup == 1.0 and diag.ok(0.0)
    # finite-n estimator g = K^n / n^2: the cocycle residual is (K^{n+m} - K^n)_{31} / n^2 exactly
    n, m = 40, 3
    est = check_limit_identities(UNIPOTENT, rep, _grid(3, 3), n_probe=m)
    assert est.cocycle == pytest.approx(((n + m) * (n + m - 1) - n * (n - 1)) / n**2, rel=1e-12)


def test_limit_identities_two_n_extrapolation():
    """Residuals on the quadratic case shrink like 1/n between two probe sizes."""
    grid = _grid(3, 4)
    res = []
    for n in (250, 1000):
        rep = estimate_growth(QUADRATIC, grid, [n // 4, n // 2, n])
        res.append(check_limit_identities(QUADRATIC, rep, grid, n_probe=5).worst())
    assert res[1] < res[0] / 2
    assert res[1] < 5e-2


def test_stolz_identity():
    grid = np.random.default_rng(7).random((100, 3))
    vals = stolz_average(QUADRATIC, grid, 2000)
    assert np.abs(vals - 0.5).max() <= 5e-2


def test_growth_report_serialisation():
    rep = estimate_growth(UNIPOTENT, np.zeros((1, 3)), [4, 8, 16])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,sup_norm,scaled_norm"
    n, sup, scaled = lines[-1].split(",")
    assert int(n) == 16 and float(scaled) == pytest.approx(float(sup) / 256)
    d = json.loads(rep.to_json())
    assert d["tau_theoretical"] == 2.0 and d["n_schedule"] == [4, 8, 16]
    assert all(v > 0 for v in d["per_n_norms"])
    assert isinstance(rep, GrowthReport) and rep.n_max == 16


def test_random_growth_examples():
    pure = RandomAnzaiSpec(SQRT2M1, CircleFunction.const(GOLDEN), degree=1)
    mean, l1 = random_growth_mc(pure, 50, 100, seed=1)
    assert mean[1, 0] == pytest.approx(1.0, abs=1e-12)
    flat = RandomAnzaiSpec(SQRT2M1, CircleFunction.const(GOLDEN), cos=(CircleFunction(0, (0.2,)),))
    errs = [random_growth_mc(flat, 200, n, seed=3)[1] for n in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    a = random_growth_mc(flat, 20, 30, seed=9)
    b = random_growth_mc(flat, 20, 30, seed=9)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    with pytest.raises(InputError):
        random_growth_mc(flat, 0, 10)


ROOF = CircleFunction(0, (0.5,), (), 1.0)


def test_drift_examples():
    unit = SpecialFlowSpec(SQRT2M1, CircleFunction.const(1.0), SQRT2M1, CircleFunction(0, (), (1 / TWO_PI,)))
    assert sublinear_drift(unit, 100) == 0.0
    still = SpecialFlowSpec(SQRT2M1, ROOF, SQRT2M1)
    grid = drift_grid(still, 16, 4) * np.array([1.0, 0.5])  # x2 < min b = 1/2
    for n in (10, 100, 1000):
        assert sublinear_drift(still, n, grid) * n <= still.roof_bounds()[1] * math.pi * 4
    with pytest.raises(InputError):
        sublinear_drift(still, 0)


def test_drift_grid_lies_in_fundamental_domain():
    spec = SpecialFlowSpec(SQRT2M1, ROOF, SQRT2M1)
    g = drift_grid(spec, 8, 4)
    assert g.shape == (32, 2)
    assert np.all(g[:, 1] >= 0) and np.all(g[:, 1] < ROOF(g[:, 0]))
