"""Derivative cocycles ``Df^n`` and their polynomial growth.

For skew products the product ``Df(f^{n-1}x) ... Df(x)`` is lower triangular and
is accumulated entrywise in O(1) work per step; a naive matrix-product path is
kept as an independent check.  Matrix norms are max-abs-entry norms and "sup"
means the maximum over a finite grid of points.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _parallel
from .errors import InputError
from .systems import (Anzai, Automorphism, RandomAnzaiSpec, Rotation, SkewFlip, SpecialFlowSpec,
                      TwoStep, _PlanarSkew, _points, birkhoff_sum, return_index, signed_birkhoff,
                      trajectory)
from .torus import frac, unipotent_power_growth

DEFAULT_SCHEDULE = tuple(2**k for k in range(4, 15))


def entry_norm(M) -> np.ndarray:
    """Max-abs-entry norm over the two trailing axes."""
    return np.max(np.abs(M), axis=(-2, -1))


# --- cocycle evaluation -------------------------------------------------

def _planar_path(spec: _PlanarSkew, x, ns):
    x1 = x[:, 0]
    G = x.shape[0]
    eps = spec.epsilon
    p = np.zeros(G)
    out = {}
    want = set(ns)
    for k in range(max(ns)):
        p = eps * p + spec.phi.derivative(x1 + k * spec.alpha)
        if k + 1 in want:
            M = np.zeros((G, 2, 2))
            M[:, 0, 0] = 1.0
            M[:, 1, 0] = p
            M[:, 1, 1] = float(eps) ** (k + 1)
            out[k + 1] = M
    return out


def _two_step_path(spec: TwoStep, x, ns):
    G = x.shape[0]
    base = x[:, 0]
    x2 = x[:, 1].copy()
    sig = spec.flip
    p = np.zeros(G)  # (2,1)
    q = np.zeros(G)  # (3,2)
    r = np.zeros(G)  # (3,1)
    s = 1.0          # (2,2) = flip**k
    out = {}
    want = set(ns)
    for k in range(max(ns)):
        x1 = base + k * spec.alpha
        db = spec.beta.derivative(x1)
        g1, g2 = spec.gamma.grad(x1, x2)
        p, q, r, s = db + sig * p, g2 * s + q, g1 + g2 * p + r, sig * s
        x2 = sig * x2 + spec.beta(x1)
        if k + 1 in want:
            M = np.zeros((G, 3, 3))
            M[:, 0, 0] = 1.0
            M[:, 1, 0] = p
            M[:, 1, 1] = s
            M[:, 2, 0] = r
            M[:, 2, 1] = q
            M[:, 2, 2] = 1.0
            out[k + 1] = M
    return out


def _automorphism_path(spec: Automorphism, x, ns):
    G = x.shape[0]
    out = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for n in ns:
            P = np.linalg.matrix_power(spec.matrix, n)
            out[n] = np.broadcast_to(P, (G,) + P.shape).copy()
    return out


def _naive_path(spec, x, ns):
    G, d = x.shape
    M = np.broadcast_to(np.eye(d), (G, d, d)).copy()
    out = {}
    want = set(ns)
    for k, pts in enumerate(trajectory(spec, x, max(ns))):
        if k == max(ns):
            break
        M = spec.jacobian(pts) @ M
        if k + 1 in want:
            out[k + 1] = M.copy()
    return out


def cocycle_path(spec, x, ns: Sequence[int], method: str = "auto") -> dict[int, np.ndarray]:
    """``Df^n(x)`` for every ``n`` in ``ns`` from a single pass along the orbit.

    ``method="naive"`` multiplies Jacobians along the orbit; ``"auto"`` uses
    the triangular running sums for skew products and matrix powers for
    automorphisms.
    """
    ns = sorted({int(n) for n in ns})
    if not ns or ns[0] < 1:
        raise InputError("cocycle orders must be >= 1")
    x = _points(x, spec.dim)
    batch = x.shape[:-1]
    flat = x.reshape(-1, spec.dim)
    if method == "naive":
        impl = _naive_path
    elif method == "auto":
        if isinstance(spec, TwoStep):
            impl = _two_step_path
        elif isinstance(spec, _PlanarSkew):
            impl = _planar_path
        elif isinstance(spec, Automorphism):
            impl = _automorphism_path
        else:
            impl = _naive_path
    else:
        raise InputError(f"unknown method {method!r}")

    def run(chunk):
        res = impl(spec, chunk, ns)
        return {str(n): res[n] for n in ns}

    res = _parallel.chunked_map(run, flat)
    d = spec.dim
    return {n: res[str(n)].reshape(batch + (d, d)) for n in ns}


def derivative_cocycle(spec, x, n: int, method: str = "auto") -> np.ndarray:
    """The ordered product ``Df(f^{n-1}x) ... Df(x)``."""
    if n < 1:
        raise InputError("n must be >= 1")
    return cocycle_path(spec, x, [n], method)[n]


# --- closed-form limits -------------------------------------------------

def theoretical_limit(spec) -> Optional[tuple[float, np.ndarray]]:
    """Known ``(tau, lim n^-tau Df^n)`` for the standard skew-product families, else None.

    Irrationality / rational-independence hypotheses on the rotation numbers
    cannot be checked in floating point and are assumed.
    """
    if isinstance(spec, TwoStep):
        beta, gamma = spec.beta, spec.gamma
        d1, d2 = gamma.degrees
        L = np.zeros((3, 3))
        if spec.flip == -1:
            if gamma.depends_only_on_first and d1 != 0:
                L[2, 0] = d1
                return 1.0, L
            return None
        if beta.degree != 0 and d2 != 0:
            L[2, 0] = beta.degree * d2 / 2.0
            return 2.0, L
        if beta.is_constant and (d1, d2) != (0, 0):
            L[2, 0], L[2, 1] = d1, d2
            return 1.0, L
        if gamma.depends_only_on_first and beta.degree == 0 and d1 != 0:
            L[2, 0] = d1
            return 1.0, L
        return None
    if isinstance(spec, _PlanarSkew):
        if spec.epsilon == 1 and spec.phi.degree != 0:
            L = np.zeros((2, 2))
            L[1, 0] = spec.phi.degree
            return 1.0, L
        return None
    if isinstance(spec, Automorphism) and spec.dim == 3:
        N = np.array(spec.N)
        if np.all(np.diag(N) == 1) and not np.any(np.triu(N, 1)):
            tau, L = unipotent_power_growth(N)
            return (tau, L) if tau > 0 else None
    return None


# --- growth estimation --------------------------------------------------

@dataclass
class GrowthReport:
    """Result of :func:`estimate_growth`.

    ``limit_estimate[i]`` is ``n_max**-tau_used * Df^{n_max}(grid[i])``.
    """

    tau_fit: float
    tau_used: float
    n_schedule: list[int]
    per_n_norms: list[float]
    grid: np.ndarray
    limit_estimate: np.ndarray
    tau_theoretical: Optional[float] = None
    limit_theoretical: Optional[np.ndarray] = None
    residual_sup: Optional[float] = None
    per_n_residuals: Optional[list[float]] = None
    flags: list[str] = field(default_factory=list)

    @property
    def n_max(self) -> int:
        return self.n_schedule[-1]

    @property
    def scaled_norms(self) -> list[float]:
        return [v / n**self.tau_used for n, v in zip(self.n_schedule, self.per_n_norms)]

    @property
    def converging(self) -> bool:
        """Residual decreasing over the last three schedule points."""
        r = self.per_n_residuals
        return r is not None and len(r) >= 3 and r[-3] > r[-2] > r[-1]

    def to_dict(self, include_grid: bool = True) -> dict:
        d = {
            "tau_fit": self.tau_fit,
            "tau_used": self.tau_used,
            "tau_theoretical": self.tau_theoretical,
            "n_schedule": list(self.n_schedule),
            "per_n_norms": list(self.per_n_norms),
            "scaled_norms": self.scaled_norms,
            "residual_sup": self.residual_sup,
            "per_n_residuals": self.per_n_residuals,
            "limit_theoretical": None if self.limit_theoretical is None else self.limit_theoretical.tolist(),
            "limit_sup": entry_norm(self.limit_estimate).max().item() if self.limit_estimate.size else None,
            "limit_entry_min": self.limit_estimate.min(axis=0).tolist(),
            "limit_entry_max": self.limit_estimate.max(axis=0).tolist(),
            "flags": list(self.flags),
        }
        if include_grid:
            d["grid"] = self.grid.tolist()
            d["limit_estimate"] = self.limit_estimate.tolist()
        return d

    def to_json(self, include_grid: bool = True) -> str:
        return json.dumps(self.to_dict(include_grid), sort_keys=True, indent=2, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "sup_norm", "scaled_norm"])
        for n, v, s in zip(self.n_schedule, self.per_n_norms, self.scaled_norms):
            w.writerow([n, repr(float(v)), repr(float(s))])
        return buf.getvalue()


def fit_exponent(ns, norms) -> float:
    """Least-squares slope of ``log norm`` against ``log n``."""
    ln = np.log(np.asarray(ns, dtype=float))
    lv = np.log(np.asarray(norms, dtype=float))
    if np.ptp(ln) == 0:
        raise InputError("degenerate fit: all schedule points equal")
    return float(np.polyfit(ln, lv, 1)[0])


def estimate_growth(spec, grid, n_schedule: Sequence[int] = DEFAULT_SCHEDULE,
                    tau_hint: Optional[float] = None, *, use_theory: bool = True,
                    method: str = "auto") -> GrowthReport:
    """Fit the polynomial growth exponent of ``Df^n`` on a grid of points.

    The exponent is the log-log slope of the grid-sup norm over the last half
    of ``n_schedule``.  When a closed-form limit is known for ``spec`` (and
    ``use_theory``), residuals against it are recorded at every schedule point.
    """
    ns = [int(n) for n in n_schedule]
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InputError("n_schedule must be strictly increasing with at least two entries")
    grid = _points(grid, spec.dim).reshape(-1, spec.dim)
    path = cocycle_path(spec, grid, ns, method)
    with np.errstate(over="ignore", invalid="ignore"):
        norms = [float(entry_norm(path[n]).max()) for n in ns]
    flags: list[str] = []
    tail = ns[len(ns) // 2:] if len(ns) >= 4 else ns
    tail_norms = norms[len(ns) - len(tail):]
    if not all(np.isfinite(tail_norms)) or min(tail_norms) <= 0:
        flags.append("non_polynomial")
        tau_fit = float("inf")
    else:
        tau_fit = fit_exponent(tail, tail_norms)
        if len(tail) >= 3:
            lt, lv = np.log(tail), np.log(tail_norms)
            slopes = np.diff(lv) / np.diff(lt)
            if slopes[-1] > 1.5 * max(slopes[0], 0.0) + 0.5:
                flags.append("non_polynomial")
    if np.isfinite(tau_fit) and tau_fit < 0.05:
        flags.append("degenerate")

    theory = theoretical_limit(spec) if use_theory else None
    tau_theo = theory[0] if theory else None
    if tau_hint is not None:
        tau_used = float(tau_hint)
    elif tau_theo is not None:
        tau_used = tau_theo
    elif np.isfinite(tau_fit):
        tau_used = max(tau_fit, 0.0)
    else:
        tau_used = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        limit = path[ns[-1]] / float(ns[-1]) ** tau_used
    residual_sup = per_res = None
    L = None
    if theory is not None:
        L = theory[1]
        per_res = [float(entry_norm(path[n] / float(n) ** tau_used - L).max()) for n in ns]
        residual_sup = per_res[-1]
    return GrowthReport(tau_fit=tau_fit, tau_used=tau_used, n_schedule=ns, per_n_norms=norms,
                        grid=grid, limit_estimate=limit, tau_theoretical=tau_theo,
                        limit_theoretical=L, residual_sup=residual_sup,
                        per_n_residuals=per_res, flags=flags)


# --- limit-function identities -----------------------------------------

@dataclass(frozen=True)
class LimitDiagnostics:
    """Sup-norm residuals of the identities a polynomial-growth limit ``g`` must satisfy.

    ``square``: g(x)^2; ``cocycle``: g(x) - g(f^m x) Df^m(x); ``product``: g(x) g(y);
    ``invariance``: Df(y) g(x) - g(x); ``g_sup``: size of g itself.
    """

    square: float
    cocycle: float
    product: float
    invariance: float
    g_sup: float
    n_probe: int

    def worst(self) -> float:
        return max(self.square, self.cocycle, self.product, self.invariance)

    def ok(self, tol: float) -> bool:
        vals = (self.square, self.cocycle, self.product, self.invariance)
        return all(np.isfinite(v) and v <= tol for v in vals) and self.g_sup > 0

    def to_dict(self) -> dict:
        return {"square": self.square, "cocycle": self.cocycle, "product": self.product,
                "invariance": self.invariance, "g_sup": self.g_sup, "n_probe": self.n_probe}


LimitLike = Union[np.ndarray, Callable[[np.ndarray], np.ndarray], GrowthReport]


def limit_function(spec, limit: LimitLike) -> Callable[[np.ndarray], np.ndarray]:
    """Turn a constant matrix, a callable, or a GrowthReport into ``points -> g(points)``.

    A report is converted into the estimator ``x -> n_max**-tau Df^{n_max}(x)``
    so that ``g`` can be evaluated off the report's grid.
    """
    if isinstance(limit, GrowthReport):
        n, tau = limit.n_max, limit.tau_used

        def g(pts):
            with np.errstate(over="ignore", invalid="ignore"):
                return derivative_cocycle(spec, pts, n) / float(n) ** tau
        return g
    if callable(limit):
        return limit
    L = np.asarray(limit, dtype=float)

    def const(pts):
        return np.broadcast_to(L, pts.shape[:-1] + L.shape).copy()
    return const


def check_limit_identities(spec, limit: LimitLike, grid, n_probe: int = 1,
                           max_pair_points: int = 64) -> LimitDiagnostics:
    """Evaluate the nilpotency, cocycle and invariance identities of a limit function on a grid.

    Pairwise identities use at most ``max_pair_points`` grid points
    (deterministic stride) for both members of each pair.
    """
    grid = _points(grid, spec.dim).reshape(-1, spec.dim)
    g = limit_function(spec, limit)
    with np.errstate(over="ignore", invalid="ignore"):
        gx = g(grid)
        square = float(entry_norm(gx @ gx).max())
        fm = trajectory_endpoint(spec, grid, n_probe)
        dfm = derivative_cocycle(spec, grid, n_probe)
        cocycle = float(entry_norm(gx - g(fm) @ dfm).max())
        stride = max(1, grid.shape[0] // max_pair_points)
        sub = grid[::stride][:max_pair_points]
        gs = gx[::stride][:max_pair_points]
        dfs = spec.jacobian(sub)
        prod = gs[:, None] @ gs[None, :]
        product = float(entry_norm(prod).max())
        inv = dfs[None, :] @ gs[:, None] - gs[:, None]
        invariance = float(entry_norm(inv).max())
        g_sup = float(entry_norm(gx).max())
    clean = lambda v: v if np.isfinite(v) else float("inf")
    return LimitDiagnostics(clean(square), clean(cocycle), clean(product), clean(invariance),
                            clean(g_sup), n_probe)


def trajectory_endpoint(spec, x, n: int) -> np.ndarray:
    last = None
    for last in trajectory(spec, x, n):
        pass
    return last


def stolz_average(spec: TwoStep, x, n: int) -> np.ndarray:
    """``n**-2 * sum_{k=1}^{n} (gamma_x2)^(k)(x1, x2)`` along the planar factor of a two-step map."""
    x = _points(x, spec.dim)
    planar = Anzai(spec.alpha, spec.beta) if spec.flip == 1 else SkewFlip(spec.alpha, -1, spec.beta)
    acc = np.zeros(x.shape[:-1])
    for k, pts in enumerate(trajectory(planar, x[..., :2], n)):
        if k == n:
            break
        acc = acc + (n - k) * spec.gamma.dx2(pts[..., 0], pts[..., 1])
    return acc / float(n) ** 2


# --- random systems -----------------------------------------------------

def random_growth_mc(spec: RandomAnzaiSpec, samples: int, n: int, seed=None):
    """Monte Carlo estimate of ``E[n**-1 Df^n_omega]`` for a random Anzai product.

    Initial ``(omega, x1)`` are drawn uniformly with ``numpy.random.default_rng(seed)``.

    Returns
    -------
    mean_matrix : ndarray, shape (2, 2)
    l1_error : float
        Sample mean of the entrywise L1 distance to ``[[0, 0], [mean degree, 0]]``.
    """
    if samples < 1 or n < 1:
        raise InputError("samples and n must be >= 1")
    rng = np.random.default_rng(seed)
    w = rng.random(samples)
    x1 = rng.random(samples)
    acc = np.zeros(samples)
    for _ in range(n):
        acc = acc + spec.dphi(w, x1)
        x1 = x1 + spec.alpha(w)
        w = frac(w + spec.theta)
    scaled = np.zeros((samples, 2, 2))
    scaled[:, 0, 0] = 1.0 / n
    scaled[:, 1, 1] = 1.0 / n
    scaled[:, 1, 0] = acc / n
    L = np.array([[0.0, 0.0], [spec.mean_degree(), 0.0]])
    l1 = float(np.abs(scaled - L).sum(axis=(1, 2)).mean())
    return scaled.mean(axis=0), l1


# --- special flows ------------------------------------------------------

def drift_grid(spec: SpecialFlowSpec, n1: int = 64, n2: int = 16) -> np.ndarray:
    """Points of ``M' = {0 <= x2 < b(x1)}``: ``x1 = i/n1``, ``x2 = (j/n2) b(x1)``."""
    x1 = np.arange(n1) / n1
    u = np.arange(n2) / n2
    X1, U = np.meshgrid(x1, u, indexing="ij")
    return np.stack([X1.ravel(), (U * spec.b(X1)).ravel()], axis=-1)


def sublinear_drift(spec: SpecialFlowSpec, n: int, grid=None) -> float:
    """``sup (1/n) |Db^(m)(x1 + n alpha)|`` over ``M'`` with ``m`` the return index of ``T^n (x1, x2)``.

    ``T(x1, x2) = (x1 + alpha, x2 + beta(x1))``; Birkhoff sums of ``Db`` run over the rotation by ``a``.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    pts = drift_grid(spec) if grid is None else _points(grid, 2).reshape(-1, 2)
    x1, x2 = pts[:, 0], pts[:, 1]
    beta_n = birkhoff_sum(spec.beta, Rotation(spec.alpha), x1[:, None], n)
    y1 = x1 + n * spec.alpha
    y2 = x2 + beta_n
    m = return_index(spec, y1, y2)
    db = signed_birkhoff(spec.b.deriv(), spec.a, y1, m)
    return float(np.max(np.abs(db)) / n)
