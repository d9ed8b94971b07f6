"""Radial comparison models.

A radial model is the solution of the Jacobi-type initial value problem

    h'' - G(t) h = 0,    h(0) = 0,  h'(0) = 1,

sampled on a uniform grid. Everything downstream (the barrier profiles, the
convexity data of balls, the threshold on the mean curvature) is derived
from the sampled pair (h, h').
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "CurvatureBound",
    "RadialModel",
    "ConvexityData",
    "JConvexityReport",
    "NonparabolicityReport",
    "ThetaViolation",
    "solve_h",
    "mu",
    "theta",
    "convexity_data",
    "radial_convex_function",
    "fd_hessian",
    "check_j_convex",
    "nonparabolicity_check",
    "growth_ratio",
]


class ThetaViolation(UserWarning):
    """The mean curvature is too large for a positive theta."""


@dataclass(frozen=True)
class CurvatureBound:
    """Lower bound data ``G`` for minus the radial sectional curvature.

    Either a constant (``G = B**2`` in the Cartan-Hadamard case, negative
    constants are allowed for positively curved comparisons) or a table
    ``(t, G(t))`` that is linearly interpolated.
    """

    constant: Optional[float] = None
    t_table: Optional[np.ndarray] = None
    g_table: Optional[np.ndarray] = None
    check_quarter_inverse_square: bool = False

    def __post_init__(self):
        if (self.constant is None) == (self.t_table is None):
            raise ValueError("give exactly one of constant or (t_table, g_table)")
        if self.constant is not None:
            if not math.isfinite(self.constant):
                raise ValueError("non-finite curvature constant")
        else:
            t = np.asarray(self.t_table, dtype=float)
            g = np.asarray(self.g_table, dtype=float)
            if t.ndim != 1 or t.shape != g.shape or t.size < 2:
                raise ValueError("t_table and g_table must be 1-d arrays of equal length >= 2")
            if not np.all(np.isfinite(g)) or not np.all(np.isfinite(t)):
                raise ValueError("non-finite G sample")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise ValueError("t_table must start at 0 and increase strictly")
            object.__setattr__(self, "t_table", t)
            object.__setattr__(self, "g_table", g)
        if self.check_quarter_inverse_square:
            self._check_quarter_inverse_square()

    @classmethod
    def const(cls, value: float, **kw) -> "CurvatureBound":
        return cls(constant=float(value), **kw)

    @classmethod
    def from_B(cls, B: float) -> "CurvatureBound":
        if B < 0:
            raise ValueError("B must be nonnegative")
        return cls(constant=float(B) ** 2)

    @classmethod
    def tabulate(cls, fn: Callable[[np.ndarray], np.ndarray], t_max: float,
                 n: int = 2001, **kw) -> "CurvatureBound":
        t = np.linspace(0.0, t_max, n)
        return cls(t_table=t, g_table=np.asarray(fn(t), dtype=float), **kw)

    @property
    def t_max(self) -> float:
        return math.inf if self.t_table is None else float(self.t_table[-1])

    @property
    def B(self) -> Optional[float]:
        """Curvature constant ``B`` when ``G`` is a nonnegative constant."""
        if self.constant is not None and self.constant >= 0:
            return math.sqrt(self.constant)
        return None

    def __call__(self, t):
        if self.constant is not None:
            return np.full_like(np.asarray(t, dtype=float), self.constant)
        return np.interp(t, self.t_table, self.g_table)

    def _check_quarter_inverse_square(self):
        # G_-(s) <= 1/(4 s^2) on the sample points (s > 0)
        if self.constant is not None:
            if self.constant < 0:
                raise ValueError("negative constant G violates G_-(s) <= 1/(4s^2) for large s")
            return
        s, g = self.t_table[1:], self.g_table[1:]
        bad = np.nonzero(np.maximum(-g, 0.0) > 1.0 / (4.0 * s**2))[0]
        if bad.size:
            raise ValueError(f"G_-(s) > 1/(4 s^2) at s = {s[bad[0]]:.6g}")


@dataclass(frozen=True)
class RadialModel:
    """Grid samples of ``h`` and ``h'``."""

    bound: CurvatureBound
    t: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    h2_failure: Optional[float] = None
    h2_mode: bool = False

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def B(self) -> Optional[float]:
        return self.bound.B

    @property
    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.h) >= 0))

    @property
    def satisfies_h2(self) -> bool:
        return self.h2_failure is None and bool(np.all(self.h[1:] > 0))

    def h_at(self, t):
        return np.interp(t, self.t, self.h)

    def dh_at(self, t):
        return np.interp(t, self.t, self.dh)

    def restrict(self, t_max: float) -> "RadialModel":
        k = int(np.searchsorted(self.t, t_max + 1e-12 * max(1.0, t_max), side="right"))
        return RadialModel(self.bound, self.t[:k], self.h[:k], self.dh[:k],
                           self.h2_failure, self.h2_mode)

    def to_csv(self, path_h, path_dh):
        np.savetxt(path_h, np.column_stack([self.t, self.h]), delimiter=",",
                   header="t,h", comments="", fmt="%.17g")
        np.savetxt(path_dh, np.column_stack([self.t, self.dh]), delimiter=",",
                   header="t,dh", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path_h, path_dh, bound: Optional[CurvatureBound] = None) -> "RadialModel":
        th = np.loadtxt(path_h, delimiter=",", skiprows=1)
        td = np.loadtxt(path_dh, delimiter=",", skiprows=1)
        if not np.array_equal(th[:, 0], td[:, 0]):
            raise ValueError("h and h' files are sampled on different grids")
        t = th[:, 0]
        if bound is None:
            d2 = np.gradient(td[:, 1], t)
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(th[:, 1] > 0, d2 / th[:, 1], 0.0)
            g[0] = g[1]
            bound = CurvatureBound(t_table=t, g_table=g)
        return cls(bound, t, th[:, 1], td[:, 1])


def solve_h(bound: CurvatureBound, t_max: float, step: float = 1e-3,
            h2_mode: bool = False) -> RadialModel:
    """Integrate ``h'' = G h`` with classical RK4 on a fixed step.

    The grid is ``linspace(0, t_max, n+1)`` with ``n = ceil(t_max/step)``,
    so the realized step is at most ``step``. In ``h2_mode`` the first time
    at which ``h'`` reaches zero is located (by linear interpolation between
    samples) and stored in ``h2_failure``; integration is not stopped.
    """
    if not (step > 0 and t_max > 0):
        raise ValueError("step and t_max must be positive")
    if t_max > bound.t_max * (1 + 1e-12):
        raise ValueError(f"t_max={t_max} exceeds the tabulated range {bound.t_max}")
    n = int(math.ceil(t_max / step - 1e-9))
    t = np.linspace(0.0, t_max, n + 1)
    dt = t[1] - t[0]
    g0 = bound(t)
    gm = bound(t[:-1] + 0.5 * dt)
    if not (np.all(np.isfinite(g0)) and np.all(np.isfinite(gm))):
        raise ValueError("non-finite G sample")
    h = np.empty(n + 1)
    dh = np.empty(n + 1)
    y0, y1 = 0.0, 1.0
    h[0], dh[0] = y0, y1
    for i in range(n):
        ga, gb, gc = g0[i], gm[i], g0[i + 1]
        k1h, k1d = y1, ga * y0
        k2h, k2d = y1 + 0.5 * dt * k1d, gb * (y0 + 0.5 * dt * k1h)
        k3h, k3d = y1 + 0.5 * dt * k2d, gb * (y0 + 0.5 * dt * k2h)
        k4h, k4d = y1 + dt * k3d, gc * (y0 + dt * k3h)
        y0 += dt / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h)
        y1 += dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
        h[i + 1], dh[i + 1] = y0, y1
    failure = None
    bad = np.nonzero(dh <= 0)[0]
    if bad.size:
        k = bad[0]
        failure = float(t[k] - dh[k] * (t[k] - t[k - 1]) / (dh[k] - dh[k - 1]))
    return RadialModel(bound, t, h, dh, failure, h2_mode)


def _ratio(model: RadialModel) -> np.ndarray:
    q = np.zeros_like(model.h)
    q[1:] = model.h[1:] / model.dh[1:]
    return q


def mu(model: RadialModel, t: float) -> float:
    """``sup_{[0,t]} h/h'`` on the grid, with linear interpolation at ``t``."""
    if t < 0 or t > model.t_max * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {model.t_max}]")
    k = int(np.searchsorted(model.t, t, side="right"))
    if np.any(model.dh[:k] <= 0) or model.dh_at(t) <= 0:
        raise ValueError("mu undefined: h' vanishes on [0, t]")
    q = _ratio(model)
    end = float(np.interp(t, model.t, q))
    return max(float(q[:k].max()) if k else 0.0, end)


def theta(m: int, H_norm: float, R: float, model: RadialModel) -> float:
    """``m - 1 - m |H| mu(R)``; warns with ThetaViolation when not positive."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if H_norm < 0:
        raise ValueError("H_norm must be nonnegative")
    value = m - 1 - m * H_norm * mu(model, R)
    if value <= 0:
        warnings.warn(f"theta = {value:.6g} <= 0: mean curvature above the admissible threshold",
                      ThetaViolation, stacklevel=2)
    return value


@dataclass(frozen=True)
class ConvexityData:
    """Uniform convexity data of a ball ``B_R`` around a pole."""

    t: np.ndarray
    f: np.ndarray
    c: float
    R: float

    def f_at(self, t):
        return np.interp(t, self.t, self.f)

    @property
    def grad_bound(self) -> float:
        """``sup |grad F| = f'(R) = h(R)`` on the ball."""
        return float(np.gradient(self.f, self.t)[-1])


def convexity_data(model: RadialModel, R: float) -> ConvexityData:
    """Primitive ``f = int_0^t h`` and ``c = inf_{[0,R]} h'``."""
    if R > model.t_max * (1 + 1e-12):
        raise ValueError(f"R={R} exceeds the model range {model.t_max}")
    sub = model.restrict(R)
    if np.any(sub.dh <= 0):
        raise ValueError("h' must be positive on [0, R]")
    f = integrate.cumulative_simpson(sub.h, x=sub.t, initial=0.0) if sub.t.size > 2 else \
        integrate.cumulative_trapezoid(sub.h, sub.t, initial=0.0)
    return ConvexityData(sub.t, f, float(sub.dh.min()), float(R))


def radial_convex_function(data: ConvexityData, center=None):
    """Defining function ``F(x) = f(|x - o|) - f(R)`` of the ball ``B_R(o)``.

    Returns a vectorized callable on arrays of shape ``(..., n)``.
    """
    f_R = float(data.f[-1])
    R = float(data.t[-1])
    df = np.gradient(data.f, data.t, edge_order=2)
    spline = CubicHermiteSpline(data.t, data.f, df)
    slope = float(df[-1])
    curv = float(np.gradient(df, data.t, edge_order=2)[-1])

    def F(x):
        x = np.asarray(x, dtype=float)
        o = np.zeros(x.shape[-1]) if center is None else np.asarray(center, dtype=float)
        r = np.linalg.norm(x - o, axis=-1)
        out = spline(np.minimum(r, R)) - f_R
        # second-order continuation past the tabulated radius
        s = np.maximum(r - R, 0.0)
        return np.where(r > R, slope * s + 0.5 * curv * s**2, out)

    return F


def fd_hessian(F: Callable, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function at one point."""
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    e = np.eye(n) * step
    f0 = F(x)
    for i in range(n):
        H[i, i] = (F(x + e[i]) - 2 * f0 + F(x - e[i])) / step**2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (F(x + e[i] + e[j]) - F(x + e[i] - e[j])
                                 - F(x - e[i] + e[j]) + F(x - e[i] - e[j])) / (4 * step**2)
    return H


@dataclass(frozen=True)
class JConvexityReport:
    j: int
    sums: np.ndarray
    margin: float
    c: Optional[float]
    passed: bool


def check_j_convex(hessian_sampler: Callable, j: int, points: Sequence,
                   c: Optional[float] = None, sym_tol: float = 1e-8) -> JConvexityReport:
    """Sum of the ``j`` smallest Hessian eigenvalues at each point.

    ``passed`` compares the minimum margin with ``c`` when given, otherwise
    with zero (strict j-convexity).
    """
    sums = []
    for p in points:
        A = np.asarray(hessian_sampler(p), dtype=float)
        n = A.shape[0]
        if not 1 <= j <= n:
            raise ValueError(f"j={j} outside [1, {n}]")
        if np.max(np.abs(A - A.T)) > sym_tol * max(1.0, np.max(np.abs(A))):
            raise ValueError("Hessian sample is not symmetric")
        hess_eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
        sums.append(hess_eigs[:j].sum())
    sums = np.asarray(sums)
    margin = float(sums.min())
    passed = margin >= c if c is not None else margin > 0
    return JConvexityReport(j, sums, margin, c, bool(passed))


@dataclass(frozen=True)
class NonparabolicityReport:
    verdict: str  # "convergent", "divergent" or "inconclusive"
    integral: float
    tail: float
    model_kind: str
    rate: float
    residual: float


def nonparabolicity_check(model: RadialModel, m: int, fit_tol: float = 1e-2,
                          rate_margin: float = 1e-2) -> NonparabolicityReport:
    """Integral test for ``h^{1-m}`` on ``[1, inf)``.

    The integral over ``[1, t_max]`` is computed by quadrature; the tail is
    extrapolated from a power-law or exponential fit to the last half of the
    range, whichever fits better. Power laws with exponent within
    ``rate_margin`` of 1 are classified divergent (the harmonic borderline).
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if model.t_max <= 1 or np.any(model.h[1:] <= 0):
        return NonparabolicityReport("inconclusive", math.nan, math.nan, "none", math.nan, math.inf)
    sel = model.t >= 1.0
    t = model.t[sel]
    f = model.h[sel] ** (1.0 - m)
    body = float(integrate.trapezoid(f, t))
    decades_t = math.log10(t[-1])
    decades_f = math.log10(f[0] / f[-1]) if f[-1] > 0 else math.inf
    if max(decades_t, decades_f) < 2.0:
        return NonparabolicityReport("inconclusive", body, math.nan, "none", math.nan, math.inf)

    half = t >= 0.5 * (t[0] + t[-1])
    tt, lf = t[half], np.log(f[half])
    fits = {}
    for kind, x in (("power", np.log(tt)), ("exponential", tt)):
        A = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(A, lf, rcond=None)
        res = float(np.sqrt(np.mean((A @ coef - lf) ** 2)))
        fits[kind] = (-coef[0], res)
    kind = min(fits, key=lambda k: fits[k][1])
    rate, res = fits[kind]
    if res > fit_tol:
        return NonparabolicityReport("inconclusive", body, math.nan, kind, rate, res)
    T, fT = t[-1], f[-1]
    if kind == "power":
        if rate <= 1.0 + rate_margin:
            return NonparabolicityReport("divergent", body, math.inf, kind, rate, res)
        tail = fT * T / (rate - 1.0)
    else:
        if rate <= 0:
            return NonparabolicityReport("divergent", body, math.inf, kind, rate, res)
        tail = fT / rate
    return NonparabolicityReport("convergent", body, tail, kind, rate, res)


def growth_ratio(model: RadialModel, t0: float = 2.0) -> float:
    """``min_{t >= t0} h(t) / (sqrt(t) log t)``; positive means the qualitative
    lower growth bound holds on the sampled range."""
    sel = model.t >= t0
    if not np.any(sel):
        raise ValueError(f"model does not reach t0={t0}")
    t = model.t[sel]
    return float(np.min(model.h[sel] / (np.sqrt(t) * np.log(t))))
