"""Radial barriers with controlled Laplacian and sup norm.

Given a radial model ``h`` and an exponent ``theta > 0`` the barrier is

    g(t) = int_0^t h(s)^-theta int_0^s h^theta w  ds,

with weight ``w = (theta+1) h'`` up to the radius ``a`` and
``w = (theta+1) h' S((h - h(a))/h(a))`` beyond it. Composed with the
distance from a point, ``g`` gives nonnegative functions whose Laplacian on
an immersed submanifold is bounded below by ``(theta+1)/2`` inside the
``a``-ball and by ``theta h' S(...)`` outside, while ``g(R)`` scales like
``a^2``, ``a^2 |log a|`` or ``a^(theta+1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .comparison import RadialModel

__all__ = [
    "GaugeS",
    "SStar",
    "BarrierProfile",
    "SupBoundCertificate",
    "SubharmonicReport",
    "default_gauge_S",
    "s_star",
    "a_bar",
    "build_barrier",
    "superg_bound",
    "sup_bound_certificate",
    "regime",
    "radial_laplacian_flat",
    "verify_subharmonic",
]


@dataclass(frozen=True)
class GaugeS:
    """Non-increasing profile ``S`` with ``S(0) = 1``."""

    fn: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "custom"

    def __post_init__(self):
        probe = np.concatenate([[0.0], np.logspace(-6, 6, 400)])
        vals = np.asarray(self.fn(probe), dtype=float)
        if abs(vals[0] - 1.0) > 1e-12:
            raise ValueError("S(0) must equal 1")
        if np.any(vals < 0) or np.any(np.diff(vals) > 1e-15):
            raise ValueError("S must be nonnegative and non-increasing")

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def s_hat(self, theta: float) -> float:
        """``int_0^inf t^theta S(t) dt`` by adaptive quadrature (raises if
        the tail is not integrable to quadrature accuracy)."""
        f = lambda t: t**theta * float(self.fn(np.asarray(t)))  # noqa: E731
        head, _ = integrate.quad(f, 0.0, 1.0, limit=200)
        tail, err = integrate.quad(f, 1.0, np.inf, limit=400)
        if not math.isfinite(tail) or err > 1e-6 * max(1.0, abs(tail)):
            raise ValueError("int t^theta S(t) dt does not converge")
        return head + tail


def default_gauge_S(theta: float) -> GaugeS:
    """``S(t) = max(t, 1)^(-theta-2)``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return GaugeS(lambda t: np.maximum(t, 1.0) ** (-theta - 2.0),
                  f"max(t,1)^-{theta + 2:g}")


@dataclass(frozen=True)
class SStar:
    value: float
    lower: float
    upper: float
    partial: float
    k_max: int


def s_star(theta: float, S: GaugeS, k_max: int = 2_000_000, tail_tol: float = 1e-12) -> SStar:
    """``(theta+1) sum_{k>=1} S(k) (k+1)^theta`` with a bracketed remainder.

    The remainder after ``k_max`` is bracketed between the integrals of the
    term function over ``[k_max+1, inf)`` and ``[k_max, inf)``; this is a
    certificate when the terms decrease, which holds for ``S`` decaying at
    least like ``t^-theta``.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    k = np.arange(1, k_max + 1, dtype=float)
    terms = (theta + 1.0) * S(k) * (k + 1.0) ** theta
    last = float(terms[-1])
    partial = float(np.sum(terms[::-1]))
    if last == 0.0 and float(S(np.array([1e3 * k_max]))[0]) == 0.0:
        return SStar(partial, partial, partial, partial, k_max)
    if last > tail_tol:
        raise ValueError(f"series tail term {last:.3g} exceeds {tail_tol:g} at k_max={k_max}")
    term = lambda x: (theta + 1.0) * float(S(np.asarray(x))) * (x + 1.0) ** theta  # noqa: E731

    def tail(x0):
        # int_{x0}^inf term(x) dx with x = x0/u, so the range becomes (0, 1]
        f = lambda u: term(x0 / u) * x0 / u**2 if u > 0 else 0.0  # noqa: E731
        return integrate.quad(f, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-10)[0]

    lo, hi = tail(k_max + 1.0), tail(float(k_max))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("series is not summable")
    return SStar(partial + 0.5 * (lo + hi), partial + lo, partial + hi, partial, k_max)


def a_bar(model: RadialModel) -> float:
    """Largest grid time with ``h' >= 1/2`` on ``[0, t]``, capped at 1."""
    bad = np.nonzero(model.dh < 0.5)[0]
    top = model.t_max if bad.size == 0 else float(model.t[bad[0] - 1])
    return min(top, 1.0)


@dataclass(frozen=True)
class BarrierProfile:
    theta: float
    a: float
    R: float
    S: GaugeS
    model: RadialModel
    t: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    w: np.ndarray
    inner: np.ndarray  # int_0^t h^theta w
    dg: np.ndarray
    d2g: np.ndarray
    g: np.ndarray

    @property
    def sup_bound(self) -> float:
        return float(self.g[-1])

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.R * (1 + 1e-12)):
            raise ValueError(f"radius outside [0, {self.R}]")
        return t

    @cached_property
    def _g_spline(self):
        return CubicHermiteSpline(self.t, self.g, self.dg)

    @cached_property
    def _dg_spline(self):
        return CubicHermiteSpline(self.t, self.dg, self.d2g)

    def g_at(self, t):
        return self._g_spline(self._check(t))

    def dg_at(self, t):
        return self._dg_spline(self._check(t))

    def d2g_at(self, t):
        """``g'' = w - theta (h'/h) g'`` evaluated from interpolated pieces."""
        t = self._check(t)
        h = np.interp(t, self.t, self.h)
        dh = np.interp(t, self.t, self.dh)
        w = self.weight(t)
        dg = self.dg_at(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = w - self.theta * dh / h * dg
        return np.where(t > 0, out, self.d2g[0])

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        h = np.interp(t, self.t, self.h)
        dh = np.interp(t, self.t, self.dh)
        ha = float(np.interp(self.a, self.t, self.h))
        s = np.where(t <= self.a, 1.0, self.S(np.maximum((h - ha) / ha, 0.0)))
        return (self.theta + 1.0) * dh * s

    def outside_bound(self, t):
        """Lower bound ``theta h'(t) S((h(t) - h(a))/h(a))`` outside the ``a``-ball."""
        t = np.asarray(t, dtype=float)
        return self.theta / (self.theta + 1.0) * self.weight(t)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.t, self.w, self.g]), delimiter=",",
                   header="t,w,g", comments="", fmt="%.17g")


def _profile_grid(a: float, R: float, step: float, n_in: int) -> np.ndarray:
    h0 = min(step, a / n_in)
    near = np.linspace(0.0, a, int(math.ceil(a / h0)) + 1)
    q = 1.0 + 1.0 / n_in
    t_switch = min(max(step * n_in, a), R)
    k = int(math.ceil(math.log(t_switch / a) / math.log(q))) if t_switch > a else 0
    graded = a * q ** np.arange(1, k + 1)
    graded = graded[graded < t_switch]
    start = graded[-1] if graded.size else a
    far = np.arange(start + step, R, step) if start + step < R else np.empty(0)
    return np.concatenate([near, graded[graded < R], far[far < R], [R]])


def build_barrier(model: RadialModel, theta: float, a: float, S: Optional[GaugeS] = None,
                  R: Optional[float] = None, min_points_in_a: int = 200) -> BarrierProfile:
    """Tabulate ``w``, ``g'`` and ``g`` on ``[0, R]``.

    The profile grid has ``min_points_in_a`` uniform cells on ``[0, a]``; beyond
    ``a`` the step grows geometrically, ``t/min_points_in_a``, until it reaches
    ``model.step``. ``h`` and ``h'`` are carried over by cubic Hermite
    interpolation of the model. Both nested integrals use the cumulative
    trapezoidal rule.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    R = model.t_max if R is None else float(R)
    if R > model.t_max * (1 + 1e-12):
        raise ValueError(f"R={R} exceeds the model range {model.t_max}")
    top = a_bar(model)
    if not 0 < a <= top * (1 + 1e-12):
        raise ValueError(f"a exceeds a_bar={top:.6g}" if a > 0 else "a must be positive")
    if a >= R:
        raise ValueError("a must be smaller than R")
    S = default_gauge_S(theta) if S is None else S

    t = _profile_grid(a, R, model.step, min_points_in_a)
    G = model.bound(model.t)
    h = CubicHermiteSpline(model.t, model.h, model.dh)(t)
    dh = CubicHermiteSpline(model.t, model.dh, G * model.h)(t)
    if np.any(h[1:] <= 0) or np.any(dh <= 0):
        raise ValueError("barrier needs h, h' > 0 on (0, R]")

    ha = float(CubicHermiteSpline(model.t, model.h, model.dh)(a))
    sarg = np.maximum((h - ha) / ha, 0.0)
    w = (theta + 1.0) * dh * np.where(t <= a, 1.0, S(sarg))

    htheta = h**theta
    inner = integrate.cumulative_trapezoid(htheta * w, t, initial=0.0)
    dg = np.zeros_like(t)
    dg[1:] = inner[1:] / htheta[1:]
    g = integrate.cumulative_trapezoid(dg, t, initial=0.0)
    d2g = np.empty_like(t)
    d2g[1:] = w[1:] - theta * dh[1:] / h[1:] * dg[1:]
    d2g[0] = dh[0]
    return BarrierProfile(theta, float(a), R, S, model, t, h, dh, w, inner, dg, d2g, g)


def superg_bound(profile: BarrierProfile, sstar: Optional[float] = None) -> float:
    """``int_0^a h + (1 + S*) h(a)^(theta+1) int_a^R h^-theta``."""
    p = profile
    if sstar is None:
        sstar = s_star(p.theta, p.S).upper
    near = p.t <= p.a
    head = integrate.trapezoid(p.h[near], p.t[near])
    far = p.t >= p.a
    tail = integrate.trapezoid(p.h[far] ** -p.theta, p.t[far])
    ha = float(np.interp(p.a, p.t, p.h))
    return float(head + (1.0 + sstar) * ha ** (p.theta + 1.0) * tail)


def regime(theta: float, tol: float = 1e-12) -> str:
    if abs(theta - 1.0) <= tol:
        return "square_log"
    return "square" if theta > 1 else "power"


@dataclass(frozen=True)
class SupBoundCertificate:
    regime: str
    gauge_value: float
    sup_bound: float
    ratio: float


def sup_bound_certificate(profile: BarrierProfile) -> SupBoundCertificate:
    """``g(R)`` divided by ``a^2``, ``a^2 |log a|`` or ``a^(theta+1)``."""
    a, th = profile.a, profile.theta
    kind = regime(th)
    gauge = {"square": a**2, "square_log": a**2 * abs(math.log(a)),
             "power": a ** (th + 1.0)}[kind]
    return SupBoundCertificate(kind, gauge, profile.sup_bound, profile.sup_bound / gauge)


def radial_laplacian_flat(profile: BarrierProfile, rho, dim: int = 2):
    """``g''(rho) + (dim-1) g'(rho)/rho``, the flat Laplacian of ``g(|x|)`` in R^dim."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    return profile.d2g_at(rho) + (dim - 1) * profile.dg_at(rho) / rho


@dataclass(frozen=True)
class SubharmonicReport:
    """Minimum slack of the discrete Laplacian against the inside and outside bounds."""

    inside_min_slack: float
    inside_argmin: Optional[tuple]
    inside_count: int
    outside_min_slack: float
    outside_argmin: Optional[tuple]
    outside_count: int
    band_count: int

    def to_json(self) -> str:
        rows = [
            {"region": "inside", "min_slack": self.inside_min_slack,
             "argmin_node": self.inside_argmin, "nodes": self.inside_count},
            {"region": "outside", "min_slack": self.outside_min_slack,
             "argmin_node": self.outside_argmin, "nodes": self.outside_count},
        ]
        return json.dumps(rows, indent=2)


def verify_subharmonic(patch, x0, profile: BarrierProfile, spacing: float,
                       band: int = 1, min_nodes_across: int = 8) -> SubharmonicReport:
    """Check the Laplacian lower bounds for ``u = g(|phi - x0|)`` on a grid.

    ``Delta_g u`` is the five-point flat Laplacian divided by ``lambda^2``.
    Nodes within ``band`` steps of the domain boundary, and nodes whose
    ambient distance is within half a cell of ``a``, are skipped.
    """
    from .spectrum import discretize, laplace_beltrami

    if patch.immersion is None:
        raise ValueError("patch needs an immersion")
    grid, _ = discretize(patch, spacing)
    x0 = np.asarray(x0, dtype=float)
    X = patch.immersion(grid.z)
    rho = np.linalg.norm(X - x0, axis=-1)
    if np.nanmax(np.where(grid.in_domain, rho, 0.0)) > profile.R:
        raise ValueError("immersed patch leaves the ball B_R(x0) covered by the profile")
    lam = grid.conformal_factor

    a = profile.a
    ins = grid.in_domain & (rho < a)
    if not np.any(ins):
        raise ValueError("no grid node inside B_a(x0)")
    across = 2.0 * a / (spacing * np.median(lam[ins]))
    if across < min_nodes_across:
        raise ValueError(f"grid too coarse: {across:.1f} nodes across B_a, need {min_nodes_across}")

    u = np.full(grid.shape, np.nan)
    u[grid.in_domain] = profile.g_at(rho[grid.in_domain])
    # collar values from the immersion so the stencil is complete one node out
    collar = ~grid.in_domain & np.isfinite(rho) & (rho <= profile.R)
    u[collar] = profile.g_at(rho[collar])
    lap = laplace_beltrami(grid, u)

    ok = grid.interior_mask(band) & np.isfinite(lap)
    tol = 0.5 * spacing * lam
    inside = ok & (rho < a - tol)
    outside = ok & (rho > a + tol)
    bandmask = ok & ~inside & ~outside

    def reduce(mask, bound):
        if not np.any(mask):
            return math.inf, None, 0
        slack = np.where(mask, lap - bound, np.inf)
        k = np.unravel_index(np.argmin(slack), slack.shape)
        return float(slack[k]), tuple(int(i) for i in k), int(mask.sum())

    r_safe = np.where(np.isfinite(rho), np.minimum(rho, profile.R), 0.0)
    s_in, k_in, n_in = reduce(inside, 0.5 * (profile.theta + 1.0))
    s_out, k_out, n_out = reduce(outside, profile.outside_bound(r_safe))
    return SubharmonicReport(s_in, k_in, n_in, s_out, k_out, n_out, int(bandmask.sum()))
