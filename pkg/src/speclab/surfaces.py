"""Conformal patches with explicit conformal factors.

A patch is a rectangle of the parameter plane ``z = u + iv`` carrying the
metric ``lambda(z)**2 |dz|**2``, optionally cut down by a level set and
optionally equipped with a conformal immersion into R^n. All callables act
elementwise on complex arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

__all__ = [
    "ConformalPatch",
    "AndradeParams",
    "LabyrinthParams",
    "andrade_surface",
    "andrade_conformal_factor",
    "andrade_conformality_residual",
    "andrade_curvature",
    "andrade_curvature_constants",
    "fit_andrade_curvature",
    "andrade_cylinder_bounds",
    "measure_andrade_cylinders",
    "andrade_solid_volume",
    "labyrinth_patch",
    "condicn_partial_sums",
    "flat_disk",
    "flat_square",
    "flat_annulus",
    "hyperbolic_disk",
    "catenoid_patch",
    "limit_set_sample",
    "immersion_metric_residual",
    "coordinate_laplacian",
]


@dataclass(frozen=True)
class ConformalPatch:
    """Parameter rectangle with conformal factor and optional immersion.

    ``level_set`` is negative inside the domain; when absent the domain is
    the open rectangle. ``escape_distance`` measures the parameter distance
    to the part of the boundary that represents infinity of the surface.
    """

    u_range: tuple
    v_range: tuple
    conformal_factor: Callable[[np.ndarray], np.ndarray]
    immersion: Optional[Callable[[np.ndarray], np.ndarray]] = None
    level_set: Optional[Callable[[np.ndarray], np.ndarray]] = None
    escape_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    descriptor: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        if not (u1 > u0 and v1 > v0):
            raise ValueError("empty parameter rectangle")

    @property
    def diameter(self) -> float:
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        return math.hypot(u1 - u0, v1 - v0)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        inside = (z.real > u0) & (z.real < u1) & (z.imag > v0) & (z.imag < v1)
        if self.level_set is not None:
            inside &= self.level_set(z) < 0
        return inside

    def scaled(self, c: float) -> "ConformalPatch":
        """Same patch with conformal factor multiplied by ``c``."""
        lam = self.conformal_factor
        return ConformalPatch(self.u_range, self.v_range, lambda z: c * lam(z),
                              None, self.level_set, self.escape_distance,
                              f"{self.descriptor} x{c:g}", dict(self.metadata))

    def grid_table(self, spacing: float) -> np.ndarray:
        """Rows ``(u, v, lambda)`` (and immersion coordinates when present)
        over the grid nodes lying in the domain."""
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        u = u0 + spacing * np.arange(int(math.floor((u1 - u0) / spacing + 1e-9)) + 1)
        v = v0 + spacing * np.arange(int(math.floor((v1 - v0) / spacing + 1e-9)) + 1)
        U, V = np.meshgrid(u, v, indexing="ij")
        z = (U + 1j * V).ravel()
        z = z[self.contains(z)]
        cols = [z.real, z.imag, self.conformal_factor(z)]
        if self.immersion is not None:
            X = self.immersion(z)
            cols.extend(X[:, k] for k in range(X.shape[1]))
        return np.column_stack(cols)


# ---------------------------------------------------------------- Andrade

@dataclass(frozen=True)
class AndradeParams:
    r1: float
    r2: float
    irrational_ratio: bool = True  # hypothesis only, recorded as metadata

    def __post_init__(self):
        if not (self.r1 > 0 and self.r2 > 0):
            raise ValueError("r1, r2 must be positive")
        if self.r1 >= self.r2:
            raise ValueError("Andrade surface needs r1 < r2")

    @property
    def d(self) -> float:
        return self.r2 - self.r1

    @property
    def alpha(self) -> float:
        """``1 - r1/r2``, minus the exponent of ``H``."""
        return 1.0 - self.r1 / self.r2

    @property
    def height_coeff(self) -> float:
        return 4.0 * math.sqrt(self.d / self.r2) * (self.r2 / self.r1) * self.d

    @property
    def beta(self) -> float:
        return self.r1 / (2.0 * self.r2)


def _andrade_parts(p: AndradeParams, z):
    z = np.asarray(z, dtype=complex)
    L = (p.r1 - p.r2) * np.exp(z)
    dL = L
    H = -p.d * np.exp(-p.alpha * z)
    dH = p.alpha * p.d * np.exp(-p.alpha * z)
    F = 1j * p.height_coeff * np.exp(p.beta * z)  # h = Re F
    dh_dz = 0.5 * p.beta * F
    return L, dL, H, dH, F, dh_dz


def andrade_conformal_factor(p: AndradeParams, z) -> np.ndarray:
    """``|L'| + |H'| = d e^u + (d^2/r2) e^{(r1/r2 - 1) u}``."""
    u = np.real(z)
    return p.d * np.exp(u) + p.d**2 / p.r2 * np.exp(-p.alpha * u)


def _andrade_immersion(p: AndradeParams):
    def chi(z):
        L, _, H, _, F, _ = _andrade_parts(p, z)
        w = L - np.conj(H)
        return np.stack([w.real, w.imag, F.real], axis=-1)
    return chi


def andrade_conformality_residual(p: AndradeParams, z) -> np.ndarray:
    """``|L'H' - (dh/dz)^2|`` from the closed-form derivatives."""
    _, dL, _, dH, _, dh_dz = _andrade_parts(p, z)
    return np.abs(dL * dH - dh_dz**2)


def andrade_surface(params: AndradeParams, u_half_width: float = 1.0,
                    v_extent: float = 10.0) -> ConformalPatch:
    if not 0 < u_half_width <= 1:
        raise ValueError("u_half_width must lie in (0, 1]")
    if v_extent <= 0:
        raise ValueError("v_extent must be positive")
    rng = np.random.default_rng(0)
    probe = rng.uniform(-u_half_width, u_half_width, 20) + 1j * rng.uniform(-v_extent, v_extent, 20)
    meta = {
        "r1": params.r1, "r2": params.r2, "d": params.d,
        "irrational_ratio": params.irrational_ratio,
        "v_extent": v_extent,
        "conformality_residual": float(andrade_conformality_residual(params, probe).max()),
    }
    uh, V = float(u_half_width), float(v_extent)
    return ConformalPatch(
        (-uh, uh), (-V, V),
        conformal_factor=lambda z: andrade_conformal_factor(params, z),
        immersion=_andrade_immersion(params),
        escape_distance=lambda z: np.minimum(uh - np.abs(np.real(z)), V - np.abs(np.imag(z))),
        descriptor=f"andrade(r1={params.r1:g}, r2={params.r2:g}, V={V:g})",
        metadata=meta,
    )


def andrade_curvature(params: AndradeParams, z, step: float = 1e-3) -> np.ndarray:
    """Gauss curvature ``-lambda^-2 Delta log(lambda)`` by central differences."""
    z = np.asarray(z, dtype=complex)

    def loglam(w):
        return np.log(andrade_conformal_factor(params, w))

    lap = (loglam(z + step) + loglam(z - step) + loglam(z + 1j * step)
           + loglam(z - 1j * step) - 4.0 * loglam(z)) / step**2
    return -lap / andrade_conformal_factor(params, z) ** 2


def andrade_curvature_constants(params: AndradeParams) -> tuple:
    """Closed-form ``(c1, c2)`` of ``K = -c1 (e^{a u} + c2 e^{b u})^-4``.

    With ``alpha = 1 - r1/r2`` one finds ``c2 = alpha`` and
    ``c1 = alpha (1 + alpha)^2 / d^2``.
    """
    a = params.alpha
    return a * (1 + a) ** 2 / params.d**2, a


def _andrade_K_model(params):
    e1 = 1.0 - params.r1 / (4 * params.r2)
    e2 = 3.0 * params.r1 / (4 * params.r2) - 1.0

    def K(u, c1, c2):
        return -c1 * (np.exp(e1 * u) + c2 * np.exp(e2 * u)) ** -4
    return K


def fit_andrade_curvature(params: AndradeParams, u, K) -> tuple:
    """Least-squares fit of ``(c1, c2)`` to sampled curvature values.

    Returns ``(c1, c2, max_relative_residual)``.
    """
    model = _andrade_K_model(params)
    u = np.asarray(u, dtype=float)
    K = np.asarray(K, dtype=float)
    popt, _ = optimize.curve_fit(lambda x, c1, c2: model(x, c1, c2) / K, u, np.ones_like(u),
                                 p0=(1.0, 1.0), bounds=([1e-12, 1e-12], [np.inf, np.inf]),
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14)
    resid = np.max(np.abs(model(u, *popt) / K - 1.0))
    return float(popt[0]), float(popt[1]), float(resid)


def andrade_cylinder_bounds(params: AndradeParams, u) -> tuple:
    """Closed-form extents of the cylinder swept by the trochoid at fixed ``u``.

    The horizontal part is ``d(e^{-alpha u} e^{i alpha v} - e^u e^{iv})`` and
    the height ``-c e^{beta u} sin(beta v)``, so the radial range is
    ``[d|e^u - e^{-alpha u}|, d(e^u + e^{-alpha u})]`` and the height range
    ``(-c e^{beta u}, c e^{beta u})``.
    """
    u = np.asarray(u, dtype=float)
    a, b = np.exp(u), np.exp(-params.alpha * u)
    return (params.d * np.abs(a - b), params.d * (a + b),
            params.height_coeff * np.exp(params.beta * u))


def measure_andrade_cylinders(params: AndradeParams, u, v_extent: float,
                              n: int = 200_000) -> tuple:
    """Empirical cylinder extents from dense ``v`` sampling at each ``u``."""
    chi = _andrade_immersion(params)
    v = np.linspace(-v_extent, v_extent, n)
    inner, outer, height = [], [], []
    for uu in np.atleast_1d(u):
        X = chi(uu + 1j * v)
        r = np.hypot(X[:, 0], X[:, 1])
        inner.append(r.min())
        outer.append(r.max())
        height.append(np.abs(X[:, 2]).max())
    return np.array(inner), np.array(outer), np.array(height)


def andrade_solid_volume(params: AndradeParams, u_half_width: float = 1.0,
                         n_u: int = 2001, n_grid: int = 1200) -> float:
    """Volume of the union of the cylinders over ``|u| < u_half_width``.

    Rasterizes the ``(r, z)`` half plane, marks cells inside some cylinder
    and integrates ``2 pi r`` over them (midpoint rule).
    """
    u = np.linspace(-u_half_width, u_half_width, n_u)
    inner, outer, height = andrade_cylinder_bounds(params, u)
    dr, dz = outer.max() / n_grid, height.max() / n_grid
    r = (np.arange(n_grid) + 0.5) * dr
    z = (np.arange(n_grid) + 0.5) * dz
    inside = np.zeros((n_grid, n_grid), bool)
    for a, b, c in zip(inner, outer, height):
        inside[(r > a) & (r < b)] |= z < c
    return float(2.0 * np.sum(inside * (2.0 * math.pi * r)[:, None]) * dr * dz)


# ------------------------------------------------------- labyrinth surrogate

@dataclass(frozen=True)
class LabyrinthParams:
    """Annulus ``K_n`` of width ``r_n`` with surrogate exponent ``c_n + eps (z - p_n)``."""

    n: int
    r_n: float
    c_n: Optional[float] = None
    epsilon: complex = 0j
    inner_radius: float = 1.0
    half_height: Optional[float] = None

    def __post_init__(self):
        if self.r_n <= 0 or self.inner_radius <= 0:
            raise ValueError("r_n and inner_radius must be positive")
        if self.c_n is None:
            object.__setattr__(self, "c_n", float(self.r_n))
        if self.half_height is None:
            object.__setattr__(self, "half_height", 2.0 * self.r_n)

    @property
    def C_n(self) -> float:
        return 0.5 * (math.exp(self.c_n - 1) + math.exp(-self.c_n - 1))

    @property
    def p_n(self) -> float:
        return self.inner_radius + 0.5 * self.r_n

    def surrogate_h(self, z):
        return self.c_n + self.epsilon * (np.asarray(z, dtype=complex) - self.p_n)


def labyrinth_patch(params: LabyrinthParams) -> ConformalPatch:
    """Window of the annulus ``K_n`` around ``p_n`` with the metric
    ``lambda = (|e^h| + |e^-h|)/2``."""
    rho, r = params.inner_radius, params.r_n
    pad = 0.05 * r
    u_range = (rho - pad, rho + r + pad)
    v_range = (-params.half_height, params.half_height)
    corners = np.array([complex(a, b) for a in u_range for b in v_range])
    if np.max(np.abs(params.surrogate_h(corners) - params.c_n)) >= 1.0:
        raise ValueError("surrogate violates |h - c_n| < 1 on the window")

    def lam(z):
        hz = params.surrogate_h(z)
        return 0.5 * (np.abs(np.exp(hz)) + np.abs(np.exp(-hz)))

    def level(z):
        a = np.abs(np.asarray(z, dtype=complex))
        return np.maximum(rho - a, a - (rho + r))

    return ConformalPatch(
        u_range, v_range, lam,
        immersion=lambda z: np.stack([np.real(z), np.imag(z), np.zeros(np.shape(z))], axis=-1),
        level_set=level,
        descriptor=f"labyrinth(n={params.n}, r_n={r:g}, c_n={params.c_n:g})",
        metadata={"n": params.n, "r_n": r, "c_n": params.c_n, "C_n": params.C_n,
                  "p_n": params.p_n, "inner_radius": rho,
                  "crossing_lower_bound": r * math.exp(params.c_n - 1) / 2},
    )


def condicn_partial_sums(n_max: int, parity: str = "even", r=None, c=None) -> np.ndarray:
    """Partial sums of ``r_n e^{c_n - 1}`` over even or odd ``n``.

    Defaults to ``r_n = c_n = 1/n``.
    """
    n = np.arange(1, n_max + 1)
    n = n[n % 2 == 0] if parity == "even" else n[n % 2 == 1]
    rn = 1.0 / n if r is None else np.asarray(r(n), dtype=float)
    cn = 1.0 / n if c is None else np.asarray(c(n), dtype=float)
    return np.cumsum(rn * np.exp(cn - 1.0))


# ---------------------------------------------------------- oracle metrics

def _planar(z):
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag, np.zeros(z.shape)], axis=-1)


def flat_disk(R: float = 1.0) -> ConformalPatch:
    if R <= 0:
        raise ValueError("R must be positive")
    return ConformalPatch(
        (-R, R), (-R, R),
        conformal_factor=lambda z: np.ones(np.shape(z)),
        immersion=_planar,
        level_set=lambda z: np.abs(z) - R,
        escape_distance=lambda z: R - np.abs(z),
        descriptor=f"flat_disk(R={R:g})",
        metadata={"R": R},
    )


def flat_square(side: float = 1.0) -> ConformalPatch:
    return ConformalPatch(
        (0.0, side), (0.0, side),
        conformal_factor=lambda z: np.ones(np.shape(z)),
        immersion=_planar,
        escape_distance=lambda z: np.minimum(np.minimum(np.real(z), side - np.real(z)),
                                             np.minimum(np.imag(z), side - np.imag(z))),
        descriptor=f"flat_square(side={side:g})",
        metadata={"side": side},
    )


def flat_annulus(r_in: float, r_out: float, escape: str = "outer") -> ConformalPatch:
    """Planar annulus; ``escape`` selects which circle plays the role of infinity."""
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")

    def esc(z):
        a = np.abs(z)
        if escape == "outer":
            return r_out - a
        if escape == "inner":
            return a - r_in
        return np.minimum(r_out - a, a - r_in)

    return ConformalPatch(
        (-r_out, r_out), (-r_out, r_out),
        conformal_factor=lambda z: np.ones(np.shape(z)),
        immersion=_planar,
        level_set=lambda z: np.maximum(r_in - np.abs(z), np.abs(z) - r_out),
        escape_distance=esc,
        descriptor=f"flat_annulus({r_in:g}, {r_out:g})",
        metadata={"r_in": r_in, "r_out": r_out},
    )


def hyperbolic_disk(eps: float = 0.01) -> ConformalPatch:
    """Poincare disk ``2/(1-|z|^2)`` truncated to ``|z| <= 1 - eps``."""
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    rad = 1.0 - eps
    return ConformalPatch(
        (-rad, rad), (-rad, rad),
        conformal_factor=lambda z: 2.0 / (1.0 - np.abs(z) ** 2),
        level_set=lambda z: np.abs(z) - rad,
        escape_distance=lambda z: rad - np.abs(z),
        descriptor=f"hyperbolic_disk(eps={eps:g})",
        metadata={"eps": eps, "truncation_radius": rad},
    )


def catenoid_patch(s_half: float = 1.0, t_half: float = 1.5) -> ConformalPatch:
    """Catenoid ``(cosh s cos t, cosh s sin t, s)`` with ``lambda = cosh s``."""
    def chi(z):
        z = np.asarray(z, dtype=complex)
        s, t = z.real, z.imag
        return np.stack([np.cosh(s) * np.cos(t), np.cosh(s) * np.sin(t), s], axis=-1)

    return ConformalPatch(
        (-s_half, s_half), (-t_half, t_half),
        conformal_factor=lambda z: np.cosh(np.real(z)),
        immersion=chi,
        escape_distance=lambda z: s_half - np.abs(np.real(z)),
        descriptor=f"catenoid(s<={s_half:g}, |t|<={t_half:g})",
    )


# ----------------------------------------------------------- diagnostics

def limit_set_sample(patch: ConformalPatch, boundary_margin: Optional[float] = None,
                     count: int = 10_000, seed: int = 0, max_rounds: int = 200) -> np.ndarray:
    """Images of random parameter points within ``boundary_margin`` of the
    escape boundary. Default margin is 1% of the rectangle diagonal."""
    if patch.immersion is None:
        raise ValueError("patch has no immersion")
    if patch.escape_distance is None:
        raise ValueError("patch declares no escape boundary")
    margin = 1e-2 * patch.diameter if boundary_margin is None else float(boundary_margin)
    rng = np.random.default_rng(seed)
    (u0, u1), (v0, v1) = patch.u_range, patch.v_range
    kept = []
    total = 0
    for _ in range(max_rounds):
        z = rng.uniform(u0, u1, 4 * count) + 1j * rng.uniform(v0, v1, 4 * count)
        z = z[patch.contains(z)]
        z = z[patch.escape_distance(z) < margin]
        kept.append(z)
        total += z.size
        if total >= count:
            break
    if total == 0:
        raise ValueError("empty escape region for the requested margin")
    z = np.concatenate(kept)[:count]
    return patch.immersion(z)


def immersion_metric_residual(patch: ConformalPatch, z, step: float = 1e-5) -> np.ndarray:
    """Max over ``|chi_u|^2/lambda^2 - 1``, ``|chi_v|^2/lambda^2 - 1`` and
    ``<chi_u, chi_v>/lambda^2`` (absolute values), per sample point."""
    if patch.immersion is None:
        raise ValueError("patch has no immersion")
    z = np.asarray(z, dtype=complex)
    chi = patch.immersion
    xu = (chi(z + step) - chi(z - step)) / (2 * step)
    xv = (chi(z + 1j * step) - chi(z - 1j * step)) / (2 * step)
    lam2 = patch.conformal_factor(z) ** 2
    r = np.stack([np.sum(xu * xu, -1) / lam2 - 1, np.sum(xv * xv, -1) / lam2 - 1,
                  np.sum(xu * xv, -1) / lam2], axis=-1)
    return np.max(np.abs(r), axis=-1)


def coordinate_laplacian(patch: ConformalPatch, z, step: float = 1e-2) -> np.ndarray:
    """Five-point flat Laplacian of each immersion coordinate, shape ``(..., n)``."""
    chi = patch.immersion
    z = np.asarray(z, dtype=complex)
    return (chi(z + step) + chi(z - step) + chi(z + 1j * step) + chi(z - 1j * step)
            - 4 * chi(z)) / step**2
