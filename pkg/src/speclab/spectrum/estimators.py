"""Spectral estimators: Barta lower bounds, the first-stage witness, and
the ball-property upper bound built on intrinsic graph distances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ..comparison import RadialModel, convexity_data, radial_convex_function
from ..subharmonic import build_barrier
from .grid import GridDiscretization, SpectralProblem, discretize, laplace_beltrami

__all__ = [
    "BartaResult",
    "barta_bound",
    "WitnessReport",
    "CircleCover",
    "boundary_circle_cover",
    "barta_witness",
    "geodesic_distance",
    "BallPropertyReport",
    "ball_property_check",
]


# ------------------------------------------------------------------ Barta

@dataclass(frozen=True)
class BartaResult:
    bound: float
    argmin: Optional[tuple]
    nodes: int
    mode: str

    def __float__(self):
        return self.bound


def _as_full(grid: GridDiscretization, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape == grid.shape:
        return w
    if w.ndim == 1 and w.size == int(grid.unknown.sum()):
        return grid.to_full(w, fill=np.nan)
    raise ValueError("w must be a full-grid array or a vector over the unknown nodes")


def barta_bound(grid: GridDiscretization, problem: SpectralProblem, w, region=None,
                mode: str = "dirichlet") -> BartaResult:
    """``inf (-Delta_g w)/w`` over the region nodes.

    ``mode="dirichlet"`` applies the assembled operator, so values of ``w``
    off the unknown nodes are treated as zero (the discrete Dirichlet
    problem); for its ground state this gives ``mu_1`` at every node.
    ``mode="pointwise"`` applies the full five-point stencil to a full-grid
    ``w``, which must then be defined one node beyond the region.

    ``region`` is a boolean full-grid mask or a predicate on parameter points;
    ``None`` means every admissible node.
    """
    full = _as_full(grid, w)
    if region is None:
        mask = np.ones(grid.shape, bool)
    elif callable(region):
        mask = np.asarray(region(grid.z), dtype=bool)
    else:
        mask = np.asarray(region, dtype=bool)

    if mode == "dirichlet":
        mask = mask & grid.unknown
        wv = full[grid.unknown]
        if np.any(~np.isfinite(wv)):
            raise ValueError("w undefined on unknown nodes")
        # the region and its collar of unknown neighbours must carry w > 0
        collar = _dilate(mask) & grid.unknown
        if np.any(full[collar] <= 0):
            raise ValueError("w must be positive on the region and its collar")
        q_vec = (problem.stiffness @ wv) / (problem.mass * wv)
        q = grid.to_full(q_vec, fill=np.nan)
    elif mode == "pointwise":
        mask = mask & grid.in_domain
        collar = _dilate(mask)
        if np.any(~np.isfinite(full[collar])) or np.any(full[collar] <= 0):
            raise ValueError("w must be positive and finite on the region and its collar")
        with np.errstate(divide="ignore", invalid="ignore"):
            q = -laplace_beltrami(grid, full) / full
        mask = mask & np.isfinite(q)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if not np.any(mask):
        raise ValueError("region contains no admissible node")
    vals = np.where(mask, q, np.inf)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    return BartaResult(float(vals[k]), tuple(int(i) for i in k), int(mask.sum()), mode)


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


# ---------------------------------------------------------------- witness

@dataclass(frozen=True)
class CircleCover:
    """``count`` balls of radius ``eps`` centred at equally spaced points of the
    circle ``|x - center| = radius`` in the ``x3 = 0`` plane."""

    center: tuple
    radius: float
    count: int
    eps: float

    def centers(self) -> np.ndarray:
        ang = 2.0 * math.pi * np.arange(self.count) / self.count
        c = np.asarray(self.center, dtype=float)
        return c + self.radius * np.column_stack([np.cos(ang), np.sin(ang), np.zeros(self.count)])

    def balls(self) -> list:
        return [(x, self.eps) for x in self.centers()]

    def __len__(self):
        return self.count


def boundary_circle_cover(radius: float, r1: float, psi: Callable[[float], float],
                          center=(0.0, 0.0, 0.0)) -> CircleCover:
    """Equal balls covering the circle ``|x - center| = radius``, as large as
    ``sum psi(eps) <= r1`` and ``eps <= r1`` allow.

    The count is the least one for which consecutive balls overlap on the
    circle, ``2 radius sin(pi/(2k)) <= eps``.
    """

    def count(eps):
        return max(2, int(math.ceil(math.pi / (2.0 * math.asin(min(1.0, eps / (2.0 * radius)))))))

    def total(eps):
        return count(eps) * psi(eps)

    lo, hi = 1e-12, min(r1, 2.0 * radius)
    if total(hi) <= r1:
        eps = hi
    else:
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            lo, hi = (mid, hi) if total(mid) <= r1 else (lo, mid)
        eps = lo
    return CircleCover(tuple(float(c) for c in center), float(radius), count(eps), float(eps))


@dataclass
class WitnessReport:
    """First-stage witness ``w_1`` and its measured Barta bound."""

    r1: float
    b1: float
    k1: int
    bound: float
    argmin: Optional[tuple]
    region_nodes: int
    w_min: float
    cover_sum: float
    baseline: float
    quadrature_error: float = 0.0
    w: np.ndarray = field(repr=False, default=None)

    @property
    def predicted_order(self) -> float:
        return 1.0 / math.sqrt(self.r1)

    @property
    def empirical_constant(self) -> float:
        return self.bound * math.sqrt(self.r1)

    def to_json(self) -> str:
        return json.dumps({
            "r1": self.r1, "b1": self.b1, "k1": self.k1, "bound": self.bound,
            "argmin": self.argmin, "region_nodes": self.region_nodes, "w_min": self.w_min,
            "cover_sum": self.cover_sum, "baseline": self.baseline,
            "quadrature_error": self.quadrature_error,
            "predicted_order": self.predicted_order,
            "empirical_constant": self.empirical_constant,
        }, indent=2)


def _direct_sum(prof, X: np.ndarray, centers: np.ndarray, chunk: int = 2_000_000):
    """``sum_j g(|X - x_j|)`` and the mask of points inside some ``B_eps(x_j)``."""
    out = np.zeros(X.shape[0])
    inside = np.zeros(X.shape[0], bool)
    step = max(1, chunk // max(1, centers.shape[0]))
    for i in range(0, X.shape[0], step):
        rho = np.linalg.norm(X[i:i + step, None, :] - centers[None, :, :], axis=-1)
        out[i:i + step] = prof.g_at(rho).sum(axis=1)
        inside[i:i + step] = np.any(rho < prof.a, axis=1)
    return out, inside


def _ring_sum(prof, X: np.ndarray, cover: CircleCover, accuracy: float = 40.0):
    """``sum_j g(|X - x_j|)`` for an equally spaced circle cover.

    The sum over ``k`` equally spaced angles is the ``k``-point trapezoid rule
    for ``(k/2 pi) int g(|X - ring(psi)|) dpsi``; for a point at distance ``d``
    from the ring both it and an ``M``-point rule agree with the integral to
    about ``exp(-M d / radius)``. Points with ``k d / radius < accuracy`` are
    summed directly; the others use ``M = ceil(accuracy radius / d)`` angles.
    """
    c = np.asarray(cover.center, dtype=float)
    Y = X - c
    rxy = np.hypot(Y[:, 0], Y[:, 1])
    d = np.hypot(rxy - cover.radius, Y[:, 2])
    with np.errstate(divide="ignore"):
        M = np.minimum(np.ceil(accuracy * cover.radius / d), cover.count).astype(np.int64)
    near = M >= cover.count
    out = np.zeros(X.shape[0])
    inside = np.zeros(X.shape[0], bool)
    if np.any(near):
        out[near], inside[near] = _direct_sum(prof, X[near], cover.centers())
    far = np.nonzero(~near)[0]
    # group by power-of-two angle counts so each group is one vectorized pass
    levels = 2 ** np.ceil(np.log2(np.maximum(M[far], 8))).astype(np.int64)
    for m in np.unique(levels):
        idx = far[levels == m]
        ang = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        ring = c + cover.radius * np.column_stack([np.cos(ang), np.sin(ang), np.zeros(m)])
        part, _ = _direct_sum(prof, X[idx], ring)
        out[idx] = part * (cover.count / m)
    return out, inside


def barta_witness(patch, spacing: float, cover, model: RadialModel, r1: float,
                  R_D: float, D_center=None, theta: float = 1.0, psi=None,
                  S=None, check_points: int = 32, seed: int = 0) -> WitnessReport:
    """Build ``w_1 = sum_j (2 ||u_j|| - u_j) - b_1 F`` and measure its Barta bound.

    ``u_j = g_j(|phi - x_j|)`` are the radial barriers with ``a = eps_j``,
    ``F`` is the convex defining function of ``D = B_{R_D}`` and
    ``b_1 = 8 sqrt(r1)``. The bound is the pointwise minimum of
    ``(-Delta w_1)/w_1`` over the nodes that map into a cover ball or into the
    collar ``dist(phi, boundary D) < b_1``, which is where the compact set of
    the construction is not.

    ``cover`` is a list of ``(x_j, eps_j)`` or a :class:`CircleCover`; the
    latter is summed by ring quadrature and the result is compared with the
    direct sum at ``check_points`` random nodes (``quadrature_error``).
    """
    from ..hausdorff import gauge_for_theta

    if len(cover) < 2:
        raise ValueError("the cover needs k1 >= 2 balls")
    if patch.immersion is None:
        raise ValueError("patch needs an immersion")
    psi = gauge_for_theta(theta) if psi is None else psi
    if isinstance(cover, CircleCover):
        groups = {cover.eps: None}
        eps = np.full(cover.count, cover.eps)
    else:
        eps = np.array([float(e) for _, e in cover])
        groups = {}
        for x_j, e in cover:
            groups.setdefault(float(e), []).append(np.asarray(x_j, dtype=float))
    if np.any(eps <= 0) or np.any(eps > r1 * (1 + 1e-12)):
        raise ValueError("cover radii must lie in (0, r1]")
    cover_sum = float(np.sum(psi(eps)))
    if cover_sum > r1 * (1 + 1e-9):
        raise ValueError(f"sum psi(eps_j) = {cover_sum:.4g} exceeds r1 = {r1:.4g}")
    b1 = 8.0 * math.sqrt(r1)

    grid, problem = discretize(patch, spacing)
    use = _dilate(grid.in_domain)
    Xu = patch.immersion(grid.z[use])
    o = np.zeros(3) if D_center is None else np.asarray(D_center, dtype=float)

    total = np.zeros(Xu.shape[0])
    near_cover = np.zeros(Xu.shape[0], bool)
    qerr = 0.0
    for e, centers in groups.items():
        prof = build_barrier(model, theta, e, S=S, R=model.t_max)
        if isinstance(cover, CircleCover):
            reach = np.linalg.norm(Xu - o, axis=-1).max() + np.linalg.norm(
                np.asarray(cover.center) - o) + cover.radius
            if reach > prof.R:
                raise ValueError("model range too short for the distances on the patch")
            s, ins = _ring_sum(prof, Xu, cover)
            pick = np.random.default_rng(seed).choice(Xu.shape[0], min(check_points, Xu.shape[0]),
                                                      replace=False)
            exact, _ = _direct_sum(prof, Xu[pick], cover.centers())
            qerr = max(qerr, float(np.max(np.abs(s[pick] - exact) / np.abs(exact))))
            n_e = cover.count
        else:
            C = np.array(centers)
            far = np.max(np.linalg.norm(Xu[:, None, :] - C[None, :, :], axis=-1)) \
                if Xu.shape[0] * C.shape[0] < 5e7 else None
            if far is not None and far > prof.R:
                raise ValueError("model range too short for the distances on the patch")
            s, ins = _direct_sum(prof, Xu, C)
            n_e = C.shape[0]
        total += 2.0 * n_e * prof.sup_bound - s
        near_cover |= ins

    data = convexity_data(model, R_D)
    F = radial_convex_function(data, o)
    w1 = np.full(grid.shape, np.nan)
    w1[use] = total - b1 * F(Xu)
    if np.any(w1[use] <= 0):
        raise ValueError("w_1 is not positive on the patch")

    dist_o = np.full(grid.shape, np.nan)
    dist_o[use] = np.linalg.norm(Xu - o, axis=-1)
    cov_mask = np.zeros(grid.shape, bool)
    cov_mask[use] = near_cover
    region = grid.in_domain & ((R_D - dist_o < b1) | cov_mask)
    res = barta_bound(grid, problem, w1, region, mode="pointwise")
    base = barta_bound(grid, problem, np.ones(grid.shape), region, mode="pointwise")
    return WitnessReport(r1, b1, len(cover), res.bound, res.argmin, res.nodes,
                         float(np.nanmin(w1[grid.in_domain])), cover_sum, base.bound, qerr, w1)


# ------------------------------------------------------ intrinsic distance

_NEIGHBOURS = ((1, 0), (0, 1), (1, 1), (1, -1))


def _graph(grid: GridDiscretization) -> sp.csr_matrix:
    if grid._graph is not None:
        return grid._graph
    ok = grid.in_domain
    idx = grid.domain_index
    lam = grid.conformal_factor
    n1, n2 = grid.shape
    rows, cols, wts = [], [], []
    for di, dj in _NEIGHBOURS:
        i0, i1 = max(0, -di), n1 - max(0, di)
        j0, j1 = max(0, -dj), n2 - max(0, dj)
        a = (slice(i0, i1), slice(j0, j1))
        b = (slice(i0 + di, i1 + di), slice(j0 + dj, j1 + dj))
        both = ok[a] & ok[b]
        length = grid.spacing * math.hypot(di, dj)
        rows.append(idx[a][both])
        cols.append(idx[b][both])
        wts.append(0.5 * (lam[a][both] + lam[b][both]) * length)
    r, c, w = (np.concatenate(x) for x in (rows, cols, wts))
    n = int(ok.sum())
    G = sp.csr_matrix((w, (r, c)), shape=(n, n))
    grid._graph = G
    return G


def _source_nodes(grid, sources) -> list:
    if isinstance(sources, tuple) and len(sources) == 2 and \
            all(isinstance(s, (int, np.integer)) for s in sources):
        return [sources]
    items = list(sources) if isinstance(sources, (list, np.ndarray)) else [sources]
    return [(int(s[0]), int(s[1])) if isinstance(s, tuple) else grid.nearest_node(complex(s))
            for s in items]


def geodesic_distance(grid: GridDiscretization, sources) -> np.ndarray:
    """Shortest-path distance on the 8-neighbour node graph.

    Edge weights are the Euclidean edge length times the mean conformal
    factor of the endpoints. ``sources`` is one parameter point, a list of
    them, or ``(i, j)`` node tuples; the result is the distance to the
    nearest source as a full-grid array (``inf`` off the domain and on
    components not reached).
    """
    ids = []
    for i, j in _source_nodes(grid, sources):
        k = grid.domain_index[i, j]
        if k < 0:
            raise ValueError(f"source node {(i, j)} is not in the domain")
        ids.append(int(k))
    d = dijkstra(_graph(grid), directed=False, indices=ids, min_only=True)
    out = np.full(grid.shape, np.inf)
    out[grid.in_domain] = d
    return out


# ---------------------------------------------------------- ball property

@dataclass
class BallPropertyReport:
    R: float
    delta: float
    volumes: np.ndarray        # vol B_R(x_j)
    inner_volumes: np.ndarray  # vol B_{delta R}(x_j)
    ratios: np.ndarray
    C: float
    bound: float
    energies: np.ndarray       # int |grad phi_j|^2
    masses: np.ndarray         # int phi_j^2
    critical_lambda: float     # I_lambda(phi_j) < 0 for all j iff lambda > this
    test_lambda: float
    rayleigh_values: np.ndarray  # I_lambda(phi_j) at test_lambda

    def to_json(self) -> str:
        return json.dumps({
            "R": self.R, "delta": self.delta,
            "volumes": self.volumes.tolist(), "inner_volumes": self.inner_volumes.tolist(),
            "ratios": self.ratios.tolist(), "C": self.C, "bound": self.bound,
            "critical_lambda": self.critical_lambda, "test_lambda": self.test_lambda,
            "rayleigh_values": self.rayleigh_values.tolist(),
        }, indent=2)


def _edge_energy(grid: GridDiscretization, phi: np.ndarray) -> float:
    """Flat Dirichlet energy from horizontal and vertical node differences;
    ``phi`` vanishes off the domain. It equals the Riemannian energy by
    conformal invariance in dimension two."""
    f = np.where(grid.in_domain, phi, 0.0)
    return float(np.sum(np.diff(f, axis=0) ** 2) + np.sum(np.diff(f, axis=1) ** 2))


def ball_property_check(grid: GridDiscretization, centers: Sequence[complex], R: float,
                        delta: float, test_factor: float = 1.1) -> BallPropertyReport:
    """Volume ratios of intrinsic balls and the cutoff Rayleigh test.

    Volumes sum ``lambda^2 spacing^2`` over nodes within graph distance ``R``
    (or ``delta R``). The cutoff is ``phi_j = 1`` up to ``delta R`` and
    linear down to zero at ``R``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if R <= 0 or len(centers) == 0:
        raise ValueError("need R > 0 and at least one center")
    area = grid.node_area
    owner = np.zeros(grid.shape, dtype=np.int64)
    vol, vol_in, E, Q = [], [], [], []
    for c in centers:
        d = geodesic_distance(grid, complex(c))
        ball = d <= R
        owner += ball
        vol.append(float(area[ball].sum()))
        vol_in.append(float(area[d <= delta * R].sum()))
        phi = np.clip((R - d) / ((1.0 - delta) * R), 0.0, 1.0)
        phi[~np.isfinite(d)] = 0.0
        E.append(_edge_energy(grid, phi))
        Q.append(float(np.sum(area * phi**2)))
    if np.any(owner > 1):
        raise ValueError("intrinsic balls overlap")
    vol, vol_in, E, Q = map(np.array, (vol, vol_in, E, Q))
    if np.any(vol_in <= 0):
        raise ValueError("inner ball contains no node; refine the grid")
    ratios = vol_in / vol
    C = float(np.max(1.0 / ratios))
    bound = C / (R**2 * (1.0 - delta) ** 2)
    lam_test = test_factor * bound
    return BallPropertyReport(R, delta, vol, vol_in, ratios, C, bound, E, Q,
                              float(np.max(E / Q)), lam_test, E - lam_test * Q)
