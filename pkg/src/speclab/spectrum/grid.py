"""Finite-difference Laplace-Beltrami operator on conformal patches.

For the metric ``lambda^2 |dz|^2`` the Rayleigh quotient of ``v`` is
``int |grad v|^2 dA / int lambda^2 v^2 dA`` with flat gradient and area, so
the discrete problem is ``A v = mu M v`` with ``A`` the five-point stencil
(no ``1/spacing^2``) and ``M = diag(lambda^2 spacing^2)``.

Curved boundaries given by a level set are handled by a symmetric
fractional-distance correction: a stencil arm of length ``spacing`` that
crosses the boundary at ``theta * spacing`` contributes ``1/theta`` to the
diagonal instead of coupling to the outside node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

__all__ = [
    "Region",
    "ball_region",
    "strip_region",
    "GridDiscretization",
    "SpectralProblem",
    "discretize",
    "laplace_beltrami",
]

_THETA_MIN = 1e-2
_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class Region:
    """Closed region ``{level_set <= 0}`` of the parameter plane."""

    level_set: Callable[[np.ndarray], np.ndarray]
    descriptor: str = ""

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.level_set(z)) <= 0


def ball_region(center: complex, radius: float) -> Region:
    """Euclidean parameter ball; ``radius <= 0`` gives the empty region."""
    if radius <= 0:
        return Region(lambda z: np.ones(np.shape(z)), "empty")
    return Region(lambda z: np.abs(np.asarray(z) - center) - radius,
                  f"ball({center}, {radius:g})")


def strip_region(half_width: float) -> Region:
    """``{|v| <= half_width}``."""
    if half_width <= 0:
        return Region(lambda z: np.ones(np.shape(z)), "empty")
    return Region(lambda z: np.abs(np.imag(z)) - half_width, f"strip(|v|<={half_width:g})")


@dataclass
class GridDiscretization:
    """Uniform node grid over a patch with node flags.

    Flags: 0 interior unknown, 1 Dirichlet boundary (outside the domain or on
    the rectangle edge), 2 excluded (inside the removed compact set).
    """

    patch: object
    spacing: float
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    flags: np.ndarray
    phi: np.ndarray  # level set of the free domain (negative inside), +inf on edges
    conformal_factor: np.ndarray
    unknown_index: np.ndarray
    A_domain: sp.csr_matrix = field(repr=False)
    domain_index: np.ndarray = field(repr=False)
    _graph: Optional[sp.csr_matrix] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.z.shape

    @property
    def unknown(self) -> np.ndarray:
        return self.flags == 0

    @property
    def excluded(self) -> np.ndarray:
        return self.flags == 2

    @property
    def in_domain(self) -> np.ndarray:
        return self.flags != 1

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def node_area(self) -> np.ndarray:
        """Riemannian area ``lambda^2 spacing^2`` per node (0 outside)."""
        lam = np.where(self.in_domain, self.conformal_factor, 0.0)
        return lam**2 * self.spacing**2

    def interior_mask(self, band: int = 1) -> np.ndarray:
        """Domain nodes at least ``band`` steps away from any non-domain node."""
        ok = self.in_domain.copy()
        for _ in range(band):
            nxt = ok.copy()
            nxt[1:, :] &= ok[:-1, :]
            nxt[:-1, :] &= ok[1:, :]
            nxt[:, 1:] &= ok[:, :-1]
            nxt[:, :-1] &= ok[:, 1:]
            nxt[0, :] = nxt[-1, :] = False
            nxt[:, 0] = nxt[:, -1] = False
            ok = nxt
        return ok

    def to_vector(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.unknown]

    def to_full(self, vec: np.ndarray, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=np.result_type(vec, float))
        out[self.unknown] = vec
        return out

    def nearest_node(self, z0: complex) -> tuple:
        i = int(np.clip(round((z0.real - self.u[0]) / self.spacing), 0, self.u.size - 1))
        j = int(np.clip(round((z0.imag - self.v[0]) / self.spacing), 0, self.v.size - 1))
        return i, j


@dataclass
class SpectralProblem:
    """Generalized eigenproblem ``A v = mu M v`` over the unknown nodes."""

    stiffness: sp.csr_matrix
    mass: np.ndarray  # diagonal

    @property
    def size(self) -> int:
        return self.mass.size

    def rayleigh(self, v) -> float:
        v = np.asarray(v)
        return float(v @ (self.stiffness @ v) / (v @ (self.mass * v)))

    def export(self, stiffness_path, mass_path):
        scipy.io.mmwrite(str(stiffness_path), self.stiffness.tocoo(), symmetry="symmetric")
        np.savetxt(mass_path, self.mass, delimiter=",", header="mass", comments="", fmt="%.17g")


def _axis(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return lo + spacing * np.arange(n)


def discretize(patch, spacing: float, excluded=None, min_nodes: int = 32):
    """Assemble the Dirichlet problem on the patch minus ``excluded``.

    ``excluded`` is a boolean predicate on parameter points; a ``Region``
    additionally gets fractional boundary treatment. Returns
    ``(GridDiscretization, SpectralProblem)``.
    """
    (u0, u1), (v0, v1) = patch.u_range, patch.v_range
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    u = _axis(u0, u1, spacing)
    v = _axis(v0, v1, spacing)
    if min(u.size, v.size) < min_nodes:
        raise ValueError(f"spacing {spacing:g} gives fewer than {min_nodes} nodes per side")
    U, V = np.meshgrid(u, v, indexing="ij")
    z = U + 1j * V

    phi = patch.level_set(z).astype(float) if patch.level_set is not None else np.full(z.shape, -1.0)
    edge = np.zeros(z.shape, bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    in_domain = (phi < 0) & ~edge

    flags = np.where(in_domain, 0, 1).astype(np.int8)
    free_phi = phi.copy()
    if excluded is not None:
        K = np.asarray(excluded(z), dtype=bool) & in_domain
        flags[K] = 2
        if isinstance(excluded, Region):
            free_phi = np.maximum(phi, -np.asarray(excluded.level_set(z), dtype=float))
    free_phi[edge] = np.inf

    lam = np.full(z.shape, np.nan)
    lam[in_domain] = patch.conformal_factor(z[in_domain])
    if not np.all(np.isfinite(lam[in_domain])) or np.any(lam[in_domain] <= 0):
        raise ValueError("conformal factor must be positive and finite on the domain")

    unknown = flags == 0
    if not np.any(unknown):
        raise ValueError("empty interior after exclusion")

    domain_index = -np.ones(z.shape, dtype=np.int64)
    domain_index[in_domain] = np.arange(int(in_domain.sum()))
    A_domain = _assemble(in_domain, unknown, phi, free_phi, domain_index)

    unknown_index = -np.ones(z.shape, dtype=np.int64)
    unknown_index[unknown] = np.arange(int(unknown.sum()))
    sel = domain_index[unknown]
    A = A_domain[sel][:, sel].tocsr()
    # arms from unknowns into excluded nodes become Dirichlet arms
    ex_in_domain = flags[in_domain] == 2
    if np.any(ex_in_domain):
        extra = _excluded_diagonal(unknown, flags == 2, free_phi, isinstance(excluded, Region))
        A = (A + sp.diags(extra[unknown])).tocsr()
    M = lam[unknown] ** 2 * spacing**2

    grid = GridDiscretization(patch, spacing, u, v, z, flags, free_phi, lam, unknown_index,
                              A_domain, domain_index)
    return grid, SpectralProblem(A, M)


def _assemble(in_domain, unknown, phi, free_phi, domain_index) -> sp.csr_matrix:
    """Stiffness over all domain nodes; outer boundary arms use the
    fractional correction from the domain level set."""
    n = int(in_domain.sum())
    I, J = np.nonzero(in_domain)
    me = domain_index[I, J]
    diag = np.zeros(n)
    rows, cols = [], []
    for di, dj in _DIRS:
        I2, J2 = I + di, J + dj
        nb_in = in_domain[I2, J2]
        rows.append(me[nb_in])
        cols.append(domain_index[I2[nb_in], J2[nb_in]])
        diag[me[nb_in]] += 1.0
        out = ~nb_in
        pi = phi[I[out], J[out]]
        pj = phi[I2[out], J2[out]]
        with np.errstate(divide="ignore", invalid="ignore"):
            th = np.where(pj >= 0, pi / (pi - pj), 1.0)
        th = np.clip(np.nan_to_num(th, nan=1.0), _THETA_MIN, 1.0)
        np.add.at(diag, me[out], 1.0 / th)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    off = sp.csr_matrix((-np.ones(r.size), (r, c)), shape=(n, n))
    return (off + sp.diags(diag)).tocsr()


def _excluded_diagonal(unknown, excl, free_phi, fractional) -> np.ndarray:
    """Extra diagonal weight for stencil arms from unknowns into the excluded set.

    In ``A_domain`` these arms are off-diagonal couplings; restricted to the
    unknowns they vanish and the diagonal already carries 1 per arm, which is
    the node-based Dirichlet closure. With a level-set region the arm is
    shortened to the crossing point instead.
    """
    extra = np.zeros(unknown.shape)
    if not fractional:
        return extra
    I, J = np.nonzero(unknown)
    for di, dj in _DIRS:
        I2, J2 = I + di, J + dj
        hit = excl[I2, J2]
        pi = free_phi[I[hit], J[hit]]
        pj = free_phi[I2[hit], J2[hit]]
        with np.errstate(divide="ignore", invalid="ignore"):
            th = np.where(pj >= 0, pi / (pi - pj), 1.0)
        th = np.clip(np.nan_to_num(th, nan=1.0), _THETA_MIN, 1.0)
        np.add.at(extra, (I[hit], J[hit]), 1.0 / th - 1.0)
    return extra


def laplace_beltrami(grid: GridDiscretization, values: np.ndarray) -> np.ndarray:
    """Pointwise ``lambda^-2`` times the five-point flat Laplacian.

    ``values`` is a full-grid array; nodes whose stencil touches a
    non-finite value, and nodes outside the domain, get NaN.
    """
    f = np.asarray(values, dtype=float)
    out = np.full(f.shape, np.nan)
    c = f[1:-1, 1:-1]
    lap = (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4.0 * c) / grid.spacing**2
    out[1:-1, 1:-1] = lap
    out[~grid.in_domain] = np.nan
    with np.errstate(invalid="ignore"):
        return out / grid.conformal_factor**2
