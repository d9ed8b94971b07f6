"""Generalized eigenpairs, fundamental tones and Persson sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .grid import GridDiscretization, SpectralProblem, discretize

__all__ = [
    "EigenSolverError",
    "EigenResult",
    "smallest_eigs",
    "fundamental_tone",
    "PerssonSweep",
    "persson_sweep",
]


class EigenSolverError(RuntimeError):
    """Raised when the eigensolver misses its residual contract."""

    def __init__(self, message: str, best_residual: float = math.inf):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass
class EigenResult:
    """Eigenpairs of ``A v = mu M v`` sorted ascending.

    Eigenvectors are ``M``-orthonormal columns. ``residuals`` are the dual
    norms ``||A v - mu M v||_{M^-1}``, which equal the Euclidean residual of
    the symmetrized matrix ``M^-1/2 A M^-1/2``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    iterations: int
    tol: float

    def to_json(self) -> str:
        return json.dumps({
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "iterations": int(self.iterations),
            "tol": self.tol,
        }, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, mu in enumerate(self.eigenvalues, 1):
                w.writerow([i, repr(float(mu))])


def _residuals(B, Y, mu):
    R = B @ Y - Y * mu
    return np.linalg.norm(R, axis=0)


def _rayleigh_ritz(B, Y):
    H = Y.T @ (B @ Y)
    vals, Q = np.linalg.eigh(0.5 * (H + H.T))
    Y = Y @ Q
    return vals, Y, _residuals(B, Y, vals)


def smallest_eigs(problem: SpectralProblem, k: int = 1, tol: float = 1e-10,
                  maxiter: Optional[int] = None, polish: int = 60) -> EigenResult:
    """``k`` smallest generalized eigenpairs by shift-invert Lanczos at zero.

    The ground state is then refined by inverse iteration with the same
    factorization (at most ``polish`` steps, stopping once it is stationary
    componentwise), which makes it accurate relative to its small values
    near the Dirichlet boundary. Raises
    :class:`EigenSolverError` when a residual exceeds
    ``tol * max(1, |mu|)`` plus a rounding floor of ``1000 eps ||B||_inf``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = problem.size
    if k >= n - 1:
        raise ValueError(f"k={k} too large for a problem of size {n}")
    d = 1.0 / np.sqrt(problem.mass)
    D = sp.diags(d)
    B = (D @ problem.stiffness @ D).tocsc()
    lu = splu(B)
    count = [0]

    def solve(x):
        count[0] += 1
        return lu.solve(np.asarray(x, dtype=float))

    OPinv = LinearOperator(B.shape, matvec=solve, dtype=float)
    # fixed start vector: ARPACK otherwise draws a random one, and repeated
    # runs would differ in the last digits
    v0 = np.random.default_rng(0).uniform(0.5, 1.5, n)
    try:
        vals, Y = eigsh(B, k=k, sigma=0.0, which="LM", OPinv=OPinv, tol=tol * 1e-2,
                        maxiter=maxiter, v0=v0)
    except ArpackNoConvergence as exc:
        best = math.inf
        if exc.eigenvalues.size:
            best = float(np.max(_residuals(B, exc.eigenvectors, exc.eigenvalues)))
        raise EigenSolverError("eigensolver did not converge", best) from exc

    vals, Y, res = _rayleigh_ritz(B, Y)
    # single-vector inverse iteration on the (simple) ground state; block
    # Rayleigh-Ritz mixing would pollute its small boundary components
    y = Y[:, 0] * np.sign(np.sum(Y[:, 0]))
    for _ in range(polish):
        yn = lu.solve(y)
        count[0] += 1
        yn /= np.linalg.norm(yn)
        done = np.all(yn > 0) and np.max(np.abs(yn / y - 1.0)) < 1e-12
        y = yn
        if done:
            break
    Y[:, 0] = y
    vals[0] = float(y @ (B @ y))
    res[0] = _residuals(B, y[:, None], vals[:1])[0]
    floor = 1e3 * np.finfo(float).eps * abs(B).sum(axis=1).max()
    limit = tol * np.maximum(1.0, np.abs(vals)) + floor
    if np.any(res > limit):
        raise EigenSolverError(f"residual {np.max(res):.3g} above contract", float(np.max(res)))
    V = Y * d[:, None]
    # fix the sign so the ground state is positive
    for j in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] *= -1.0
    return EigenResult(vals, V, res, count[0], tol)


def fundamental_tone(patch, spacing: float, excluded=None, tol: float = 1e-10) -> float:
    """``lambda*(M \\ K)``: the first Dirichlet eigenvalue with ``K`` removed."""
    _, problem = discretize(patch, spacing, excluded)
    return float(smallest_eigs(problem, 1, tol).eigenvalues[0])


@dataclass
class PerssonSweep:
    labels: list
    values: np.ndarray
    running_sup: np.ndarray
    monotone: bool
    truncation: str = ""
    sizes: list = field(default_factory=list)

    @property
    def sup(self) -> float:
        return float(self.running_sup[-1])

    def to_json(self) -> str:
        return json.dumps({
            "labels": [str(x) for x in self.labels],
            "values": [float(x) for x in self.values],
            "running_sup": [float(x) for x in self.running_sup],
            "monotone": bool(self.monotone),
            "truncation": self.truncation,
            "sizes": [int(s) for s in self.sizes],
        }, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "lambda_star"])
            for lab, val in zip(self.labels, self.values):
                w.writerow([lab, repr(float(val))])


def persson_sweep(patch, spacing: float, exhaustion: Sequence, labels: Optional[Sequence] = None,
                  tol: float = 1e-10, mono_rtol: float = 1e-9) -> PerssonSweep:
    """``lambda*(M \\ K_l)`` along an increasing exhaustion.

    Nestedness is checked on the grid nodes: each ``K_l`` must contain the
    previous one. ``monotone`` records whether the computed sequence is
    non-decreasing up to ``mono_rtol``.
    """
    if len(exhaustion) == 0:
        raise ValueError("empty exhaustion")
    labels = list(range(len(exhaustion))) if labels is None else list(labels)
    values, sizes = [], []
    prev = None
    for K in exhaustion:
        grid, problem = discretize(patch, spacing, K)
        mask = grid.excluded
        if prev is not None and np.any(prev & ~mask):
            raise ValueError("exhaustion is not nested")
        prev = mask
        values.append(float(smallest_eigs(problem, 1, tol).eigenvalues[0]))
        sizes.append(problem.size)
    vals = np.array(values)
    run = np.maximum.accumulate(vals)
    monotone = bool(np.all(np.diff(vals) >= -mono_rtol * np.abs(vals[:-1])))
    trunc = patch.descriptor
    return PerssonSweep(labels, vals, run, monotone, trunc, sizes)
