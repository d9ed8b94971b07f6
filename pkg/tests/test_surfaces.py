import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from speclab.surfaces import (
    AndradeParams,
    ConformalPatch,
    LabyrinthParams,
    andrade_conformality_residual,
    andrade_curvature,
    andrade_curvature_constants,
    andrade_cylinder_bounds,
    andrade_surface,
    catenoid_patch,
    condicn_partial_sums,
    coordinate_laplacian,
    fit_andrade_curvature,
    flat_disk,
    flat_square,
    hyperbolic_disk,
    immersion_metric_residual,
    labyrinth_patch,
    limit_set_sample,
    measure_andrade_cylinders,
)

P = AndradeParams(1.0, math.sqrt(3.0))


def random_points(rng, n, u=(-0.9, 0.9), v=(-5, 5)):
    return rng.uniform(*u, n) + 1j * rng.uniform(*v, n)


class TestAndrade:
    def test_rejects_order(self):
        with pytest.raises(ValueError):
            AndradeParams(2.0, 1.0)
        with pytest.raises(ValueError):
            andrade_surface(P, u_half_width=1.5)

    def test_conformal_factor_closed_form(self, rng):
        z = random_points(rng, 50)
        d, r1, r2 = P.d, P.r1, P.r2
        expect = d * np.exp(z.real) + d**2 / r2 * np.exp((r1 / r2 - 1) * z.real)
        np.testing.assert_allclose(andrade_surface(P).conformal_factor(z), expect, rtol=1e-14)

    def test_conformal_factor_from_immersion(self, rng):
        """First fundamental form of chi by finite differences equals lambda^2."""
        patch = andrade_surface(P)
        z = random_points(rng, 40)
        assert immersion_metric_residual(patch, z).max() < 1e-8

    def test_conformality_identity(self, rng):
        assert andrade_conformality_residual(P, random_points(rng, 20)).max() <= 1e-10
        assert andrade_surface(P).metadata["conformality_residual"] <= 1e-10

    def test_coordinates_harmonic(self, rng):
        patch = andrade_surface(P)
        lap = coordinate_laplacian(patch, random_points(rng, 30), step=1e-2)
        assert np.abs(lap).max() <= 1e-4

    def test_v_invariance(self, rng):
        patch = andrade_surface(P)
        u = rng.uniform(-1, 1, 30)
        shifts = rng.uniform(-20, 20, 30)
        np.testing.assert_array_equal(patch.conformal_factor(u + 0j),
                                      patch.conformal_factor(u + 1j * shifts))

    def test_uniform_lower_bound(self):
        """Minimum of the exact factor over |u| < 1: a dense scan agrees with
        the critical point of d e^u + (d^2/r2) e^(-alpha u). It lies below 2d."""
        lam = andrade_surface(P).conformal_factor
        u = np.linspace(-1, 1, 200001)
        scan = lam(u + 0j).min()
        a = P.alpha
        u_star = math.log(a * P.d / P.r2) / (1 + a)
        exact = float(lam(np.array([u_star + 0j]))[0]) if abs(u_star) < 1 else scan
        assert scan == pytest.approx(exact, rel=1e-9)
        assert scan > 0
        # value at the origin is d(1 + alpha), strictly below 2d
        assert lam(np.array([0j]))[0] == pytest.approx(P.d * (1 + a))
        assert lam(np.array([0j]))[0] < 2 * P.d

    def test_curvature_negative_and_v_independent(self, rng):
        u = rng.uniform(-0.95, 0.95, 40)
        K0 = andrade_curvature(P, u + 0j)
        K1 = andrade_curvature(P, u + 1j * rng.uniform(-30, 30, 40))
        assert np.all(K0 < 0)
        assert np.max(np.abs(K1 - K0)) <= 1e-6

    def test_curvature_closed_form(self):
        u = np.linspace(-0.95, 0.95, 41)
        K = andrade_curvature(P, u + 0j, step=1e-3)
        c1, c2 = andrade_curvature_constants(P)
        fc1, fc2, resid = fit_andrade_curvature(P, u, K)
        assert resid < 1e-5
        assert fc1 == pytest.approx(c1, rel=1e-4)
        assert fc2 == pytest.approx(c2, rel=1e-4)

    def test_curvature_bounded(self):
        u = np.linspace(-1, 1, 401)
        K = andrade_curvature(P, u + 0j)
        assert np.all(np.isfinite(K)) and np.abs(K).max() < 10.0

    def test_cylinder_bounds(self):
        u = np.array([-0.8, 0.0, 0.5])
        inner, outer, height = measure_andrade_cylinders(P, u, 400.0)
        ci, co, ch = andrade_cylinder_bounds(P, u)
        assert np.all(inner >= ci - 1e-9) and np.all(outer <= co + 1e-9)
        assert np.all(height <= ch + 1e-9)
        np.testing.assert_allclose(outer, co, rtol=1e-3)
        np.testing.assert_allclose(height, ch, rtol=1e-3)

    def test_limit_set_in_cylinders(self):
        patch = andrade_surface(P, 1.0, 10.0)
        X = limit_set_sample(patch, count=2000)
        u = np.linspace(-1, 1, 2001)
        ci, co, ch = andrade_cylinder_bounds(P, u)
        r = np.hypot(X[:, 0], X[:, 1])
        assert np.all(r <= co.max() + 1e-9)
        assert np.all(np.abs(X[:, 2]) <= ch.max() + 1e-9)


class TestLabyrinth:
    def test_constant_surrogate(self):
        p = LabyrinthParams(2, 0.5)
        patch = labyrinth_patch(p)
        lam = patch.conformal_factor(np.array([1.2 + 0.1j]))[0]
        assert lam == pytest.approx(math.cosh(0.5))
        assert 1.0 <= lam / p.C_n <= math.e**2

    def test_violation(self):
        with pytest.raises(ValueError):
            labyrinth_patch(LabyrinthParams(1, 1.0, epsilon=2.0))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.floats(0.0, 0.95), st.floats(0, 2 * math.pi))
    def test_factor_bounds(self, n, frac, arg):
        r = 1.0 / n
        p0 = LabyrinthParams(n, r)
        reach = max(abs(complex(a, b) - p0.p_n) for a in (1 - 0.05 * r, 1 + 1.05 * r)
                    for b in (-2 * r, 2 * r))
        eps = frac / reach * complex(math.cos(arg), math.sin(arg))
        p = LabyrinthParams(n, r, epsilon=eps)
        patch = labyrinth_patch(p)
        table = patch.grid_table(r / 40)
        ratio = table[:, 2] / p.C_n
        assert ratio.min() >= 1.0 and ratio.max() <= math.e**2

    def test_divergence_diagnostic(self):
        s = condicn_partial_sums(20000, "even")
        assert np.all(np.diff(s) > 0)
        # harmonic growth: each tenfold range adds about log(10)/2 e^-1
        gain = s[-1] - s[999]
        assert gain == pytest.approx(0.5 * math.log(10) / math.e, rel=0.02)


class TestOracles:
    def test_flat(self):
        assert flat_disk(1.0).conformal_factor(np.array([0.3j]))[0] == 1.0
        assert flat_square(2.0).contains(np.array([1 + 1j]))[0]

    def test_hyperbolic_origin(self):
        assert hyperbolic_disk(0.01).conformal_factor(np.array([0j]))[0] == 2.0
        with pytest.raises(ValueError):
            hyperbolic_disk(0.5)

    def test_hyperbolic_area(self):
        lam = hyperbolic_disk(0.01).conformal_factor
        area, _ = integrate.quad(lambda r: float(lam(np.array([r + 0j]))[0]) ** 2 * 2 * math.pi * r,
                                 0, 0.5)
        rho = 2 * math.atanh(0.5)
        assert area == pytest.approx(4 * math.pi * math.sinh(rho / 2) ** 2, rel=1e-10)
        assert area == pytest.approx(4 * math.pi / 3, rel=1e-10)

    def test_catenoid_metric(self, rng):
        patch = catenoid_patch()
        z = rng.uniform(-0.9, 0.9, 30) + 1j * rng.uniform(-1.4, 1.4, 30)
        assert immersion_metric_residual(patch, z).max() < 1e-8
        assert np.abs(coordinate_laplacian(patch, z, 1e-3)).max() < 1e-5

    def test_grid_table(self):
        t = flat_disk(1.0).grid_table(0.1)
        assert t.shape[1] == 6
        assert np.all(np.hypot(t[:, 0], t[:, 1]) < 1.0)

    def test_scaled(self):
        p = hyperbolic_disk(0.1).scaled(3.0)
        assert p.conformal_factor(np.array([0j]))[0] == 6.0


class TestLimitSet:
    def test_flat_disk(self):
        X = limit_set_sample(flat_disk(2.0), boundary_margin=0.01, count=500)
        r = np.hypot(X[:, 0], X[:, 1])
        assert np.all(r > 2.0 - 0.01) and np.all(r < 2.0)

    def test_jordan_curve_mock(self):
        def chi(z):
            a = np.abs(z)
            rad = 1.0 + (2.0 - a) ** 2
            w = z / a * rad
            return np.stack([w.real, w.imag, np.zeros(a.shape)], axis=-1)

        patch = ConformalPatch((-2, 2), (-2, 2), lambda z: np.ones(np.shape(z)), chi,
                               lambda z: np.maximum(1 - np.abs(z), np.abs(z) - 2),
                               lambda z: 2 - np.abs(z))
        X = limit_set_sample(patch, boundary_margin=0.05, count=400)
        r = np.hypot(X[:, 0], X[:, 1])
        assert np.all(np.abs(r - 1.0) <= 0.05**2)

    def test_errors(self):
        with pytest.raises(ValueError):
            limit_set_sample(hyperbolic_disk(0.1))
        with pytest.raises(ValueError):
            limit_set_sample(flat_disk(1.0), boundary_margin=-1.0)
