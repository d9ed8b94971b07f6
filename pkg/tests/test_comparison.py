import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab.comparison import (
    CurvatureBound,
    RadialModel,
    ThetaViolation,
    check_j_convex,
    convexity_data,
    fd_hessian,
    growth_ratio,
    mu,
    nonparabolicity_check,
    radial_convex_function,
    solve_h,
    theta,
)


class TestSolveH:
    def test_zero_curvature_is_linear(self, flat_model):
        assert flat_model.h[0] == 0.0 and flat_model.dh[0] == 1.0
        np.testing.assert_allclose(flat_model.h, flat_model.t, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(flat_model.dh, 1.0, atol=1e-13)

    def test_sinh(self, sinh_model):
        t = sinh_model.t[1:]
        rel = np.abs(sinh_model.h[1:] / np.sinh(t) - 1)
        assert rel.max() <= 1e-6
        np.testing.assert_allclose(sinh_model.dh, np.cosh(sinh_model.t), rtol=1e-6)

    @pytest.mark.parametrize("B", [0.5, 2.0])
    def test_scaled_sinh(self, B):
        m = solve_h(CurvatureBound.from_B(B), 3.0)
        exact = np.sinh(B * m.t[1:]) / B
        assert np.max(np.abs(m.h[1:] / exact - 1)) <= 1e-6
        assert m.B == pytest.approx(B)

    def test_positive_curvature_reports_failure(self):
        m = solve_h(CurvatureBound.const(-1.0), 3.0, h2_mode=True)
        np.testing.assert_allclose(m.h, np.sin(m.t), atol=1e-10)
        assert m.h2_failure == pytest.approx(math.pi / 2, abs=1e-6)
        assert not m.satisfies_h2

    def test_tabulated_matches_constant(self):
        tab = CurvatureBound.tabulate(lambda t: np.ones_like(t), 2.0)
        a = solve_h(tab, 2.0)
        b = solve_h(CurvatureBound.const(1.0), 2.0)
        np.testing.assert_allclose(a.h, b.h, rtol=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            CurvatureBound.const(float("nan"))
        with pytest.raises(ValueError):
            CurvatureBound(t_table=np.array([0.0, 1.0]), g_table=np.array([0.0, np.inf]))

    def test_rejects_beyond_table(self):
        tab = CurvatureBound.tabulate(np.zeros_like, 1.0)
        with pytest.raises(ValueError):
            solve_h(tab, 2.0)

    def test_quarter_inverse_square_mode(self):
        CurvatureBound.tabulate(lambda t: -0.2 / np.maximum(t, 1.0) ** 2, 5.0, check_quarter_inverse_square=True)
        with pytest.raises(ValueError):
            CurvatureBound.tabulate(lambda t: -np.ones_like(t), 5.0, check_quarter_inverse_square=True)

    def test_csv_roundtrip(self, tmp_path, sinh_model):
        sinh_model.to_csv(tmp_path / "h.csv", tmp_path / "dh.csv")
        back = RadialModel.from_csv(tmp_path / "h.csv", tmp_path / "dh.csv")
        np.testing.assert_array_equal(back.h, sinh_model.h)
        np.testing.assert_array_equal(back.dh, sinh_model.dh)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.0, 2.0))
    def test_closed_form_property(self, B):
        m = solve_h(CurvatureBound.from_B(B), 2.0)
        t = m.t[1:]
        # sinh(Bt)/B underflows for subnormal B; the series is exact there
        exact = t * (1 + (B * t) ** 2 / 6) if B < 1e-6 else np.sinh(B * t) / B
        assert np.max(np.abs(m.h[1:] / exact - 1)) <= 1e-6
        assert np.all(np.diff(m.h) >= 0)


class TestMu:
    def test_flat(self, flat_model):
        assert mu(flat_model, 2.0) == pytest.approx(2.0, rel=1e-12)

    def test_tanh(self, sinh_model):
        assert mu(sinh_model, 5.0) == pytest.approx(math.tanh(5.0), abs=1e-6)

    def test_tan(self):
        m = solve_h(CurvatureBound.const(-1.0), 1.2)
        assert mu(m, 1.0) == pytest.approx(math.tan(1.0), rel=1e-6)

    def test_undefined_past_failure(self):
        m = solve_h(CurvatureBound.const(-1.0), 2.0)
        with pytest.raises(ValueError, match="mu undefined"):
            mu(m, 1.8)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_monotone(self, sinh_model, s, t):
        s, t = sorted((s, t))
        assert mu(sinh_model, s) <= mu(sinh_model, t) + 1e-15


class TestTheta:
    def test_minimal(self, flat_model):
        assert theta(2, 0.0, 1.0, flat_model) == 1.0
        assert theta(4, 0.0, 1.0, flat_model) == 3.0

    def test_arithmetic(self, flat_model):
        assert theta(3, 0.1, 2.0, flat_model) == pytest.approx(1.4, abs=1e-12)

    def test_violation_warns(self, flat_model):
        with pytest.warns(ThetaViolation):
            theta(2, 1.0, 2.0, flat_model)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.1, 2.9), st.floats(0.1, 2.9))
    def test_decreasing(self, flat_model, H1, H2, R1, R2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ThetaViolation)
            (H1, H2), (R1, R2) = sorted((H1, H2)), sorted((R1, R2))
            assert theta(3, H2, R1, flat_model) <= theta(3, H1, R1, flat_model)
            assert theta(3, H1, R2, flat_model) <= theta(3, H1, R1, flat_model)


class TestConvexity:
    def test_flat(self, flat_model):
        d = convexity_data(flat_model, 1.0)
        np.testing.assert_allclose(d.f, d.t**2 / 2, atol=1e-12)
        assert d.c == pytest.approx(1.0)

    def test_sinh(self, sinh_model):
        d = convexity_data(sinh_model, 2.0)
        np.testing.assert_allclose(d.f, np.cosh(d.t) - 1, atol=1e-8)
        assert d.c == pytest.approx(1.0, abs=1e-12)

    def test_sin(self):
        m = solve_h(CurvatureBound.const(-1.0), 1.0)
        assert convexity_data(m, 1.0).c == pytest.approx(math.cos(1.0), abs=1e-8)

    def test_radius_too_large(self, flat_model):
        with pytest.raises(ValueError):
            convexity_data(flat_model, 4.0)

    def test_f_convex(self, sinh_model):
        d = convexity_data(sinh_model, 4.0)
        assert np.all(np.diff(d.f, 2) >= -1e-12)

    def test_defining_function(self, flat_model):
        F = radial_convex_function(convexity_data(flat_model, 1.0))
        x = np.array([[0.3, 0.4, 0.0], [1.0, 0.0, 0.0]])
        np.testing.assert_allclose(F(x), [0.125 - 0.5, 0.0], atol=1e-10)


class TestJConvex:
    def test_identity(self, rng):
        rep = check_j_convex(lambda p: np.eye(3), 1, rng.normal(size=(5, 3)))
        assert rep.margin == 1.0 and rep.passed

    def test_saddle(self):
        H = np.diag([2.0, -2.0, 0.0])
        rep = check_j_convex(lambda p: H, 2, [np.zeros(3)])
        assert rep.margin == -2.0 and not rep.passed

    def test_asymmetric(self):
        with pytest.raises(ValueError):
            check_j_convex(lambda p: np.array([[1.0, 1.0], [0.0, 1.0]]), 1, [0])

    def test_radial_function_bound(self, flat_model, rng):
        data = convexity_data(flat_model, 1.5)
        F = radial_convex_function(data)
        pts = rng.uniform(-0.6, 0.6, size=(8, 3))
        for j in (1, 2, 3):
            rep = check_j_convex(lambda p: fd_hessian(F, p, 1e-3), j, pts)
            assert rep.margin >= j * data.c - 1e-4

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
    def test_monotone_in_j(self, diag):
        H = np.diag(diag)
        ev = np.sort(diag)
        for j in (1, 2):
            a = check_j_convex(lambda p: H, j, [0]).margin
            b = check_j_convex(lambda p: H, j + 1, [0]).margin
            assert b == pytest.approx(a + ev[j])
            if ev[j] >= 0:
                assert b >= a


class TestNonparabolicity:
    def test_flat_m3(self):
        m = solve_h(CurvatureBound.const(0.0), 200.0, step=1e-2)
        assert nonparabolicity_check(m, 3).verdict == "convergent"

    def test_flat_m2(self):
        m = solve_h(CurvatureBound.const(0.0), 200.0, step=1e-2)
        assert nonparabolicity_check(m, 2).verdict == "divergent"

    def test_sinh_m2(self):
        m = solve_h(CurvatureBound.const(1.0), 10.0)
        rep = nonparabolicity_check(m, 2)
        assert rep.verdict == "convergent"
        exact = math.log(1 / math.tanh(0.5))  # int_1^inf dt/sinh t
        assert rep.integral + rep.tail == pytest.approx(exact, rel=1e-3)

    def test_short_range_inconclusive(self):
        m = solve_h(CurvatureBound.const(0.0), 5.0)
        assert nonparabolicity_check(m, 3).verdict == "inconclusive"


def test_growth_ratio(sinh_model):
    assert growth_ratio(sinh_model) > 0
