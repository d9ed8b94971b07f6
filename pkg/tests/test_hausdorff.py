import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab.hausdorff import (
    Gauge,
    cover_measure,
    dimension_fit,
    doubling_constant,
    gauge_for_theta,
    measure_limit,
    packing_lower_bound,
)
from speclab.surfaces import AndradeParams, andrade_solid_volume, andrade_surface

DELTAS = [2.0**-k for k in range(4, 11)]
# 10^5 uniform points in the unit square resolve boxes down to about 2^-6
SQUARE_DELTAS = [2.0**-k for k in range(2, 7)]


@pytest.fixture(scope="module")
def segment():
    rng = np.random.default_rng(7)
    return np.column_stack([rng.random(100_000), np.zeros(100_000)])


@pytest.fixture(scope="module")
def square():
    return np.random.default_rng(8).random((100_000, 2))


class TestGauge:
    def test_values(self):
        assert Gauge("square", 1.0)(0.5) == 0.25
        assert Gauge("square_log")(0.1) == pytest.approx(0.01 * math.log(10))
        assert Gauge("power", 1.0, exponent=1.5)(0.25) == 0.125
        assert Gauge("square_log")(0.0) == 0.0

    def test_validity_window(self):
        g = Gauge("square_log", 0.25)
        with pytest.raises(ValueError):
            g(0.5)
        with pytest.raises(ValueError):
            g(-0.1)
        with pytest.raises(ValueError):
            Gauge("square_log", 0.5)

    def test_theta_family(self):
        assert gauge_for_theta(1.0).kind == "square_log"
        assert gauge_for_theta(2.0).kind == "square"
        g = gauge_for_theta(0.5)
        assert g.kind == "power" and g.exponent == 1.5

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-6, 0.49))
    def test_positive_continuous(self, t):
        g = Gauge("square_log", 0.25)
        assert g(t) > 0
        assert g(t * (1 + 1e-9)) == pytest.approx(g(t), rel=1e-6)


class TestDoubling:
    def test_square(self):
        assert doubling_constant(Gauge("square", 0.25)) == pytest.approx(4.0, rel=1e-12)

    def test_power(self):
        assert doubling_constant(Gauge("power", 0.25, exponent=1.5)) == pytest.approx(2**1.5)

    def test_square_log(self):
        """4 |log 2t| / |log t| increases towards 4 as t -> 0 on (0, 1/4)."""
        c = doubling_constant(Gauge("square_log", 0.25))
        t = 1e-150
        assert c <= 4.0
        assert c >= 4 * abs(math.log(2 * t)) / abs(math.log(t)) - 1e-12


class TestCoverMeasure:
    @pytest.mark.parametrize("n", [8, 32, 128, 512])
    def test_segment_oracle(self, n):
        """n unit-interval boxes of diameter 1/n give (log n)/n."""
        x = np.random.default_rng(0).random(10_000)
        s, cover = cover_measure(x, Gauge("square_log"), 1.0 / n, origin=[0.0])
        assert cover.size == n
        assert s == pytest.approx(math.log(n) / n, rel=1e-12)

    @pytest.mark.parametrize("n", [8, 16, 64])
    def test_square_oracle(self, square, n):
        s, cover = cover_measure(square, Gauge("square", 1.0), math.sqrt(2) / n,
                                 origin=[0.0, 0.0])
        assert cover.size == n * n
        assert s == pytest.approx(2.0, rel=1e-12)

    def test_finite_set(self):
        pts = np.array([[0.0, 0.0], [0.5, 0.5], [0.9, 0.1]])
        g = Gauge("square", 1.0)
        sums = [cover_measure(pts, g, d, min_density=1)[0] for d in (0.1, 0.01, 0.001)]
        assert sums == pytest.approx([3 * d**2 for d in (0.1, 0.01, 0.001)])

    def test_density_guard(self):
        with pytest.raises(ValueError, match="sparse"):
            cover_measure(np.random.default_rng(0).random((100, 2)), Gauge("square", 1.0), 0.01)

    def test_errors(self, square):
        with pytest.raises(ValueError):
            cover_measure(square, Gauge("square", 0.25), 0.0)
        with pytest.raises(ValueError):
            cover_measure(square, Gauge("square", 0.25), 0.3)
        with pytest.raises(ValueError):
            cover_measure(square, Gauge("square", 1.0), 0.1, strategy="magic")

    def test_greedy_covers_every_point(self, square):
        from scipy.spatial import cKDTree

        pts = square[:5000]
        _, cover = cover_measure(pts, Gauge("square", 1.0), 0.1, "greedy")
        d, _ = cKDTree(cover.centers).query(pts)
        assert d.max() <= 0.05 + 1e-12

    def test_grid_covers_every_point(self, square):
        _, cover = cover_measure(square, Gauge("square", 1.0), 0.05)
        from scipy.spatial import cKDTree

        d, _ = cKDTree(cover.centers).query(square)
        assert d.max() <= 0.025 + 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.02, 0.2))
    def test_gauge_comparison(self, delta):
        pts = np.random.default_rng(1).random((40_000, 2))
        _, cover = cover_measure(pts, Gauge("square", 1.0), delta)
        small = cover.covering_sum(Gauge("power", 1.0, exponent=2.0))
        large = cover.covering_sum(Gauge("power", 1.0, exponent=1.5))
        assert small <= large

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.5, 4.0))
    def test_scaling(self, s):
        pts = np.random.default_rng(2).random((4000, 2))
        a, _ = cover_measure(pts, Gauge("square", 10.0), 0.1, origin=[0.0, 0.0])
        b, _ = cover_measure(s * pts, Gauge("square", 10.0), 0.1 * s, origin=[0.0, 0.0])
        assert b == pytest.approx(s**2 * a, rel=1e-12)

    @pytest.mark.parametrize("which", ["segment", "square"])
    def test_ball_box_sandwich(self, which, segment, square):
        pts = {"segment": segment, "square": square}[which][:20_000]
        g = Gauge("square", 1.0)
        C = doubling_constant(g)
        for d in (0.1, 0.05):
            box = cover_measure(pts, g, d, "grid")[0]
            ball = cover_measure(pts, g, d, "greedy")[0]
            assert box / C <= ball <= C * box


class TestMeasureLimit:
    def test_segment_vanishing(self, segment):
        rep = measure_limit(segment, Gauge("square_log"), DELTAS)
        assert rep.verdict == "vanishing"
        assert rep.sums[-1] <= 0.02

    def test_square_positive(self, square):
        lb = packing_lower_bound(1.0, 2)
        assert lb == pytest.approx(4 / math.pi)
        rep = measure_limit(square, Gauge("square", 1.0), SQUARE_DELTAS, lower_bound=lb)
        assert rep.verdict == "positive"
        assert np.all(rep.sums >= lb) and np.all(rep.sums <= 2.5)

    def test_estimates_monotone(self, square, segment):
        for pts, g, d in ((square, Gauge("square", 1.0), SQUARE_DELTAS),
                          (segment, Gauge("square_log"), DELTAS)):
            rep = measure_limit(pts, g, d)
            est = rep.estimates
            assert np.all(np.diff(est) >= 0)
            assert np.all(est <= rep.sums)

    def test_nested_grid_refinement(self, square):
        """With dyadic nested grid covers and Psi = t^2 each box splits into
        at most four, so the raw sum cannot grow."""
        g = Gauge("square", 1.0)
        s = [cover_measure(square, g, math.sqrt(2) * 2.0**-k, origin=[0.0, 0.0])[0]
             for k in range(2, 7)]
        assert np.all(np.diff(s) <= 1e-12)

    def test_schedule_errors(self, square):
        with pytest.raises(ValueError):
            measure_limit(square, Gauge("square", 1.0), DELTAS[:4])
        with pytest.raises(ValueError):
            measure_limit(square, Gauge("square", 1.0), DELTAS[::-1])

    def test_serialization(self, segment, tmp_path):
        rep = measure_limit(segment, Gauge("square_log"), DELTAS, keep_covers=True)
        doc = json.loads(rep.to_json())
        assert doc["verdict"] == "vanishing" and len(doc["sums"]) == 7
        assert len(rep.covers) == 7 and rep.covers[0].to_rows()[0][-1] == DELTAS[0] / 2
        rep.to_csv(tmp_path / "c.csv")
        back = np.loadtxt(tmp_path / "c.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(back[:, 1], rep.sums)

    def test_andrade_limit_set_positive(self):
        """Samples along v -> infinity fill the union of the trochoid
        cylinders; t^3 sums stay above the packing bound of its volume."""
        P = AndradeParams(1.0, math.sqrt(3))
        rng = np.random.default_rng(0)
        n = 1_000_000
        z = rng.uniform(-1, 1, n) + 1j * rng.uniform(0, 20_000, n)
        X = andrade_surface(P, 1.0, 20_000).immersion(z)
        lb = packing_lower_bound(andrade_solid_volume(P), 3)
        rep = measure_limit(X, Gauge("power", 1.5, exponent=3.0), [1.0, 0.7, 0.5, 0.35, 0.25],
                            lower_bound=lb)
        assert rep.verdict == "positive"


class TestDimension:
    def test_segment(self, segment):
        assert dimension_fit(segment, DELTAS).dimension == pytest.approx(1.0, abs=0.1)

    def test_square(self, square):
        assert dimension_fit(square, SQUARE_DELTAS).dimension == pytest.approx(2.0, abs=0.1)

    def test_point(self):
        fit = dimension_fit(np.zeros((10, 2)), DELTAS)
        assert fit.dimension == pytest.approx(0.0, abs=1e-12)
