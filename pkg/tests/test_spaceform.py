import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpcy.errors import DomainError
from sharpcy.spaceform import (
    ChartKind,
    CurvedChart,
    GeodesicBall,
    chart_radius,
    conformal_factor,
    cs,
    geodesic_radius,
    grad_norm_convert,
    laplacian_comparison,
    max_radius,
    sn,
)

KS = [-2.0, -1.0, 0.0, 1.0, 2.0]


def valid_radius(K, frac):
    """A radius inside (0, pi/sqrt(K)) for K > 0, else in (0, 5)."""
    top = max_radius(K) if K > 0 else 5.0
    return frac * top


class TestExamples:
    @pytest.mark.parametrize("K", [-1.0, 0.0, 1.0])
    def test_zero(self, K):
        assert sn(K, 0.0) == 0.0
        assert cs(K, 0.0) == 1.0

    def test_sn_values(self):
        assert sn(1, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
        assert sn(0, 0.7) == 0.7
        assert sn(-1, 1) == pytest.approx(1.1752011936438014, rel=1e-14)

    def test_cs_values(self):
        assert cs(1, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
        assert cs(-1, 1) == pytest.approx(1.5430806348152437, rel=1e-14)

    def test_chart_radius(self):
        assert chart_radius(1, math.pi / 2) == pytest.approx(1.0, rel=1e-15)
        assert chart_radius(0, 0.3) == 0.3
        assert chart_radius(-1, 2) == pytest.approx(0.7615941559557649, rel=1e-14)

    def test_geodesic_radius(self):
        assert geodesic_radius(1, 1) == pytest.approx(math.pi / 2, rel=1e-15)
        assert geodesic_radius(0, 0.42) == 0.42

    def test_conformal_factor(self):
        sphere = CurvedChart.for_curvature(1.0, 3)
        assert conformal_factor(sphere, np.zeros(3)) == 2.0
        flat = CurvedChart.for_curvature(0.0, 2)
        assert conformal_factor(flat, [0.3, 0.4]) == 1.0
        hyp = CurvedChart.for_curvature(-1.0, 2)
        y = np.array([0.5, 0.5])  # |y|^2 = 1/2
        assert conformal_factor(hyp, y) == pytest.approx(4.0, rel=1e-15)

    def test_grad_norm_convert(self):
        flat = CurvedChart.for_curvature(0.0, 3)
        assert grad_norm_convert(flat, [0.1, 0.2, 0.3], 1.7) == 1.7
        sphere = CurvedChart.for_curvature(1.0, 2)
        assert grad_norm_convert(sphere, [0.0, 0.0], 2.0) == 1.0
        assert grad_norm_convert(sphere, [1.0, 0.0], 1.0) == pytest.approx(1.0)

    def test_grad_norm_convert_matches_half_angle_relation(self):
        # 1/lam = 1/(2 cos^2(r/2)) on the unit sphere
        sphere = CurvedChart.for_curvature(1.0, 2)
        r = 1.1
        y = [chart_radius(1.0, r), 0.0]
        assert grad_norm_convert(sphere, y, 1.0) == pytest.approx(1 / (2 * math.cos(r / 2) ** 2), rel=1e-14)

    def test_laplacian_comparison(self):
        assert laplacian_comparison(3, 0, 2) == 1.0
        assert laplacian_comparison(2, 1, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
        assert laplacian_comparison(2, -1, 1) == pytest.approx(1.3130352854993312, rel=1e-14)

    def test_laplacian_comparison_domain(self):
        with pytest.raises(DomainError):
            laplacian_comparison(2, 0, 0.0)
        with pytest.raises(DomainError):
            laplacian_comparison(2, 1, math.pi)


class TestErrors:
    def test_chart_radius_beyond_antipode(self):
        with pytest.raises(DomainError):
            chart_radius(1, math.pi)
        with pytest.raises(DomainError):
            chart_radius(4, math.pi / 2)

    def test_geodesic_radius_outside_poincare_ball(self):
        with pytest.raises(DomainError):
            geodesic_radius(-1, 1.0)
        with pytest.raises(DomainError):
            geodesic_radius(-4, 0.5)

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            chart_radius(0, -0.1)

    def test_chart_kind_mismatch(self):
        with pytest.raises(DomainError):
            CurvedChart(ChartKind.SPHERE_STEREO, -1.0, 2)
        with pytest.raises(DomainError):
            CurvedChart(ChartKind.EUCLIDEAN, 0.5, 2)
        with pytest.raises(DomainError):
            CurvedChart(ChartKind.EUCLIDEAN, 0.0, 1)

    def test_point_outside_poincare_ball(self):
        hyp = CurvedChart.for_curvature(-1.0, 2)
        with pytest.raises(DomainError):
            conformal_factor(hyp, [1.0, 0.0])
        with pytest.raises(DomainError):
            conformal_factor(hyp, [0.1, 0.1, 0.1])

    def test_geodesic_ball_radius(self):
        with pytest.raises(DomainError):
            GeodesicBall(math.pi, CurvedChart.for_curvature(1.0, 2))
        ball = GeodesicBall(1.0, CurvedChart.for_curvature(-1.0, 3))
        assert ball.chart_R == pytest.approx(math.tanh(0.5))
        assert ball.geodesic_radius_of([ball.chart_R, 0, 0]) == pytest.approx(1.0, rel=1e-14)


K_st = st.sampled_from(KS)
frac_st = st.floats(0.001, 0.999)


@settings(max_examples=300, deadline=None)
@given(K=K_st, a=frac_st, b=frac_st)
def test_addition_identity(K, a, b):
    al, be = valid_radius(K, a), valid_radius(K, b)
    lhs = cs(K, al - be)
    rhs = cs(K, al) * cs(K, be) + K * sn(K, al) * sn(K, be)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs)) * max(1.0, cs(K, al) * cs(K, be))


def test_addition_identity_bulk():
    rng = np.random.default_rng(0)
    for K in KS:
        al = valid_radius(K, rng.uniform(0.001, 0.999, 2000))
        be = valid_radius(K, rng.uniform(0.001, 0.999, 2000))
        lhs = np.asarray(cs(K, al - be))
        rhs = np.asarray(cs(K, al)) * cs(K, be) + K * np.asarray(sn(K, al)) * sn(K, be)
        # hyperbolic values reach cosh(10); measure against the size of the summands
        scale = 1 + np.abs(lhs) + np.abs(np.asarray(cs(K, al)) * cs(K, be))
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(K=K_st, a=frac_st)
def test_pythagorean(K, a):
    r = valid_radius(K, a)
    c, s = cs(K, r), sn(K, r)
    assert abs(c * c + K * s * s - 1) <= 1e-12 * max(1.0, c * c)


@settings(max_examples=200, deadline=None)
@given(K=K_st, a=frac_st)
def test_sn_positive(K, a):
    assert sn(K, valid_radius(K, a)) > 0


@settings(max_examples=200, deadline=None)
@given(K=K_st, a=st.floats(0.01, 0.99))
def test_cs_is_derivative_of_sn(K, a):
    r = valid_radius(K, a)
    h = 1e-6
    fd = (sn(K, r + h) - sn(K, r - h)) / (2 * h)
    assert abs(fd - cs(K, r)) <= 1e-8 * max(1.0, abs(cs(K, r)))


@settings(max_examples=200, deadline=None)
@given(K=st.floats(-3, 3), a=st.floats(0.0, 0.99))
def test_chart_round_trip(K, a):
    r = valid_radius(K, a)
    rho = chart_radius(K, r)
    assert geodesic_radius(K, rho) == pytest.approx(r, rel=1e-12, abs=1e-300)
    back = chart_radius(K, geodesic_radius(K, rho))
    assert back == pytest.approx(rho, rel=1e-12, abs=1e-300)


def test_chart_round_trip_random_pairs():
    rng = np.random.default_rng(1)
    K = rng.uniform(-3, 3, 100)
    frac = rng.uniform(0, 0.99, 100)
    for k, f in zip(K, frac):
        r = valid_radius(k, f)
        assert geodesic_radius(k, chart_radius(k, r)) == pytest.approx(r, rel=1e-12)


def test_chart_radius_increasing():
    for K in KS:
        r = valid_radius(K, np.linspace(0, 0.99, 500))
        assert np.all(np.diff(chart_radius(K, r)) > 0)


@pytest.mark.parametrize("K", [1e-6, -1e-6, 1e-9, -1e-12])
def test_small_curvature_continuity(K):
    r = np.linspace(0, 10, 201)
    dev = np.abs(np.asarray(sn(K, r)) - r)
    # sn(K, r) - r = -K r^3/6 + O(K^2 r^5)
    assert np.all(dev <= abs(K) * r**3 / 6 * 1.01 + 1e-15)


def test_taylor_branch_is_continuous():
    K = 1e-10
    r = np.array([0.999999, 1.000001])  # straddles |K| r^2 = 1e-10
    s = np.asarray(sn(K, r))
    exact = np.sin(np.sqrt(K) * r) / np.sqrt(K)
    assert np.allclose(s, exact, rtol=1e-15, atol=0)
    assert np.allclose(cs(K, r), np.cos(np.sqrt(K) * r), rtol=1e-15, atol=0)


def test_vectorised_shapes():
    r = np.linspace(0, 1, 12).reshape(3, 4)
    assert np.shape(sn(-1, r)) == (3, 4)
    assert isinstance(sn(1, 0.5), float)


@pytest.mark.parametrize("K", [1e-300, -1e-300, 2.2250738585e-313])
def test_round_trip_at_tiny_curvature(K):
    assert geodesic_radius(K, chart_radius(K, 1.0)) == pytest.approx(1.0, rel=1e-15)
