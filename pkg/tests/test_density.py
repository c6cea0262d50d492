import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose
from scipy import stats

from stylefacts.density import (
    UnitVarianceT,
    histogram,
    kde,
    qq_points,
    silverman_bandwidth,
)
from stylefacts.errors import DegenerateSeriesError, DomainError, InsufficientDataError
from stylefacts.special import Normal, StudentT

spread_samples = arrays(float, st.integers(5, 300), elements=st.floats(-20, 20))


def test_histogram_uniform_heights(rng):
    x = rng.uniform(0, 1, 1000)
    curve = histogram(x, bins=10)
    counts, _ = np.histogram(x, bins=10, range=(x.min(), x.max()))
    assert_allclose(curve.empirical, counts / (1000 * np.diff(curve.edges)), rtol=1e-12)
    # binomial(1000, 0.1): height sd = sqrt(0.1 * 0.9 / 1000) / 0.1 ~ 0.095, so 5 sd ~ 0.47
    five_sd = 5 * math.sqrt(0.1 * 0.9 / 1000) / 0.1
    assert np.all(np.abs(curve.empirical - 1.0) <= five_sd)
    assert curve.kind == "histogram"
    assert len(curve.edges) == 11


def test_histogram_single_bin():
    x = np.array([2.0, 3.0, 7.0])
    curve = histogram(x, bins=1)
    assert curve.empirical[0] == pytest.approx(1 / 5)
    assert_allclose(curve.edges, [2.0, 7.0])


def test_histogram_reference_is_fitted_normal(rng):
    x = rng.normal(3, 2, 500)
    curve = histogram(x, bins=20)
    expected = stats.norm(x.mean(), x.std(ddof=1)).pdf(curve.grid)
    assert_allclose(curve.reference, expected, rtol=1e-10)
    assert_allclose(curve.grid, 0.5 * (curve.edges[1:] + curve.edges[:-1]))


@settings(max_examples=60, deadline=None)
@given(spread_samples, st.integers(1, 60))
def test_histogram_area_is_one(x, bins):
    assume(np.ptp(x) > 1e-6)
    assert abs(histogram(x, bins).integral() - 1.0) <= 1e-12


def test_histogram_mirror_for_negated_data(rng):
    x = rng.normal(size=400)
    x = np.concatenate([x, -x])
    a, b = histogram(x, 25), histogram(-x, 25)
    assert_allclose(a.empirical, b.empirical[::-1], atol=1e-12)


def test_histogram_errors():
    with pytest.raises(DegenerateSeriesError):
        histogram(np.ones(10))
    with pytest.raises(DomainError):
        histogram([1.0, 2.0], bins=0)
    with pytest.raises(InsufficientDataError):
        histogram([])


def test_kde_single_kernel_height():
    # two far-apart points, h = 1, grid with unit spacing hitting both
    curve = kde([0.0, 100.0], grid_size=107, bandwidth=1.0)
    assert curve.grid[3] == pytest.approx(0.0, abs=1e-12)
    kernel_at_own_location = 2.0 * curve.empirical[3]
    assert kernel_at_own_location == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    assert 1 / math.sqrt(2 * math.pi) == pytest.approx(0.398942, abs=5e-7)


def test_kde_matches_scipy_gaussian_kde(rng):
    x = rng.standard_t(4, size=800)
    h = silverman_bandwidth(x)
    curve = kde(x, grid_size=200)
    # scipy scales the bandwidth by the sample sd
    ref = stats.gaussian_kde(x, bw_method=h / x.std(ddof=1))
    assert_allclose(curve.empirical, ref(curve.grid), rtol=1e-10, atol=1e-15)
    assert curve.bandwidth == h


def test_silverman_bandwidth_formula(rng):
    x = rng.normal(size=1000)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    expected = 0.9 * min(x.std(ddof=1), iqr / 1.34) * 1000 ** -0.2
    assert silverman_bandwidth(x) == pytest.approx(expected, rel=1e-14)


def test_kde_grid_span_and_integral(rng):
    x = rng.standard_t(4, size=2000)
    curve = kde(x)
    h = curve.bandwidth
    assert curve.grid[0] == pytest.approx(x.min() - 3 * h)
    assert curve.grid[-1] == pytest.approx(x.max() + 3 * h)
    assert np.all(np.diff(curve.grid) > 0)
    assert abs(curve.integral() - 1.0) <= 0.01


def test_kde_of_standard_normal_at_zero(rng):
    x = rng.normal(size=10_000)
    curve = kde(x, grid_size=513, bandwidth=silverman_bandwidth(x))
    value = np.interp(0.0, curve.grid, curve.empirical)
    assert 0.37 <= value <= 0.43


@settings(max_examples=30, deadline=None)
@given(spread_samples, st.floats(-50, 50))
def test_kde_translation_equivariance(x, c):
    assume(np.std(x) > 1e-2)
    a = kde(x, grid_size=64)
    b = kde(x + c, grid_size=64)
    h = a.bandwidth
    # translated sample must give the same bandwidth to rounding
    assert b.bandwidth == pytest.approx(h, rel=1e-9)
    b = kde(x + c, grid_size=64, bandwidth=h)
    assert_allclose(b.grid, a.grid + c, atol=1e-12 * max(1.0, abs(c)) * 100)
    assert_allclose(b.empirical, a.empirical, atol=1e-12)


def test_kde_custom_reference(rng):
    x = rng.standard_t(4, size=300)
    ref = UnitVarianceT(4, loc=x.mean(), scale=x.std(ddof=1))
    curve = kde(x, reference=ref)
    assert curve.reference_name == "student_t(4) at unit variance"
    s = x.std(ddof=1) * math.sqrt(0.5)
    assert_allclose(curve.reference, stats.t(4, x.mean(), s).pdf(curve.grid), rtol=1e-9)


def test_kde_errors():
    with pytest.raises(DegenerateSeriesError):
        kde(np.full(5, 2.0))
    with pytest.raises(InsufficientDataError):
        kde([1.0])
    with pytest.raises(DomainError):
        kde([1.0, 2.0], bandwidth=0.0)


def test_qq_on_exact_normal_quantiles_is_identity():
    n = 500
    x = Normal().quantile((np.arange(1, n + 1) - 0.5) / n)
    qq = qq_points(x[::-1], Normal())
    assert_allclose(qq.sample, qq.theoretical, atol=1e-9)
    assert len(qq) == n and len(qq.points) == n
    assert not qq.standardized


@settings(max_examples=40, deadline=None)
@given(spread_samples, st.floats(0.1, 10), st.floats(-10, 10))
def test_qq_affine_equivariance_with_fitted_normal(x, a, b):
    assume(np.std(x) > 1e-2)
    ref = Normal(float(x.mean()), float(x.std(ddof=1)))
    moved_ref = Normal(a * ref.mu + b, a * ref.sigma)
    base = qq_points(x, ref)
    moved = qq_points(a * x + b, moved_ref)
    assert_allclose(moved.theoretical, a * base.theoretical + b, atol=1e-9 * max(1, a * 20))
    assert_allclose(moved.sample, a * base.sample + b, atol=1e-9 * max(1, a * 20))


@settings(max_examples=40, deadline=None)
@given(spread_samples)
def test_qq_coordinates_nondecreasing(x):
    assume(np.std(x) > 1e-2)
    for ref in (Normal(), StudentT(4)):
        qq = qq_points(x, ref)
        assert np.all(np.diff(qq.theoretical) >= 0)
        assert np.all(np.diff(qq.sample) >= 0)


def test_qq_student_t_is_standardized(rng):
    x = rng.normal(5, 3, 101)
    qq = qq_points(x, StudentT(4))
    assert qq.standardized
    assert_allclose(qq.sample, np.sort((x - x.mean()) / x.std(ddof=1)))
    probs = (np.arange(1, 102) - 0.5) / 101
    assert_allclose(qq.theoretical, stats.t(4).ppf(probs) * math.sqrt(0.5), atol=1e-9)


def test_heavy_tails_dominate_normal_qq():
    wins = 0
    for seed in range(40):
        x = np.random.default_rng(seed).standard_t(3, size=5000)
        qq = qq_points(x, Normal(float(x.mean()), float(x.std(ddof=1))))
        wins += qq.sample[-1] > qq.theoretical[-1]
    assert wins / 40 >= 0.95


def test_t4_sample_tracks_t4_reference():
    x = np.random.default_rng(3).standard_t(4, size=10_000)
    qq = qq_points(x, StudentT(4))
    middle = slice(100, 9900)
    assert np.max(np.abs(qq.sample[middle] - qq.theoretical[middle])) < 0.25


@pytest.mark.parametrize("nu", [1, 2, 1.5])
def test_student_t_qq_needs_finite_variance(nu):
    with pytest.raises(DomainError):
        qq_points(np.arange(10.0), StudentT(nu))
    with pytest.raises(DomainError):
        UnitVarianceT(nu)


def test_unit_variance_t_has_unit_variance():
    d = UnitVarianceT(4)
    xs = np.linspace(-60, 60, 200_001)
    var = np.trapezoid(xs ** 2 * d.pdf(xs), xs)
    assert var == pytest.approx(1.0, abs=5e-3)
    assert d.cdf(d.quantile(0.9)) == pytest.approx(0.9, abs=1e-12)
