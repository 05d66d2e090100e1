import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fiducial import distributions as D
from fiducial.errors import DomainError


GRID = np.linspace(0.01, 0.99, 25)


class TestScipyBacked:
    def test_beta_matches_scipy(self):
        d = D.beta_dist(3.5, 7.5)
        np.testing.assert_allclose(d.cdf(GRID), stats.beta.cdf(GRID, 3.5, 7.5), atol=1e-15)
        assert d.closed_form

    def test_gamma_rate_parameterisation(self):
        d = D.gamma_dist(4.5, 3.0)
        np.testing.assert_allclose(d.mean(), 1.5, rtol=1e-14)

    def test_normal_variance_parameterisation(self):
        d = D.normal_dist(1.0, 4.0)
        np.testing.assert_allclose(d.var(), 4.0, rtol=1e-14)

    def test_inverse_gamma(self):
        d = D.inverse_gamma_dist(3.0, 2.0)
        np.testing.assert_allclose(d.mean(), 1.0, rtol=1e-14)

    def test_beta_prime(self):
        d = D.beta_prime_dist(2.0, 5.0)
        np.testing.assert_allclose(d.mean(), 0.5, rtol=1e-14)

    def test_bad_quantile_level(self):
        with pytest.raises(DomainError):
            D.beta_dist(2, 2).ppf(1.5)

    def test_interval_equal_tail(self):
        d = D.beta_dist(3.5, 7.5)
        lo, hi = d.interval(0.5)
        # oracle: grid scan of the incomplete beta cdf
        g = np.linspace(0, 1, 400001)
        c = stats.beta.cdf(g, 3.5, 7.5)
        assert abs(lo - g[np.searchsorted(c, 0.25)]) < 1e-5
        assert abs(hi - g[np.searchsorted(c, 0.75)]) < 1e-5


class TestDensityDistribution:
    def test_normalizes_unnormalized_beta(self):
        d = D.DensityDistribution(lambda p: 2.5 * math.log(p) + 6.5 * math.log1p(-p) if 0 < p < 1 else -math.inf, 0.0, 1.0, center=0.3, scale=0.1)
        np.testing.assert_allclose(d.cdf(GRID), stats.beta.cdf(GRID, 3.5, 7.5), atol=1e-11)
        np.testing.assert_allclose(d.log_norm, math.log(math.exp(math.lgamma(3.5) + math.lgamma(7.5) - math.lgamma(11.0))), rtol=1e-11)

    def test_infinite_support(self):
        d = D.DensityDistribution(lambda x: -0.5 * (x - 3.0) ** 2, -math.inf, math.inf, center=3.0, scale=1.0)
        np.testing.assert_allclose(d.ppf(0.975), 3.0 + 1.959963984540054, atol=1e-8)
        np.testing.assert_allclose(d.mean(), 3.0, atol=1e-9)
        np.testing.assert_allclose(d.var(), 1.0, atol=1e-8)

    def test_cdf_monotone_and_limits(self):
        d = D.DensityDistribution(lambda x: -x - math.exp(-x) if x > -500 else -math.inf, -math.inf, math.inf, center=0.0, scale=1.0)
        xs = np.linspace(-5, 10, 200)
        c = d.cdf(xs)
        assert np.all(np.diff(c) >= 0)
        assert d.cdf(-math.inf) == 0.0 and d.cdf(math.inf) == 1.0
        np.testing.assert_allclose(c, stats.gumbel_r.cdf(xs), atol=1e-11)

    def test_sample_reproducible(self):
        d = D.DensityDistribution(lambda x: -0.5 * x * x, -math.inf, math.inf, center=0.0)
        np.testing.assert_array_equal(d.sample(50, 4), d.sample(50, 4))

    @given(st.floats(0.01, 0.99))
    def test_ppf_inverts_cdf(self, q):
        d = D.DensityDistribution(lambda x: 1.5 * math.log(x) - 2.0 * x if x > 0 else -math.inf, 0.0, math.inf, center=1.0, scale=1.0)
        assert abs(d.cdf(d.ppf(q)) - q) < 1e-9


class TestMixtureAndTransforms:
    def test_mixture(self):
        a, b = D.beta_dist(2, 5), D.beta_dist(5, 2)
        m = D.MixtureDistribution([a, b], [0.25, 0.75])
        np.testing.assert_allclose(m.cdf(GRID), 0.25 * a.cdf(GRID) + 0.75 * b.cdf(GRID), atol=1e-15)
        np.testing.assert_allclose(m.mean(), 0.25 * 2 / 7 + 0.75 * 5 / 7, rtol=1e-12)
        np.testing.assert_allclose(m.cdf(m.ppf(0.3)), 0.3, atol=1e-10)

    def test_logit_transform_of_beta(self):
        base = D.beta_dist(3.0, 4.0)
        t = D.TransformedDistribution(base, lambda p: math.log(p / (1 - p)), lambda y: 1 / (1 + math.exp(-y)), increasing=True)
        ys = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(t.cdf(ys), base.cdf(1 / (1 + np.exp(-ys))), atol=1e-14)
        # density of the logit of Be(a, b): e^{a y}/(1+e^y)^{a+b}/B(a,b)
        dens = np.exp(3 * ys - 7 * np.log1p(np.exp(ys)) - (math.lgamma(3) + math.lgamma(4) - math.lgamma(7)))
        np.testing.assert_allclose(t.pdf(ys), dens, rtol=1e-7)

    def test_decreasing_transform(self):
        base = D.gamma_dist(2.0, 1.0)
        t = D.TransformedDistribution(base, lambda x: 1 / x, lambda y: 1 / y, increasing=False)
        ys = np.array([0.2, 0.5, 1.0, 3.0])
        np.testing.assert_allclose(t.cdf(ys), stats.invgamma.cdf(ys, 2.0), atol=1e-14)

    def test_point_mass(self):
        p = D.PointMass(0.0)
        assert p.cdf(-1e-300) == 0.0 and p.cdf(0.0) == 1.0
        assert p.mean() == 0.0 and p.var() == 0.0
