import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fiducial import models as M
from fiducial.errors import DomainError


def _cycles(perm):
    seen, count = set(), 0
    for i in range(len(perm)):
        if i not in seen:
            count += 1
            j = i
            while j not in seen:
                seen.add(j)
                j = perm[j]
    return count


def _stirling_by_permutations(t, n):
    return sum(1 for p in itertools.permutations(range(t)) if _cycles(p) == n)


class TestCatalog:
    def test_keys(self):
        for k in ("binomial", "poisson", "gamma-rate", "truncated-exponential", "uniform-scale", "uniform-shift", "logarithmic"):
            assert k in M.MODEL_KEYS

    def test_discrete_flag(self):
        disc = {k for k in M.MODEL_KEYS if M.model(k).discrete}
        assert disc == {"binomial", "poisson", "negative-binomial", "logarithmic"}

    def test_unknown_parameter(self):
        with pytest.raises(DomainError):
            M.model("binomial", sigma2=1.0)

    def test_invalid_fixed(self):
        with pytest.raises(DomainError):
            M.model("normal-mean", sigma2=-1.0)
        with pytest.raises(DomainError):
            M.model("binomial", m=1.5)

    def test_sufficient_statistics(self):
        x = np.array([1.5, 2.0, 3.0])
        assert M.sufficient_statistic(M.model("gamma-rate"), x).value == 6.5
        np.testing.assert_allclose(M.sufficient_statistic(M.model("pareto"), x).value, math.log(9.0), rtol=1e-15)
        np.testing.assert_allclose(M.sufficient_statistic(M.model("weibull", c=2.0), x).value, 15.25, rtol=1e-15)
        assert M.sufficient_statistic(M.model("uniform-scale"), x).value == 3.0
        assert M.sufficient_statistic(M.model("normal-variance", mu=2.0), x).value == 0.25 + 0.0 + 1.0


class TestStatCdf:
    def test_binomial(self):
        assert M.stat_cdf(M.model("binomial"), 10, 0.5, 5) == pytest.approx(0.623046875, abs=1e-15)

    def test_uniform_scale(self):
        for n in (1, 3, 7):
            np.testing.assert_allclose(M.stat_cdf(M.model("uniform-scale"), n, 2.0, 1.3), (1.3 / 2.0) ** n, rtol=1e-14)

    def test_logarithmic_vs_pmf_sum(self):
        n, t, th = 10, 12, 0.4
        total = 0.0
        for j in range(n, t + 1):
            total += math.factorial(n) * M.stirling_first_kind_abs(j, n) * th**j / (math.factorial(j) * (-math.log1p(-th)) ** n)
        np.testing.assert_allclose(M.stat_cdf(M.model("logarithmic"), n, th, t), total, rtol=1e-12)

    @pytest.mark.parametrize(
        "key,n,s",
        [("binomial", 6, 2), ("poisson", 3, 4), ("negative-binomial", 2, 3), ("logarithmic", 4, 7), ("normal-mean", 3, 0.4), ("gamma-rate", 2, 1.7)],
    )
    def test_monotone_in_theta(self, key, n, s):
        m = M.model(key)
        lo, hi = m.param_space
        grid = np.linspace(max(lo, -5) + 0.01, min(hi, 5) - 0.01, 60)
        F = np.array([M.stat_cdf(m, n, t, s) for t in grid])
        d = np.diff(F)
        assert np.all(d <= 1e-15) or np.all(d >= -1e-15)

    @pytest.mark.parametrize("key,th", [("binomial", 0.3), ("poisson", 1.2), ("negative-binomial", 0.6), ("logarithmic", 0.5)])
    def test_discrete_difference_is_pmf(self, key, th):
        m, n = M.model(key), 4
        lo = 4 if key == "logarithmic" else 0
        for s in range(lo + 1, lo + 8):
            diff = M.stat_cdf(m, n, th, s) - M.stat_cdf(m, n, th, s - 1)
            np.testing.assert_allclose(diff, M.stat_pdf(m, n, th, s), atol=1e-14)

    def test_limits(self):
        m = M.model("binomial")
        assert M.stat_cdf(m, 5, 0.4, 5) == 1.0
        assert M.stat_cdf(M.model("logarithmic"), 3, 0.4, 2) == 0.0


class TestStatPdf:
    def test_normal(self):
        np.testing.assert_allclose(M.stat_pdf(M.model("normal-mean"), 4, 0.0, 0.0), 1 / (2 * math.sqrt(2 * math.pi)), rtol=1e-14)

    def test_poisson(self):
        np.testing.assert_allclose(M.stat_pdf(M.model("poisson"), 3, 2.0, 6), math.exp(-6) * 6**6 / 720, rtol=1e-13)

    def test_truncated_exponential_piecewise(self):
        m = M.model("truncated-exponential")
        th = 1.3
        c = (th / -math.expm1(-th)) ** 2
        np.testing.assert_allclose(M.stat_pdf(m, 2, th, 0.4), c * math.exp(-th * 0.4) * 0.4, rtol=1e-12)
        np.testing.assert_allclose(M.stat_pdf(m, 2, th, 1.6), c * math.exp(-th * 1.6) * 0.4, rtol=1e-12)
        # continuity at theta = 0: Irwin-Hall density
        np.testing.assert_allclose(M.stat_pdf(m, 2, 0.0, 0.5), 0.5, rtol=1e-14)


class TestSampling:
    def test_degenerate_binomial(self):
        m = M.model("binomial")
        assert M.stat_sample(m, 5, 0.0, 1) == 0
        assert M.stat_sample(m, 5, 1.0, 1) == 5

    def test_gamma_mean(self):
        s = M.stat_sample(M.model("gamma-rate", alpha=2.0), 3, 1.0, 123, size=10**6)
        assert abs(np.mean(s) - 6.0) < 0.01

    def test_reproducible(self):
        m = M.model("poisson")
        np.testing.assert_array_equal(M.stat_sample(m, 3, 2.0, 9, size=20), M.stat_sample(m, 3, 2.0, 9, size=20))

    @pytest.mark.parametrize("key,n,th", [("gamma-rate", 3, 1.5), ("poisson", 4, 0.7), ("truncated-exponential", 2, -1.2), ("logarithmic", 3, 0.6)])
    def test_empirical_cdf(self, key, n, th):
        m = M.model(key)
        N = 20000
        draws = np.asarray(M.stat_sample(m, n, th, 2024, size=N))
        for q in np.quantile(draws, [0.1, 0.3, 0.5, 0.7, 0.9]):
            emp = np.mean(draws <= q)
            assert abs(emp - M.stat_cdf(m, n, th, q)) <= 3 / math.sqrt(N)


class TestStirling:
    def test_small(self):
        assert M.stirling_first_kind_abs(5, 5) == 1
        assert M.stirling_first_kind_abs(4, 2) == 11

    @pytest.mark.parametrize("t,n", [(5, 2), (6, 3), (7, 4), (8, 3)])
    def test_against_cycle_count(self, t, n):
        assert M.stirling_first_kind_abs(t, n) == _stirling_by_permutations(t, n)

    def test_recurrence_extension(self):
        # |s(t+1,n)| = t |s(t,n)| + |s(t,n-1)|
        s = M.stirling_first_kind_abs
        assert s(12, 10) == 11 * s(11, 10) + s(11, 9) == 1925

    def test_big_values_exact(self):
        assert M.stirling_first_kind_abs(40, 10) > 2**63
        np.testing.assert_allclose(M.log_stirling_first_kind_abs(40, 10), math.log(M.stirling_first_kind_abs(40, 10)), rtol=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            M.stirling_first_kind_abs(2, 3)


class TestObservationLevel:
    @given(st.floats(0.01, 0.99), st.floats(-30, 30))
    def test_truncated_exponential_cdf_derivative(self, x, th):
        m = M.model("truncated-exponential")
        h = 1e-5 * max(1.0, abs(th))
        fd = (M.obs_cdf(m, x, th + h) - M.obs_cdf(m, x, th - h)) / (2 * h)
        assert abs(M.obs_dcdf(m, x, th) - fd) <= 1e-6 * max(1.0, abs(fd))

    @given(st.floats(0.01, 0.99), st.floats(-700, 700))
    def test_score_ratio_finite(self, x, th):
        m = M.model("truncated-exponential")
        v = M.obs_log_score_ratio(m, x, th)
        assert math.isfinite(v)

    def test_normal_logpdf(self):
        np.testing.assert_allclose(M.obs_logpdf(M.model("normal-mean", sigma2=2.0), 1.0, 0.5), stats.norm.logpdf(1.0, 0.5, math.sqrt(2)), rtol=1e-14)
