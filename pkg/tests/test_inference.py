import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fiducial import fiducial1d as F
from fiducial import inference as I
from fiducial import models as M
from fiducial import stepwise as S
from fiducial.distributions import beta_dist, normal_dist
from fiducial.errors import DomainError


class TestConfidenceCurve:
    def test_standard_normal_crossings(self):
        cc = I.confidence_curve(normal_dist(0.0, 1.0), np.linspace(-4, 4, 8001))
        np.testing.assert_allclose(cc.crossings(0.95), [-1.959964, 1.959964], atol=1e-5)
        np.testing.assert_allclose(cc.crossings(0.0 + 1e-12), [0.0, 0.0], atol=1e-3)

    def test_median_and_monotone(self):
        d = beta_dist(3.5, 7.5)
        g = np.linspace(0.001, 0.999, 999)
        cc = I.confidence_curve(d, g)
        med = float(d.ppf(0.5))
        assert float(np.interp(med, g, cc.values)) < 2e-3
        left, right = cc.values[g < med], cc.values[g > med]
        assert np.all(np.diff(left) <= 0) and np.all(np.diff(right) >= 0)

    def test_crossings_match_interval(self):
        h = F.fiducial_right(M.model("truncated-exponential"), 2, 1.0).dist
        cc = I.confidence_curve(h, np.linspace(-8, 8, 3201))
        lo, hi = I.equal_tail_interval(h, 0.9)
        np.testing.assert_allclose(cc.crossings(0.9), [lo, hi], atol=1e-4)
        np.testing.assert_allclose([lo, hi], [-4.1914, 4.1914], atol=5e-4)

    def test_interval_beta(self):
        lo, hi = I.equal_tail_interval(beta_dist(3.5, 7.5), 0.5)
        np.testing.assert_allclose([lo, hi], stats.beta.ppf([0.25, 0.75], 3.5, 7.5), rtol=1e-12)

    def test_bad_level(self):
        with pytest.raises(DomainError):
            I.equal_tail_interval(beta_dist(2, 2), 1.0)


class TestRisk:
    @pytest.mark.parametrize("key, n, ref", [("binomial", 2, 1 / 48), ("poisson", 5, 1 / 100), ("negative-binomial", 4, 1 / 24)])
    def test_examples(self, key, n, ref):
        rep = I.confidence_risk_gap(key, n)
        np.testing.assert_allclose(rep.analytic, ref, rtol=1e-15)
        assert rep.max_abs_error < 1e-9

    @pytest.mark.parametrize("key", ["binomial", "poisson", "negative-binomial"])
    def test_constant_in_mu(self, key):
        for n in range(3, 11):
            rep = I.confidence_risk_gap(key, n)
            assert rep.grid.size == 10
            assert np.ptp(rep.gap) < 1e-9
            assert rep.max_abs_error < 1e-9
            assert rep.max_mean_difference < 1e-12
            assert np.all(rep.risk_arithmetic > rep.risk_geometric)

    def test_unsupported(self):
        with pytest.raises(DomainError):
            I.analytic_risk_gap("logarithmic", 4)
        with pytest.raises(DomainError):
            I.analytic_risk_gap("negative-binomial", 2)


class TestCoverage:
    def test_gamma_pit(self):
        m = M.model("gamma-rate", alpha=2.0)
        rep = I.pit_uniformity(m, 5, 1.3, replicates=10000, seed=1, lengths=False)
        assert rep.ks_below_band()
        assert abs(rep.coverage_at(0.95) - 0.95) < 0.01

    def test_fast_path_matches_full_build(self):
        m = M.model("normal-mean", sigma2=1.0)
        a = I.pit_uniformity(m, 4, 0.2, replicates=300, seed=4, lengths=False)
        b = I.pit_uniformity(m, 4, 0.2, replicates=300, seed=4, lengths=True)
        np.testing.assert_allclose(a.pit, b.pit, atol=1e-12)
        np.testing.assert_allclose(b.mean_length[I.DEFAULT_LEVELS.index(0.95)], 2 * 1.959964 / 2, rtol=1e-5)

    def test_binomial_geometric_coverage(self):
        m = M.model("binomial", m=1)
        rep = I.pit_uniformity(m, 20, 0.3, replicates=10000, seed=2)
        assert abs(rep.coverage_at(0.95) - 0.95) < 0.03

    def test_poisson_ratio_marginal_coverage(self):
        n, mu = 10, (2.0, 3.0)

        def simulate(rng, size):
            return list(zip(rng.poisson(n * mu[0], size).tolist(), rng.poisson(n * mu[1], size).tolist()))

        def builder(item):
            j = S.build_joint(S.poisson_ratio_chain(n), {"s1": item[0], "s2": item[1]}, "geometric", boundary="closed")
            return S.marginal_of_interest(j)

        rep = I.coverage_study(simulate, builder, mu[1] / mu[0], replicates=10000, seed=3, lengths=False, cache_key=lambda t: t)
        assert abs(rep.coverage_at(0.95) - 0.95) < 0.02

    def test_chunking_is_deterministic(self):
        m = M.model("poisson")
        a = I.pit_uniformity(m, 3, 1.2, replicates=2500, seed=9)
        b = I.pit_uniformity(m, 3, 1.2, replicates=2500, seed=9)
        np.testing.assert_array_equal(a.pit, b.pit)
        np.testing.assert_array_equal(a.mean_length, b.mean_length)
        c = I.pit_uniformity(m, 3, 1.2, replicates=2500, seed=10)
        assert not np.array_equal(a.pit, c.pit)

    def test_ks_critical_value(self):
        np.testing.assert_allclose(I.ks_critical_value(10**4), 0.0163)

    def test_meta_uniformity(self):
        # exact uniformity: study p-values are themselves uniform, and 1%
        # rejections stay within a Bi(100, 0.01) bound (P(>= 5) = 0.0034)
        m = M.model("gamma-rate", alpha=1.5)
        pv = [I.pit_uniformity(m, 4, 0.7, replicates=1000, seed=1000 + k, lengths=False).ks_pvalue for k in range(100)]
        assert sum(p <= 0.01 for p in pv) <= 4
        assert stats.kstest(pv, "uniform").pvalue > 0.001


class TestIntervalLength:
    @pytest.mark.parametrize("key, kw", [("binomial", {"m": 1}), ("binomial", {"m": 3}), ("poisson", {}), ("negative-binomial", {"m": 1})])
    def test_geometric_not_longer_than_arithmetic(self, key, kw):
        m = M.model(key, **kw)
        for n in ([12] if key == "binomial" and kw["m"] == 1 else [4]):
            top = n * kw.get("m", 1) if key == "binomial" else 12
            for s in range(1, top):
                g = F.fiducial(m, n, s, "geometric").dist
                a = F.fiducial(m, n, s, "arithmetic").dist
                lg = np.subtract(*I.equal_tail_interval(g, 0.95)[::-1])
                la = np.subtract(*I.equal_tail_interval(a, 0.95)[::-1])
                assert lg <= la + 1e-10, (s, lg, la)


class TestBayes:
    def test_binomial_jeffreys_is_geometric(self):
        m = M.model("binomial", m=1)
        post = I.bayes_posterior(m, "jeffreys", n=10, s=3)
        g = np.linspace(0.02, 0.9, 40)
        assert I.fiducial_bayes_gap(beta_dist(3.5, 7.5), post, g) < 1e-8

    @pytest.mark.parametrize("key, kw, n, s", [("poisson", {}, 6, 11), ("negative-binomial", {"m": 2}, 5, 7)])
    def test_discrete_jeffreys_is_geometric(self, key, kw, n, s):
        m = M.model(key, **kw)
        fid = F.fiducial(m, n, s, "geometric").dist
        post = I.bayes_posterior(m, "jeffreys", n=n, s=s)
        g = np.asarray(fid.ppf(np.linspace(0.005, 0.995, 40)))
        assert I.fiducial_bayes_gap(fid, post, g) < 1e-6

    def test_uniform_scale(self):
        m = M.model("uniform-scale")
        x = [0.3, 1.2, 0.9, 0.4]
        post = I.uniform_posterior(m, x)
        g = np.linspace(1.21, 6, 30)
        np.testing.assert_allclose(post.pdf(g), 4 * 1.2**4 / g**5, rtol=1e-8)
        fid = F.fiducial_right(m, 4, 1.2).dist
        assert I.fiducial_bayes_gap(fid, post, g) < 1e-6

    def test_uniform_shift(self):
        x = [0.35, 0.9, 0.6, 0.5]
        post = I.uniform_posterior(M.model("uniform-shift"), x)
        h = S.location_fiducial(x, lambda u: 0.0 if 0 < u < 1 else -math.inf, (0.0, 1.0))
        g = np.linspace(-0.09, 0.34, 30)
        assert I.fiducial_bayes_gap(h, post, g) < 1e-6

    def test_normal_location_scale(self):
        x = np.array([1.2, 0.4, 2.9, 1.7, 0.8])
        ch = S.loc_scale_normal_chain("xbar-s2")
        j = S.build_joint(ch, ch.statistics(x), "right")
        post = I.normal_location_scale_posterior(x)
        assert I.fiducial_bayes_gap(j.marginal(0), post.sigma, np.linspace(0.3, 3.0, 25)) < 1e-6
        assert I.fiducial_bayes_gap(j.marginal(1), post.theta, np.linspace(0.0, 2.8, 15)) < 1e-6

    def test_location_scale_general_sigma(self):
        x = np.array([-0.4, 0.3, 1.1])
        lp = lambda u: -u - 2.0 * math.log1p(math.exp(-u)) if u > -30 else u
        post = I.location_scale_posterior(x, lp)
        fid = S.location_scale_fiducial(x, lp)
        assert I.fiducial_bayes_gap(fid.marginal(0), post.sigma, [0.4, 0.8, 1.5]) < 1e-6

    def test_neyman_scott(self):
        pairs = np.array([[1.0, 1.6], [2.2, 1.9], [0.3, 1.1], [4.0, 3.2], [2.5, 2.4]])
        w = float(np.sum((pairs[:, 0] - pairs[:, 1]) ** 2))
        post = I.neyman_scott_posterior(pairs)
        g = np.linspace(0.02, 1.0, 30)
        np.testing.assert_allclose(post.cdf(g), stats.invgamma.cdf(g, 2.5, scale=w / 4), atol=1e-9)

    def test_trinomial_ratio(self):
        j = S.build_joint(S.trinomial_ratio_chain(15), {"x1": 3, "x2": 5}, "geometric")
        post = I.trinomial_ratio_reference_posterior(3, 5)
        assert I.fiducial_bayes_gap(S.marginal_of_interest(j), post, np.linspace(0.05, 3.0, 30)) < 1e-8

    def test_location_model(self):
        x = np.array([-1.0, 0.0, 1.0])
        h = S.location_fiducial(x, lambda u: -math.log(math.pi) - math.log1p(u * u))
        lik = lambda th: float(np.prod(stats.cauchy.pdf(x - th)))
        from scipy import integrate as spi

        z = spi.quad(lik, -np.inf, np.inf, epsabs=1e-13)[0]
        for t in [-1.0, 0.2, 2.0]:
            np.testing.assert_allclose(h.cdf(t), spi.quad(lik, -np.inf, t, epsabs=1e-13)[0] / z, atol=1e-6)

    def test_improper_posterior(self):
        with pytest.raises(DomainError):
            I.bayes_posterior(M.model("poisson"), "one-over-sigma", n=3, s=0)
        with pytest.raises(DomainError):
            I.bayes_posterior(M.model("poisson"), "jeffreys")

    def test_log_prior_kernels(self):
        lp = I.log_prior(M.model("binomial", m=1), "jeffreys")
        np.testing.assert_allclose(lp(0.2) - lp(0.5), stats.beta.logpdf(0.2, 0.5, 0.5) - stats.beta.logpdf(0.5, 0.5, 0.5))
        with pytest.raises(DomainError):
            I.log_prior(M.model("logarithmic"), "jeffreys")


class TestKL:
    def test_normal_closed_form(self):
        p, q = normal_dist(0.0, 1.0), normal_dist(0.5, 2.0)
        ref = 0.5 * (math.log(2.0) + (1 + 0.25) / 2.0 - 1)
        np.testing.assert_allclose(I.kl_divergence(p, q), ref, rtol=1e-9)

    @given(st.floats(1.0, 20.0), st.floats(1.0, 20.0))
    def test_nonnegative(self, a, b):
        assert I.kl_divergence(beta_dist(a, b), beta_dist(b, a)) >= -1e-12
