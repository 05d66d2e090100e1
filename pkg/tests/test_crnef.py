import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fiducial import crnef as C
from fiducial import fiducial1d as F
from fiducial import models as M
from fiducial.errors import BoundaryError, DomainError

SPECS = [
    C.crnef("multinomial", 3, N=2),
    C.crnef("neg-multinomial", 2, R=1.5),
    C.crnef("poisson-normal", 3, m=2, sigma2=0.7),
    C.crnef("nm-gamma-normal", 3, R=2.0, m=1),
]

PHIS = [
    np.array([0.2, -0.5, 0.9]),
    np.array([-0.4, -1.2]),
    np.array([0.3, -0.2, 1.1]),
    np.array([-0.7, -1.3, 0.4]),
]


def _p_log_jacobian(p):
    # log |d phi / d p| for phi_k = log p_k - log r_k (triangular)
    r = 1.0 - np.cumsum(p)
    r_prev = np.concatenate([[1.0], r[:-1]])
    return float(np.sum(np.log(r_prev) - np.log(p) - np.log(r)))


class TestParameterMaps:
    def test_phi_of_p_value(self):
        np.testing.assert_allclose(C.phi_of_p_multinomial([1 / 3, 1 / 3]), [-math.log(2.0), 0.0], atol=1e-15)

    @given(st.lists(st.floats(-6, 6), min_size=1, max_size=5))
    def test_p_phi_round_trip(self, phi):
        phi = np.array(phi)
        p = C.p_of_phi_multinomial(phi)
        assert np.all(p > 0) and p.sum() < 1
        np.testing.assert_allclose(C.phi_of_p_multinomial(p), phi, atol=1e-8)

    @pytest.mark.parametrize("i", range(len(SPECS)))
    def test_theta_round_trip(self, i):
        spec, phi = SPECS[i], PHIS[i]
        np.testing.assert_allclose(C.theta_to_phi(spec, C.phi_to_theta(spec, phi)), phi, atol=1e-12)

    @pytest.mark.parametrize("i", range(len(SPECS)))
    def test_mu_round_trip(self, i):
        spec, phi = SPECS[i], PHIS[i]
        np.testing.assert_allclose(C.mu_to_phi(spec, C.phi_to_mu(spec, phi)), phi, atol=1e-12)

    def test_multinomial_mu_is_n_p(self):
        spec = C.crnef("multinomial", 2, N=5)
        phi = np.array([0.4, -0.3])
        np.testing.assert_allclose(C.phi_to_mu(spec, phi), 5 * C.p_of_phi_multinomial(phi), rtol=1e-13)

    def test_multinomial_theta_is_log_ratio(self):
        spec = C.crnef("multinomial", 3, N=1)
        p = np.array([0.2, 0.3, 0.1])
        theta = C.phi_to_theta(spec, C.phi_of_p_multinomial(p))
        np.testing.assert_allclose(theta, np.log(p / 0.4), atol=1e-13)

    def test_param_triple(self):
        spec = SPECS[0]
        tri = C.ParamTriple.from_mu(spec, C.phi_to_mu(spec, PHIS[0]))
        np.testing.assert_allclose(tri.phi, PHIS[0], atol=1e-12)
        np.testing.assert_allclose(C.ParamTriple.from_theta(spec, tri.theta).mu, tri.mu, rtol=1e-12)

    def test_boundary_p_rejected(self):
        with pytest.raises(BoundaryError):
            C.phi_of_p_multinomial([0.0, 0.5])
        with pytest.raises(BoundaryError):
            C.phi_of_p_multinomial([0.5, 0.5])

    def test_bad_specs(self):
        with pytest.raises(DomainError):
            C.crnef("multinomial", 2)
        with pytest.raises(DomainError):
            C.crnef("neg-multinomial", 2, R=-1.0)
        with pytest.raises(DomainError):
            C.crnef("nm-gamma-normal", 2, R=1.0, m=2)
        with pytest.raises(DomainError):
            SPECS[1].check_phi([0.1, -0.2])


class TestLikelihood:
    def test_multinomial_matches_pmf(self):
        spec = C.crnef("multinomial", 2, N=4)
        n, s = 3, (4, 5)
        x = [4, 5, 12 - 9]
        pa, pb = np.array([0.3, 0.25]), np.array([0.1, 0.6])
        diff = C.log_likelihood(spec, n, s, C.phi_of_p_multinomial(pa)) - C.log_likelihood(spec, n, s, C.phi_of_p_multinomial(pb))
        ref = stats.multinomial.logpmf(x, 12, [*pa, 1 - pa.sum()]) - stats.multinomial.logpmf(x, 12, [*pb, 1 - pb.sum()])
        np.testing.assert_allclose(diff, ref, rtol=1e-12)

    def test_poisson_normal_matches(self):
        spec = C.crnef("poisson-normal", 2, m=1, sigma2=2.0)
        n, s = 4, (9, 3.0)
        def ref(mu):
            return stats.poisson.logpmf(9, n * mu[0]) + stats.norm.logpdf(3.0, n * mu[1], math.sqrt(2.0 * n))
        ma, mb = np.array([2.0, 0.5]), np.array([3.1, 1.2])
        diff = C.log_likelihood(spec, n, s, C.mu_to_phi(spec, ma)) - C.log_likelihood(spec, n, s, C.mu_to_phi(spec, mb))
        np.testing.assert_allclose(diff, ref(ma) - ref(mb), rtol=1e-12)

    def test_stat_checks(self):
        with pytest.raises(DomainError):
            C.log_likelihood(SPECS[0], 2, (1, 2), PHIS[0])
        with pytest.raises(DomainError):
            C.log_likelihood(SPECS[0], 1, (1, 1, 1.5), PHIS[0])
        with pytest.raises(DomainError):
            C.joint_fiducial_phi(C.crnef("multinomial", 2, N=1), 3, (2, 2))


class TestPhiFiducial:
    def test_components_are_one_dimensional_fiducials(self):
        spec = C.crnef("multinomial", 2, N=1)
        n, s = 10, (3, 4)
        j = C.joint_fiducial_phi(spec, n, s, "right")
        # phi_2 | * is the logit of the right fiducial for Bin(7, .) with s = 4
        ref = F.fiducial_right(M.model("binomial", m=7), 1, 4).dist
        g = np.array([-1.0, 0.0, 0.8])
        np.testing.assert_allclose(j.marginal(1).cdf(g), ref.cdf(1 / (1 + np.exp(-g))), atol=1e-10)
        np.testing.assert_allclose(j.conditional(1, (2.0,)).cdf(g), j.conditional(1, (-2.0,)).cdf(g), atol=1e-14)

    def test_sample_independence(self):
        spec = C.crnef("multinomial", 3, N=1)
        d = C.joint_fiducial_phi(spec, 20, (4, 6, 3), "right").sample(20000, 3)
        r = np.corrcoef(d.T)
        np.testing.assert_allclose(r[np.triu_indices(3, 1)], 0.0, atol=0.03)

    def test_geometric_is_posterior_under_fiducial_prior(self):
        spec = C.crnef("multinomial", 2, N=1)
        n, s = 10, (3, 4)
        j = C.joint_fiducial_phi(spec, n, s, "geometric")
        prior = C.fiducial_prior(spec)
        pts = [np.array(v) for v in [(-1.0, 0.2), (0.3, -0.5), (-2.0, 1.0), (0.0, 0.0)]]
        consts = [j.logpdf(p) - C.log_likelihood(spec, n, s, p) - prior(p) for p in pts]
        np.testing.assert_allclose(consts, consts[0], atol=1e-7)

    @pytest.mark.parametrize("i", range(len(SPECS)))
    def test_fiducial_prior_is_conditional_jeffreys(self, i):
        spec, phi = SPECS[i], PHIS[i]
        a, b = C.fiducial_prior(spec), C.conditional_jeffreys_log_prior(spec)
        phi2 = phi - 0.25
        np.testing.assert_allclose(a(phi) - a(phi2), b(phi) - b(phi2), atol=1e-12)


class TestMuFiducial:
    @pytest.mark.parametrize(
        "spec, n, s, mu",
        [
            (C.crnef("multinomial", 2, N=2), 5, (3, 4), (0.6, 0.8)),
            (C.crnef("neg-multinomial", 2, R=1.5), 4, (3, 5), (0.9, 1.3)),
            (C.crnef("poisson-normal", 2, m=1, sigma2=0.5), 6, (8, 2.4), (1.2, 0.5)),
            (C.crnef("nm-gamma-normal", 3, R=2.0, m=1), 3, (4, 2.5, 1.3), (0.8, 1.1, 0.7)),
        ],
    )
    def test_closed_equals_pushforward(self, spec, n, s, mu):
        a = C.joint_fiducial_mu(spec, n, s, "right")
        b = C.joint_fiducial_mu(spec, n, s, "right", method="pushforward")
        np.testing.assert_allclose(a.logpdf(mu), b.logpdf(mu), rtol=1e-6)

    def test_multinomial_kernel_matches_density(self):
        spec = C.crnef("multinomial", 2, N=1)
        n, s = 8, (2, 3)
        j = C.joint_fiducial_mu(spec, n, s, "right")
        pts = [(0.2, 0.3), (0.4, 0.1), (0.15, 0.6)]
        diffs = [j.logpdf(p) - C.mu_log_kernel(spec, n, s, p) for p in pts]
        np.testing.assert_allclose(diffs, diffs[0], atol=1e-10)

    def test_neg_multinomial_kernel_matches_density(self):
        spec = C.crnef("neg-multinomial", 2, R=1.0)
        n, s = 5, (3, 2)
        j = C.joint_fiducial_mu(spec, n, s, "right")
        pts = [(0.2, 0.3), (1.4, 0.8), (0.6, 2.0)]
        diffs = [j.logpdf(p) - C.mu_log_kernel(spec, n, s, p) for p in pts]
        np.testing.assert_allclose(diffs, diffs[0], atol=1e-10)

    def test_nm_gamma_normal_inverse_gamma(self):
        spec = C.crnef("nm-gamma-normal", 2, R=2.0, m=0)
        n, s = 4, (3.0, 1.2)
        j = C.joint_fiducial_mu(spec, n, s, "right")
        # gamma component: mu_1 ~ In-Ga(n R, s_1 R)
        g = np.array([0.5, 1.5, 3.0])
        np.testing.assert_allclose(j.marginal(0).cdf(g), stats.invgamma.cdf(g, 8.0, scale=6.0), atol=1e-12)
        c = j.conditional(1, (1.5,))
        np.testing.assert_allclose(c.cdf(0.7), stats.norm.cdf(0.7, 1.5 * 1.2 / 3.0, 1.5 / math.sqrt(3.0)), atol=1e-12)

    def test_boundary_raises(self):
        with pytest.raises(BoundaryError):
            C.joint_fiducial_mu(C.crnef("multinomial", 2, N=1), 3, (0, 1), "left")


class TestGeneralizedDirichlet:
    spec = C.crnef("multinomial", 2, N=1)
    n, s = 10, (3, 4)

    def test_params(self):
        a, b = C.multinomial_p_geometric(1, self.n, self.s).gd_params
        np.testing.assert_array_equal(a, [3.5, 4.5])
        np.testing.assert_array_equal(b, [7.5, 3.5])

    def test_density_matches_closed_form(self):
        j = C.multinomial_p_geometric(1, self.n, self.s)
        a, b = j.gd_params
        for p in [(0.2, 0.3), (0.4, 0.1), (0.05, 0.9)]:
            np.testing.assert_allclose(j.logpdf(p), C.generalized_dirichlet_logpdf(p, a, b), rtol=1e-12)

    def test_matches_phi_pushforward(self):
        jphi = C.joint_fiducial_phi(self.spec, self.n, self.s, "geometric")
        a, b = C.multinomial_p_geometric(1, self.n, self.s).gd_params
        for p in [np.array(v) for v in [(0.2, 0.3), (0.4, 0.1), (0.1, 0.6)]]:
            lhs = jphi.logpdf(C.phi_of_p_multinomial(p)) + _p_log_jacobian(p)
            np.testing.assert_allclose(math.exp(lhs), math.exp(C.generalized_dirichlet_logpdf(p, a, b)), rtol=1e-6)

    def test_sequential_beta_change_of_variables(self):
        a, b = np.array([2.5, 1.5, 3.0]), np.array([4.0, 3.5, 2.0])
        rng = np.random.default_rng(1)
        # importance check against the sequential beta construction
        v = np.column_stack([rng.beta(a[k], b[k], 200000) for k in range(3)])
        r = np.cumprod(1 - v, axis=1)
        p = v * np.column_stack([np.ones(len(v)), r[:, :-1]])
        lp = np.array([C.generalized_dirichlet_logpdf(row, a, b) for row in p[:2000]])
        lq = np.sum(stats.beta.logpdf(v[:2000], a, b), axis=1) - np.log(np.column_stack([np.ones(2000), r[:2000, :-1]])).sum(axis=1)
        np.testing.assert_allclose(lp, lq, rtol=1e-10)

    def test_simplex_normalization(self):
        a, b = C.multinomial_p_geometric(1, self.n, self.s).gd_params
        x, w = np.polynomial.legendre.leggauss(80)
        total = 0.0
        for xi, wi in zip(x, w):
            p1 = 0.5 * (xi + 1)
            p2 = 0.5 * (1 - p1) * (x + 1)
            f = [math.exp(C.generalized_dirichlet_logpdf((p1, q), a, b)) for q in p2]
            total += 0.5 * wi * 0.5 * (1 - p1) * float(np.dot(w, f))
        np.testing.assert_allclose(total, 1.0, atol=1e-6)

    def test_first_cell_is_binomial_fiducial(self):
        j = C.multinomial_p_geometric(2, 5, (4, 3))
        ref = F.fiducial(M.model("binomial", m=2), 5, 4, "geometric").closed
        g = np.linspace(0.1, 0.8, 15)
        np.testing.assert_allclose(j.marginal(0).cdf(g), ref.cdf(g), atol=1e-12)

    def test_aggregation_of_trailing_cells(self):
        # merging cells 2..3 into the remainder leaves the p1 law unchanged
        j3 = C.multinomial_p_geometric(1, 12, (3, 2, 4))
        j1 = C.multinomial_p_geometric(1, 12, (3,))
        g = np.linspace(0.05, 0.6, 12)
        np.testing.assert_allclose(j3.marginal(0).cdf(g), j1.marginal(0).cdf(g), atol=1e-13)

    def test_order_dependence(self):
        a = C.multinomial_p_geometric(1, 10, (3, 4))
        b = C.multinomial_p_geometric(1, 10, (4, 3))
        assert abs(a.logpdf((0.3, 0.4)) - b.logpdf((0.4, 0.3))) > 1e-3

    def test_sampler_mean(self):
        j = C.multinomial_p_geometric(1, self.n, self.s)
        d = j.sample(50000, 11)
        # E p1 = a1 / (a1 + b1), E p2 = (1 - E p1) a2 / (a2 + b2)
        e1 = 3.5 / 11.0
        np.testing.assert_allclose(d.mean(axis=0), [e1, (1 - e1) * 4.5 / 8.0], atol=0.005)

    def test_arithmetic_rejected(self):
        with pytest.raises(DomainError):
            C.multinomial_p_geometric(1, self.n, self.s, variant="arithmetic")
