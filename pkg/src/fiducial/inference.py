"""Confidence curves, intervals, coverage simulation, risk and Bayes comparisons."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _st

from . import models as _m
from .distributions import (
    CdfDistribution,
    DensityDistribution,
    Distribution1D,
    ScipyDistribution,
    bound,
)
from .errors import DomainError, IntegrationError
from .fiducial1d import Variant, _hint, fiducial, right_cdf
from .numerics import Grid, fsum, integrate, spawn_rngs

__all__ = [
    "DEFAULT_LEVELS",
    "ConfidenceCurve",
    "confidence_curve",
    "equal_tail_interval",
    "CoverageReport",
    "coverage_study",
    "pit_uniformity",
    "ks_critical_value",
    "RiskReport",
    "confidence_risk_gap",
    "analytic_risk_gap",
    "Prior",
    "log_prior",
    "bayes_posterior",
    "uniform_posterior",
    "normal_location_scale_posterior",
    "location_scale_posterior",
    "neyman_scott_posterior",
    "trinomial_ratio_reference_posterior",
    "fiducial_bayes_gap",
    "kl_divergence",
]

DEFAULT_LEVELS = (0.5, 0.8, 0.9, 0.95, 0.99)


# -- curves and intervals ------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceCurve:
    """``cc(phi) = |1 - 2 C(phi)|`` on a grid."""

    grid: np.ndarray
    values: np.ndarray
    cdf: np.ndarray
    source: str = ""

    def __post_init__(self):
        if np.any((self.values < 0) | (self.values > 1)):
            raise DomainError("confidence-curve values must lie in [0, 1]")

    def crossings(self, level: float) -> list[float]:
        """Grid-interpolated points where the curve crosses ``level``."""
        out = []
        v = self.values - level
        g = self.grid
        for i in range(len(g) - 1):
            a, b = v[i], v[i + 1]
            if a == 0:
                out.append(float(g[i]))
            elif a * b < 0:
                out.append(float(g[i] - a * (g[i + 1] - g[i]) / (b - a)))
        if len(v) and v[-1] == 0:
            out.append(float(g[-1]))
        return out


def confidence_curve(dist: Distribution1D, grid: Grid | Sequence[float], source: str | None = None) -> ConfidenceCurve:
    """Evaluate the confidence curve of ``dist`` on ``grid``."""
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    c = np.clip(np.asarray(dist.cdf(pts), dtype=float), 0.0, 1.0)
    return ConfidenceCurve(np.asarray(pts, dtype=float), np.abs(1.0 - 2.0 * c), c, source or getattr(dist, "label", ""))


def equal_tail_interval(dist: Distribution1D, level: float) -> tuple[float, float]:
    """``(q_{a/2}, q_{1-a/2})`` with ``a = 1 - level``."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    a = 1.0 - level
    return float(dist.ppf(a / 2.0)), float(dist.ppf(1.0 - a / 2.0))


# -- coverage -----------------------------------------------------------------


def ks_critical_value(replicates: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (1.63/sqrt(M) at 1%)."""
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}.get(alpha)
    if c is None:
        c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c / math.sqrt(replicates)


@dataclass(frozen=True)
class CoverageReport:
    """Outcome of a repeated-sampling study of a confidence distribution."""

    model: str
    theta0: object
    levels: np.ndarray
    coverage: np.ndarray
    mean_length: np.ndarray
    replicates: int
    seed: int
    ks_statistic: float
    ks_pvalue: float
    pit: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.replicates <= 0:
            raise DomainError("replicates must be positive")
        if np.any((self.coverage < 0) | (self.coverage > 1)):
            raise DomainError("coverage must lie in [0, 1]")

    def coverage_at(self, level: float) -> float:
        idx = np.flatnonzero(np.isclose(self.levels, level))
        if idx.size == 0:
            raise DomainError(f"level {level} was not studied")
        return float(self.coverage[idx[0]])

    def ks_below_band(self, alpha: float = 0.01) -> bool:
        return self.ks_statistic < ks_critical_value(self.replicates, alpha)


_CHUNK = 1000


def coverage_study(
    simulate: Callable[[np.random.Generator, int], Sequence],
    builder: Callable[[object], Distribution1D],
    theta0: float,
    *,
    replicates: int = 10000,
    seed: int = 0,
    levels: Sequence[float] = DEFAULT_LEVELS,
    lengths: bool = True,
    label: str = "",
    cache_key: Callable | None = None,
    pit_fn: Callable[[object], float] | None = None,
) -> CoverageReport:
    """Repeated-sampling PIT and equal-tail coverage of a data-to-distribution rule.

    Replicates are split in fixed chunks of 1000, each with its own stream
    derived from ``(seed, chunk index)``, so results do not depend on how
    the chunks are scheduled.

    Parameters
    ----------
    simulate : callable ``(rng, size) -> sequence of data``
    builder : callable ``data -> Distribution1D``
    theta0 : float
        True value of the parameter of interest.
    cache_key : callable, optional
        Hashable key of a data item; identical keys reuse one built
        distribution (useful for discrete statistics).
    """
    if replicates <= 0:
        raise DomainError("replicates must be positive")
    levels = np.asarray(levels, dtype=float)
    nchunks = -(-replicates // _CHUNK)
    rngs = spawn_rngs(seed, nchunks)
    pit = np.empty(replicates)
    covered = np.zeros((replicates, levels.size), dtype=bool)
    length = np.zeros((replicates, levels.size))
    cache: dict = {}
    pos = 0
    for c in range(nchunks):
        size = min(_CHUNK, replicates - pos)
        data = simulate(rngs[c], size)
        for item in data:
            key = cache_key(item) if cache_key is not None else None
            entry = cache.get(key) if key is not None else None
            if entry is None and pit_fn is not None and not lengths:
                entry = (float(pit_fn(item)), np.zeros(levels.size))
                if key is not None:
                    cache[key] = entry
            if entry is None:
                dist = builder(item)
                u = float(dist.cdf(theta0))
                lens = np.zeros(levels.size)
                if lengths:
                    for k, lv in enumerate(levels):
                        lo, hi = equal_tail_interval(dist, lv)
                        lens[k] = hi - lo
                entry = (u, lens)
                if key is not None:
                    cache[key] = entry
            u, lens = entry
            pit[pos] = u
            a = 1.0 - levels
            covered[pos] = (u >= a / 2.0) & (u <= 1.0 - a / 2.0)
            length[pos] = lens
            pos += 1
    ks = _st.kstest(pit, "uniform")
    return CoverageReport(
        label,
        theta0,
        levels,
        covered.mean(axis=0),
        length.mean(axis=0) if lengths else np.full(levels.size, np.nan),
        replicates,
        seed,
        float(ks.statistic),
        float(ks.pvalue),
        pit,
    )


def pit_uniformity(
    m: _m.ModelSpec,
    n: int,
    theta0: float,
    builder: Callable[[float], Distribution1D] | None = None,
    *,
    replicates: int = 10000,
    seed: int = 0,
    variant: Variant | str | None = None,
    levels: Sequence[float] = DEFAULT_LEVELS,
    lengths: bool = True,
) -> CoverageReport:
    """Coverage study for a catalog model through its sufficient statistic.

    By default the builder is the geometric fiducial for discrete models
    (closed at the support ends) and the right fiducial otherwise.  With
    ``lengths=False`` and the default right builder, the PIT is evaluated
    pointwise without constructing each distribution.
    """
    m.check_theta(theta0)
    if variant is None:
        variant = Variant.GEOMETRIC if m.discrete else Variant.RIGHT
    variant = Variant(variant)
    pit_fn = None
    if builder is None and variant is Variant.RIGHT:
        pit_fn = lambda s: right_cdf(m, n, s, theta0)
    if builder is None:
        kw = {"boundary": "closed"} if variant is Variant.GEOMETRIC else {}
        builder = lambda s: fiducial(m, n, s, variant, **kw).dist

    def simulate(rng, size):
        return np.atleast_1d(_m.stat_sample(m, n, theta0, rng, size=size)).tolist()

    return coverage_study(
        simulate,
        builder,
        theta0,
        replicates=replicates,
        seed=seed,
        levels=levels,
        lengths=lengths,
        label=f"{m.key} n={n} {variant.value}",
        cache_key=(lambda s: s) if m.discrete else None,
        pit_fn=pit_fn,
    )


# -- confidence risk -------------------------------------------------------------


@dataclass(frozen=True)
class RiskReport:
    """``R(mu, H^A) - R(mu, H^G)`` on a grid of true means."""

    model: str
    n: int
    grid: np.ndarray
    gap: np.ndarray
    analytic: float
    risk_arithmetic: np.ndarray
    risk_geometric: np.ndarray
    max_mean_difference: float

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.gap - self.analytic)))


def analytic_risk_gap(key: str, n: int) -> float:
    """Closed-form risk difference for the three supported models."""
    if key == "binomial":
        return 1.0 / (4.0 * (n + 1) * (n + 2))
    if key == "negative-binomial":
        if n < 3:
            raise DomainError("negative-binomial risk needs n >= 3")
        return 1.0 / (4.0 * (n - 1) * (n - 2))
    if key == "poisson":
        return 1.0 / (4.0 * n * n)
    raise DomainError(f"risk gap not available for {key!r}")


def _mu_moments(key: str, n: int, s: int, shift: float) -> tuple[float, float]:
    """Mean and variance of the mean-parameter fiducial with the given shift.

    Degenerate fiducials at the support ends are point masses at the
    boundary of the mean space.
    """
    if key == "binomial":
        a, b = s + shift, n - s + 1.0 - shift
        if a <= 0:
            return 0.0, 0.0
        if b <= 0:
            return 1.0, 0.0
        t = a + b
        return a / t, a * b / (t * t * (t + 1.0))
    a = s + shift
    if a <= 0:
        return 0.0, 0.0
    if key == "poisson":
        return a / n, a / (n * n)
    # mu = (1 - p)/p with p ~ Be(n, s + shift): beta prime (s + shift, n)
    if n <= 2:
        return (a / (n - 1.0) if n > 1 else math.inf), math.inf
    return a / (n - 1.0), a * (a + n - 1.0) / ((n - 2.0) * (n - 1.0) ** 2)


def _support_pmf(key: str, n: int, mu: float, tail: float) -> tuple[np.ndarray, np.ndarray]:
    if key == "binomial":
        s = np.arange(n + 1)
        return s, _st.binom.pmf(s, n, mu)
    if key == "poisson":
        d = _st.poisson(n * mu)
    else:
        d = _st.nbinom(n, 1.0 / (1.0 + mu))
    hi = int(d.isf(tail)) + 2
    s = np.arange(hi + 1)
    return s, d.pmf(s)


def confidence_risk_gap(key: str, n: int, mu_grid: Sequence[float] | None = None, *, tail: float = 1e-12) -> RiskReport:
    """Exact-summation confidence risk of ``H^A`` minus that of ``H^G``.

    ``R(mu, H) = E_mu[ Var^{H_S}(mu') + (E^{H_S}(mu') - mu)^2 ]`` with the
    expectation summed over the statistic (unbounded supports truncated at
    tail mass ``tail``).  The mean parameter is ``p`` (binomial, ``m = 1``),
    ``mu`` (Poisson) and ``(1 - p)/p`` (negative binomial, ``m = 1``).
    """
    analytic = analytic_risk_gap(key, n)
    if mu_grid is None:
        if key == "binomial":
            mu_grid = np.linspace(0.05, 0.95, 10)
        else:
            mu_grid = np.linspace(0.25, 5.0, 10)
    mu_grid = np.asarray(mu_grid, dtype=float)
    ra, rg, gaps = [], [], []
    max_dmean = 0.0
    for mu in mu_grid:
        s_vals, pmf = _support_pmf(key, n, float(mu), tail)
        terms_a, terms_g = [], []
        for s, w in zip(s_vals, pmf):
            if w == 0:
                continue
            mr, vr = _mu_moments(key, n, int(s), 1.0)
            ml, vl = _mu_moments(key, n, int(s), 0.0)
            mg, vg = _mu_moments(key, n, int(s), 0.5)
            ma = 0.5 * (mr + ml)
            va = 0.5 * (vr + vl) + 0.25 * (mr - ml) ** 2
            max_dmean = max(max_dmean, abs(ma - mg))
            terms_a.append(w * (va + (ma - mu) ** 2))
            terms_g.append(w * (vg + (mg - mu) ** 2))
        a, g = fsum(terms_a), fsum(terms_g)
        ra.append(a)
        rg.append(g)
        gaps.append(a - g)
    return RiskReport(key, int(n), mu_grid, np.array(gaps), analytic, np.array(ra), np.array(rg), max_dmean)


# -- Bayes ----------------------------------------------------------------------


class Prior(str, enum.Enum):
    JEFFREYS = "jeffreys"
    REFERENCE = "reference"
    FLAT = "flat"
    ONE_OVER_SIGMA = "one-over-sigma"


def log_prior(m: _m.ModelSpec, prior: Prior | str) -> Callable[[float], float]:
    """Log prior density (up to a constant) on the model parameter.

    For a scalar parameter the reference prior is the Jeffreys prior.
    ``ONE_OVER_SIGMA`` is ``1/theta`` on a scale-type parameter.
    """
    prior = Prior(prior)
    f = m.family
    if prior is Prior.FLAT:
        return lambda th: 0.0
    if prior is Prior.ONE_OVER_SIGMA:
        return lambda th: -math.log(th)
    Fa = _m.Family
    if f is Fa.BINOMIAL:
        return lambda p: -0.5 * math.log(p) - 0.5 * math.log1p(-p)
    if f is Fa.POISSON:
        return lambda mu: -0.5 * math.log(mu)
    if f is Fa.NEGATIVE_BINOMIAL:
        return lambda p: -math.log(p) - 0.5 * math.log1p(-p)
    if f in (Fa.NORMAL_KNOWN_VAR, Fa.UNIFORM_SHIFT):
        return lambda th: 0.0
    if f in (Fa.NORMAL_KNOWN_MEAN, Fa.GAMMA, Fa.PARETO, Fa.WEIBULL, Fa.UNIFORM_SCALE):
        return lambda th: -math.log(th)
    raise DomainError(f"{prior.value} prior not implemented for {m.key}")


def _data_support(m: _m.ModelSpec, x: np.ndarray | None, n: int, s: float) -> tuple[float, float]:
    lo, hi = m.param_space
    Fa = _m.Family
    if m.family is Fa.UNIFORM_SCALE:
        lo = max(lo, float(np.max(x)) if x is not None else s)
    elif m.family is Fa.UNIFORM_SHIFT:
        if x is None:
            raise DomainError("uniform-shift posterior needs the raw sample")
        lo, hi = float(np.max(x)) - 1.0, float(np.min(x))
    return lo, hi


def _end_slope(logf, a: float, b: float, u: float, v: float) -> float | None:
    try:
        fa, fb = logf(a), logf(b)
    except (ValueError, OverflowError, ZeroDivisionError, DomainError):
        return None
    if not (math.isfinite(fa) and math.isfinite(fb)):
        return None
    return (fa - fb) / (u - v)


def _power_tails_integrable(logf, lo: float, hi: float, center: float, scale: float) -> bool:
    """Reject densities that behave like ``|t - end|^k`` with ``k <= -1`` at a
    finite end, or like ``|t|^k`` with ``k >= -1`` at an infinite end.

    Quadrature alone can return a finite number for a logarithmically
    divergent integral, so the local power is estimated from two points.
    """
    tol = 1e-3
    sc = max(scale, 1e-300)
    for end, sign in ((lo, 1.0), (hi, -1.0)):
        if math.isfinite(end):
            d1, d2 = 1e-8 * sc, 1e-11 * sc
            k = _end_slope(logf, end + sign * d1, end + sign * d2, math.log(d1), math.log(d2))
            if k is not None and k <= -1.0 + tol:
                return False
        else:
            t1, t2 = 1e8 * sc, 1e11 * sc
            c = center if math.isfinite(center) else 0.0
            k = _end_slope(logf, c - sign * t2, c - sign * t1, math.log(t2), math.log(t1))
            if k is not None and k >= -1.0 - tol:
                return False
    return True


def bayes_posterior(
    m: _m.ModelSpec,
    prior: Prior | str,
    *,
    x=None,
    n: int | None = None,
    s: float | None = None,
) -> Distribution1D:
    """Posterior from ``likelihood x prior``, normalized by quadrature.

    Give either the raw sample ``x`` or ``(n, s)``; in the latter case the
    likelihood is the density of the sufficient statistic.

    Raises
    ------
    DomainError
        If the posterior is improper (not normalizable).
    """
    lp = log_prior(m, prior)
    if x is not None:
        x = np.asarray(x, dtype=float).ravel()
        n = x.size
        s = _m.sufficient_statistic(m, x).value

        def loglik(th):
            acc = 0.0
            for xi in x:
                v = _m.obs_logpdf(m, float(xi), th)
                if v == -math.inf:
                    return -math.inf
                acc += v
            return acc

    elif n is not None and s is not None:

        def loglik(th):
            return _m.stat_logpdf(m, n, th, s)

    else:
        raise DomainError("give either x or (n, s)")
    lo, hi = _data_support(m, x, n, s)
    center, scale = _hint(m, n, s)
    if m.family is _m.Family.UNIFORM_SHIFT:
        center, scale = 0.5 * (lo + hi), max(hi - lo, 1e-12)

    def logpost(th):
        if not lo < th < hi:
            return -math.inf
        ll = loglik(th)
        return ll + lp(th) if ll > -math.inf else -math.inf

    if not _power_tails_integrable(logpost, lo, hi, center, scale):
        raise DomainError("improper posterior: the density is not integrable at a parameter end")
    try:
        dist = DensityDistribution(logpost, lo, hi, center=center, scale=scale, label=f"posterior[{m.key},{Prior(prior).value}]")
    except IntegrationError as exc:
        raise DomainError(f"improper or non-normalizable posterior: {exc}") from exc
    if not math.isfinite(dist.log_norm):
        raise DomainError("improper posterior")
    return dist


def uniform_posterior(m: _m.ModelSpec, x) -> Distribution1D:
    """Objective posterior for the uniform models: ``1/theta`` prior for
    the scale model and flat prior for the shift model."""
    if m.family is _m.Family.UNIFORM_SCALE:
        return bayes_posterior(m, Prior.ONE_OVER_SIGMA, x=x)
    if m.family is _m.Family.UNIFORM_SHIFT:
        return bayes_posterior(m, Prior.FLAT, x=x)
    raise DomainError("uniform_posterior needs a uniform model")


@dataclass(frozen=True)
class LocationScalePosterior:
    """Marginal posteriors of ``(sigma, theta)`` under the prior ``1/sigma``."""

    sigma: Distribution1D
    theta: Distribution1D


def normal_location_scale_posterior(x) -> LocationScalePosterior:
    """Closed-form ``1/sigma`` posterior for a normal sample.

    ``SS/sigma^2 ~ chi2_{n-1}`` and ``theta = xbar + t_{n-1} sqrt(SS/(n(n-1)))``.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DomainError("need n >= 2")
    xbar = fsum(x) / n
    ss = fsum((x - xbar) ** 2)
    sigma = ScipyDistribution(_SqrtInvGamma((n - 1) / 2.0, ss / 2.0), "sqrt In-Ga")
    theta = ScipyDistribution(bound(_st.t, n - 1, loc=xbar, scale=math.sqrt(ss / (n * (n - 1)))), "t")
    return LocationScalePosterior(sigma, theta)


class _SqrtInvGamma:
    """Frozen-like law of ``sqrt(V)``, ``V ~ In-Ga(a, b)``."""

    def __init__(self, a: float, b: float):
        self._v = _st.invgamma(a, scale=b)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self._v.cdf(np.maximum(x, 0) ** 2), 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self._v.sf(np.maximum(x, 0) ** 2), 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self._v.pdf(np.maximum(x, 0) ** 2) * 2 * x, 0.0)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def ppf(self, q):
        return np.sqrt(self._v.ppf(q))

    def isf(self, q):
        return np.sqrt(self._v.isf(q))

    def rvs(self, size=None, random_state=None):
        return np.sqrt(self._v.rvs(size=size, random_state=random_state))

    def mean(self):
        return float(integrate(lambda v: float(self.sf(v)), 0.0, math.inf, tol=1e-12, scale=float(self.ppf(0.5))).value)

    def var(self):
        m2 = float(self._v.mean())
        return m2 - self.mean() ** 2

    def support(self):
        return 0.0, math.inf


def location_scale_posterior(x, logpdf0: Callable[[float], float]) -> LocationScalePosterior:
    """``1/sigma`` posterior marginals for a general location-scale family.

    ``p(sigma | x) ∝ sigma^{-n-1} int prod f0((x_i - theta)/sigma) dtheta``;
    the ``theta`` marginal mixes the flat-prior location posteriors over
    ``sigma``.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DomainError("need n >= 2")
    med = float(np.median(x))
    sd = float(np.std(x, ddof=1)) or 1.0

    def loglik(theta, sig):
        acc = -n * math.log(sig)
        for xi in x:
            v = logpdf0((xi - theta) / sig)
            if v == -math.inf:
                return -math.inf
            acc += v
        return acc

    def log_marg_sigma(sig):
        if not sig > 0:
            return -math.inf
        ref = loglik(med, sig)
        sc = sig / math.sqrt(n)
        val = integrate(lambda th: math.exp(loglik(th, sig) - ref), -math.inf, math.inf, tol=1e-12, center=med, scale=sc).value
        return ref + math.log(val) - math.log(sig) if val > 0 else -math.inf

    sigma = DensityDistribution(log_marg_sigma, 0.0, math.inf, center=sd, scale=sd, label="posterior sigma")

    def theta_given_sigma_cdf(t, sig):
        ref = loglik(med, sig)
        sc = sig / math.sqrt(n)
        g = lambda th: math.exp(loglik(th, sig) - ref)
        tot = integrate(g, -math.inf, math.inf, tol=1e-12, center=med, scale=sc).value
        low = integrate(g, -math.inf, t, tol=1e-12, center=med, scale=sc).value
        return min(1.0, max(0.0, low / tot))

    def theta_cdf(t):
        return integrate(lambda u: theta_given_sigma_cdf(t, float(sigma.ppf(u))), 0.0, 1.0, tol=1e-10).value

    def theta_pdf(t):
        h = 1e-5 * max(1.0, sd)
        return max(0.0, (theta_cdf(t + h) - theta_cdf(t - h)) / (2 * h))

    theta = CdfDistribution(theta_cdf, theta_pdf, -math.inf, math.inf, center=med, scale=sd / math.sqrt(n), label="posterior theta")
    return LocationScalePosterior(sigma, theta)


def neyman_scott_posterior(pairs) -> Distribution1D:
    """Reference posterior of ``sigma^2`` for ``n`` normal pairs (prior ``1/sigma^2``).

    Integrating each ``mu_i`` out of the likelihood leaves
    ``sigma^{-n} exp(-w / (4 sigma^2))``; the posterior is normalized by
    quadrature.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("pairs must be an (n, 2) array")
    n = arr.shape[0]
    w = fsum((arr[:, 0] - arr[:, 1]) ** 2)
    if not w > 0:
        raise DomainError("all pairs are tied")

    def logpost(v):
        if not v > 0:
            return -math.inf
        # likelihood after integrating mu_i: v^{-n} * v^{n/2} e^{-w/(4v)}; prior 1/v
        return -n * math.log(v) + 0.5 * n * math.log(v) - w / (4.0 * v) - math.log(v)

    c = w / (2.0 * n)
    return DensityDistribution(logpost, 0.0, math.inf, center=c, scale=c, label="posterior sigma2")


def trinomial_ratio_reference_posterior(x1: int, x2: int) -> Distribution1D:
    """Reference posterior of ``phi1 = p1/p2``:
    ``∝ phi1^{x1 - 1/2} (1 + phi1)^{-x1 - x2 - 1}``, normalized by quadrature."""

    def logpost(f):
        if not f > 0:
            return -math.inf
        return (x1 - 0.5) * math.log(f) - (x1 + x2 + 1) * math.log1p(f)

    c = (x1 + 0.5) / (x2 + 0.5)
    return DensityDistribution(logpost, 0.0, math.inf, center=c, scale=c, label="reference phi1")


def fiducial_bayes_gap(fid: Distribution1D, post: Distribution1D, grid: Grid | Sequence[float]) -> float:
    """Sup-norm distance between two cdfs on ``grid``."""
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    a = np.asarray(fid.cdf(pts), dtype=float)
    b = np.asarray(post.cdf(pts), dtype=float)
    return float(np.max(np.abs(a - b)))


def kl_divergence(p: Distribution1D, q: Distribution1D, lo: float | None = None, hi: float | None = None) -> float:
    """``KL(p | q) = int p log(p/q)`` by quadrature over the support of ``p``."""
    lo = p.lo if lo is None else lo
    hi = p.hi if hi is None else hi
    center = float(p.ppf(0.5))
    scale = max(float(p.ppf(0.75) - p.ppf(0.25)), 1e-12)

    def g(t):
        lp = float(p.logpdf(t))
        if lp == -math.inf:
            return 0.0
        lq = float(q.logpdf(t))
        if lq == -math.inf:
            raise DomainError("KL divergence is infinite (support mismatch)")
        return math.exp(lp) * (lp - lq)

    return integrate(g, lo, hi, tol=1e-12, center=center, scale=scale).value
