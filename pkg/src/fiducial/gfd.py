"""Generalized fiducial density for i.i.d. continuous samples.

For a sample ``x`` of size ``n`` and a ``d``-dimensional parameter,

    r(theta) ∝ f_theta(x) J(x, theta),
    J(x, theta) = sum over index subsets i_1 < ... < i_d of
                  |det(dF_theta(x_{i_j}) / dtheta_k)| / prod_j f_theta(x_{i_j}).

Unlike fiducials built on a sufficient statistic, ``r`` depends on the
whole sample, so two samples sharing the same sufficient statistic can
give different distributions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special as _sps

from . import models as _m
from .distributions import DensityDistribution
from .errors import DomainError, IntegrationError
from .fiducial1d import _hint, fiducial_right
from .numerics import Grid

__all__ = [
    "MAX_SUBSET_N",
    "ParametricModel",
    "spec_model",
    "location_scale_model",
    "jacobian_J",
    "log_jacobian_J",
    "GfdResult",
    "gfd_density",
    "GfdComparison",
    "compare_gfd_vs_stepwise",
    "confidence_curve_values",
]

# exhaustive subset enumeration is refused for d >= 2 above this sample size
MAX_SUBSET_N = 20


@dataclass(frozen=True)
class ParametricModel:
    """Continuous i.i.d. model with a ``d``-dimensional parameter.

    Attributes
    ----------
    d : int
    logpdf : callable ``(x, theta) -> float``
    cdf : callable ``(x, theta) -> float``
    dcdf : callable ``(x, theta) -> sequence of d floats``, optional
        Gradient of the cdf in ``theta``; central differences otherwise.
    log_score_ratio : callable ``(x, theta) -> float``, optional
        ``log(|dF/dtheta| / f)`` for ``d = 1`` when it is better computed
        directly.
    theta_support : callable ``(x_array) -> (lo, hi)``, optional
        Parameter values compatible with the data (``d = 1``).
    hint : callable ``(x_array) -> (center, scale)``, optional
    label : str
    """

    d: int
    logpdf: Callable
    cdf: Callable
    dcdf: Callable | None = None
    log_score_ratio: Callable | None = None
    theta_support: Callable | None = None
    hint: Callable | None = None
    label: str = "model"


def spec_model(m: _m.ModelSpec) -> ParametricModel:
    """Adapter for one-parameter continuous catalog models."""
    if m.discrete:
        raise DomainError("the generalized fiducial density is defined here for continuous models only")
    if m.family is _m.Family.UNIFORM_LOC_SCALE:
        raise DomainError("use location_scale_model for two-parameter models")

    def support(x):
        lo, hi = m.param_space
        if m.family is _m.Family.UNIFORM_SCALE:
            lo = max(lo, float(np.max(x)))
        elif m.family is _m.Family.UNIFORM_SHIFT:
            lo, hi = float(np.max(x)) - 1.0, float(np.min(x))
        return lo, hi

    def hint(x):
        n = x.size
        s = _m.sufficient_statistic(m, x).value
        c, sc = _hint(m, n, s)
        if m.family is _m.Family.UNIFORM_SHIFT:
            lo, hi = support(x)
            return 0.5 * (lo + hi), max(hi - lo, 1e-9)
        return c, sc

    return ParametricModel(
        1,
        lambda x, th: _m.obs_logpdf(m, x, float(np.ravel(th)[0])),
        lambda x, th: _m.obs_cdf(m, x, float(np.ravel(th)[0])),
        lambda x, th: [_m.obs_dcdf(m, x, float(np.ravel(th)[0]))],
        lambda x, th: _m.obs_log_score_ratio(m, x, float(np.ravel(th)[0])),
        support,
        hint,
        m.key,
    )


def location_scale_model(logpdf0: Callable[[float], float], cdf0: Callable[[float], float], label="loc-scale") -> ParametricModel:
    """Two-parameter model ``F((x - mu) / sigma)`` with ``theta = (mu, sigma)``."""

    def logpdf(x, th):
        mu, sig = th
        return logpdf0((x - mu) / sig) - math.log(sig) if sig > 0 else -math.inf

    def cdf(x, th):
        mu, sig = th
        return cdf0((x - mu) / sig)

    def dcdf(x, th):
        mu, sig = th
        z = (x - mu) / sig
        f0 = math.exp(logpdf0(z))
        return [-f0 / sig, -f0 * z / sig]

    return ParametricModel(2, logpdf, cdf, dcdf, label=label)


def _gradient(model: ParametricModel, x: float, theta: np.ndarray) -> np.ndarray:
    if model.dcdf is not None:
        return np.asarray(model.dcdf(x, theta), dtype=float)
    g = np.empty(model.d)
    for k in range(model.d):
        h = max(1e-6, 1e-6 * abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        g[k] = (model.cdf(x, tp) - model.cdf(x, tm)) / (2 * h)
    return g


def log_jacobian_J(model: ParametricModel | _m.ModelSpec, x, theta, *, derivative: str = "analytic") -> float:
    """``log J(x, theta)``, accumulated on the log scale.

    Parameters
    ----------
    derivative : {"analytic", "fd"}
        Use the model's analytic cdf gradient or central differences.
    """
    if isinstance(model, _m.ModelSpec):
        model = spec_model(model)
    x = np.asarray(x, dtype=float).ravel()
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d, n = model.d, x.size
    if theta.size != d:
        raise DomainError(f"theta must have {d} components")
    if d > n:
        raise DomainError("need at least as many observations as parameters")
    if d > 3:
        raise DomainError("determinants are implemented for d <= 3")
    if d >= 2 and n > MAX_SUBSET_N:
        raise DomainError(f"subset enumeration is limited to n <= {MAX_SUBSET_N} for d >= 2")
    if derivative not in ("analytic", "fd"):
        raise DomainError("derivative must be 'analytic' or 'fd'")
    fd_model = model if derivative == "analytic" else ParametricModel(model.d, model.logpdf, model.cdf)

    if d == 1:
        terms = np.empty(n)
        for i, xi in enumerate(x):
            if derivative == "analytic" and model.log_score_ratio is not None:
                terms[i] = model.log_score_ratio(xi, theta)
                continue
            lf = model.logpdf(xi, theta)
            g = abs(float(_gradient(fd_model, xi, theta)[0]))
            terms[i] = math.log(g) - lf if g > 0 and lf > -math.inf else -math.inf
        return float(_sps.logsumexp(terms)) if np.any(terms > -math.inf) else -math.inf

    grads = np.array([_gradient(fd_model, xi, theta) for xi in x])
    logf = np.array([model.logpdf(xi, theta) for xi in x])
    terms = []
    for idx in itertools.combinations(range(n), d):
        det = abs(float(np.linalg.det(grads[list(idx)])))
        lf = float(np.sum(logf[list(idx)]))
        if det > 0 and lf > -math.inf:
            terms.append(math.log(det) - lf)
    return float(_sps.logsumexp(terms)) if terms else -math.inf


def jacobian_J(model, x, theta, *, derivative: str = "analytic") -> float:
    """``J(x, theta) >= 0`` (see :func:`log_jacobian_J`)."""
    lj = log_jacobian_J(model, x, theta, derivative=derivative)
    return math.exp(lj) if lj > -math.inf else 0.0


@dataclass
class GfdResult:
    """Normalized generalized fiducial distribution (``d = 1``).

    Attributes
    ----------
    x : ndarray
        The raw sample.
    log_unnormalized : callable
        ``log f_theta(x) + log J(x, theta)``.
    log_norm_constant : float
        Log of the integral of the unnormalized density.
    dist : DensityDistribution
    """

    x: np.ndarray
    log_unnormalized: Callable[[float], float]
    log_norm_constant: float
    dist: DensityDistribution = field(repr=False)

    @property
    def norm_constant(self) -> float:
        return math.exp(self.log_norm_constant)

    def unnormalized(self, theta) -> float:
        lv = self.log_unnormalized(float(theta))
        return math.exp(lv) if lv > -math.inf else 0.0

    def pdf(self, theta):
        return self.dist.pdf(theta)

    def cdf(self, theta):
        return self.dist.cdf(theta)

    def sf(self, theta):
        return self.dist.sf(theta)

    def ppf(self, q):
        return self.dist.ppf(q)

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        return self.dist.interval(level)

    def sample(self, size: int, seed):
        return self.dist.sample(size, seed)


def gfd_density(model, x, *, derivative: str = "analytic", support=None, center=None, scale=None) -> GfdResult:
    """Generalized fiducial distribution of a scalar parameter.

    Parameters
    ----------
    model : ModelSpec or ParametricModel
        Continuous one-parameter model.
    x : array_like
        The sample (not reduced to a sufficient statistic).
    support, center, scale : optional
        Override the parameter range and the quadrature hints.

    Raises
    ------
    IntegrationError
        If ``f_theta(x) J(x, theta)`` cannot be normalized (for instance
        because it is not integrable).
    """
    if isinstance(model, _m.ModelSpec):
        model = spec_model(model)
    if model.d != 1:
        raise DomainError("gfd_density normalizes scalar parameters only; use log_jacobian_J for d > 1")
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise DomainError("empty sample")
    lo, hi = support if support is not None else (model.theta_support(x) if model.theta_support else (-math.inf, math.inf))
    if not lo < hi:
        raise DomainError("sample incompatible with every parameter value")
    c0, s0 = model.hint(x) if model.hint is not None else (None, 1.0)
    c = center if center is not None else c0
    sc = scale if scale is not None else s0

    def log_r(theta: float) -> float:
        if not lo < theta < hi:
            return -math.inf
        th = np.array([theta])
        ll = 0.0
        for xi in x:
            v = model.logpdf(xi, th)
            if v == -math.inf:
                return -math.inf
            ll += v
        lj = log_jacobian_J(model, x, th, derivative=derivative)
        return ll + lj

    try:
        dist = DensityDistribution(log_r, lo, hi, center=c, scale=sc, label=f"gfd[{model.label}]")
    except (IntegrationError, FloatingPointError, OverflowError) as exc:
        raise IntegrationError(f"generalized fiducial density could not be normalized: {exc}") from exc
    if not math.isfinite(dist.log_norm):
        raise IntegrationError("generalized fiducial density is not integrable")
    return GfdResult(x, log_r, float(dist.log_norm), dist)


def confidence_curve_values(cdf_values) -> np.ndarray:
    """``|1 - 2 C|`` elementwise."""
    return np.abs(1.0 - 2.0 * np.asarray(cdf_values, dtype=float))


@dataclass
class GfdComparison:
    """Generalized fiducial ``r`` versus the sufficient-statistic fiducial ``h``."""

    grid: np.ndarray
    r_pdf: np.ndarray
    h_pdf: np.ndarray
    r_cdf: np.ndarray
    h_cdf: np.ndarray
    r_interval: tuple
    h_interval: tuple
    sup_cdf_gap: float
    level: float

    @property
    def cc_r(self) -> np.ndarray:
        return confidence_curve_values(self.r_cdf)

    @property
    def cc_h(self) -> np.ndarray:
        return confidence_curve_values(self.h_cdf)

    def table(self) -> list[tuple]:
        """Rows ``(theta, r, h, cc_r, cc_h)``."""
        return list(zip(self.grid.tolist(), self.r_pdf.tolist(), self.h_pdf.tolist(), self.cc_r.tolist(), self.cc_h.tolist()))


def compare_gfd_vs_stepwise(m: _m.ModelSpec, x, *, grid: Grid | Sequence[float] | None = None, level: float = 0.95) -> GfdComparison:
    """Compare ``r`` built from the raw sample with the fiducial ``h`` of the
    sufficient statistic.

    The sup-norm cdf distance is taken over ``grid`` (by default 401 points
    spanning the central 99.8% of both distributions).
    """
    x = np.asarray(x, dtype=float).ravel()
    r = gfd_density(m, x)
    s = _m.sufficient_statistic(m, x).value
    h = fiducial_right(m, x.size, s).dist
    if grid is None:
        lo = min(float(r.ppf(0.001)), float(h.ppf(0.001)))
        hi = max(float(r.ppf(0.999)), float(h.ppf(0.999)))
        pts = np.linspace(lo, hi, 401)
    else:
        pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    r_cdf = np.asarray(r.cdf(pts), dtype=float)
    h_cdf = np.asarray(h.cdf(pts), dtype=float)
    return GfdComparison(
        pts,
        np.asarray(r.pdf(pts), dtype=float),
        np.asarray(h.pdf(pts), dtype=float),
        r_cdf,
        h_cdf,
        r.interval(level),
        h.interval(level),
        float(np.max(np.abs(r_cdf - h_cdf))),
        level,
    )
