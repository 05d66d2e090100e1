"""Univariate fiducial distributions for catalog models.

Four variants are available for an observed sufficient statistic ``s``:

* right: ``H_s(theta) = 1 - F_theta(s)`` (or ``F_theta(s)`` when the cdf
  increases with ``theta``),
* left (discrete models): the same construction with ``Pr{S < s}``,
* arithmetic: the average of right and left,
* geometric: density proportional to ``sqrt(h_s * h_s^l)``.

Each result carries a quadrature/root-finding backend (``numeric``) and,
when the family admits one, a closed form (``closed``).  Both are built
independently so that tests can compare them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import models as _m
from .distributions import (
    CdfDistribution,
    DensityDistribution,
    Distribution1D,
    MixtureDistribution,
    beta_dist,
    gamma_dist,
    inverse_gamma_dist,
    normal_dist,
    pareto_dist,
    uniform_dist,
)
from .errors import BoundaryError, DomainError
from .models import Family, ModelSpec

__all__ = [
    "Variant",
    "Fiducial1D",
    "fiducial",
    "fiducial_right",
    "fiducial_left",
    "fiducial_arithmetic",
    "fiducial_geometric",
    "gamma_ratio",
    "right_cdf",
    "left_cdf",
    "right_density",
    "left_density",
]


class Variant(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"
    ARITHMETIC = "arithmetic"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class Fiducial1D:
    """A univariate fiducial distribution and its provenance.

    Attributes
    ----------
    variant : Variant
    model : ModelSpec
    n : int
    s : float
        Observed sufficient statistic.
    numeric : Distribution1D or None
        Definition-based backend (root finding / quadrature).  ``None``
        only for boundary samples served by a closed-form limit.
    closed : Distribution1D or None
        Closed form when the family has one.
    closed_form : str or None
        Tag of the closed form, e.g. ``"Be"`` or ``"Ga"``.
    norm_constant_c : float or None
        Normalizing constant of the geometric variant.
    """

    variant: Variant
    model: ModelSpec
    n: int
    s: float
    numeric: Distribution1D | None
    closed: Distribution1D | None = None
    closed_form: str | None = None
    norm_constant_c: float | None = None

    @property
    def dist(self) -> Distribution1D:
        """Preferred backend: closed form if present, else numeric."""
        return self.closed if self.closed is not None else self.numeric

    @property
    def lo(self) -> float:
        return self.dist.lo

    @property
    def hi(self) -> float:
        return self.dist.hi

    def pdf(self, theta):
        return self.dist.pdf(theta)

    def logpdf(self, theta):
        return self.dist.logpdf(theta)

    def cdf(self, theta):
        return self.dist.cdf(theta)

    def sf(self, theta):
        return self.dist.sf(theta)

    def ppf(self, q):
        return self.dist.ppf(q)

    def sample(self, size: int, seed):
        return self.dist.sample(size, seed)

    def interval(self, level: float):
        return self.dist.interval(level)

    def mean(self) -> float:
        return self.dist.mean()

    def var(self) -> float:
        return self.dist.var()

    @property
    def label(self) -> str:
        return self.dist.label


# -- building blocks ---------------------------------------------------------


def _fd_dcdf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    h = max(1e-6, 1e-6 * abs(theta))
    lo, hi = m.param_space
    a, b = theta - h, theta + h
    if a <= lo:
        return (_m.stat_cdf(m, n, b, s) - _m.stat_cdf(m, n, theta, s)) / h
    if b >= hi:
        return (_m.stat_cdf(m, n, theta, s) - _m.stat_cdf(m, n, a, s)) / h
    return (_m.stat_cdf(m, n, b, s) - _m.stat_cdf(m, n, a, s)) / (2 * h)


def _in_space(m: ModelSpec, theta: float) -> bool:
    lo, hi = m.param_space
    return lo < theta < hi


def right_cdf(m: ModelSpec, n: int, s: float, theta: float) -> float:
    """``H_s(theta)`` straight from the sampling cdf."""
    if m.increasing:
        return _m.stat_cdf(m, n, theta, s)
    return _m.stat_sf(m, n, theta, s)


def _right_sf(m: ModelSpec, n: int, s: float, theta: float) -> float:
    if m.increasing:
        return _m.stat_sf(m, n, theta, s)
    return _m.stat_cdf(m, n, theta, s)


def left_cdf(m: ModelSpec, n: int, s: float, theta: float) -> float:
    """``H^l_s(theta)`` built from ``Pr{S < s}``."""
    return right_cdf(m, n, s - 1, theta)


def right_density(m: ModelSpec, n: int, s: float, theta: float, derivative: str = "analytic") -> float:
    """``h_s(theta) = |dF_theta(s)/dtheta|``."""
    if derivative == "fd":
        return abs(_fd_dcdf(m, n, theta, s))
    return abs(_m.stat_dcdf(m, n, theta, s))


def left_density(m: ModelSpec, n: int, s: float, theta: float, derivative: str = "analytic") -> float:
    return right_density(m, n, s - 1, theta, derivative)


def _hint(m: ModelSpec, n: int, s: float) -> tuple[float | None, float]:
    """Rough location/scale of the fiducial mass, used to seed brackets."""
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        return s / n, math.sqrt(m.p("sigma2") / n)
    if f is Family.NORMAL_KNOWN_MEAN:
        return s / n, s / n
    if f is Family.GAMMA:
        c = n * m.p("alpha") / s
        return c, c / math.sqrt(n * m.p("alpha"))
    if f in (Family.PARETO, Family.WEIBULL):
        c = n / s
        return c, c / math.sqrt(n)
    if f is Family.POISSON:
        return (s + 0.5) / n, math.sqrt(s + 1.0) / n
    if f is Family.TRUNCATED_EXPONENTIAL:
        return 0.0, 3.0
    if f is Family.UNIFORM_SCALE:
        return s, s / n
    return None, 1.0


def _support_checks(m: ModelSpec, n: int, s: float, variant: Variant, boundary: str = "error") -> str:
    """Validate ``s``; return ``"interior"`` or the boundary side."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    s = float(s)
    if math.isnan(s):
        raise DomainError("statistic is NaN")
    if variant is not Variant.RIGHT and not m.discrete:
        raise DomainError(f"the {variant.value} variant needs a discrete model")
    if m.family is Family.UNIFORM_LOC_SCALE:
        raise DomainError("uniform-loc-scale has no one-dimensional sufficient statistic")
    lo, hi = m.stat_support(n)
    if m.discrete:
        if s != math.floor(s):
            raise DomainError("discrete statistic must be an integer")
        if s < lo or s > hi:
            raise DomainError(f"s={s!r} outside the support [{lo}, {hi}]")
        if variant is Variant.RIGHT:
            if s >= hi:
                raise BoundaryError(f"right fiducial improper at s={s!r} (upper support end)")
            return "interior"
        if variant is Variant.LEFT:
            if s <= lo:
                raise BoundaryError(f"left fiducial improper at s={s!r} (lower support end)")
            return "interior"
        if s <= lo or s >= hi:
            if boundary == "closed" and variant is Variant.GEOMETRIC:
                return "lower" if s <= lo else "upper"
            raise BoundaryError(f"s={s!r} is a support end: the right/left pair is not proper")
        return "interior"
    if m.family is Family.UNIFORM_SHIFT:
        return "interior"
    if m.family is Family.UNIFORM_SCALE:
        if not s > 0:
            raise BoundaryError("uniform-scale requires s > 0")
        return "interior"
    if not lo < s < hi:
        raise BoundaryError(f"s={s!r} not interior to the support ({lo}, {hi})")
    return "interior"


# -- closed forms ------------------------------------------------------------


def _closed(m: ModelSpec, n: int, s: float, variant: Variant) -> tuple[Distribution1D | None, str | None]:
    f = m.family
    if variant is Variant.ARITHMETIC:
        r, tag_r = _closed(m, n, s, Variant.RIGHT)
        l, tag_l = _closed(m, n, s, Variant.LEFT)
        if r is None or l is None:
            return None, None
        return MixtureDistribution([r, l], [0.5, 0.5]), f"mix({tag_r},{tag_l})"
    if variant is Variant.RIGHT:
        if f is Family.NORMAL_KNOWN_VAR:
            return normal_dist(s / n, m.p("sigma2") / n), "N"
        if f is Family.NORMAL_KNOWN_MEAN:
            return inverse_gamma_dist(n / 2.0, s / 2.0), "In-Ga"
        if f is Family.GAMMA:
            return gamma_dist(n * m.p("alpha"), s), "Ga"
        if f in (Family.PARETO, Family.WEIBULL):
            return gamma_dist(n, s), "Ga"
        if f is Family.UNIFORM_SCALE:
            return pareto_dist(n, s), "Pa"
        if f is Family.UNIFORM_SHIFT:
            return uniform_dist(s - 1.0, s - m.p("z")), "U"
    shift = {Variant.RIGHT: 1.0, Variant.LEFT: 0.0, Variant.GEOMETRIC: 0.5}.get(variant)
    if shift is None:
        return None, None
    if f is Family.BINOMIAL:
        big_n = n * m.p("m")
        return beta_dist(s + shift, big_n - s + 1.0 - shift), "Be"
    if f is Family.POISSON:
        return gamma_dist(s + shift, float(n)), "Ga"
    if f is Family.NEGATIVE_BINOMIAL:
        return beta_dist(n * m.p("m"), s + shift), "Be"
    return None, None


# -- constructors ------------------------------------------------------------


def fiducial_right(m: ModelSpec, n: int, s: float, *, derivative: str = "analytic") -> Fiducial1D:
    """Right fiducial ``H_s``.

    The numeric backend evaluates ``1 - F_theta(s)`` (or ``F_theta(s)``)
    directly and uses the analytic parameter derivative of the sampling
    cdf as density; ``derivative="fd"`` switches to central differences
    with step ``max(1e-6, 1e-6 |theta|)``.
    """
    _support_checks(m, n, s, Variant.RIGHT)
    lo, hi = m.fiducial_support(n, s)
    center, scale = _hint(m, n, s)
    numeric = CdfDistribution(
        lambda th: right_cdf(m, n, s, th),
        lambda th: right_density(m, n, s, th, derivative),
        lo,
        hi,
        sf=lambda th: _right_sf(m, n, s, th),
        center=center,
        scale=scale,
        label=f"H_s[{m}, n={n}, s={s!r}]",
    )
    closed, tag = _closed(m, n, s, Variant.RIGHT)
    return Fiducial1D(Variant.RIGHT, m, int(n), float(s), numeric, closed, tag)


def fiducial_left(m: ModelSpec, n: int, s: float, *, derivative: str = "analytic") -> Fiducial1D:
    """Left fiducial ``H^l_s`` for discrete models."""
    _support_checks(m, n, s, Variant.LEFT)
    lo, hi = m.param_space
    center, scale = _hint(m, n, s)
    numeric = CdfDistribution(
        lambda th: left_cdf(m, n, s, th),
        lambda th: left_density(m, n, s, th, derivative),
        lo,
        hi,
        sf=lambda th: _right_sf(m, n, s - 1, th),
        center=center,
        scale=scale,
        label=f"H^l_s[{m}, n={n}, s={s!r}]",
    )
    closed, tag = _closed(m, n, s, Variant.LEFT)
    return Fiducial1D(Variant.LEFT, m, int(n), float(s), numeric, closed, tag)


def fiducial_arithmetic(m: ModelSpec, n: int, s: float) -> Fiducial1D:
    """Arithmetic mean ``(H_s + H^l_s) / 2``."""
    _support_checks(m, n, s, Variant.ARITHMETIC)
    r = fiducial_right(m, n, s)
    l = fiducial_left(m, n, s)
    numeric = MixtureDistribution([r.numeric, l.numeric], [0.5, 0.5], label=f"H^A_s[{m}, n={n}, s={s!r}]")
    closed, tag = _closed(m, n, s, Variant.ARITHMETIC)
    return Fiducial1D(Variant.ARITHMETIC, m, int(n), float(s), numeric, closed, tag)


def fiducial_geometric(
    m: ModelSpec,
    n: int,
    s: float,
    *,
    numeric: bool = True,
    boundary: str = "error",
    derivative: str = "analytic",
) -> Fiducial1D:
    """Geometric mean fiducial with density ``c^{-1} sqrt(h_s h^l_s)``.

    Parameters
    ----------
    numeric : bool
        Build the quadrature-normalized backend (and ``c``).  Coverage
        loops over closed-form families can skip it.
    boundary : {"error", "closed"}
        At a support end the pair ``(H_s, H^l_s)`` is not proper.  With
        ``"closed"`` the closed-form limit of the family is returned
        instead of raising (only for families that have one).
    """
    side = _support_checks(m, n, s, Variant.GEOMETRIC, boundary)
    closed, tag = _closed(m, n, s, Variant.GEOMETRIC)
    if side != "interior":
        if closed is None:
            raise BoundaryError(f"no closed-form limit for {m.key} at s={s!r}")
        return Fiducial1D(Variant.GEOMETRIC, m, int(n), float(s), None, closed, tag)
    if not numeric:
        if closed is None:
            raise DomainError(f"{m.key} has no closed-form geometric fiducial")
        return Fiducial1D(Variant.GEOMETRIC, m, int(n), float(s), None, closed, tag)

    def logdens(th: float) -> float:
        if not _in_space(m, th):
            return -math.inf
        a = right_density(m, n, s, th, derivative)
        b = left_density(m, n, s, th, derivative)
        if a <= 0 or b <= 0:
            return -math.inf
        return 0.5 * (math.log(a) + math.log(b))

    lo, hi = m.param_space
    center, scale = _hint(m, n, s)
    dens = DensityDistribution(
        logdens, lo, hi, center=center, scale=scale, label=f"H^G_s[{m}, n={n}, s={s!r}]"
    )
    c = math.exp(dens.log_norm)
    return Fiducial1D(Variant.GEOMETRIC, m, int(n), float(s), dens, closed, tag, c)


_BUILDERS: dict[Variant, Callable[..., Fiducial1D]] = {
    Variant.RIGHT: fiducial_right,
    Variant.LEFT: fiducial_left,
    Variant.ARITHMETIC: fiducial_arithmetic,
    Variant.GEOMETRIC: fiducial_geometric,
}


def fiducial(m: ModelSpec, n: int, s: float, variant: Variant | str = Variant.RIGHT, **kw) -> Fiducial1D:
    """Dispatch on ``variant``."""
    return _BUILDERS[Variant(variant)](m, n, s, **kw)


def gamma_ratio(m: ModelSpec, n: int, s: float, theta: float) -> float:
    """``(d p_theta(s)/d theta) / (-d F_theta(s)/d theta)`` for discrete NEFs.

    The ratio does not depend on the parameterization; it is computed in
    the natural parameter as ``(s - E S) / sum_t (E S - t) p(t)/p(s)``
    with the same-sign side of the sum and the pmf ratios taken on the
    log scale, which keeps it accurate near the parameter boundary.
    """
    if not m.discrete:
        raise DomainError("gamma_ratio is defined for discrete models")
    m.check_theta(theta)
    _support_checks(m, n, s, Variant.GEOMETRIC)
    es = _m.nef_mean(m, n, theta)
    lp_s = float(_m._disc_logpmf(m, n, theta, np.array([float(s)]))[0])
    lo = int(m.stat_support(n)[0])
    if es >= s:
        tt = np.arange(lo, int(s) + 1, dtype=float)
        w = np.exp(_m._disc_logpmf(m, n, theta, tt) - lp_s)
        denom = _m.fsum((es - tt) * w)
    else:
        acc, start, chunk = 0.0, int(s) + 1, 64
        big = m.stat_support(n)[1]
        while True:
            stop = start + chunk if math.isinf(big) else min(start + chunk, int(big) + 1)
            tt = np.arange(start, stop, dtype=float)
            if tt.size == 0:
                break
            terms = (tt - es) * np.exp(_m._disc_logpmf(m, n, theta, tt) - lp_s)
            acc += _m.fsum(terms)
            if tt[-1] > es and terms[-1] <= 1e-13 * acc:
                break
            start = stop
            chunk = min(chunk * 2, 1 << 16)
        denom = acc
    return (s - es) / denom
