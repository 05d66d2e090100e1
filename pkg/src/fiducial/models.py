"""Sampling models: the observable side of every construction.

Each family exposes the distribution of its one-dimensional sufficient
statistic ``S`` (cdf, density/pmf, analytic derivative in the parameter,
sampler) plus observation-level helpers used by the generalized fiducial
and location/scale constructions.

Discrete families are natural exponential families; for them the
parameter derivative of the cdf is also available through the
same-sign sums ``sum_{t<=s} (E S - t) p(t)`` / ``sum_{t>s} (t - E S) p(t)``,
which avoid cancellation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as _spi
from scipy import special as _sps
from scipy import stats as _st

from .errors import DomainError
from .numerics import fsum, make_rng

__all__ = [
    "Family",
    "ModelSpec",
    "SufficientStat",
    "model",
    "MODEL_KEYS",
    "stat_cdf",
    "stat_sf",
    "stat_dcdf_nef",
    "stat_dpmf",
    "stat_pdf",
    "stat_logpdf",
    "stat_dcdf",
    "stat_sample",
    "sample_observations",
    "sufficient_statistic",
    "stirling_first_kind_abs",
    "log_stirling_first_kind_abs",
    "nef_h",
    "nef_mean",
    "obs_logpdf",
    "obs_cdf",
    "obs_dcdf",
    "obs_log_score_ratio",
    "irwin_hall_pdf",
]

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


# fast scalar densities (scipy.stats per-call overhead dominates inner loops)
def _beta_pdf(x: float, a: float, b: float) -> float:
    if not 0 < x < 1:
        return 0.0
    return math.exp((a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - _betaln(a, b))


def _betaln(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _gamma_pdf(x: float, a: float) -> float:
    if x <= 0:
        return 0.0
    return math.exp((a - 1) * math.log(x) - x - math.lgamma(a))


def _pois_pmf(k: int, lam: float) -> float:
    if k < 0:
        return 0.0
    if lam == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1.0))


def _norm_pdf(x: float, mu: float, sd: float) -> float:
    z = (x - mu) / sd
    return math.exp(-0.5 * z * z - _LOG_SQRT_2PI) / sd


class Family(str, enum.Enum):
    NORMAL_KNOWN_VAR = "normal-mean"
    NORMAL_KNOWN_MEAN = "normal-variance"
    GAMMA = "gamma-rate"
    PARETO = "pareto"
    WEIBULL = "weibull"
    BINOMIAL = "binomial"
    POISSON = "poisson"
    NEGATIVE_BINOMIAL = "negative-binomial"
    LOGARITHMIC = "logarithmic"
    TRUNCATED_EXPONENTIAL = "truncated-exponential"
    UNIFORM_SCALE = "uniform-scale"
    UNIFORM_SHIFT = "uniform-shift"
    UNIFORM_LOC_SCALE = "uniform-loc-scale"


_DISCRETE = {Family.BINOMIAL, Family.POISSON, Family.NEGATIVE_BINOMIAL, Family.LOGARITHMIC}

# default fixed parameters
_DEFAULTS: dict[Family, dict[str, float]] = {
    Family.NORMAL_KNOWN_VAR: {"sigma2": 1.0},
    Family.NORMAL_KNOWN_MEAN: {"mu": 0.0},
    Family.GAMMA: {"alpha": 1.0},
    Family.PARETO: {"x0": 1.0},
    Family.WEIBULL: {"c": 1.0},
    Family.BINOMIAL: {"m": 1.0},
    Family.POISSON: {},
    Family.NEGATIVE_BINOMIAL: {"m": 1.0},
    Family.LOGARITHMIC: {},
    Family.TRUNCATED_EXPONENTIAL: {},
    Family.UNIFORM_SCALE: {},
    Family.UNIFORM_SHIFT: {"z": 0.0},
    Family.UNIFORM_LOC_SCALE: {"sigma": 1.0},
}

# F_theta(s) increasing in the free parameter
_INCREASING = {
    Family.GAMMA,
    Family.PARETO,
    Family.WEIBULL,
    Family.NEGATIVE_BINOMIAL,
    Family.TRUNCATED_EXPONENTIAL,
}

_PARAM_SPACE: dict[Family, tuple[float, float]] = {
    Family.NORMAL_KNOWN_VAR: (-math.inf, math.inf),
    Family.NORMAL_KNOWN_MEAN: (0.0, math.inf),
    Family.GAMMA: (0.0, math.inf),
    Family.PARETO: (0.0, math.inf),
    Family.WEIBULL: (0.0, math.inf),
    Family.BINOMIAL: (0.0, 1.0),
    Family.POISSON: (0.0, math.inf),
    Family.NEGATIVE_BINOMIAL: (0.0, 1.0),
    Family.LOGARITHMIC: (0.0, 1.0),
    Family.TRUNCATED_EXPONENTIAL: (-math.inf, math.inf),
    Family.UNIFORM_SCALE: (0.0, math.inf),
    Family.UNIFORM_SHIFT: (-math.inf, math.inf),
    Family.UNIFORM_LOC_SCALE: (-math.inf, math.inf),
}

_STAT_NAMES = {
    Family.NORMAL_KNOWN_VAR: "sum x",
    Family.NORMAL_KNOWN_MEAN: "sum (x - mu)^2",
    Family.GAMMA: "sum x",
    Family.PARETO: "sum log(x / x0)",
    Family.WEIBULL: "sum x^c",
    Family.BINOMIAL: "sum x",
    Family.POISSON: "sum x",
    Family.NEGATIVE_BINOMIAL: "sum x",
    Family.LOGARITHMIC: "sum x",
    Family.TRUNCATED_EXPONENTIAL: "sum x",
    Family.UNIFORM_SCALE: "max x",
    Family.UNIFORM_SHIFT: "max x",
}


@dataclass(frozen=True)
class ModelSpec:
    """A parametric sampling model with its fixed parameters.

    Attributes
    ----------
    family : Family
    fixed : tuple of (name, value)
        Fixed (known) parameters, e.g. ``sigma2`` for the normal mean model
        or ``m`` for the binomial number of trials per observation.
    """

    family: Family
    fixed: tuple = field(default=())

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        merged = dict(_DEFAULTS[fam])
        for k, v in dict(self.fixed).items():
            if k not in merged:
                raise DomainError(f"unknown parameter {k!r} for {fam.value}")
            merged[k] = float(v)
        object.__setattr__(self, "fixed", tuple(sorted(merged.items())))
        p = merged
        if fam is Family.NORMAL_KNOWN_VAR and not p["sigma2"] > 0:
            raise DomainError("sigma2 must be positive")
        if fam is Family.GAMMA and not p["alpha"] > 0:
            raise DomainError("alpha must be positive")
        if fam is Family.PARETO and not p["x0"] > 0:
            raise DomainError("x0 must be positive")
        if fam is Family.WEIBULL and not p["c"] > 0:
            raise DomainError("c must be positive")
        if fam in (Family.BINOMIAL, Family.NEGATIVE_BINOMIAL):
            if not (p["m"] >= 1 and float(p["m"]).is_integer()):
                raise DomainError("m must be a positive integer")
        if fam is Family.UNIFORM_SHIFT and not 0 <= p["z"] < 1:
            raise DomainError("range z must lie in [0, 1)")
        if fam is Family.UNIFORM_LOC_SCALE and not p["sigma"] > 0:
            raise DomainError("sigma must be positive")

    # -- descriptive properties
    @property
    def params(self) -> dict[str, float]:
        return dict(self.fixed)

    def p(self, name: str) -> float:
        return dict(self.fixed)[name]

    @property
    def key(self) -> str:
        return self.family.value

    @property
    def discrete(self) -> bool:
        return self.family in _DISCRETE

    @property
    def increasing(self) -> bool:
        """True when ``F_theta(s)`` increases with the free parameter."""
        return self.family in _INCREASING

    @property
    def param_space(self) -> tuple[float, float]:
        return _PARAM_SPACE[self.family]

    def stat_support(self, n: int, theta: float | None = None) -> tuple[float, float]:
        """Closure of the support of ``S`` (lattice ends for discrete models)."""
        f = self.family
        if f is Family.NORMAL_KNOWN_VAR:
            return (-math.inf, math.inf)
        if f in (Family.NORMAL_KNOWN_MEAN, Family.GAMMA, Family.PARETO, Family.WEIBULL):
            return (0.0, math.inf)
        if f is Family.BINOMIAL:
            return (0.0, n * self.p("m"))
        if f in (Family.POISSON, Family.NEGATIVE_BINOMIAL):
            return (0.0, math.inf)
        if f is Family.LOGARITHMIC:
            return (float(n), math.inf)
        if f is Family.TRUNCATED_EXPONENTIAL:
            return (0.0, float(n))
        if f is Family.UNIFORM_SCALE:
            return (0.0, math.inf if theta is None else theta)
        if f is Family.UNIFORM_SHIFT:
            if theta is None:
                return (-math.inf, math.inf)
            return (theta + self.p("z"), theta + 1.0)
        raise DomainError(f"{f.value} has no one-dimensional sufficient statistic")

    def fiducial_support(self, n: int, s: float) -> tuple[float, float]:
        """Parameter values compatible with the observed statistic."""
        if self.family is Family.UNIFORM_SCALE:
            return (float(s), math.inf)
        if self.family is Family.UNIFORM_SHIFT:
            return (s - 1.0, s - self.p("z"))
        return self.param_space

    def check_theta(self, theta) -> None:
        lo, hi = self.param_space
        th = np.asarray(theta, dtype=float)
        if np.any(~((th > lo) & (th < hi)) & ~((th == lo) & np.isinf(lo))):
            raise DomainError(f"theta={theta!r} outside parameter space ({lo}, {hi}) of {self.key}")

    def with_params(self, **kw) -> "ModelSpec":
        merged = dict(self.fixed)
        merged.update(kw)
        return ModelSpec(self.family, tuple(merged.items()))

    def __str__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.fixed)
        return f"{self.key}({args})"


def model(key: str | Family, **fixed) -> ModelSpec:
    """Catalog constructor, e.g. ``model("binomial", m=1)``."""
    try:
        fam = Family(key)
    except ValueError:
        raise DomainError(f"unknown model {key!r}; choose from {sorted(MODEL_KEYS)}") from None
    return ModelSpec(fam, tuple(fixed.items()))


MODEL_KEYS = frozenset(f.value for f in Family)


@dataclass(frozen=True)
class SufficientStat:
    name: str
    value: float
    sample_size: int


# -- Stirling numbers --------------------------------------------------------


class _StirlingTable:
    """Rows ``|s(t, k)|`` for ``k <= width`` built by exact recurrence."""

    def __init__(self):
        self.width = 0
        self.rows: list[list[int]] = [[1]]

    def _rebuild(self, width: int):
        self.width = width
        self.rows = [[1] + [0] * width]

    def row(self, t: int, k: int) -> list[int]:
        if k > self.width:
            self._rebuild(max(k, 2 * self.width, 16))
        while len(self.rows) <= t:
            j = len(self.rows) - 1
            prev = self.rows[-1]
            new = [0] * (self.width + 1)
            for c in range(1, self.width + 1):
                new[c] = j * prev[c] + prev[c - 1]
            self.rows.append(new)
        return self.rows[t]


_STIRLING = _StirlingTable()


def stirling_first_kind_abs(t: int, n: int) -> int:
    """Unsigned Stirling number of the first kind ``|s(t, n)|``.

    Counts permutations of ``t`` elements with exactly ``n`` cycles.
    """
    if int(t) != t or int(n) != n or n < 1 or t < n:
        raise DomainError("stirling numbers require integers 1 <= n <= t")
    return _STIRLING.row(int(t), int(n))[int(n)]


@lru_cache(maxsize=256)
def _log_stirling_column(n: int, tmax: int) -> np.ndarray:
    _STIRLING.row(tmax, n)
    return np.array([math.log(_STIRLING.rows[t][n]) if t >= n else -math.inf for t in range(tmax + 1)])


def log_stirling_first_kind_abs(t, n: int):
    """``log |s(t, n)|`` for integer ``t`` (array allowed)."""
    ta = np.asarray(t, dtype=int)
    tmax = int(ta.max()) if ta.size else n
    tmax = max(tmax, n)
    # round up so the cache is reused across nearby requests
    tmax = 1 << max(5, (tmax - 1).bit_length())
    col = _log_stirling_column(int(n), tmax)
    out = col[ta]
    return float(out) if np.ndim(t) == 0 else out


# -- truncated exponential helpers ------------------------------------------


def irwin_hall_pdf(s, n: int):
    """Density of a sum of ``n`` independent U(0, 1) variables."""
    s_arr = np.asarray(s, dtype=float)
    out = np.zeros_like(s_arr)
    fact = math.factorial(n - 1)
    inside = (s_arr > 0) & (s_arr < n)
    for k in range(n + 1):
        term = (-1) ** k * math.comb(n, k) * np.where(s_arr - k > 0, s_arr - k, 0.0) ** (n - 1)
        out = out + np.where(inside, term, 0.0)
    out = np.clip(out / fact, 0.0, None)
    if n == 1:
        out = np.where(inside, 1.0, 0.0)
    return float(out) if np.ndim(s) == 0 else out


def _te_log_norm(theta: float) -> float:
    """``log(theta / (1 - e^{-theta}))``, continuous at 0."""
    if abs(theta) < 1e-4:
        return theta / 2.0 - theta**2 / 24.0 + theta**4 / 2880.0
    if theta < 0:
        # |1 - e^{-theta}| = e^{-theta} (1 - e^{theta}) without overflow
        return math.log(-theta) + theta - math.log(-math.expm1(theta))
    return math.log(theta) - math.log(-math.expm1(-theta))


def _te_mean1(theta: float) -> float:
    """Mean of one truncated exponential observation."""
    if abs(theta) < 1e-4:
        return 0.5 - theta / 12.0 + theta**3 / 720.0
    return 1.0 / theta - 1.0 / math.expm1(theta)


def _te_logpdf_sum(theta: float, s: float, n: int) -> float:
    ih = irwin_hall_pdf(s, n)
    if ih <= 0:
        return -math.inf
    return n * _te_log_norm(theta) - theta * s + math.log(ih)


def _te_cdf(theta: float, s: float, n: int) -> float:
    if s <= 0:
        return 0.0
    if s >= n:
        return 1.0
    if n == 1:
        if abs(theta) < 1e-12:
            return s
        return math.expm1(-theta * s) / math.expm1(-theta)
    pts = [k for k in range(1, n) if k < s]
    f = lambda u: math.exp(_te_logpdf_sum(theta, u, n))
    if s <= n / 2:
        return _spi.quad(f, 0.0, s, points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    pts = [k for k in range(1, n) if k > s]
    return 1.0 - _spi.quad(f, s, float(n), points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def _te_dcdf(theta: float, s: float, n: int) -> float:
    """``dF/dtheta = int_0^s (E S - u) p(u) du`` (same-sign side chosen)."""
    if s <= 0 or s >= n:
        return 0.0
    es = n * _te_mean1(theta)
    f = lambda u: (es - u) * math.exp(_te_logpdf_sum(theta, u, n))
    if s <= es:
        pts = [k for k in range(1, n) if k < s]
        return _spi.quad(f, 0.0, s, points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    pts = [k for k in range(1, n) if k > s]
    return -_spi.quad(f, s, float(n), points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


# -- discrete NEF machinery --------------------------------------------------


def _disc_logpmf(m: ModelSpec, n: int, theta: float, t: np.ndarray) -> np.ndarray:
    f = m.family
    t = np.asarray(t, dtype=float)
    if f is Family.BINOMIAL:
        return _st.binom.logpmf(t, int(n * m.p("m")), theta)
    if f is Family.POISSON:
        return _st.poisson.logpmf(t, n * theta)
    if f is Family.NEGATIVE_BINOMIAL:
        return _st.nbinom.logpmf(t, n * m.p("m"), theta)
    if f is Family.LOGARITHMIC:
        ti = t.astype(int)
        ok = (ti >= n) & (ti == t)
        out = np.full(t.shape, -math.inf)
        if np.any(ok):
            tt = ti[ok]
            out[ok] = (
                _sps.gammaln(n + 1)
                + log_stirling_first_kind_abs(tt, n)
                - _sps.gammaln(tt + 1.0)
                + tt * math.log(theta)
                - n * math.log(-math.log1p(-theta))
            )
        return out
    raise DomainError(f"{f.value} is not discrete")


def nef_mean(m: ModelSpec, n: int, theta: float) -> float:
    """``E_theta S = n M'``, the mean of the sufficient statistic."""
    f = m.family
    if f is Family.BINOMIAL:
        return n * m.p("m") * theta
    if f is Family.POISSON:
        return n * theta
    if f is Family.NEGATIVE_BINOMIAL:
        return n * m.p("m") * (1.0 - theta) / theta
    if f is Family.LOGARITHMIC:
        return n * theta / ((1.0 - theta) * (-math.log1p(-theta)))
    if f is Family.TRUNCATED_EXPONENTIAL:
        return n * _te_mean1(theta)
    raise DomainError(f"{f.value} is not handled as an NEF here")


def _dnat(m: ModelSpec, theta: float) -> float:
    """Derivative of the natural parameter with respect to ``theta``."""
    f = m.family
    if f is Family.BINOMIAL:
        return 1.0 / (theta * (1.0 - theta))
    if f in (Family.POISSON, Family.LOGARITHMIC):
        return 1.0 / theta
    if f is Family.NEGATIVE_BINOMIAL:
        return -1.0 / (1.0 - theta)
    raise DomainError(f"{f.value} has no discrete natural parameterization")


def _upper_tail_weighted(m: ModelSpec, n: int, theta: float, s: int, es: float) -> float:
    """``sum_{t > s} (t - es) p(t)`` truncated at relative error 1e-12."""
    if m.family is Family.BINOMIAL:
        tt = np.arange(s + 1, int(n * m.p("m")) + 1, dtype=float)
        return fsum((tt - es) * np.exp(_disc_logpmf(m, n, theta, tt)))
    acc = 0.0
    start = s + 1
    chunk = 64
    while True:
        tt = np.arange(start, start + chunk, dtype=float)
        terms = (tt - es) * np.exp(_disc_logpmf(m, n, theta, tt))
        acc += fsum(terms)
        last = terms[-1]
        if tt[-1] > es and (last <= 1e-13 * acc or acc == 0.0 and last == 0.0):
            return acc
        start += chunk
        chunk = min(chunk * 2, 1 << 16)
        if start > 10_000_000:
            return acc


def nef_h(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """``-dF/d(natural parameter)`` at ``s`` via same-sign sums.

    Equals ``sum_{t<=s}(E S - t)p(t) = sum_{t>s}(t - E S)p(t) >= 0``.
    """
    if not m.discrete:
        raise DomainError("nef_h is defined for discrete families")
    s = int(math.floor(s))
    es = nef_mean(m, n, theta)
    lo = int(m.stat_support(n)[0])
    if s < lo:
        return 0.0
    if es >= s:
        tt = np.arange(lo, s + 1, dtype=float)
        return max(fsum((es - tt) * np.exp(_disc_logpmf(m, n, theta, tt))), 0.0)
    return max(_upper_tail_weighted(m, n, theta, s, es), 0.0)


# -- statistic-level API -----------------------------------------------------


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError("sample size n must be a positive integer")
    return int(n)


def _check_s(s) -> float:
    s = float(s)
    if math.isnan(s):
        raise DomainError("statistic is NaN")
    return s


def stat_cdf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """``F_theta(s) = Pr_theta{S <= s}``.

    Values of ``s`` beyond the support give 0 or 1.
    """
    n = _check_n(n)
    s = _check_s(s)
    m.check_theta(theta)
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        return float(_st.norm.cdf(s, n * theta, math.sqrt(n * m.p("sigma2"))))
    if f is Family.NORMAL_KNOWN_MEAN:
        return float(_sps.gammainc(n / 2.0, max(s, 0.0) / (2.0 * theta)))
    if f is Family.GAMMA:
        return float(_sps.gammainc(n * m.p("alpha"), theta * max(s, 0.0)))
    if f in (Family.PARETO, Family.WEIBULL):
        return float(_sps.gammainc(n, theta * max(s, 0.0)))
    if f is Family.BINOMIAL:
        return float(_st.binom.cdf(math.floor(s), int(n * m.p("m")), theta))
    if f is Family.POISSON:
        return float(_st.poisson.cdf(math.floor(s), n * theta))
    if f is Family.NEGATIVE_BINOMIAL:
        return float(_st.nbinom.cdf(math.floor(s), n * m.p("m"), theta))
    if f is Family.LOGARITHMIC:
        t = math.floor(s)
        if t < n:
            return 0.0
        es = nef_mean(m, n, theta)
        tt = np.arange(n, t + 1, dtype=float)
        low = fsum(np.exp(_disc_logpmf(m, n, theta, tt)))
        if es < t:  # upper tail is the smaller piece
            up = 0.0
            start = t + 1
            while True:
                tt = np.arange(start, start + 256, dtype=float)
                terms = np.exp(_disc_logpmf(m, n, theta, tt))
                up += fsum(terms)
                if terms[-1] <= 1e-17 * max(up, 1e-300) or start > 10_000_000:
                    break
                start += 256
            return min(1.0, max(0.0, 1.0 - up)) if up < 0.5 else min(1.0, low)
        return min(1.0, low)
    if f is Family.TRUNCATED_EXPONENTIAL:
        return _te_cdf(theta, s, n)
    if f is Family.UNIFORM_SCALE:
        if s <= 0:
            return 0.0
        return 1.0 if s >= theta else (s / theta) ** n
    if f is Family.UNIFORM_SHIFT:
        z = m.p("z")
        return min(1.0, max(0.0, (s - z - theta) / (1.0 - z)))
    raise DomainError(f"{f.value} has no one-dimensional sufficient statistic")


def stat_sf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """``1 - F_theta(s) = Pr_theta{S > s}`` computed without cancellation."""
    n = _check_n(n)
    s = _check_s(s)
    m.check_theta(theta)
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        return float(_st.norm.sf(s, n * theta, math.sqrt(n * m.p("sigma2"))))
    if f is Family.NORMAL_KNOWN_MEAN:
        return float(_sps.gammaincc(n / 2.0, max(s, 0.0) / (2.0 * theta)))
    if f is Family.GAMMA:
        return float(_sps.gammaincc(n * m.p("alpha"), theta * max(s, 0.0)))
    if f in (Family.PARETO, Family.WEIBULL):
        return float(_sps.gammaincc(n, theta * max(s, 0.0)))
    if f is Family.BINOMIAL:
        return float(_st.binom.sf(math.floor(s), int(n * m.p("m")), theta))
    if f is Family.POISSON:
        return float(_st.poisson.sf(math.floor(s), n * theta))
    if f is Family.NEGATIVE_BINOMIAL:
        return float(_st.nbinom.sf(math.floor(s), n * m.p("m"), theta))
    if f is Family.LOGARITHMIC:
        t = math.floor(s)
        if t < n:
            return 1.0
        es = nef_mean(m, n, theta)
        if es < t:
            up = 0.0
            start = t + 1
            while True:
                tt = np.arange(start, start + 256, dtype=float)
                terms = np.exp(_disc_logpmf(m, n, theta, tt))
                up += fsum(terms)
                if terms[-1] <= 1e-17 * max(up, 1e-300) or start > 10_000_000:
                    break
                start += 256
            return min(1.0, up)
        tt = np.arange(n, t + 1, dtype=float)
        return max(0.0, 1.0 - fsum(np.exp(_disc_logpmf(m, n, theta, tt))))
    if f is Family.TRUNCATED_EXPONENTIAL:
        if s <= 0:
            return 1.0
        if s >= n:
            return 0.0
        if n == 1:
            if abs(theta) < 1e-12:
                return 1.0 - s
            return (math.expm1(-theta) - math.expm1(-theta * s)) / math.expm1(-theta)
        pts = [k for k in range(1, n) if k > s]
        g = lambda u: math.exp(_te_logpdf_sum(theta, u, n))
        return _spi.quad(g, s, float(n), points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return 1.0 - stat_cdf(m, n, theta, s)


def stat_logpdf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    n = _check_n(n)
    s = _check_s(s)
    m.check_theta(theta)
    f = m.family
    if m.discrete:
        if s != math.floor(s):
            return -math.inf
        return float(_disc_logpmf(m, n, theta, np.array([s]))[0])
    if f is Family.NORMAL_KNOWN_VAR:
        return float(_st.norm.logpdf(s, n * theta, math.sqrt(n * m.p("sigma2"))))
    if f is Family.NORMAL_KNOWN_MEAN:
        return float(_st.gamma.logpdf(s, n / 2.0, scale=2.0 * theta))
    if f is Family.GAMMA:
        return float(_st.gamma.logpdf(s, n * m.p("alpha"), scale=1.0 / theta))
    if f in (Family.PARETO, Family.WEIBULL):
        return float(_st.gamma.logpdf(s, n, scale=1.0 / theta))
    if f is Family.TRUNCATED_EXPONENTIAL:
        return _te_logpdf_sum(theta, s, n)
    if f is Family.UNIFORM_SCALE:
        if not 0 < s < theta:
            return -math.inf
        return math.log(n) + (n - 1) * math.log(s) - n * math.log(theta)
    if f is Family.UNIFORM_SHIFT:
        z = m.p("z")
        return -math.log1p(-z) if theta + z < s < theta + 1 else -math.inf
    raise DomainError(f"{f.value} has no one-dimensional sufficient statistic")


def stat_pdf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """Density (continuous) or pmf (discrete) of ``S`` at ``s``."""
    v = stat_logpdf(m, n, theta, s)
    return math.exp(v) if v > -math.inf else 0.0


def stat_dcdf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """Analytic ``dF_theta(s)/dtheta`` (signed)."""
    n = _check_n(n)
    s = _check_s(s)
    m.check_theta(theta)
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        sd = math.sqrt(n * m.p("sigma2"))
        return -n * _norm_pdf(s, n * theta, sd)
    if f is Family.NORMAL_KNOWN_MEAN:
        if s <= 0:
            return 0.0
        x = s / (2.0 * theta)
        return -_gamma_pdf(x, n / 2.0) * x / theta
    if f is Family.GAMMA:
        return s * _gamma_pdf(theta * s, n * m.p("alpha")) if s > 0 else 0.0
    if f in (Family.PARETO, Family.WEIBULL):
        return s * _gamma_pdf(theta * s, n) if s > 0 else 0.0
    if f is Family.BINOMIAL:
        big_n = int(n * m.p("m"))
        k = math.floor(s)
        if k < 0 or k >= big_n:
            return 0.0
        return -_beta_pdf(theta, k + 1, big_n - k)
    if f is Family.POISSON:
        k = math.floor(s)
        return -n * _pois_pmf(k, n * theta) if k >= 0 else 0.0
    if f is Family.NEGATIVE_BINOMIAL:
        k = math.floor(s)
        return _beta_pdf(theta, n * m.p("m"), k + 1) if k >= 0 else 0.0
    if f is Family.LOGARITHMIC:
        return -nef_h(m, n, theta, s) * _dnat(m, theta)
    if f is Family.TRUNCATED_EXPONENTIAL:
        return _te_dcdf(theta, s, n)
    if f is Family.UNIFORM_SCALE:
        if not 0 < s < theta:
            return 0.0
        return -n * s**n / theta ** (n + 1)
    if f is Family.UNIFORM_SHIFT:
        z = m.p("z")
        return -1.0 / (1.0 - z) if theta + z < s < theta + 1 else 0.0
    raise DomainError(f"{f.value} has no one-dimensional sufficient statistic")


def stat_dcdf_nef(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """``dF/dtheta`` for discrete NEFs via the same-sign sums (chain rule)."""
    m.check_theta(theta)
    return -nef_h(m, n, theta, s) * _dnat(m, theta)


def stat_dpmf(m: ModelSpec, n: int, theta: float, s: float) -> float:
    """``d p_theta(s) / dtheta`` for discrete NEFs."""
    m.check_theta(theta)
    return (s - nef_mean(m, n, theta)) * stat_pdf(m, n, theta, s) * _dnat(m, theta)


def stat_sample(m: ModelSpec, n: int, theta: float, seed, size: int | None = None):
    """Draw ``S`` directly under ``theta``; reproducible given ``seed``."""
    n = _check_n(n)
    rng = make_rng(seed)
    f = m.family
    lo, hi = m.param_space
    th = float(theta)
    if f in (Family.BINOMIAL, Family.NEGATIVE_BINOMIAL, Family.LOGARITHMIC):
        if not lo <= th <= hi or (f is Family.LOGARITHMIC and th >= 1):
            raise DomainError(f"theta={theta!r} outside parameter space")
    else:
        m.check_theta(th)
    shape = () if size is None else (size,)
    if f is Family.NORMAL_KNOWN_VAR:
        out = rng.normal(n * th, math.sqrt(n * m.p("sigma2")), size=shape)
    elif f is Family.NORMAL_KNOWN_MEAN:
        out = th * rng.chisquare(n, size=shape)
    elif f is Family.GAMMA:
        out = rng.gamma(n * m.p("alpha"), 1.0 / th, size=shape)
    elif f in (Family.PARETO, Family.WEIBULL):
        out = rng.gamma(n, 1.0 / th, size=shape)
    elif f is Family.BINOMIAL:
        out = rng.binomial(int(n * m.p("m")), th, size=shape).astype(float)
    elif f is Family.POISSON:
        out = rng.poisson(n * th, size=shape).astype(float)
    elif f is Family.NEGATIVE_BINOMIAL:
        if th == 1.0:
            out = np.zeros(shape)
        else:
            out = rng.negative_binomial(int(n * m.p("m")), th, size=shape).astype(float)
    elif f is Family.LOGARITHMIC:
        out = rng.logseries(th, size=shape + (n,)).sum(axis=-1).astype(float)
    elif f is Family.TRUNCATED_EXPONENTIAL:
        out = _te_draw(th, rng, shape + (n,)).sum(axis=-1)
    elif f is Family.UNIFORM_SCALE:
        out = th * rng.random(size=shape) ** (1.0 / n)
    elif f is Family.UNIFORM_SHIFT:
        z = m.p("z")
        out = th + z + (1.0 - z) * rng.random(size=shape)
    else:
        raise DomainError(f"{f.value} has no one-dimensional sufficient statistic")
    return float(out) if size is None else np.asarray(out, dtype=float)


def _te_draw(theta: float, rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(size=shape)
    if abs(theta) < 1e-12:
        return u
    return -np.log1p(u * np.expm1(-theta)) / theta


def sample_observations(m: ModelSpec, n: int, theta: float, seed) -> np.ndarray:
    """Draw ``n`` raw observations ``x_1..x_n``."""
    n = _check_n(n)
    rng = make_rng(seed)
    f = m.family
    m.check_theta(theta)
    th = float(theta)
    if f is Family.NORMAL_KNOWN_VAR:
        return rng.normal(th, math.sqrt(m.p("sigma2")), size=n)
    if f is Family.NORMAL_KNOWN_MEAN:
        return m.p("mu") + math.sqrt(th) * rng.standard_normal(n)
    if f is Family.GAMMA:
        return rng.gamma(m.p("alpha"), 1.0 / th, size=n)
    if f is Family.PARETO:
        return m.p("x0") * np.exp(rng.exponential(1.0 / th, size=n))
    if f is Family.WEIBULL:
        return rng.exponential(1.0 / th, size=n) ** (1.0 / m.p("c"))
    if f is Family.BINOMIAL:
        return rng.binomial(int(m.p("m")), th, size=n).astype(float)
    if f is Family.POISSON:
        return rng.poisson(th, size=n).astype(float)
    if f is Family.NEGATIVE_BINOMIAL:
        return rng.negative_binomial(int(m.p("m")), th, size=n).astype(float)
    if f is Family.LOGARITHMIC:
        return rng.logseries(th, size=n).astype(float)
    if f is Family.TRUNCATED_EXPONENTIAL:
        return _te_draw(th, rng, (n,))
    if f is Family.UNIFORM_SCALE:
        return th * rng.random(n)
    if f is Family.UNIFORM_SHIFT:
        return th + rng.random(n)
    if f is Family.UNIFORM_LOC_SCALE:
        return th + m.p("sigma") * rng.random(n)
    raise DomainError(f"cannot sample {f.value}")


def sufficient_statistic(m: ModelSpec, x) -> SufficientStat:
    """Map a sample to its sufficient statistic (compensated summation)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    f = m.family
    n = int(x.size)
    if f is Family.NORMAL_KNOWN_MEAN:
        v = fsum((x - m.p("mu")) ** 2)
    elif f is Family.PARETO:
        if np.any(x < m.p("x0")):
            raise DomainError("pareto observations must be >= x0")
        v = fsum(np.log(x / m.p("x0")))
    elif f is Family.WEIBULL:
        if np.any(x < 0):
            raise DomainError("weibull observations must be non-negative")
        v = fsum(x ** m.p("c"))
    elif f in (Family.UNIFORM_SCALE, Family.UNIFORM_SHIFT):
        v = float(np.max(x))
    elif f is Family.UNIFORM_LOC_SCALE:
        raise DomainError("uniform-loc-scale has a two-dimensional sufficient statistic")
    else:
        if m.discrete and np.any(x != np.floor(x)):
            raise DomainError("discrete observations must be integers")
        v = fsum(x)
    return SufficientStat(_STAT_NAMES[f], v, n)


# -- observation-level helpers (single observation, free parameter theta) ----


def obs_logpdf(m: ModelSpec, x: float, theta: float) -> float:
    """Log density of one observation."""
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        s2 = m.p("sigma2")
        return -0.5 * (x - theta) ** 2 / s2 - 0.5 * math.log(s2) - _LOG_SQRT_2PI
    if f is Family.NORMAL_KNOWN_MEAN:
        return -0.5 * (x - m.p("mu")) ** 2 / theta - 0.5 * math.log(theta) - _LOG_SQRT_2PI
    if f is Family.GAMMA:
        return float(_st.gamma.logpdf(x, m.p("alpha"), scale=1.0 / theta))
    if f is Family.PARETO:
        x0 = m.p("x0")
        return math.log(theta) + theta * math.log(x0) - (theta + 1) * math.log(x) if x >= x0 else -math.inf
    if f is Family.WEIBULL:
        c = m.p("c")
        if x <= 0:
            return -math.inf
        return math.log(theta * c) + (c - 1) * math.log(x) - theta * x**c
    if f is Family.TRUNCATED_EXPONENTIAL:
        if not 0 < x < 1:
            return -math.inf
        return _te_log_norm(theta) - theta * x
    if f is Family.UNIFORM_SCALE:
        return -math.log(theta) if 0 < x < theta else -math.inf
    if f is Family.UNIFORM_SHIFT:
        return 0.0 if theta < x < theta + 1 else -math.inf
    if m.discrete:
        return float(_disc_logpmf(m, 1, theta, np.array([x]))[0])
    raise DomainError(f"no single-parameter observation density for {f.value}")


def obs_cdf(m: ModelSpec, x: float, theta: float) -> float:
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        return float(_st.norm.cdf(x, theta, math.sqrt(m.p("sigma2"))))
    if f is Family.NORMAL_KNOWN_MEAN:
        return float(_st.norm.cdf(x, m.p("mu"), math.sqrt(theta)))
    if f is Family.GAMMA:
        return float(_sps.gammainc(m.p("alpha"), theta * max(x, 0.0)))
    if f is Family.PARETO:
        x0 = m.p("x0")
        return -math.expm1(-theta * math.log(x / x0)) if x > x0 else 0.0
    if f is Family.WEIBULL:
        return -math.expm1(-theta * max(x, 0.0) ** m.p("c"))
    if f is Family.TRUNCATED_EXPONENTIAL:
        if x <= 0:
            return 0.0
        if x >= 1:
            return 1.0
        if abs(theta) < 1e-12:
            return x
        return math.expm1(-theta * x) / math.expm1(-theta)
    if f is Family.UNIFORM_SCALE:
        return min(1.0, max(0.0, x / theta))
    if f is Family.UNIFORM_SHIFT:
        return min(1.0, max(0.0, x - theta))
    raise DomainError(f"no single-parameter observation cdf for {f.value}")


def obs_dcdf(m: ModelSpec, x: float, theta: float) -> float:
    """Analytic ``dF_theta(x)/dtheta`` for one observation."""
    f = m.family
    if f is Family.NORMAL_KNOWN_VAR:
        sd = math.sqrt(m.p("sigma2"))
        return -_norm_pdf(x, theta, sd)
    if f is Family.NORMAL_KNOWN_MEAN:
        sd = math.sqrt(theta)
        z = (x - m.p("mu")) / sd
        return -_norm_pdf(z, 0.0, 1.0) * z / (2.0 * theta)
    if f is Family.GAMMA:
        return x * _gamma_pdf(theta * x, m.p("alpha")) if x > 0 else 0.0
    if f is Family.PARETO:
        x0 = m.p("x0")
        if x <= x0:
            return 0.0
        lr = math.log(x / x0)
        return lr * math.exp(-theta * lr)
    if f is Family.WEIBULL:
        xc = max(x, 0.0) ** m.p("c")
        return xc * math.exp(-theta * xc)
    if f is Family.TRUNCATED_EXPONENTIAL:
        if not 0 < x < 1:
            return 0.0
        return _te_obs_ratio(x, theta) * math.exp(obs_logpdf(m, x, theta))
    if f is Family.UNIFORM_SCALE:
        return -x / theta**2 if 0 < x < theta else 0.0
    if f is Family.UNIFORM_SHIFT:
        return -1.0 if theta < x < theta + 1 else 0.0
    raise DomainError(f"no single-parameter observation cdf for {f.value}")


def _te_obs_ratio(x: float, theta: float) -> float:
    """``(dF_theta(x)/dtheta) / f_theta(x)`` for one truncated exponential draw."""
    if abs(theta) < 1e-6:
        # expansion around theta = 0, error O(theta^2)
        return x * (1 - x) / 2.0 + theta * x * (1 - x) * (2 * x - 1) / 12.0
    if theta > 0:
        # expm1(theta x) / expm1(theta) rewritten to avoid overflow
        q = math.exp(theta * (x - 1.0)) * math.expm1(-theta * x) / math.expm1(-theta)
    else:
        q = math.expm1(theta * x) / math.expm1(theta)
    return x / theta - q / theta


def obs_log_score_ratio(m: ModelSpec, x: float, theta: float) -> float:
    """``log(|dF_theta(x)/dtheta| / f_theta(x))`` for one observation.

    Evaluated directly (without forming the two factors) for the
    truncated exponential, where both vanish together near ``theta = 0``.
    """
    if m.family is Family.TRUNCATED_EXPONENTIAL:
        if not 0 < x < 1:
            return -math.inf
        r = abs(_te_obs_ratio(x, theta))
        return math.log(r) if r > 0 else -math.inf
    lf = obs_logpdf(m, x, theta)
    if lf == -math.inf:
        return -math.inf
    g = abs(obs_dcdf(m, x, theta))
    return math.log(g) - lf if g > 0 else -math.inf
