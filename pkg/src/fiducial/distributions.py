"""Immutable univariate distributions over a parameter.

Every class exposes ``pdf``, ``logpdf``, ``cdf``, ``sf``, ``ppf``,
``sample``, ``mean``, ``var`` and ``interval``.  Closed forms wrap frozen
scipy distributions; everything else is backed by quadrature and root
finding from :mod:`fiducial.numerics`.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy import stats as _st

from .errors import BracketError, DomainError
from .numerics import (
    Substitution,
    find_root_increasing,
    integrate,
    make_rng,
)

__all__ = [
    "Distribution1D",
    "ScipyDistribution",
    "CdfDistribution",
    "DensityDistribution",
    "MixtureDistribution",
    "TransformedDistribution",
    "PointMass",
    "beta_dist",
    "gamma_dist",
    "normal_dist",
    "inverse_gamma_dist",
    "pareto_dist",
    "uniform_dist",
    "beta_prime_dist",
]


def _vectorize(fn, x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(fn(float(arr)))
    out = np.empty(arr.shape, dtype=float)
    flat = arr.ravel()
    res = out.ravel()
    for i, v in enumerate(flat):
        res[i] = fn(float(v))
    return out


class Distribution1D:
    """Base class; subclasses implement the scalar ``_cdf1``/``_pdf1``."""

    lo: float = -math.inf
    hi: float = math.inf
    label: str = ""
    closed_form: bool = False

    # scalar hooks
    def _pdf1(self, x: float) -> float:
        raise NotImplementedError

    def _cdf1(self, x: float) -> float:
        raise NotImplementedError

    def _sf1(self, x: float) -> float:
        return 1.0 - self._cdf1(x)

    def _logpdf1(self, x: float) -> float:
        p = self._pdf1(x)
        return math.log(p) if p > 0 else -math.inf

    def _ppf1(self, q: float) -> float:
        return self._invert_cdf(q)

    # public vectorized API
    def pdf(self, x):
        return _vectorize(self._pdf1, x)

    def logpdf(self, x):
        return _vectorize(self._logpdf1, x)

    def cdf(self, x):
        return _vectorize(self._cdf1, x)

    def sf(self, x):
        return _vectorize(self._sf1, x)

    def ppf(self, q):
        qa = np.asarray(q, dtype=float)
        if np.any((qa < 0) | (qa > 1)):
            raise DomainError("quantile level must lie in [0, 1]")
        return _vectorize(self._ppf1, q)

    def sample(self, size: int, seed) -> np.ndarray:
        rng = make_rng(seed)
        return np.asarray(self.ppf(rng.random(size)), dtype=float)

    def interval(self, level: float) -> tuple[float, float]:
        """Equal-tail interval with total coverage ``level``."""
        if not 0 < level < 1:
            raise DomainError("level must lie in (0, 1)")
        a = (1.0 - level) / 2.0
        return float(self.ppf(a)), float(self.ppf(1.0 - a))

    def median(self) -> float:
        return float(self.ppf(0.5))

    def mean(self) -> float:
        return self._moment(1)

    def var(self) -> float:
        m = self.mean()
        return self._moment(2, m)

    # helpers
    _center: float | None = None
    _scale: float = 1.0

    def _moment(self, k: int, about: float = 0.0) -> float:
        res = integrate(
            lambda x: (x - about) ** k * self._pdf1(x),
            self.lo,
            self.hi,
            tol=1e-11,
            center=self._center,
            scale=self._scale,
        )
        return res.value

    def _bracket_for(self, q: float) -> tuple[float, float]:
        lo, hi = self.lo, self.hi
        c = self._center if self._center is not None else 0.0
        s = self._scale
        if math.isfinite(lo) and math.isfinite(hi):
            return lo, hi
        if math.isfinite(lo):
            b = max(c, lo) + s
            while self._cdf1(b) < q:
                b = lo + 2.0 * (b - lo)
                if b > 1e300:
                    raise BracketError("cannot bracket quantile")
            return lo, b
        if math.isfinite(hi):
            a = min(c, hi) - s
            while self._cdf1(a) > q:
                a = hi - 2.0 * (hi - a)
                if a < -1e300:
                    raise BracketError("cannot bracket quantile")
            return a, hi
        a, b, w = c - s, c + s, s
        while self._cdf1(a) > q:
            w *= 2.0
            a = c - w
        w = s
        while self._cdf1(b) < q:
            w *= 2.0
            b = c + w
        return a, b

    def _invert_cdf(self, q: float) -> float:
        if q <= 0.0:
            return self.lo
        if q >= 1.0:
            return self.hi
        a, b = self._bracket_for(q)
        return find_root_increasing(self._cdf1, q, (a, b), tol=1e-13)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}({self.label})"


class _Bound:
    """Parameters bound to a scipy distribution without freezing.

    Freezing re-instantiates the distribution class on every call, which
    dominates the cost of cheap conditionals.
    """

    __slots__ = ("_d", "_a", "_k")

    def __init__(self, dist, args, kwds):
        self._d, self._a, self._k = dist, args, kwds

    def __getattr__(self, name):
        meth = getattr(self._d, name)
        return lambda *a, **k: meth(*a, *self._a, **self._k, **k)


def bound(dist, *args, **kwds) -> _Bound:
    """Bind shape/loc/scale parameters to ``dist`` (cheap frozen substitute)."""
    return _Bound(dist, args, kwds)


class ScipyDistribution(Distribution1D):
    """Closed-form distribution backed by a frozen ``scipy.stats`` object."""

    closed_form = True

    def __init__(self, frozen, label: str):
        self._rv = frozen
        self.label = label
        lo, hi = frozen.support()
        self.lo, self.hi = float(lo), float(hi)

    def pdf(self, x):
        out = self._rv.pdf(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def logpdf(self, x):
        out = self._rv.logpdf(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def cdf(self, x):
        out = self._rv.cdf(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, x):
        out = self._rv.sf(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, q):
        qa = np.asarray(q, dtype=float)
        if np.any((qa < 0) | (qa > 1)):
            raise DomainError("quantile level must lie in [0, 1]")
        out = self._rv.ppf(qa)
        return float(out) if np.ndim(out) == 0 else out

    def _pdf1(self, x):
        return float(self._rv.pdf(x))

    def _cdf1(self, x):
        return float(self._rv.cdf(x))

    def _sf1(self, x):
        return float(self._rv.sf(x))

    def _ppf1(self, q):
        return float(self._rv.ppf(q))

    def sample(self, size: int, seed) -> np.ndarray:
        return np.asarray(self._rv.rvs(size=size, random_state=make_rng(seed)), dtype=float)

    def mean(self) -> float:
        return float(self._rv.mean())

    def var(self) -> float:
        return float(self._rv.var())


def beta_dist(a: float, b: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.beta, a, b), f"Be({a!r}, {b!r})")


def gamma_dist(shape: float, rate: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.gamma, shape, scale=1.0 / rate), f"Ga({shape!r}, {rate!r})")


def normal_dist(mean: float, var: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.norm, mean, math.sqrt(var)), f"N({mean!r}, {var!r})")


def inverse_gamma_dist(shape: float, scale: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.invgamma, shape, scale=scale), f"In-Ga({shape!r}, {scale!r})")


def pareto_dist(index: float, scale: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.pareto, index, scale=scale), f"Pa({index!r}, {scale!r})")


def uniform_dist(lo: float, hi: float) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.uniform, lo, hi - lo), f"U({lo!r}, {hi!r})")


def beta_prime_dist(a: float, b: float, scale: float = 1.0) -> ScipyDistribution:
    return ScipyDistribution(bound(_st.betaprime, a, b, scale=scale), f"Be'({a!r}, {b!r})")


class CdfDistribution(Distribution1D):
    """Distribution defined directly by its CDF and density functions.

    Quantiles come from root finding unless ``quantile`` is supplied.
    """

    def __init__(
        self,
        cdf: Callable[[float], float],
        pdf: Callable[[float], float],
        lo: float,
        hi: float,
        *,
        sf: Callable[[float], float] | None = None,
        quantile: Callable[[float], float] | None = None,
        center: float | None = None,
        scale: float = 1.0,
        label: str = "",
    ):
        self._cdf_fn, self._pdf_fn = cdf, pdf
        self._sf_fn, self._q_fn = sf, quantile
        self.lo, self.hi = float(lo), float(hi)
        self._center, self._scale = center, float(scale)
        self.label = label

    def _cdf1(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return min(1.0, max(0.0, float(self._cdf_fn(x))))

    def _sf1(self, x):
        if self._sf_fn is None:
            return 1.0 - self._cdf1(x)
        if x <= self.lo:
            return 1.0
        if x >= self.hi:
            return 0.0
        return min(1.0, max(0.0, float(self._sf_fn(x))))

    def _pdf1(self, x):
        if x <= self.lo or x >= self.hi:
            return 0.0
        return max(0.0, float(self._pdf_fn(x)))

    def _ppf1(self, q):
        if self._q_fn is not None and 0.0 < q < 1.0:
            return float(self._q_fn(q))
        return self._invert_cdf(q)


class DensityDistribution(Distribution1D):
    """Distribution from an unnormalized log density, normalized by quadrature.

    The support is cut into ``cells`` pieces (uniform in the substituted
    variable for infinite ranges) and a cumulative table is kept, so each
    CDF evaluation needs one short integral only.

    Attributes
    ----------
    log_norm : float
        Log of the integral of ``exp(logpdf)`` over the support.
    """

    def __init__(
        self,
        logpdf: Callable[[float], float],
        lo: float,
        hi: float,
        *,
        center: float | None = None,
        scale: float = 1.0,
        cells: int = 48,
        points: Sequence[float] | None = None,
        tol: float = 1e-13,
        label: str = "",
    ):
        self._logf = logpdf
        self.lo, self.hi = float(lo), float(hi)
        self._center, self._scale = center, float(scale)
        self.label = label
        self._tol = tol
        self._sub = sub = Substitution(lo, hi, center, scale)
        edges = np.linspace(sub.t_lo, sub.t_hi, cells + 1)
        if points is not None:
            extra = [sub.t(p) for p in points if self.lo < p < self.hi]
            edges = np.unique(np.concatenate([edges, np.asarray(extra, dtype=float)]))
        self._edges = edges
        # shift by the max log density on a scan to avoid under/overflow
        scan_t = np.linspace(sub.t_lo, sub.t_hi, 8 * cells + 3)[1:-1]
        scan_x = [sub.x(t) for t in scan_t]
        logs = np.array([self._safe_log(x) for x in scan_x])
        if not np.any(np.isfinite(logs)):
            raise DomainError("density vanishes on the whole support scan")
        self._shift = float(np.max(logs[np.isfinite(logs)]))
        w = np.exp(logs - self._shift) * np.array([sub.dxdt(t) for t in scan_t])
        guess = max(float(np.sum(w) * (scan_t[1] - scan_t[0])), 1e-300)
        self._abs = tol * guess
        masses = np.array([self._piece(edges[i], edges[i + 1]) for i in range(len(edges) - 1)])
        total = float(np.sum(masses))
        if not total > 0:
            raise DomainError("density integrates to zero")
        self._total = total
        self._cum = np.concatenate([[0.0], np.cumsum(masses) / total])
        self._cum[-1] = 1.0
        self.log_norm = self._shift + math.log(total)

    def _safe_log(self, x: float) -> float:
        if not (self.lo < x < self.hi) or not math.isfinite(x):
            return -math.inf
        v = float(self._logf(x))
        return v if not math.isnan(v) else -math.inf

    def _g(self, t: float) -> float:
        sub = self._sub
        if not (sub.t_lo < t < sub.t_hi):
            return 0.0
        x = sub.x(t)
        lv = self._safe_log(x)
        if lv == -math.inf:
            return 0.0
        return math.exp(lv - self._shift) * sub.dxdt(t)

    def _piece(self, ta: float, tb: float) -> float:
        if tb <= ta:
            return 0.0
        val, _err = _spi.quad(self._g, ta, tb, epsabs=self._abs, epsrel=1e-12, limit=200)[:2]
        return float(val)

    def _locate(self, t: float) -> int:
        i = int(np.searchsorted(self._edges, t, side="right")) - 1
        return min(max(i, 0), len(self._edges) - 2)

    def _cdf1(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        t = self._sub.t(x)
        i = self._locate(t)
        a, b = self._edges[i], self._edges[i + 1]
        if t - a <= b - t:
            v = self._cum[i] + self._piece(a, t) / self._total
        else:
            v = self._cum[i + 1] - self._piece(t, b) / self._total
        return min(1.0, max(0.0, v))

    def _sf1(self, x):
        if x <= self.lo:
            return 1.0
        if x >= self.hi:
            return 0.0
        t = self._sub.t(x)
        i = self._locate(t)
        a, b = self._edges[i], self._edges[i + 1]
        if t - a <= b - t:
            v = (1.0 - self._cum[i]) - self._piece(a, t) / self._total
        else:
            v = (1.0 - self._cum[i + 1]) + self._piece(t, b) / self._total
        return min(1.0, max(0.0, v))

    def _logpdf1(self, x):
        lv = self._safe_log(x)
        return lv - self.log_norm if lv > -math.inf else -math.inf

    def _pdf1(self, x):
        lv = self._logpdf1(x)
        return math.exp(lv) if lv > -math.inf else 0.0

    def _ppf1(self, q):
        if q <= 0.0:
            return self.lo
        if q >= 1.0:
            return self.hi
        i = int(np.searchsorted(self._cum, q, side="right")) - 1
        i = min(max(i, 0), len(self._edges) - 2)
        a, b = self._edges[i], self._edges[i + 1]
        ci = self._cum[i]

        def gt(t):
            return ci + self._piece(a, t) / self._total

        ta = find_root_increasing(gt, q, (a, b), tol=1e-14)
        return float(self._sub.x(ta))

    def _moment(self, k: int, about: float = 0.0) -> float:
        sub = self._sub

        def g(t):
            v = self._g(t)
            return (sub.x(t) - about) ** k * v if v else 0.0

        total = 0.0
        for i in range(len(self._edges) - 1):
            a, b = self._edges[i], self._edges[i + 1]
            total += _spi.quad(g, a, b, epsabs=self._abs, epsrel=1e-12, limit=200)[0]
        return total / self._total


class MixtureDistribution(Distribution1D):
    """Finite mixture ``sum_k w_k D_k``."""

    def __init__(self, components: Sequence[Distribution1D], weights: Sequence[float], label: str = ""):
        w = np.asarray(weights, dtype=float)
        if len(components) != w.size or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise DomainError("mixture weights must be non-negative and sum to one")
        self.components = tuple(components)
        self.weights = w
        self.lo = min(c.lo for c in components)
        self.hi = max(c.hi for c in components)
        self.closed_form = all(c.closed_form for c in components)
        self.label = label or " + ".join(f"{wi!r}*{c.label}" for wi, c in zip(w, components))

    def pdf(self, x):
        return sum(wi * np.asarray(c.pdf(x)) for wi, c in zip(self.weights, self.components)) * 1.0

    def cdf(self, x):
        return sum(wi * np.asarray(c.cdf(x)) for wi, c in zip(self.weights, self.components)) * 1.0

    def sf(self, x):
        return sum(wi * np.asarray(c.sf(x)) for wi, c in zip(self.weights, self.components)) * 1.0

    def _pdf1(self, x):
        return float(self.pdf(x))

    def _cdf1(self, x):
        return float(self.cdf(x))

    def _sf1(self, x):
        return float(self.sf(x))

    def _ppf1(self, q):
        if q <= 0.0:
            return self.lo
        if q >= 1.0:
            return self.hi
        qs = [float(c.ppf(q)) for c in self.components]
        a, b = min(qs), max(qs)
        if a == b:
            return a
        return find_root_increasing(self._cdf1, q, (a, b), tol=1e-14)

    def sample(self, size: int, seed) -> np.ndarray:
        rng = make_rng(seed)
        idx = rng.choice(len(self.components), size=size, p=self.weights)
        out = np.empty(size)
        for k, c in enumerate(self.components):
            mask = idx == k
            if mask.any():
                out[mask] = c.ppf(rng.random(int(mask.sum())))
        return out

    def mean(self) -> float:
        return float(sum(w * c.mean() for w, c in zip(self.weights, self.components)))

    def var(self) -> float:
        m = self.mean()
        return float(
            sum(w * (c.var() + (c.mean() - m) ** 2) for w, c in zip(self.weights, self.components))
        )


class TransformedDistribution(Distribution1D):
    """Image of ``base`` under a strictly monotone map ``y = forward(x)``.

    Parameters
    ----------
    inverse_derivative : callable, optional
        ``d inverse / dy``; a central difference is used when omitted.
    """

    def __init__(
        self,
        base: Distribution1D,
        forward: Callable[[float], float],
        inverse: Callable[[float], float],
        *,
        increasing: bool,
        inverse_derivative: Callable[[float], float] | None = None,
        label: str = "",
    ):
        self.base = base
        self._fwd, self._inv, self._dinv = forward, inverse, inverse_derivative
        self.increasing = bool(increasing)
        ends = sorted([self._map_end(base.lo, upper=False), self._map_end(base.hi, upper=True)])
        self.lo, self.hi = ends
        self.label = label or f"T[{base.label}]"

    def _map_end(self, x, upper):
        # a singular end maps to the infinite end implied by monotonicity
        limit = math.inf if upper == self.increasing else -math.inf
        pt = x if math.isfinite(x) else math.copysign(1e300, x)
        try:
            v = float(self._fwd(pt))
        except (OverflowError, ValueError, ZeroDivisionError):
            return limit
        return v if math.isfinite(v) or not math.isnan(v) else limit

    def _jac(self, y):
        if self._dinv is not None:
            return abs(float(self._dinv(y)))
        h = 1e-6 * max(1.0, abs(y))
        lo_ok, hi_ok = y - h > self.lo, y + h < self.hi
        if lo_ok and hi_ok:
            return abs(self._inv(y + h) - self._inv(y - h)) / (2 * h)
        if hi_ok:
            return abs(self._inv(y + h) - self._inv(y)) / h
        return abs(self._inv(y) - self._inv(y - h)) / h

    def _pdf1(self, y):
        if not (self.lo < y < self.hi):
            return 0.0
        return float(self.base.pdf(self._inv(y))) * self._jac(y)

    def _cdf1(self, y):
        if y <= self.lo:
            return 0.0
        if y >= self.hi:
            return 1.0
        x = self._inv(y)
        return float(self.base.cdf(x)) if self.increasing else float(self.base.sf(x))

    def _sf1(self, y):
        if y <= self.lo:
            return 1.0
        if y >= self.hi:
            return 0.0
        x = self._inv(y)
        return float(self.base.sf(x)) if self.increasing else float(self.base.cdf(x))

    def _ppf1(self, q):
        x = float(self.base.ppf(q if self.increasing else 1.0 - q))
        return float(self._fwd(x)) if math.isfinite(x) else self._map_end(x)

    def sample(self, size, seed):
        xs = self.base.sample(size, seed)
        return np.array([self._fwd(float(x)) for x in xs])

    def mean(self) -> float:
        base = self.base
        return integrate(
            lambda x: self._fwd(x) * float(base.pdf(x)), base.lo, base.hi, tol=1e-11,
            center=base._center, scale=base._scale,
        ).value

    def var(self) -> float:
        m = self.mean()
        base = self.base
        return integrate(
            lambda x: (self._fwd(x) - m) ** 2 * float(base.pdf(x)), base.lo, base.hi, tol=1e-11,
            center=base._center, scale=base._scale,
        ).value


class PointMass(Distribution1D):
    """Degenerate distribution at ``value``."""

    closed_form = True

    def __init__(self, value: float, label: str = ""):
        self.value = float(value)
        self.lo = self.hi = self.value
        self.label = label or f"delta({value!r})"

    def _pdf1(self, x):
        return math.inf if x == self.value else 0.0

    def _cdf1(self, x):
        return 1.0 if x >= self.value else 0.0

    def _sf1(self, x):
        return 0.0 if x >= self.value else 1.0

    def _ppf1(self, q):
        return self.value

    def sample(self, size, seed):
        return np.full(size, self.value)

    def mean(self) -> float:
        return self.value

    def var(self) -> float:
        return 0.0
