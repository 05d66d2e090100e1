"""Step-by-step multivariate fiducial distributions.

A :class:`StepChain` lists one-dimensional conditional models in
importance order.  Step ``j`` supplies the distribution function of a
statistic that depends on the earlier parameter components only through
``phi_[j]`` and on its own component ``phi_{j+1}``; its fiducial density
is ``|dF/dphi_{j+1}|``.  The joint fiducial density is the product of the
steps (:class:`JointFiducial`), sampled sequentially by inverse cdf.

Two kinds of step exist:

* :class:`ModelStep` reuses a catalog model from :mod:`fiducial.models`
  (and therefore every fiducial variant, including the geometric one for
  discrete models) through a monotone link between the model parameter
  and the component.
* :class:`ContinuousStep` takes an explicit conditional cdf, used for the
  ancillary-conditioning constructions.

Catalog chains are addressable by key through :func:`chain`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as _st

from . import models as _m
from .distributions import (
    CdfDistribution,
    DensityDistribution,
    Distribution1D,
    TransformedDistribution,
)
from .errors import DomainError, IntegrationError
from .fiducial1d import Variant, fiducial
from .numerics import Grid, fsum, integrate, make_rng

__all__ = [
    "Link",
    "ModelStep",
    "ContinuousStep",
    "DistStep",
    "StepChain",
    "JointFiducial",
    "build_joint",
    "marginal_of_interest",
    "location_fiducial",
    "scale_fiducial",
    "location_scale_fiducial",
    "pushforward_lower_triangular",
    "SufficiencyReport",
    "sufficiency_check",
    "CHAIN_KEYS",
    "chain",
    "diff_means_chain",
    "neyman_scott_chain",
    "poisson_ratio_chain",
    "bivariate_binomial_chain",
    "trinomial_ratio_chain",
    "loc_scale_normal_chain",
    "uniform_shift_chain",
    "uniform_scale_chain",
]


@dataclass(frozen=True)
class Link:
    """Monotone map between a model parameter and a chain component.

    ``to_phi``/``from_phi`` must accept numpy arrays.
    """

    to_phi: Callable
    from_phi: Callable
    increasing: bool = True
    dfrom_phi: Callable | None = None


def _identity_link() -> Link:
    return Link(lambda t: t, lambda p: p, True, lambda p: 1.0)


Prev = tuple


@lru_cache(maxsize=256)
def _cached_fiducial(mdl, n, s, v, boundary):
    # conditionals often repeat across prev values (e.g. independent steps)
    kw = {"boundary": boundary} if v is Variant.GEOMETRIC else {}
    return fiducial(mdl, n, s, v, **kw)


@dataclass(frozen=True)
class ModelStep:
    """Step backed by a catalog model.

    Parameters
    ----------
    name : str
        Component name.
    spec : callable ``(data, prev) -> (ModelSpec, n, s)``
        Conditional model, sample size and observed statistic.
    link : callable ``(data, prev) -> Link``, optional
        Map between the model parameter and the component (identity when
        omitted).
    prev_free : bool
        True when ``spec`` ignores ``prev`` (only the link may use it);
        enables vectorized sampling.
    vector_sampler : callable ``(u, data, prev_cols) -> ndarray``, optional
        Closed-form inverse-cdf sampler for prev-dependent models.
    """

    name: str
    spec: Callable[[Mapping, Prev], tuple]
    link: Callable[[Mapping, Prev], Link] | None = None
    prev_free: bool = False
    vector_sampler: Callable | None = None

    def fiducial(self, data, prev, variant, boundary="error"):
        mdl, n, s = self.spec(data, prev)
        v = Variant(variant)
        if not mdl.discrete:
            v = Variant.RIGHT
        try:
            return _cached_fiducial(mdl, n, s, v, boundary)
        except TypeError:  # unhashable model
            return _cached_fiducial.__wrapped__(mdl, n, s, v, boundary)

    def conditional(self, data, prev, variant, backend="closed", boundary="error") -> Distribution1D:
        fid = self.fiducial(data, prev, variant, boundary)
        base = _pick(fid, backend)
        if self.link is None:
            return base
        ln = self.link(data, prev)
        return TransformedDistribution(
            base,
            ln.to_phi,
            ln.from_phi,
            increasing=ln.increasing,
            inverse_derivative=ln.dfrom_phi,
            label=f"{self.name}|{base.label}",
        )

    def sample(self, u, data, prev_cols, variant, backend="closed", boundary="error"):
        if self.vector_sampler is not None:
            return np.asarray(self.vector_sampler(u, data, prev_cols), dtype=float)
        if self.prev_free:
            fid = self.fiducial(data, (), variant, boundary)
            base = _pick(fid, backend)
            ln = self.link(data, prev_cols) if self.link is not None else None
            q = u if ln is None or ln.increasing else 1.0 - u
            theta = np.asarray(base.ppf(q), dtype=float)
            return theta if ln is None else np.asarray(ln.to_phi(theta), dtype=float)
        return _loop_sample(self, u, data, prev_cols, variant, backend, boundary)


@dataclass(frozen=True)
class ContinuousStep:
    """Step given by an explicit conditional cdf ``F(t | ...; phi, prev)``.

    Parameters
    ----------
    cdf : callable ``(phi, data, prev) -> float``
    support : callable ``(data, prev) -> (lo, hi)``
        Values of the component compatible with the data.
    increasing : bool
        Whether ``cdf`` increases with ``phi``.
    dcdf : callable, optional
        Analytic ``dF/dphi``; central differences otherwise.
    sf : callable, optional
        ``1 - cdf`` computed without cancellation.
    vector_sampler : callable, optional
        Vectorized inverse of the fiducial cdf.
    hint : callable ``(data, prev) -> (center, scale)``, optional
    """

    name: str
    cdf: Callable
    support: Callable
    increasing: bool
    dcdf: Callable | None = None
    sf: Callable | None = None
    vector_sampler: Callable | None = None
    hint: Callable | None = None

    def conditional(self, data, prev, variant=None, backend="closed", boundary="error") -> Distribution1D:
        lo, hi = self.support(data, prev)
        center, scale = self.hint(data, prev) if self.hint is not None else (None, 1.0)
        F = lambda p: self.cdf(p, data, prev)
        G = (lambda p: self.sf(p, data, prev)) if self.sf is not None else (lambda p: 1.0 - F(p))
        if self.dcdf is not None:
            dens = lambda p: abs(self.dcdf(p, data, prev))
        else:
            dens = lambda p: abs(_central_diff(F, p, lo, hi))
        H, Hs = (F, G) if self.increasing else (G, F)
        return CdfDistribution(H, dens, lo, hi, sf=Hs, center=center, scale=scale, label=self.name)

    def sample(self, u, data, prev_cols, variant=None, backend="closed", boundary="error"):
        if self.vector_sampler is not None:
            return np.asarray(self.vector_sampler(u, data, prev_cols), dtype=float)
        return _loop_sample(self, u, data, prev_cols, variant, backend, boundary)


@dataclass(frozen=True)
class DistStep:
    """Step whose conditional fiducial is given directly as a distribution.

    Parameters
    ----------
    dist : callable ``(data, prev) -> Distribution1D``
    vector_sampler : callable ``(u, data, prev_cols) -> ndarray``, optional
    """

    name: str
    dist: Callable
    vector_sampler: Callable | None = None

    def conditional(self, data, prev, variant=None, backend="closed", boundary="error") -> Distribution1D:
        return self.dist(data, prev)

    def sample(self, u, data, prev_cols, variant=None, backend="closed", boundary="error"):
        if self.vector_sampler is not None:
            return np.asarray(self.vector_sampler(u, data, prev_cols), dtype=float)
        return _loop_sample(self, u, data, prev_cols, variant, backend, boundary)


def _central_diff(F, p, lo, hi):
    h = max(1e-6, 1e-6 * abs(p))
    if p - h <= lo:
        return (F(p + h) - F(p)) / h
    if p + h >= hi:
        return (F(p) - F(p - h)) / h
    return (F(p + h) - F(p - h)) / (2 * h)


def _pick(fid, backend: str) -> Distribution1D:
    if backend == "numeric" and fid.numeric is not None:
        return fid.numeric
    return fid.dist


def _loop_sample(step, u, data, prev_cols, variant, backend, boundary):
    out = np.empty(len(u))
    for i, ui in enumerate(u):
        prev = tuple(float(c[i]) for c in prev_cols)
        out[i] = float(step.conditional(data, prev, variant, backend, boundary).ppf(float(ui)))
    return out


@dataclass(frozen=True)
class StepChain:
    """Ordered conditional factorization of a model.

    Attributes
    ----------
    key : str
    steps : tuple
        ``steps[j]`` yields the law of component ``names[j]`` given the
        earlier ones (importance order, most important first).
    names : tuple of str
    statistics : callable, optional
        Maps a raw sample (or sample tuple) to the data mapping used by the
        steps, including any ancillary statistics.
    builder : callable, optional
        Builds the joint directly from data for chains whose steps are
        data-dependent constructions.
    """

    key: str
    steps: tuple
    statistics: Callable | None = None
    description: str = ""
    builder: Callable | None = None

    @property
    def names(self) -> tuple:
        return tuple(s.name for s in self.steps)

    @property
    def d(self) -> int:
        return len(self.steps)


class JointFiducial:
    """Product-form fiducial distribution over the chain components.

    The ``j``-th conditional density is ``|dF/dphi_j|`` of step ``j``;
    the joint density is their product.
    """

    def __init__(self, chain: StepChain, data: Mapping, variant="geometric", backend="closed", boundary="error"):
        self.chain = chain
        self.data = dict(data)
        self.variant = Variant(variant)
        self.backend = backend
        self.boundary = boundary
        self._first = None

    @property
    def names(self) -> tuple:
        return self.chain.names

    @property
    def d(self) -> int:
        return self.chain.d

    def conditional(self, j: int, prev: Sequence[float] = ()) -> Distribution1D:
        prev = tuple(float(p) for p in prev)
        if len(prev) != j:
            raise DomainError(f"conditional {j} needs {j} earlier components, got {len(prev)}")
        if j == 0:
            if self._first is None:
                self._first = self.chain.steps[0].conditional(self.data, (), self.variant, self.backend, self.boundary)
            return self._first
        return self.chain.steps[j].conditional(self.data, prev, self.variant, self.backend, self.boundary)

    def logpdf(self, phi: Sequence[float]) -> float:
        phi = [float(p) for p in phi]
        if len(phi) != self.d:
            raise DomainError(f"expected {self.d} components")
        total = 0.0
        for j in range(self.d):
            lp = float(self.conditional(j, phi[:j]).logpdf(phi[j]))
            if lp == -math.inf:
                return -math.inf
            total += lp
        return total

    def pdf(self, phi: Sequence[float]) -> float:
        lp = self.logpdf(phi)
        return math.exp(lp) if lp > -math.inf else 0.0

    def sample(self, size: int, seed) -> np.ndarray:
        """Sequential inverse-cdf draws, shape ``(size, d)``."""
        rng = make_rng(seed)
        out = np.empty((size, self.d))
        for j, step in enumerate(self.chain.steps):
            u = rng.random(size)
            cols = tuple(out[:, k] for k in range(j))
            out[:, j] = step.sample(u, self.data, cols, self.variant, self.backend, self.boundary)
        return out

    def marginal(self, j: int = 0) -> Distribution1D:
        """Exact marginal of component ``j`` (``j = 0`` directly, ``j = 1``
        of a two-step chain by integrating over the first component)."""
        if j == 0:
            return self.conditional(0)
        if j == 1 and self.d == 2:
            return _SecondMarginal(self)
        raise DomainError("marginals beyond the second component of a 2-step chain are not implemented")


class _SecondMarginal(Distribution1D):
    """``P(phi_2 <= y) = int_0^1 H_2(y | Q_1(u)) du``."""

    def __init__(self, joint: JointFiducial):
        self.joint = joint
        self.first = joint.conditional(0)
        us = np.linspace(0.001, 0.999, 9)
        conds = [joint.conditional(1, (float(self.first.ppf(u)),)) for u in us]
        self.lo = min(c.lo for c in conds)
        self.hi = max(c.hi for c in conds)
        med = [float(c.ppf(0.5)) for c in conds]
        self._center = float(np.median(med))
        self._scale = max(float(np.std(med)), float(conds[4].ppf(0.75) - conds[4].ppf(0.25)), 1e-8)
        self.label = f"marginal[{joint.names[1]}]"

    def _avg(self, fn) -> float:
        first = self.first

        def g(u):
            c = self.joint.conditional(1, (float(first.ppf(u)),))
            return fn(c)

        return integrate(g, 0.0, 1.0, tol=1e-10).value

    def _cdf1(self, y):
        return min(1.0, max(0.0, self._avg(lambda c: float(c.cdf(y)))))

    def _sf1(self, y):
        return min(1.0, max(0.0, self._avg(lambda c: float(c.sf(y)))))

    def _pdf1(self, y):
        return max(0.0, self._avg(lambda c: float(c.pdf(y))))


def build_joint(chain: StepChain, data: Mapping, variant="geometric", *, backend="closed", boundary="error") -> JointFiducial:
    """Joint fiducial distribution of the chain components given data.

    Parameters
    ----------
    chain : StepChain
    data : mapping
        Observed statistics as expected by the chain steps; use
        ``chain.statistics(sample)`` to derive them from raw data.
    variant : Variant or str
        Applied to discrete steps; continuous steps always use the
        (unique) right fiducial.
    backend : {"closed", "numeric"}
        Prefer closed forms or the definition-based numeric backends.
    """
    if chain.builder is not None:
        return chain.builder(data)
    joint = JointFiducial(chain, data, variant, backend, boundary)
    joint.conditional(0)  # surface boundary errors eagerly
    return joint


def marginal_of_interest(joint: JointFiducial) -> Distribution1D:
    """Fiducial distribution of the most important component."""
    return joint.conditional(0)


# -- location / scale constructions ------------------------------------------


def _g_support(z: np.ndarray, lo0: float, hi0: float) -> tuple[float, float]:
    # values v with v + z_i inside (lo0, hi0) for all i
    return lo0 - float(np.min(z)), hi0 - float(np.max(z))


class _ConditionalIntegral:
    """Normalized integrals of ``g`` with tail-aware complements."""

    def __init__(self, logg, lo, hi, center, scale, points=None):
        self.logg, self.lo, self.hi = logg, lo, hi
        self.center, self.scale = center, scale
        self.points = points
        self.shift = self._scan_max()
        self.total = self._int(lo, hi)
        if not self.total > 0:
            raise DomainError("conditional density integrates to zero")

    def _scan_max(self):
        lo, hi = self.lo, self.hi
        if math.isfinite(lo) and math.isfinite(hi):
            pts = np.linspace(lo, hi, 403)[1:-1]
        else:
            c, s = self.center, self.scale
            pts = c + s * np.linspace(-30, 30, 401)
            pts = pts[(pts > lo) & (pts < hi)]
        vals = [self.logg(float(v)) for v in pts]
        vals = [v for v in vals if math.isfinite(v)]
        if not vals:
            raise DomainError("conditional density vanishes on its scan")
        return max(vals)

    def g(self, v):
        if not (self.lo < v < self.hi):
            return 0.0
        lv = self.logg(v)
        return math.exp(lv - self.shift) if lv > -math.inf else 0.0

    def _int(self, a, b):
        if b <= a:
            return 0.0
        pts = None
        if self.points:
            pts = [p for p in self.points if a < p < b] or None
        return integrate(self.g, a, b, tol=1e-12, center=self.center, scale=self.scale, points=pts).value

    def upper(self, c):
        """``(P(V > c), P(V <= c))`` computed from the smaller side."""
        if c <= self.lo:
            return 1.0, 0.0
        if c >= self.hi:
            return 0.0, 1.0
        low = self._int(self.lo, c) / self.total
        if low <= 0.5:
            return max(0.0, 1.0 - low), low
        up = self._int(c, self.hi) / self.total
        return up, max(0.0, 1.0 - up)

    def density(self, v):
        lv = self.logg(v) if self.lo < v < self.hi else -math.inf
        if lv == -math.inf:
            return 0.0
        return math.exp(lv - self.shift) / self.total


def location_fiducial(x, logpdf0: Callable[[float], float], support0=(-math.inf, math.inf)) -> Distribution1D:
    """Fiducial distribution of a location parameter.

    Conditions ``X_1`` on the ancillary ``Z_i = X_i - X_1``: with
    ``g(v) = prod_i f(v + z_i)`` the fiducial cdf is
    ``H(theta) = int_{x_1 - theta}^inf g / int g``, the integral being
    taken in the observation variable.

    Parameters
    ----------
    x : array_like
        Sample.
    logpdf0 : callable
        Log density of the standardized error ``X - theta``.
    support0 : (float, float)
        Support of the error density.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise DomainError("empty sample")
    x1 = float(x[0])
    z = x - x1
    lo0, hi0 = support0
    vlo, vhi = _g_support(z, lo0, hi0)
    if not vlo < vhi:
        raise DomainError("sample incompatible with the error support")

    def logg(v):
        acc = 0.0
        for zi in z:
            lv = logpdf0(v + zi)
            if lv == -math.inf:
                return -math.inf
            acc += lv
        return acc

    med = float(np.median(x))
    spread = float(np.subtract(*np.percentile(x, [75, 25]))) if x.size > 1 else 1.0
    center = x1 - med
    scale = max(spread, 1e-3) / math.sqrt(x.size) if x.size > 1 else 1.0
    kinks = None
    if math.isfinite(lo0) or math.isfinite(hi0):
        kinks = sorted({float(b - zi) for zi in z for b in (lo0, hi0) if math.isfinite(b)})
    ci = _ConditionalIntegral(logg, vlo, vhi, center, scale, kinks)
    tlo, thi = x1 - vhi, x1 - vlo
    return CdfDistribution(
        lambda th: ci.upper(x1 - th)[0],
        lambda th: ci.density(x1 - th),
        tlo,
        thi,
        sf=lambda th: ci.upper(x1 - th)[1],
        center=med,
        scale=scale,
        label="location fiducial",
    )


def scale_fiducial(x, logpdf0: Callable[[float], float], support0=(0.0, math.inf)) -> Distribution1D:
    """Fiducial distribution of a scale parameter ``theta > 0``.

    Conditions ``X_1`` on ``Z_i = X_i / X_1``: with
    ``g(v) = v^{n-1} prod_i f(v z_i)`` the fiducial cdf is
    ``H(theta) = int_{x_1/theta}^inf g / int g``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1 or np.any(x <= 0):
        raise DomainError("scale fiducial needs a non-empty positive sample")
    n = x.size
    x1 = float(x[0])
    z = x / x1
    lo0, hi0 = support0
    vlo = max(0.0, lo0 / float(np.min(z)))
    vhi = hi0 / float(np.max(z))

    def logg(v):
        if v <= 0:
            return -math.inf
        acc = (n - 1) * math.log(v)
        for zi in z:
            lv = logpdf0(v * zi)
            if lv == -math.inf:
                return -math.inf
            acc += lv
        return acc

    gm = float(np.exp(np.mean(np.log(x))))
    center = x1 / gm
    kinks = None
    if math.isfinite(hi0):
        kinks = sorted({float(hi0 / zi) for zi in z})
    ci = _ConditionalIntegral(logg, vlo, vhi, center, max(center, 1e-3), kinks)
    tlo = x1 / vhi if vhi < math.inf else 0.0
    thi = x1 / vlo if vlo > 0 else math.inf
    return CdfDistribution(
        lambda th: ci.upper(x1 / th)[0],
        lambda th: ci.density(x1 / th) * x1 / th**2,
        tlo,
        thi,
        sf=lambda th: ci.upper(x1 / th)[1],
        center=gm,
        scale=gm,
        label="scale fiducial",
    )


def location_scale_fiducial(x, logpdf0: Callable[[float], float], support0=(-math.inf, math.inf)) -> JointFiducial:
    """Joint fiducial of ``(sigma, theta)`` for a location-scale family.

    Step 1 uses ``Z_2 = X_2 - X_1`` given the configuration
    ``c_i = (X_i - X_1)/(X_2 - X_1)`` and the sign of ``Z_2``:
    ``R = Z_2 / sigma`` has (one-sided) density
    proportional to ``|r|^{n-2} int f(u) f(u + r) prod_{i>2} f(u + r c_i) du``.
    Step 2 is the location fiducial of ``theta`` with the scale fixed.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DomainError("location-scale fiducial needs n >= 2")
    z2 = float(x[1] - x[0])
    if z2 == 0:
        raise DomainError("x_1 and x_2 must differ")
    cfg = (x[2:] - x[0]) / z2
    lo0, hi0 = support0
    sd = float(np.std(x, ddof=1)) or 1.0

    def log_gr(r):
        shifts = np.concatenate([[0.0, r], r * cfg])
        ulo, uhi = _g_support(shifts, lo0, hi0)
        if not ulo < uhi:
            return -math.inf

        def lf(u):
            acc = 0.0
            for sh in shifts:
                lv = logpdf0(u + sh)
                if lv == -math.inf:
                    return -math.inf
                acc += lv
            return acc

        # shift by the value at a central point for numerical range
        mid = -float(np.mean(shifts))
        if not ulo < mid < uhi:
            mid = 0.5 * (ulo + uhi) if math.isfinite(ulo) and math.isfinite(uhi) else (ulo + 1 if math.isfinite(ulo) else uhi - 1)
        # the peak can sit far from the mean shift (e.g. near a median),
        # so take the best of a few candidates as the reference point
        ref = lf(mid)
        for cand in -shifts:
            if ulo < cand < uhi:
                v = lf(float(cand))
                if v > ref:
                    ref, mid = v, float(cand)
        if ref == -math.inf:
            ref = 0.0
        kern = lambda u: math.exp(lf(u) - ref) if ulo < u < uhi else 0.0
        try:
            val = integrate(kern, ulo, uhi, tol=1e-11, center=mid, scale=1.0 / math.sqrt(n)).value
        except IntegrationError:
            # far tails: the log terms cancel catastrophically, but the
            # density there is negligible, so the crude value is enough
            try:
                val = integrate(kern, ulo, uhi, tol=1e-6, center=mid, scale=1.0 / math.sqrt(n)).value
            except IntegrationError:
                val = 1.0
        if not val > 0:
            return -math.inf
        return (n - 2) * math.log(abs(r)) + ref + math.log(val) if r != 0 else (-math.inf if n > 2 else ref + math.log(val))

    r_hat = z2 / sd
    # sign(Z_2) is ancillary too, so R lives on the observed side of zero
    r_lo, r_hi = (0.0, math.inf) if z2 > 0 else (-math.inf, 0.0)
    rdist = DensityDistribution(log_gr, r_lo, r_hi, center=r_hat, scale=abs(r_hat), label="R")

    def sigma_cdf(sig, data, prev):
        # Pr{Z_2 <= z_2} = Pr{R <= z_2 / sigma}
        return float(rdist.cdf(z2 / sig))

    def sigma_sf(sig, data, prev):
        return float(rdist.sf(z2 / sig))

    def sigma_dcdf(sig, data, prev):
        return -float(rdist.pdf(z2 / sig)) * z2 / sig**2

    step_sigma = ContinuousStep(
        "sigma",
        sigma_cdf,
        lambda data, prev: (0.0, math.inf),
        increasing=z2 < 0,
        dcdf=sigma_dcdf,
        sf=sigma_sf,
        hint=lambda data, prev: (sd, sd),
    )

    class _ThetaStep:
        name = "theta"

        def conditional(self, data, prev, variant=None, backend="closed", boundary="error"):
            sig = prev[0]
            return location_fiducial(x, lambda v: logpdf0(v / sig) - math.log(sig), (sig * lo0, sig * hi0))

        def sample(self, u, data, prev_cols, variant=None, backend="closed", boundary="error"):
            return _loop_sample(self, u, data, prev_cols, variant, backend, boundary)

    ch = StepChain("loc-scale", (step_sigma, _ThetaStep()), description="(X1, Z2, Z) conditioning")
    joint = JointFiducial(ch, {"x": x}, Variant.RIGHT)
    joint.r_distribution = rdist
    return joint


# -- pushforward -------------------------------------------------------------


class _PushforwardJoint(JointFiducial):
    def __init__(self, base: JointFiducial, forward, inverse, names):
        self.base = base
        self._fwd, self._inv = forward, inverse
        self._names = tuple(names)
        self.chain = base.chain
        self.data = base.data
        self.variant = base.variant
        self.backend = base.backend
        self.boundary = base.boundary
        self._first = None

    @property
    def names(self):
        return self._names

    @property
    def d(self):
        return self.base.d

    def conditional(self, j, prev=()):
        prev = [float(p) for p in prev]
        if len(prev) != j:
            raise DomainError(f"conditional {j} needs {j} earlier components, got {len(prev)}")
        if j == 0 and self._first is not None:
            return self._first
        phi_prev = [float(v) for v in np.atleast_1d(self._inv(np.asarray(prev)))] if j else []
        base = self.base.conditional(j, phi_prev)

        def fwd(xv):
            out = self._fwd(np.asarray(phi_prev + [float(xv)]))
            return float(np.asarray(out)[..., j])

        def inv(yv):
            out = self._inv(np.asarray(prev + [float(yv)]))
            return float(np.asarray(out)[..., j])

        qa, qb = float(base.ppf(0.25)), float(base.ppf(0.75))
        increasing = fwd(qb) > fwd(qa)
        dist = TransformedDistribution(base, fwd, inv, increasing=increasing, label=f"push[{base.label}]")
        if j == 0:
            self._first = dist
        return dist

    def sample(self, size, seed):
        return np.asarray(self._fwd(self.base.sample(size, seed)), dtype=float)

    def marginal(self, j=0):
        if j == 0:
            return self.conditional(0)
        raise DomainError("only the first marginal is available for a pushforward")


def pushforward_lower_triangular(
    joint: JointFiducial,
    forward: Callable[[np.ndarray], np.ndarray],
    inverse: Callable[[np.ndarray], np.ndarray],
    names: Sequence[str] | None = None,
    *,
    seed: int = 0,
    rtol: float = 1e-10,
) -> JointFiducial:
    """Change of variables ``lambda = forward(phi)`` for a triangular map.

    Both maps must accept prefixes: ``forward(phi[:k])`` returns
    ``lambda[:k]`` (this is what lower triangular means), and likewise for
    ``inverse``.  Prefix consistency and inversion are checked on draws
    from ``joint``.  The resulting conditionals are exact one-dimensional
    transformations, so the joint density picks up the triangular Jacobian
    automatically.

    Raises
    ------
    DomainError
        If a map is not prefix-consistent or ``inverse`` does not invert
        ``forward``.
    """
    pts = joint.sample(6, seed)
    d = joint.d
    for phi in pts:
        lam = np.asarray(forward(phi), dtype=float)
        back = np.asarray(inverse(lam), dtype=float)
        if not np.allclose(back, phi, rtol=1e-8, atol=1e-10):
            raise DomainError("inverse does not invert forward")
        for k in range(1, d):
            try:
                lk = np.asarray(forward(phi[:k]), dtype=float)
                pk = np.asarray(inverse(lam[:k]), dtype=float)
            except (IndexError, ValueError) as exc:
                raise DomainError(f"maps must accept prefixes: {exc}") from exc
            if lk.shape != (k,) or not np.allclose(lk, lam[:k], rtol=rtol, atol=1e-14):
                raise DomainError("map is not lower triangular")
            if pk.shape != (k,) or not np.allclose(pk, phi[:k], rtol=rtol, atol=1e-14):
                raise DomainError("inverse map is not lower triangular")
    names = tuple(names) if names is not None else tuple(f"lambda{k + 1}" for k in range(d))
    return _PushforwardJoint(joint, forward, inverse, names)


# -- sufficiency --------------------------------------------------------------


@dataclass(frozen=True)
class SufficiencyReport:
    """Sup-norm gaps between two fiducial constructions on a grid."""

    grid: np.ndarray
    sup_cdf_gap: float
    sup_pdf_gap: float

    @property
    def agree(self) -> bool:
        return self.sup_cdf_gap < 1e-8 and self.sup_pdf_gap < 1e-8


def sufficiency_check(
    chain_full: StepChain,
    data_full: Mapping,
    chain_suff: StepChain,
    data_suff: Mapping,
    grid: Grid | Sequence[float],
    variant="right",
    *,
    backend="numeric",
) -> SufficiencyReport:
    """Compare the first-component fiducials of two chains on ``grid``."""
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    a = build_joint(chain_full, data_full, variant, backend=backend).marginal(0)
    b = build_joint(chain_suff, data_suff, variant, backend=backend).marginal(0)
    cdf_gap = float(np.max(np.abs(np.asarray(a.cdf(pts)) - np.asarray(b.cdf(pts)))))
    pdf_gap = float(np.max(np.abs(np.asarray(a.pdf(pts)) - np.asarray(b.pdf(pts)))))
    return SufficiencyReport(np.asarray(pts), cdf_gap, pdf_gap)


# -- catalog chains -----------------------------------------------------------


def _normal_step(name, s_of, var_of, link_of=None, prev_free=True, vector_sampler=None):
    """Normal-mean step: statistic ``s`` with variance ``var``, n=1."""

    def spec(data, prev):
        return _m.model("normal-mean", sigma2=var_of(data, prev)), 1, s_of(data, prev)

    return ModelStep(name, spec, link_of, prev_free, vector_sampler)


def diff_means_chain(n: int, sigma2: float = 1.0) -> StepChain:
    """Two normal samples of size ``n`` with common known variance.

    Components: ``phi1 = mu2 - mu1`` then ``phi2 = mu1``.  Data keys
    ``s1``, ``s2`` (sample sums).
    """
    if n < 1 or not sigma2 > 0:
        raise DomainError("need n >= 1 and sigma2 > 0")

    def t(data):
        return data["s1"] + data["s2"]

    # S2 | S1 + S2 ~ N(n phi1 / 2 + t / 2, n sigma2 / 2)
    step1 = _normal_step(
        "phi1",
        lambda data, prev: data["s2"],
        lambda data, prev: n * sigma2 / 2.0,
        lambda data, prev: Link(
            lambda th: 2.0 * (th - t(data) / 2.0) / n,
            lambda p: n * p / 2.0 + t(data) / 2.0,
            True,
            lambda p: n / 2.0,
        ),
    )
    # S1 + S2 ~ N(n (phi1 + 2 phi2), 2 n sigma2)
    step2 = _normal_step(
        "phi2",
        lambda data, prev: t(data),
        lambda data, prev: 2.0 * n * sigma2,
        lambda data, prev: Link(
            lambda th: (th / n - prev[0]) / 2.0,
            lambda p: n * (prev[0] + 2.0 * p),
            True,
            lambda p: 2.0 * n,
        ),
    )

    def stats(samples):
        x1, x2 = (np.asarray(v, dtype=float) for v in samples)
        return {"s1": fsum(x1), "s2": fsum(x2)}

    return StepChain("diff-means", (step1, step2), stats, "difference of two normal means")


def neyman_scott_chain(n: int) -> StepChain:
    """``n`` pairs ``N(mu_i, sigma^2)``: ``sigma^2`` first, then each ``mu_i``.

    Data keys ``w`` (sum of squared within-pair differences) and ``xbar``.
    """
    if n < 1:
        raise DomainError("need n >= 1")

    # W ~ Ga(n/2, rate 1/(4 sigma^2)): gamma-rate model on lambda = 1/(4 sigma^2)
    step_sigma = ModelStep(
        "sigma2",
        lambda data, prev: (_m.model("gamma-rate", alpha=n / 2.0), 1, data["w"]),
        lambda data, prev: Link(
            lambda lam: _safe_div(1.0, 4.0 * np.asarray(lam)),
            lambda s2: 1.0 / (4.0 * s2),
            False,
            lambda s2: -1.0 / (4.0 * s2**2),
        ),
        prev_free=True,
    )

    def mu_step(i):
        def sampler(u, data, prev_cols):
            s2 = prev_cols[0]
            return data["xbar"][i] + np.sqrt(s2 / 2.0) * _st.norm.ppf(u)

        return _normal_step(
            f"mu{i + 1}",
            lambda data, prev: data["xbar"][i],
            lambda data, prev: prev[0] / 2.0,
            prev_free=False,
            vector_sampler=sampler,
        )

    class _MuStep:
        """Component ``mu_i`` depends on ``sigma^2`` only (first component)."""

        def __init__(self, i):
            self.inner = mu_step(i)
            self.name = self.inner.name

        def conditional(self, data, prev, variant, backend="closed", boundary="error"):
            return self.inner.conditional(data, prev[:1], variant, backend, boundary)

        def sample(self, u, data, prev_cols, variant, backend="closed", boundary="error"):
            return self.inner.sample(u, data, prev_cols[:1], variant, backend, boundary)

    def stats(pairs):
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DomainError("neyman-scott data must be an (n, 2) array")
        return {"w": fsum((arr[:, 0] - arr[:, 1]) ** 2), "xbar": arr.mean(axis=1).tolist()}

    steps = (step_sigma,) + tuple(_MuStep(i) for i in range(n))
    return StepChain("neyman-scott", steps, stats, "common variance of n normal pairs")


def _safe_div(a, b):
    # boundary quantiles map to 0 or inf without warnings
    with np.errstate(divide="ignore", invalid="ignore"):
        return a / b


def _logit_link_ratio():
    # p = phi / (1 + phi)  <->  phi = p / (1 - p)
    return Link(
        lambda p: _safe_div(np.asarray(p), 1.0 - np.asarray(p)),
        lambda phi: phi / (1.0 + phi),
        True,
        lambda phi: 1.0 / (1.0 + phi) ** 2,
    )


def poisson_ratio_chain(n: int, order: str = "ratio-first") -> StepChain:
    """Two Poisson samples of size ``n``: ``phi1 = mu2/mu1``, ``phi2 = mu1 + mu2``.

    ``S2 | S1 + S2 = t ~ Bi(t, phi1/(1+phi1))`` and ``S1 + S2 ~ Po(n phi2)``.
    ``order="sum-first"`` lists ``phi2`` first.
    """
    ratio = ModelStep(
        "phi1",
        lambda data, prev: (_m.model("binomial", m=data["s1"] + data["s2"]), 1, data["s2"]),
        lambda data, prev: _logit_link_ratio(),
        prev_free=True,
    )
    total = ModelStep(
        "phi2",
        lambda data, prev: (_m.model("poisson"), n, data["s1"] + data["s2"]),
        None,
        prev_free=True,
    )

    def stats(samples):
        x1, x2 = (np.asarray(v, dtype=float) for v in samples)
        return {"s1": fsum(x1), "s2": fsum(x2)}

    if order == "ratio-first":
        steps = (ratio, total)
    elif order == "sum-first":
        steps = (total, ratio)
    else:
        raise DomainError("order must be 'ratio-first' or 'sum-first'")
    return StepChain("poisson-ratio", steps, stats, "ratio of two Poisson rates")


def bivariate_binomial_chain(m: int) -> StepChain:
    """``R ~ Bi(m, p)``, ``S | R = r ~ Bi(r, q)``; components ``q`` then ``p``."""
    step_q = ModelStep("q", lambda data, prev: (_m.model("binomial", m=data["r"]), 1, data["s"]), None, True)
    step_p = ModelStep("p", lambda data, prev: (_m.model("binomial", m=m), 1, data["r"]), None, True)
    return StepChain("bivariate-binomial", (step_q, step_p), None, "bivariate binomial")


def trinomial_ratio_chain(n: int) -> StepChain:
    """Trinomial ``(X1, X2)`` with ``phi1 = p1/p2`` and ``phi2 = p2``.

    ``X1 | T = t ~ Bi(t, phi1/(1+phi1))`` and ``T ~ Bi(n, phi2 (1 + phi1))``.
    """
    step1 = ModelStep(
        "phi1",
        lambda data, prev: (_m.model("binomial", m=data["x1"] + data["x2"]), 1, data["x1"]),
        lambda data, prev: _logit_link_ratio(),
        prev_free=True,
    )
    step2 = ModelStep(
        "phi2",
        lambda data, prev: (_m.model("binomial", m=n), 1, data["x1"] + data["x2"]),
        lambda data, prev: Link(
            lambda th: np.asarray(th) / (1.0 + prev[0]),
            lambda p: p * (1.0 + prev[0]),
            True,
            lambda p: 1.0 + prev[0],
        ),
        prev_free=True,
    )
    return StepChain("trinomial-ratio", (step1, step2), None, "ratio of trinomial probabilities")


def loc_scale_normal_chain(path: str = "xbar-s2") -> StepChain:
    """Normal location-scale model, components ``sigma`` then ``theta``.

    ``path="xbar-s2"`` uses ``(x_bar, S^2)`` with closed-form steps;
    ``path="x1-z2-z"`` uses the generic ancillary conditioning of
    :func:`location_scale_fiducial`.  Data key ``x``.
    """
    if path == "x1-z2-z":

        def stats(x):
            return {"x": np.asarray(x, dtype=float)}

        def build(data):
            return location_scale_fiducial(data["x"], _std_normal_logpdf)

        return StepChain("loc-scale-normal", (), stats, "(X1, Z2, Z) conditioning", build)
    if path != "xbar-s2":
        raise DomainError("path must be 'xbar-s2' or 'x1-z2-z'")

    def sig_sampler(u, data, prev_cols):
        ss, n = data["ss"], data["n"]
        return np.sqrt(ss / _st.chi2.isf(u, n - 1))

    # SS / sigma^2 ~ chi2_{n-1}: normal-variance model with n - 1 terms on sigma^2
    step_sigma = ModelStep(
        "sigma",
        lambda data, prev: (_m.model("normal-variance"), data["n"] - 1, data["ss"]),
        lambda data, prev: Link(
            lambda v: np.sqrt(v), lambda s: s * s, True, lambda s: 2.0 * s
        ),
        prev_free=True,
        vector_sampler=sig_sampler,
    )

    def theta_sampler(u, data, prev_cols):
        return data["xbar"] + prev_cols[0] / math.sqrt(data["n"]) * _st.norm.ppf(u)

    step_theta = _normal_step(
        "theta",
        lambda data, prev: data["xbar"],
        lambda data, prev: prev[0] ** 2 / data["n"],
        prev_free=False,
        vector_sampler=theta_sampler,
    )

    def stats(x):
        x = np.asarray(x, dtype=float)
        xbar = fsum(x) / x.size
        return {"n": int(x.size), "xbar": xbar, "ss": fsum((x - xbar) ** 2)}

    return StepChain("loc-scale-normal", (step_sigma, step_theta), stats, "(x_bar, S^2) conditioning")


def _std_normal_logpdf(v: float) -> float:
    return -0.5 * v * v - 0.5 * math.log(2 * math.pi)


def uniform_shift_chain(path: str = "sufficient") -> StepChain:
    """Uniform on ``(theta, theta + 1)``.

    ``"sufficient"`` conditions ``X_(n)`` on the range ``z``;
    ``"full"`` conditions ``X_n`` on ``Z_i = X_n - X_i``.  Data key ``x``.
    """
    if path == "sufficient":

        def spec(data, prev):
            x = data["x"]
            return _m.model("uniform-shift", z=float(np.max(x) - np.min(x))), len(x), float(np.max(x))

        step = ModelStep("theta", spec, None, True)
    elif path == "full":

        def parts(data):
            x = data["x"]
            zi = x[-1] - x[:-1]
            zmax = max(float(np.max(zi)), 0.0) if zi.size else 0.0
            zmin = min(float(np.min(zi)), 0.0) if zi.size else 0.0
            return float(x[-1]), zmax, zmin

        def cdf(th, data, prev):
            xn, zmax, zmin = parts(data)
            return min(1.0, max(0.0, (xn - th - zmax) / (1.0 + zmin - zmax)))

        def dcdf(th, data, prev):
            xn, zmax, zmin = parts(data)
            return -1.0 / (1.0 + zmin - zmax) if xn - 1.0 - zmin < th < xn - zmax else 0.0

        def support(data, prev):
            xn, zmax, zmin = parts(data)
            return xn - 1.0 - zmin, xn - zmax

        step = ContinuousStep("theta", cdf, support, increasing=False, dcdf=dcdf)
    else:
        raise DomainError("path must be 'sufficient' or 'full'")
    return StepChain("uniform-shift", (step,), lambda x: {"x": np.asarray(x, dtype=float)}, f"uniform shift ({path})")


def uniform_scale_chain(path: str = "sufficient") -> StepChain:
    """Uniform on ``(0, theta)``: ``X_(n)`` or ``X_1`` given ``X_i / X_1``."""
    if path == "sufficient":

        def spec(data, prev):
            x = data["x"]
            return _m.model("uniform-scale"), len(x), float(np.max(x))

        step = ModelStep("theta", spec, None, True)
    elif path == "full":

        def parts(data):
            x = data["x"]
            w = float(np.max(x[1:] / x[0])) if x.size > 1 else 0.0
            return float(x[0]), max(1.0, w), x.size

        def cdf(th, data, prev):
            x1, w, n = parts(data)
            return min(1.0, (x1 * w / th) ** n)

        def dcdf(th, data, prev):
            x1, w, n = parts(data)
            return -n * (x1 * w) ** n / th ** (n + 1) if th > x1 * w else 0.0

        def support(data, prev):
            x1, w, n = parts(data)
            return x1 * w, math.inf

        def hint(data, prev):
            x1, w, n = parts(data)
            return x1 * w, x1 * w / n

        step = ContinuousStep("theta", cdf, support, increasing=False, dcdf=dcdf, hint=hint)
    else:
        raise DomainError("path must be 'sufficient' or 'full'")
    return StepChain("uniform-scale", (step,), lambda x: {"x": np.asarray(x, dtype=float)}, f"uniform scale ({path})")


CHAIN_KEYS = frozenset(
    {
        "diff-means",
        "neyman-scott",
        "poisson-ratio",
        "bivariate-binomial",
        "trinomial-ratio",
        "loc-scale-normal",
        "uniform-shift",
        "uniform-scale",
    }
)


def chain(key: str, **kw) -> StepChain:
    """Catalog chain by key (see ``CHAIN_KEYS``)."""
    table = {
        "diff-means": diff_means_chain,
        "neyman-scott": neyman_scott_chain,
        "poisson-ratio": poisson_ratio_chain,
        "bivariate-binomial": bivariate_binomial_chain,
        "trinomial-ratio": trinomial_ratio_chain,
        "loc-scale-normal": loc_scale_normal_chain,
        "uniform-shift": uniform_shift_chain,
        "uniform-scale": uniform_scale_chain,
    }
    if key not in table:
        raise DomainError(f"unknown chain {key!r}; choose from {sorted(CHAIN_KEYS)}")
    return table[key](**kw)
