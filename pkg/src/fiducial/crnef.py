"""Conditionally reducible natural exponential families.

A cr-NEF factorizes as a product of one-parameter conditional NEFs,
``X_k | X_[k-1]`` with natural parameter ``phi_k`` and cumulant
``M_k(phi_k; x_[k-1]) = sum_{j<k} A_kj(phi_k) x_j + B_k(phi_k)``.  The
fiducial distribution of ``phi`` is then a product of independent
one-dimensional fiducials, one per conditional model, and fiducials for
the mean parameter ``mu`` follow by a lower-triangular change of
variables.

Four basic families with simple quadratic variance function are covered:
Poisson/normal, multinomial, negative-multinomial and
negative-multinomial/gamma/normal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special as _sps
from scipy import stats as _st

from . import models as _m
from .distributions import ScipyDistribution, bound
from .errors import BoundaryError, DomainError
from .fiducial1d import Variant
from .stepwise import DistStep, JointFiducial, Link, ModelStep, StepChain, build_joint, pushforward_lower_triangular

__all__ = [
    "CrNefFamily",
    "CrNefSpec",
    "ParamTriple",
    "crnef",
    "phi_of_p_multinomial",
    "p_of_phi_multinomial",
    "phi_to_theta",
    "theta_to_phi",
    "phi_to_mu",
    "mu_to_phi",
    "log_likelihood",
    "joint_fiducial_phi",
    "joint_fiducial_mu",
    "mu_log_kernel",
    "generalized_dirichlet_logpdf",
    "multinomial_p_geometric",
    "fiducial_prior",
    "conditional_jeffreys_log_prior",
    "SIMPLEX_TOL",
]

SIMPLEX_TOL = 1e-12


class CrNefFamily(str, enum.Enum):
    POISSON_NORMAL = "poisson-normal"
    MULTINOMIAL = "multinomial"
    NEG_MULTINOMIAL = "neg-multinomial"
    NM_GAMMA_NORMAL = "nm-gamma-normal"


# component kinds
_BIN, _POI, _NOR, _NB, _GAM, _CNOR = "binomial", "poisson", "normal", "negbin", "gamma", "cond-normal"


@dataclass(frozen=True)
class CrNefSpec:
    """A basic cr-NEF with simple quadratic variance function.

    Parameters
    ----------
    family : CrNefFamily
    d : int
        Dimension.
    N : int, optional
        Multinomial number of trials.
    R : float, optional
        Negative-multinomial count in the last cell.
    m : int, optional
        Poisson/normal: number of Poisson components (the rest are normal).
        NM/gamma/normal: dimension of the negative-multinomial block; the
        gamma component is ``m + 1`` and the remaining ones are normal
        with variance proportional to it.
    sigma2 : float
        Known variance of the Poisson/normal normal components.
    """

    family: CrNefFamily
    d: int
    N: int | None = None
    R: float | None = None
    m: int | None = None
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", CrNefFamily(self.family))
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("d must be a positive integer")
        f = self.family
        if f is CrNefFamily.MULTINOMIAL:
            if self.N is None or int(self.N) != self.N or self.N < 1:
                raise DomainError("multinomial needs a positive integer N")
        if f in (CrNefFamily.NEG_MULTINOMIAL, CrNefFamily.NM_GAMMA_NORMAL):
            if self.R is None or not self.R > 0:
                raise DomainError("negative-multinomial families need R > 0")
        if f is CrNefFamily.POISSON_NORMAL:
            mm = self.d if self.m is None else self.m
            if not 0 <= mm <= self.d:
                raise DomainError("need 0 <= m <= d")
            object.__setattr__(self, "m", int(mm))
            if not self.sigma2 > 0:
                raise DomainError("sigma2 must be positive")
        if f is CrNefFamily.NM_GAMMA_NORMAL:
            if self.m is None or not 0 <= self.m <= self.d - 1:
                raise DomainError("nm-gamma-normal needs 0 <= m <= d - 1")

    # -- structure -----------------------------------------------------------

    @property
    def q(self) -> float:
        f = self.family
        if f is CrNefFamily.POISSON_NORMAL:
            return 0.0
        if f is CrNefFamily.MULTINOMIAL:
            return -1.0 / self.N
        return 1.0 / self.R

    @property
    def kinds(self) -> tuple:
        f, d = self.family, self.d
        if f is CrNefFamily.MULTINOMIAL:
            return (_BIN,) * d
        if f is CrNefFamily.NEG_MULTINOMIAL:
            return (_NB,) * d
        if f is CrNefFamily.POISSON_NORMAL:
            return (_POI,) * self.m + (_NOR,) * (d - self.m)
        return (_NB,) * self.m + (_GAM,) + (_CNOR,) * (d - self.m - 1)

    @property
    def z(self) -> tuple:
        """Diagonal linear variance coefficients ``z_kk``."""
        return tuple(1.0 if k in (_BIN, _POI, _NB) else 0.0 for k in self.kinds)

    def B(self, k: int, phi):
        kind = self.kinds[k]
        phi = np.asarray(phi, dtype=float)
        if kind == _BIN:
            return self.N * np.logaddexp(0.0, phi)
        if kind == _NB:
            return -self.R * np.log(-np.expm1(phi))
        if kind == _POI:
            return np.exp(phi)
        if kind == _NOR:
            return self.sigma2 * phi**2 / 2.0
        if kind == _GAM:
            return -self.R * np.log(-phi)
        return np.zeros_like(phi)

    def dB(self, k: int, phi):
        kind = self.kinds[k]
        phi = np.asarray(phi, dtype=float)
        if kind == _BIN:
            return self.N * _sps.expit(phi)
        if kind == _NB:
            return -self.R * np.exp(phi) / np.expm1(phi)
        if kind == _POI:
            return np.exp(phi)
        if kind == _NOR:
            return self.sigma2 * phi
        if kind == _GAM:
            return -self.R / phi
        return np.zeros_like(phi)

    def A(self, k: int, j: int, phi):
        """Coefficient of ``x_j`` in ``M_k`` (zero when ``j >= k``)."""
        if j >= k:
            return 0.0 * np.asarray(phi, dtype=float)
        kind = self.kinds[k]
        phi = np.asarray(phi, dtype=float)
        if kind == _BIN:
            return -np.logaddexp(0.0, phi)
        if kind == _NB:
            return -np.log(-np.expm1(phi))
        if kind == _GAM:
            return -np.log(-phi)
        if kind == _CNOR and j == self.m:
            return phi**2 / 2.0
        return 0.0 * phi

    def dA(self, k: int, j: int, phi):
        if j >= k:
            return 0.0 * np.asarray(phi, dtype=float)
        kind = self.kinds[k]
        phi = np.asarray(phi, dtype=float)
        if kind == _BIN:
            return -_sps.expit(phi)
        if kind == _NB:
            return -np.exp(phi) / np.expm1(phi)
        if kind == _GAM:
            return -1.0 / phi
        if kind == _CNOR and j == self.m:
            return phi
        return 0.0 * phi

    def phi_space(self, k: int) -> tuple[float, float]:
        kind = self.kinds[k]
        if kind == _NB:
            return -math.inf, 0.0
        if kind == _GAM:
            return -math.inf, 0.0
        return -math.inf, math.inf

    def check_phi(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape[-1] != self.d:
            raise DomainError(f"expected {self.d} components")
        for k in range(self.d):
            lo, hi = self.phi_space(k)
            if np.any(~((phi[..., k] > lo) & (phi[..., k] < hi))):
                raise DomainError(f"phi_{k + 1} outside its natural space ({lo}, {hi})")
        return phi


def crnef(key: str, d: int, **kw) -> CrNefSpec:
    """Construct a spec from its key (``multinomial``, ``neg-multinomial``,
    ``poisson-normal`` or ``nm-gamma-normal``)."""
    return CrNefSpec(CrNefFamily(key), d, **kw)


@dataclass(frozen=True)
class ParamTriple:
    """Matching natural-parameter (``theta``), conditional (``phi``) and
    mean (``mu``) vectors."""

    phi: np.ndarray
    theta: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_phi(cls, spec: CrNefSpec, phi) -> "ParamTriple":
        phi = spec.check_phi(phi)
        return cls(phi, phi_to_theta(spec, phi), phi_to_mu(spec, phi))

    @classmethod
    def from_mu(cls, spec: CrNefSpec, mu) -> "ParamTriple":
        return cls.from_phi(spec, mu_to_phi(spec, mu))

    @classmethod
    def from_theta(cls, spec: CrNefSpec, theta) -> "ParamTriple":
        return cls.from_phi(spec, theta_to_phi(spec, theta))


# -- parameter maps ----------------------------------------------------------


def phi_of_p_multinomial(p, N: int | None = None) -> np.ndarray:
    """Log-odds of each cell against the mass remaining after it.

    ``phi_k = log(p_k / (1 - p_1 - ... - p_k))`` for the ``d`` free cells.
    ``N`` is accepted for symmetry with the mean map and is not used.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < SIMPLEX_TOL):
        raise BoundaryError("cell probabilities must be >= 1e-12")
    rem = 1.0 - np.cumsum(p, axis=-1)
    if np.any(rem < SIMPLEX_TOL):
        raise BoundaryError("the last cell needs probability >= 1e-12")
    return np.log(p) - np.log(rem)


def p_of_phi_multinomial(phi) -> np.ndarray:
    """Inverse of :func:`phi_of_p_multinomial`."""
    phi = np.asarray(phi, dtype=float)
    # log r_k = -sum_{j<=k} log(1 + e^phi_j)
    log_r = -np.cumsum(np.logaddexp(0.0, phi), axis=-1)
    log_r_prev = np.concatenate([np.zeros(phi.shape[:-1] + (1,)), log_r[..., :-1]], axis=-1)
    return np.exp(log_r_prev + phi - np.logaddexp(0.0, phi))


def phi_to_theta(spec: CrNefSpec, phi) -> np.ndarray:
    """``theta_k = phi_k - sum_{u>k} A_uk(phi_u)``."""
    phi = np.asarray(phi, dtype=float)
    theta = phi.copy()
    d = phi.shape[-1]
    for k in range(d):
        for u in range(k + 1, d):
            theta[..., k] -= spec.A(u, k, phi[..., u])
    return theta


def theta_to_phi(spec: CrNefSpec, theta) -> np.ndarray:
    """Backward recursion inverting :func:`phi_to_theta`."""
    theta = np.asarray(theta, dtype=float)
    phi = theta.copy()
    for k in range(spec.d - 1, -1, -1):
        acc = theta[..., k].copy() if np.ndim(theta[..., k]) else float(theta[..., k])
        for u in range(k + 1, spec.d):
            acc = acc + spec.A(u, k, phi[..., u])
        phi[..., k] = acc
    return phi


def phi_to_mu(spec: CrNefSpec, phi) -> np.ndarray:
    """``mu_k = sum_{j<k} A'_kj(phi_k) mu_j + B'_k(phi_k)``."""
    phi = np.asarray(phi, dtype=float)
    mu = np.empty_like(phi)
    # boundary values of phi (from extreme quantiles) map to 0 or inf
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(phi.shape[-1]):
            acc = spec.dB(k, phi[..., k])
            for j in range(k):
                acc = acc + spec.dA(k, j, phi[..., k]) * mu[..., j]
            mu[..., k] = acc
    return mu


def mu_to_phi(spec: CrNefSpec, mu) -> np.ndarray:
    """Forward recursion inverting :func:`phi_to_mu`."""
    mu = np.asarray(mu, dtype=float)
    phi = np.empty_like(mu)
    kinds = spec.kinds
    for k in range(mu.shape[-1]):
        kind = kinds[k]
        mk = mu[..., k]
        if kind == _BIN:
            rem = spec.N - np.sum(mu[..., : k + 1], axis=-1)
            if np.any(mk <= 0) or np.any(rem <= 0):
                raise BoundaryError("multinomial means must lie inside the simplex")
            phi[..., k] = np.log(mk) - np.log(rem)
        elif kind == _NB:
            tot = spec.R + np.sum(mu[..., : k + 1], axis=-1)
            if np.any(mk <= 0):
                raise BoundaryError("negative-multinomial means must be positive")
            phi[..., k] = np.log(mk) - np.log(tot)
        elif kind == _POI:
            if np.any(mk <= 0):
                raise BoundaryError("Poisson means must be positive")
            phi[..., k] = np.log(mk)
        elif kind == _NOR:
            phi[..., k] = mk / spec.sigma2
        elif kind == _GAM:
            if np.any(mk <= 0):
                raise BoundaryError("gamma mean must be positive")
            phi[..., k] = -(spec.R + np.sum(mu[..., : spec.m], axis=-1)) / mk
        else:
            phi[..., k] = mk / mu[..., spec.m]
    return phi


# -- data --------------------------------------------------------------------


def _check_stats(spec: CrNefSpec, n: int, s) -> tuple:
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    s = tuple(float(v) for v in np.asarray(s, dtype=float).ravel())
    if len(s) != spec.d:
        raise DomainError(f"expected {spec.d} sufficient statistics, got {len(s)}")
    for k, kind in enumerate(spec.kinds):
        if kind in (_BIN, _POI, _NB):
            if s[k] < 0 or s[k] != int(s[k]):
                raise DomainError(f"s_{k + 1} must be a non-negative integer")
        if kind == _GAM and not s[k] > 0:
            raise DomainError("the gamma statistic must be positive")
    if spec.family is CrNefFamily.MULTINOMIAL and sum(s) > n * spec.N:
        raise DomainError("multinomial counts exceed n N")
    return s


def _size(spec: CrNefSpec, n: int, s: tuple, k: int) -> float:
    """Size parameter of the ``k``-th conditional law of the sums."""
    if spec.family is CrNefFamily.MULTINOMIAL:
        return n * spec.N - sum(s[:k])
    if spec.kinds[k] in (_NB, _GAM):
        return n * spec.R + sum(s[:k])
    return float(n)


def log_likelihood(spec: CrNefSpec, n: int, s, phi) -> float:
    """``sum_k phi_k s_k - M_k(phi_k; s_[k-1])`` for ``n`` observations."""
    s = _check_stats(spec, n, s)
    phi = spec.check_phi(phi)
    total = 0.0
    for k, kind in enumerate(spec.kinds):
        p = float(phi[k])
        if kind == _BIN:
            mk = _size(spec, n, s, k) * float(np.logaddexp(0.0, p))
        elif kind == _NB:
            mk = -_size(spec, n, s, k) * math.log(-math.expm1(p))
        elif kind == _POI:
            mk = n * math.exp(p)
        elif kind == _NOR:
            mk = n * spec.sigma2 * p * p / 2.0
        elif kind == _GAM:
            mk = -_size(spec, n, s, k) * math.log(-p)
        else:
            mk = s[spec.m] * p * p / 2.0
        total += p * s[k] - mk
    return total


# -- phi fiducial -------------------------------------------------------------


def _expit_link():
    def to_phi(p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(p) - np.log1p(-p)

    return Link(to_phi, lambda f: float(_sps.expit(f)), True, lambda f: float(_sps.expit(f) * _sps.expit(-f)))


def _component_step(spec: CrNefSpec, n: int, k: int) -> ModelStep:
    kind = spec.kinds[k]
    name = f"phi{k + 1}"
    if kind == _BIN:
        return ModelStep(
            name,
            lambda data, prev: (_m.model("binomial", m=_size(spec, n, data["s"], k)), 1, data["s"][k]),
            lambda data, prev: _expit_link(),
            prev_free=True,
        )
    if kind == _NB:

        def to_phi(p):
            with np.errstate(divide="ignore"):
                return np.log1p(-np.asarray(p, dtype=float))

        link = Link(to_phi, lambda f: -math.expm1(f), False, lambda f: -math.exp(f))
        return ModelStep(
            name,
            lambda data, prev: (_m.model("negative-binomial", m=_size(spec, n, data["s"], k)), 1, data["s"][k]),
            lambda data, prev: link,
            prev_free=True,
        )
    if kind == _POI:

        def to_phi(mu):
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(mu, dtype=float))

        link = Link(to_phi, math.exp, True, math.exp)
        return ModelStep(name, lambda data, prev: (_m.model("poisson"), n, data["s"][k]), lambda d, p: link, True)
    if kind == _NOR:
        s2 = spec.sigma2
        link = Link(lambda mu: np.asarray(mu) / s2, lambda f: s2 * f, True, lambda f: s2)
        return ModelStep(
            name, lambda data, prev: (_m.model("normal-mean", sigma2=s2), n, data["s"][k]), lambda d, p: link, True
        )
    if kind == _GAM:
        link = Link(lambda lam: -np.asarray(lam), lambda f: -f, False, lambda f: -1.0)
        return ModelStep(
            name,
            lambda data, prev: (_m.model("gamma-rate", alpha=_size(spec, n, data["s"], k)), 1, data["s"][k]),
            lambda d, p: link,
            True,
        )

    # S_k | S_{m+1} = v ~ N(phi v, v): normal-mean model on theta = phi v
    def spec_fn(data, prev):
        v = data["s"][spec.m]
        return _m.model("normal-mean", sigma2=v), 1, data["s"][k]

    def link_fn(data, prev):
        v = data["s"][spec.m]
        return Link(lambda th: np.asarray(th) / v, lambda f: f * v, True, lambda f: v)

    return ModelStep(name, spec_fn, link_fn, True)


def _phi_chain(spec: CrNefSpec, n: int) -> StepChain:
    steps = tuple(_component_step(spec, n, k) for k in range(spec.d))
    return StepChain(f"crnef-{spec.family.value}", steps, None, "independent conditional components")


def joint_fiducial_phi(spec: CrNefSpec, n: int, s, variant="right", *, backend="closed", boundary="error") -> JointFiducial:
    """Fiducial distribution of ``phi``: independent per-component fiducials.

    Discrete components use the requested variant; continuous components
    always use the right fiducial.  The geometric variant of a discrete
    component has ``(s_k + 1/2)`` in place of ``(s_k + 1)``.
    """
    s = _check_stats(spec, n, s)
    return build_joint(_phi_chain(spec, n), {"s": s}, variant, backend=backend, boundary=boundary)


# -- mu fiducial --------------------------------------------------------------

_SHIFT = {Variant.RIGHT: 1.0, Variant.LEFT: 0.0, Variant.GEOMETRIC: 0.5}


def _mu_steps(spec: CrNefSpec, n: int, s: tuple, shift: float) -> tuple:
    """Closed-form conditionals ``mu_k | mu_[k-1]``."""
    steps = []
    for k, kind in enumerate(spec.kinds):
        name = f"mu{k + 1}"
        if kind == _BIN:
            a, b = s[k] + shift, _size(spec, n, s, k) - s[k] + 1.0 - shift
            if not (a > 0 and b > 0):
                raise BoundaryError(f"component {k + 1} is on the sample-space boundary")

            def dist(data, prev, a=a, b=b):
                scale = spec.N - sum(prev)
                return ScipyDistribution(bound(_st.beta, a, b, scale=scale), f"(N-sum)Be({a},{b})")

            def samp(u, data, cols, a=a, b=b):
                scale = spec.N - (np.sum(cols, axis=0) if cols else 0.0)
                return scale * _st.beta.ppf(u, a, b)

            steps.append(DistStep(name, dist, samp))
        elif kind == _NB:
            a, b = s[k] + shift, _size(spec, n, s, k)
            if not (a > 0 and b > 0):
                raise BoundaryError(f"component {k + 1} is on the sample-space boundary")

            def dist(data, prev, a=a, b=b):
                scale = spec.R + sum(prev)
                return ScipyDistribution(bound(_st.betaprime, a, b, scale=scale), f"(R+sum)BeP({a},{b})")

            def samp(u, data, cols, a=a, b=b):
                scale = spec.R + (np.sum(cols, axis=0) if cols else 0.0)
                return scale * _st.betaprime.ppf(u, a, b)

            steps.append(DistStep(name, dist, samp))
        elif kind == _POI:
            a = s[k] + shift
            if not a > 0:
                raise BoundaryError(f"component {k + 1} is on the sample-space boundary")
            dist_k = ScipyDistribution(bound(_st.gamma, a, scale=1.0 / n), f"Ga({a},{n})")
            steps.append(DistStep(name, lambda data, prev, d_=dist_k: d_, lambda u, data, cols, d_=dist_k: d_.ppf(u)))
        elif kind == _NOR:
            dist_k = ScipyDistribution(bound(_st.norm, s[k] / n, math.sqrt(spec.sigma2 / n)), "N")
            steps.append(DistStep(name, lambda data, prev, d_=dist_k: d_, lambda u, data, cols, d_=dist_k: d_.ppf(u)))
        elif kind == _GAM:
            shape = _size(spec, n, s, k)
            v = s[k]

            def dist(data, prev, shape=shape, v=v):
                scale = v * (spec.R + sum(prev[: spec.m]))
                return ScipyDistribution(bound(_st.invgamma, shape, scale=scale), f"In-Ga({shape})")

            def samp(u, data, cols, shape=shape, v=v):
                scale = v * (spec.R + (np.sum(cols[: spec.m], axis=0) if spec.m else 0.0))
                return _st.invgamma.ppf(u, shape, scale=scale)

            steps.append(DistStep(name, dist, samp))
        else:
            v, sk = s[spec.m], s[k]

            def dist(data, prev, v=v, sk=sk):
                g = prev[spec.m]
                return ScipyDistribution(bound(_st.norm, g * sk / v, g / math.sqrt(v)), "N")

            def samp(u, data, cols, v=v, sk=sk):
                g = cols[spec.m]
                return g * sk / v + g / math.sqrt(v) * _st.norm.ppf(u)

            steps.append(DistStep(name, dist, samp))
    return tuple(steps)


def joint_fiducial_mu(spec: CrNefSpec, n: int, s, variant="right", *, method="closed") -> JointFiducial:
    """Fiducial distribution of the mean parameter ``mu`` (ordering ``mu_1, ..., mu_d``).

    Parameters
    ----------
    method : {"closed", "pushforward"}
        ``"closed"`` uses the explicit conditional laws (scaled beta,
        scaled beta-prime, gamma, normal, inverse gamma);
        ``"pushforward"`` transforms :func:`joint_fiducial_phi` through the
        triangular map ``phi -> mu``.  The arithmetic variant is only
        available by pushforward.
    """
    s = _check_stats(spec, n, s)
    v = Variant(variant)
    if method == "pushforward" or v is Variant.ARITHMETIC:
        base = joint_fiducial_phi(spec, n, s, v)
        return pushforward_lower_triangular(
            base,
            lambda phi: phi_to_mu(spec, phi),
            lambda mu: mu_to_phi(spec, mu),
            names=[f"mu{k + 1}" for k in range(spec.d)],
        )
    if method != "closed":
        raise DomainError("method must be 'closed' or 'pushforward'")
    if v is Variant.GEOMETRIC or v is Variant.LEFT:
        # the same sample-space checks as the phi construction
        joint_fiducial_phi(spec, n, s, v)
    steps = _mu_steps(spec, n, s, _SHIFT[v])
    chain = StepChain(f"crnef-mu-{spec.family.value}", steps)
    return build_joint(chain, {"s": s}, v)


def mu_log_kernel(spec: CrNefSpec, n: int, s, mu) -> float:
    """Unnormalized log density of the right ``mu`` fiducial, in product form.

    Multinomial: ``prod mu_k^{s_k} (N - sum_{j<=k} mu_j)^{g_k}`` with
    ``g_k = -1`` for ``k < d`` and ``g_d = N n - 1 - sum s``.
    Negative multinomial: the same with ``R + sum`` and
    ``g_d = -R n - 1 - sum s``.  Poisson/normal: gamma and normal kernels.
    """
    s = _check_stats(spec, n, s)
    mu = np.asarray(mu, dtype=float)
    f = spec.family
    d = spec.d
    if f is CrNefFamily.MULTINOMIAL or f is CrNefFamily.NEG_MULTINOMIAL:
        if f is CrNefFamily.MULTINOMIAL:
            rem = spec.N - np.cumsum(mu)
            gd = spec.N * n - 1 - sum(s)
        else:
            rem = spec.R + np.cumsum(mu)
            gd = -spec.R * n - 1 - sum(s)
        if np.any(mu <= 0) or np.any(rem <= 0):
            return -math.inf
        g = np.full(d, -1.0)
        g[-1] = gd
        return float(np.sum(np.asarray(s) * np.log(mu)) + np.sum(g * np.log(rem)))
    if f is CrNefFamily.POISSON_NORMAL:
        total = 0.0
        for k, kind in enumerate(spec.kinds):
            if kind == _POI:
                if mu[k] <= 0:
                    return -math.inf
                total += s[k] * math.log(mu[k]) - n * mu[k]
            else:
                total += -n / (2 * spec.sigma2) * (mu[k] ** 2 - 2 * mu[k] * s[k] / n)
        return total
    # NM/gamma/normal: product of the conditional laws
    return mu_joint_logpdf_closed(spec, n, s, mu)


def mu_joint_logpdf_closed(spec: CrNefSpec, n: int, s, mu) -> float:
    """Normalized right ``mu`` log density from the closed conditionals."""
    return joint_fiducial_mu(spec, n, s, "right").logpdf(mu)


# -- generalized Dirichlet ----------------------------------------------------


def generalized_dirichlet_logpdf(p, a, b) -> float:
    """Log density of the generalized Dirichlet with parameters ``a``, ``b``.

    ``p_k = r_{k-1} V_k`` with independent ``V_k ~ Be(a_k, b_k)`` and
    ``r_k = 1 - p_1 - ... - p_k``; equivalently the density is
    ``prod p_k^{a_k-1} r_k^{b_k - a_{k+1} - b_{k+1}} r_d^{b_d - 1} / prod B(a_k, b_k)``.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = p.size
    if a.size != d or b.size != d:
        raise DomainError("a and b must match the dimension of p")
    r = 1.0 - np.cumsum(p)
    if np.any(p <= 0) or np.any(r <= 0):
        return -math.inf
    expo = np.empty(d)
    expo[:-1] = b[:-1] - a[1:] - b[1:]
    expo[-1] = b[-1] - 1.0
    return float(
        np.sum((a - 1.0) * np.log(p)) + np.sum(expo * np.log(r)) - np.sum(_sps.betaln(a, b))
    )


def _gd_params(N: int, n: int, s: tuple, variant: Variant) -> tuple[np.ndarray, np.ndarray]:
    shift = _SHIFT[variant]
    s_arr = np.asarray(s, dtype=float)
    a = s_arr + shift
    b = n * N - np.cumsum(s_arr) + 1.0 - shift
    return a, b


def multinomial_p_geometric(N: int, n: int, s, *, variant="geometric") -> JointFiducial:
    """Fiducial of the free multinomial cell probabilities ``p_1, ..., p_d``.

    For the geometric variant this is the generalized Dirichlet with
    ``a_k = s_k + 1/2`` and ``b_k = n N - s_1 - ... - s_k + 1/2``.  Draws
    use the sequential beta representation.  The result depends on the
    cell ordering.
    """
    spec = CrNefSpec(CrNefFamily.MULTINOMIAL, len(np.atleast_1d(s)), N=N)
    s = _check_stats(spec, n, s)
    v = Variant(variant)
    if v is Variant.ARITHMETIC:
        raise DomainError("the arithmetic variant has no generalized Dirichlet form")
    joint_fiducial_phi(spec, n, s, v)  # boundary checks
    a, b = _gd_params(N, n, s, v)
    steps = []
    for k in range(spec.d):
        ak, bk = float(a[k]), float(b[k])

        def dist(data, prev, ak=ak, bk=bk):
            r = 1.0 - sum(prev)
            return ScipyDistribution(bound(_st.beta, ak, bk, scale=r), f"r*Be({ak},{bk})")

        def samp(u, data, cols, ak=ak, bk=bk):
            r = 1.0 - (np.sum(cols, axis=0) if cols else 0.0)
            return r * _st.beta.ppf(u, ak, bk)

        steps.append(DistStep(f"p{k + 1}", dist, samp))
    joint = build_joint(StepChain("multinomial-p", tuple(steps)), {"s": s}, v)
    joint.gd_params = (a, b)
    return joint


# -- priors -------------------------------------------------------------------


def fiducial_prior(spec: CrNefSpec) -> Callable[[Sequence[float]], float]:
    """Log fiducial prior over ``phi`` (improper, up to a constant).

    Obtained by setting ``s_k = n = 0`` in the geometric joint density:
    multinomial ``prod e^{phi_k/2} / (1 + e^{phi_k})``; Poisson
    ``e^{phi/2}``; negative multinomial ``e^{phi/2} / (1 - e^{phi})``;
    gamma ``1/(-phi)``; normal components flat.
    """
    kinds = spec.kinds

    def logprior(phi) -> float:
        phi = spec.check_phi(phi)
        total = 0.0
        for k, kind in enumerate(kinds):
            p = float(phi[k])
            if kind == _BIN:
                total += p / 2.0 - float(np.logaddexp(0.0, p))
            elif kind == _POI:
                total += p / 2.0
            elif kind == _NB:
                total += p / 2.0 - math.log(-math.expm1(p))
            elif kind == _GAM:
                total += -math.log(-p)
        return total

    return logprior


def conditional_jeffreys_log_prior(spec: CrNefSpec) -> Callable[[Sequence[float]], float]:
    """Sum of the log Jeffreys priors of the conditional models.

    The Fisher information of ``phi_k`` in the ``k``-th conditional model
    is proportional (in ``phi_k``) to the second derivative of its
    cumulant function.
    """
    kinds = spec.kinds

    def logprior(phi) -> float:
        phi = spec.check_phi(phi)
        total = 0.0
        for k, kind in enumerate(kinds):
            p = float(phi[k])
            if kind == _BIN:
                curv = _sps.expit(p) * _sps.expit(-p)
            elif kind == _POI:
                curv = math.exp(p)
            elif kind == _NB:
                curv = math.exp(p) / math.expm1(p) ** 2
            elif kind == _GAM:
                curv = 1.0 / (p * p)
            else:
                curv = 1.0
            total += 0.5 * math.log(curv)
        return total

    return logprior
