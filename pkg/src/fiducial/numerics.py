"""Shared numeric kernel: special functions, quadrature, root finding, RNG.

Special functions and the adaptive Gauss-Kronrod rule are delegated to
scipy; this module adds the domain checks, the infinite-range
substitution ``t = u / (1 + |u|)`` and a uniform error policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo
from scipy import special as _sps

from .errors import BracketError, DomainError, IntegrationError

DEFAULT_TOL = 1e-10
DEFAULT_ROOT_TOL = 1e-10

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_ROOT_TOL",
    "QuadratureResult",
    "Grid",
    "Substitution",
    "log_gamma",
    "log_beta",
    "regularized_incomplete_beta",
    "regularized_lower_gamma",
    "integrate",
    "find_root_increasing",
    "make_rng",
    "spawn_rngs",
    "fsum",
]


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of a definite integral.

    Attributes
    ----------
    value : float
    abs_error_estimate : float
        Error estimate reported by the adaptive rule (non-negative).
    evaluations : int
        Number of integrand evaluations.
    """

    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be >= 0")
        if self.evaluations <= 0:
            raise ValueError("evaluations must be positive")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Grid:
    """Strictly increasing evaluation points inside ``[lo, hi]``."""

    lo: float
    hi: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if not self.lo < self.hi:
            raise DomainError("grid requires lo < hi")
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("grid points must be a non-empty 1-d array")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        if pts[0] < self.lo or pts[-1] > self.hi:
            raise DomainError("grid points must lie in [lo, hi]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, lo: float, hi: float, num: int, *, open_ends: bool = False) -> "Grid":
        """Evenly spaced grid; ``open_ends`` drops both endpoints."""
        if open_ends:
            pts = np.linspace(lo, hi, num + 2)[1:-1]
        else:
            pts = np.linspace(lo, hi, num)
        return cls(lo, hi, pts)

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "Grid":
        pts = np.unique(np.asarray(points, dtype=float))
        lo, hi = float(pts[0]), float(pts[-1])
        if lo == hi:
            hi = lo + 1.0
        return cls(lo, hi, pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def __iter__(self):
        return iter(self.points)


# -- special functions -------------------------------------------------------


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(values, like):
    return float(values) if np.ndim(like) == 0 else values


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``.

    >>> round(log_gamma(0.5), 10)
    0.5723649429
    """
    arr = _as_float_array(x)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    return _scalar_or_array(_sps.gammaln(arr), x)


def log_beta(a, b):
    """``ln B(a, b)`` for positive arguments."""
    aa, bb = _as_float_array(a), _as_float_array(b)
    if np.any(~(aa > 0)) or np.any(~(bb > 0)):
        raise DomainError("log_beta requires a, b > 0")
    return _scalar_or_array(_sps.betaln(aa, bb), np.broadcast(aa, bb))


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    aa, bb, xx = _as_float_array(a), _as_float_array(b), _as_float_array(x)
    if np.any(~(aa > 0)) or np.any(~(bb > 0)):
        raise DomainError("incomplete beta requires a, b > 0")
    if np.any(~((xx >= 0) & (xx <= 1))):
        raise DomainError("incomplete beta requires 0 <= x <= 1")
    out = _sps.betainc(aa, bb, xx)
    return float(out) if out.ndim == 0 else out


def regularized_lower_gamma(a, x):
    """Regularized lower incomplete gamma ``P(a, x)``."""
    aa, xx = _as_float_array(a), _as_float_array(x)
    if np.any(~(aa > 0)) or np.any(xx < 0):
        raise DomainError("lower gamma requires a > 0 and x >= 0")
    out = _sps.gammainc(aa, xx)
    return float(out) if out.ndim == 0 else out


def fsum(values) -> float:
    """Compensated (exactly rounded) sum."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


# -- quadrature --------------------------------------------------------------


class Substitution:
    """Map an (extended) interval onto a bounded ``t`` interval.

    Infinite ends use ``x = c + s * t / (1 - |t|)`` which is the inverse of
    ``t = u / (1 + |u|)`` with ``u = (x - c) / s``.  Finite intervals are
    left untouched.
    """

    def __init__(self, lo: float, hi: float, center: float | None = None, scale: float = 1.0):
        if not lo < hi:
            raise DomainError(f"empty interval ({lo}, {hi})")
        if not scale > 0:
            raise DomainError("scale must be positive")
        self.lo, self.hi = float(lo), float(hi)
        self.finite = math.isfinite(lo) and math.isfinite(hi)
        self.scale = float(scale)
        if self.finite:
            self.center = 0.0
            self.t_lo, self.t_hi = self.lo, self.hi
        elif math.isfinite(lo):
            self.center = self.lo
            self.t_lo, self.t_hi = 0.0, 1.0
        elif math.isfinite(hi):
            self.center = self.hi
            self.t_lo, self.t_hi = -1.0, 0.0
        else:
            self.center = 0.0 if center is None else float(center)
            self.t_lo, self.t_hi = -1.0, 1.0

    def x(self, t):
        if self.finite:
            return t
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.center + self.scale * t / (1.0 - np.abs(t))
        return float(out) if out.ndim == 0 else out

    def dxdt(self, t):
        if self.finite:
            return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.scale / (1.0 - np.abs(t)) ** 2
        return float(out) if out.ndim == 0 else out

    def t(self, x):
        if self.finite:
            return x
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.scale
        with np.errstate(invalid="ignore"):
            out = np.where(np.isinf(u), np.sign(u), u / (1.0 + np.abs(u)))
        out = np.clip(out, self.t_lo, self.t_hi)
        return float(out) if out.ndim == 0 else out

    def integrand(self, f: Callable[[float], float]) -> Callable[[float], float]:
        if self.finite:
            return f

        def g(t):
            if t <= -1.0 or t >= 1.0:
                return 0.0
            w = self.scale / (1.0 - abs(t)) ** 2
            val = f(self.center + self.scale * t / (1.0 - abs(t)))
            return val * w if val != 0.0 else 0.0

        return g


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    *,
    center: float | None = None,
    scale: float = 1.0,
    points: Sequence[float] | None = None,
    limit: int = 400,
) -> QuadratureResult:
    """Adaptive integral of ``f`` over ``(lo, hi)``; ends may be infinite.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    lo, hi : float
        Integration limits (``-inf``/``inf`` allowed).
    tol : float
        Absolute and relative tolerance handed to the adaptive rule.
    center, scale : float, optional
        Where the integrand mass sits, used by the infinite-range
        substitution.  Good hints matter for sharply peaked integrands.
    points : sequence of float, optional
        Known break points (kinks, discontinuities) inside the interval.

    Raises
    ------
    IntegrationError
        If the error estimate still exceeds ``max(tol, tol * |value|)``
        when the subdivision budget is exhausted.
    """
    if lo == hi:
        return QuadratureResult(0.0, 0.0, 1)
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0
    sub = Substitution(lo, hi, center, scale)
    g = sub.integrand(f)
    brk = None
    if points is not None:
        tp = sorted({float(sub.t(p)) for p in points if lo < p < hi})
        brk = [p for p in tp if sub.t_lo < p < sub.t_hi] or None
    out = _spi.quad(
        g, sub.t_lo, sub.t_hi, epsabs=tol, epsrel=tol, limit=limit, points=brk, full_output=1
    )
    value, err, info = out[0], out[1], out[2]
    ier_msg = out[3] if len(out) > 3 else None
    if not math.isfinite(value):
        raise IntegrationError(f"non-finite integral on ({lo}, {hi})")
    if ier_msg is not None and err > max(tol, tol * abs(value)):
        raise IntegrationError(
            f"quadrature did not converge on ({lo}, {hi}): estimate {err:.3g} > tol {tol:.3g}"
        )
    return QuadratureResult(sign * value, abs(err), max(int(info["neval"]), 1))


# -- root finding ------------------------------------------------------------


def find_root_increasing(
    g: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    tol: float = DEFAULT_ROOT_TOL,
) -> float:
    """Solve ``g(x) = target`` for nondecreasing ``g`` inside ``bracket``.

    Uses Brent's bisection/secant/inverse-quadratic hybrid, iterated until
    the bracket collapses to machine precision so that the residual
    tolerance ``tol`` is honoured even for steep ``g``.

    Raises
    ------
    BracketError
        If ``target`` is not enclosed by ``g`` at the bracket ends.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise BracketError(f"invalid bracket ({a}, {b})")
    ga, gb = g(a) - target, g(b) - target
    if abs(ga) <= tol and ga >= 0:
        return a
    if abs(gb) <= tol and gb <= 0:
        return b
    if ga > 0 or gb < 0:
        if abs(ga) <= tol:
            return a
        if abs(gb) <= tol:
            return b
        raise BracketError(f"target {target} not enclosed: g({a})={ga + target}, g({b})={gb + target}")
    xtol = 1e-300 if (a >= 0 or b <= 0) else 1e-15
    root = _spo.brentq(lambda x: g(x) - target, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=1000)
    return float(root)


# -- random numbers ----------------------------------------------------------


def make_rng(seed) -> np.random.Generator:
    """64-bit PCG generator from an integer seed (or pass-through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise DomainError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-worker streams derived from ``(seed, worker index)``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
