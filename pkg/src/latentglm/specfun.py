"""Modified Bessel functions of the first and third kind, and quadrature.

Bessel-I uses its power series below ``x = 15 + |u|`` and the large-argument
expansion above it whenever that expansion reaches double precision
(otherwise the series is summed in log space, which stays exact for any x).
Bessel-K is evaluated from its integral representation

    K_p(u) = 1/2 * int_0^inf w**(p-1) exp(-u/2 (w + 1/w)) dw
           = 1/2 * int_R exp(p t - u cosh t) dt          (w = e^t)

by adaptive quadrature around the maximiser of the exponent, with the
large-argument expansion used for ``u > 30`` when it converges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, rgamma

from .errors import ConvergenceError, DomainError

__all__ = [
    "QuadratureSettings",
    "integrate_positive_halfline",
    "log_integrate",
    "bessel_i",
    "log_bessel_i",
    "bessel_k",
    "log_bessel_k",
    "log_bessel_k_ratio",
]

_LOG_CUTOFF = 60.0  # exp(-60) ~ 1e-26: negligible relative to the peak


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSettings()


def _quad(f, a, b, settings, points=None):
    kw = dict(
        epsabs=settings.abs_tol,
        epsrel=settings.rel_tol,
        limit=settings.max_subdivisions,
        full_output=1,
    )
    if points is not None:
        kw["points"] = points
    out = integrate.quad(f, a, b, **kw)
    value, err = out[0], out[1]
    if len(out) > 3:
        # QUADPACK appends a message only when ier > 0
        raise ConvergenceError(
            f"quadrature did not converge: {out[3]}", partial=(value, err)
        )
    return value, err


def integrate_positive_halfline(f, settings: QuadratureSettings = DEFAULT_QUADRATURE):
    """Integrate ``f`` over (0, inf).

    The substitution ``nu = e^z`` maps the half-line onto the real line,
    which QUADPACK then compactifies onto (0, 1].  Evaluations that overflow
    far in the tails (``inf * 0`` forms) count as zero.

    Returns
    -------
    value, error_estimate : float
    """

    def g(z):
        nu = math.exp(z) if z < 709.0 else math.inf
        try:
            with np.errstate(all="ignore"):
                v = f(nu) * nu
        except (OverflowError, ZeroDivisionError):
            return 0.0
        return v if math.isfinite(v) else 0.0

    return _quad(g, -np.inf, np.inf, settings)


def _bracket(logg, center, peak, step, side):
    d = step
    for _ in range(200):
        t = center + side * d
        v = logg(t)
        if not (v > peak - _LOG_CUTOFF):
            return t
        d *= 2.0
    raise ConvergenceError("could not bracket the integrand's mass")


def log_integrate(
    logg,
    center: float,
    scale: float = 1.0,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
):
    """log of ``int_R exp(logg(t)) dt`` for a unimodal log-integrand.

    ``center`` should be at or near the mode and ``scale`` a rough width.
    The integrand is shifted by its value at ``center`` so nothing
    overflows, and integrated over the interval where it exceeds
    ``exp(-60)`` of the peak.
    """
    peak = logg(center)
    if not math.isfinite(peak):
        raise DomainError("log-integrand is not finite at the centre")
    lo = _bracket(logg, center, peak, scale, -1.0)
    hi = _bracket(logg, center, peak, scale, +1.0)

    def f(t):
        v = logg(t) - peak
        return math.exp(v) if v > -745.0 else 0.0

    value, err = _quad(f, lo, hi, settings, points=[center])
    if value <= 0:
        raise ConvergenceError("integral underflowed", partial=(value, err))
    return peak + math.log(value), err / value


# ---------------------------------------------------------------------------
# Bessel I


def _hankel_sum(order, x, sign):
    """Sum of the large-argument asymptotic series, or None if it stalls.

    ``sign=-1`` gives the I-function series, ``sign=+1`` the K-function one.
    """
    mu = 4.0 * order * order
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, 200):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x) * sign
        if term == 0.0:
            return total
        if abs(term) > prev:
            return None
        total += term
        if abs(term) < 1e-17 * abs(total):
            return total
        prev = abs(term)
    return None


def _log_i_series(u, x):
    # terms (x/2)^(2k+u) / (Gamma(k+u+1) k!), signs from 1/Gamma
    kpeak = 0.5 * (-u + math.sqrt(u * u + x * x))
    kmax = int(math.ceil(max(kpeak, 0.0) + 12.0 * math.sqrt(kpeak + 1.0) + 40.0))
    k = np.arange(kmax + 1, dtype=float)
    rg = rgamma(k + u + 1.0)
    nz = rg != 0.0
    k, rg = k[nz], rg[nz]
    logt = (2.0 * k + u) * math.log(x / 2.0) - gammaln(k + 1.0) + np.log(np.abs(rg))
    sgn = np.sign(rg)
    m = logt.max()
    s = float(np.sum(sgn * np.exp(logt - m)))
    if s <= 0:
        raise DomainError(f"I_{u}({x}) is not positive; log undefined")
    return m + math.log(s)


def log_bessel_i(u: float, x: float) -> float:
    """log I_u(x), stable for large ``x``."""
    u = float(u)
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise DomainError("bessel_i requires finite x >= 0")
    if u < 0 and u == math.floor(u):
        u = -u  # I_{-n} = I_n
    if x == 0.0:
        if u == 0.0:
            return 0.0
        if u > 0:
            return -math.inf
        raise DomainError("I_u(0) is infinite for non-integer u < 0")
    if x >= 15.0 + abs(u):
        s = _hankel_sum(u, x, -1.0)
        if s is not None and s > 0:
            return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(s)
    return _log_i_series(u, x)


def bessel_i(u: float, x: float) -> float:
    """Modified Bessel function of the first kind I_u(x).

    Raises OverflowError when the value exceeds double range; use
    :func:`log_bessel_i` there.
    """
    return math.exp(log_bessel_i(u, x))


# ---------------------------------------------------------------------------
# Bessel K

_K_QUAD = QuadratureSettings(rel_tol=1e-13, abs_tol=1e-300, max_subdivisions=200)


def log_bessel_k(p: float, u: float) -> float:
    """log K_p(u) for real ``p`` and ``u > 0``."""
    p = abs(float(p))
    u = float(u)
    if not (u > 0) or not math.isfinite(u):
        raise DomainError("bessel_k requires u > 0")
    if u > 30.0:
        s = _hankel_sum(p, u, 1.0)
        if s is not None:
            return 0.5 * math.log(math.pi / (2.0 * u)) - u + math.log(s)
    # exponent p t - u cosh t is concave with maximiser asinh(p/u)
    tstar = math.asinh(p / u)

    def logg(t):
        if abs(t) > 700.0:
            return -math.inf
        return p * t - u * math.cosh(t)

    width = 1.0 / math.sqrt(math.hypot(u, p))
    logint, _ = log_integrate(logg, tstar, width, _K_QUAD)
    return logint - math.log(2.0)


def bessel_k(p: float, u: float) -> float:
    """Modified Bessel function of the third kind K_p(u)."""
    return math.exp(log_bessel_k(p, u))


def log_bessel_k_ratio(p: float, u: float) -> float:
    """log(K_{p+1}(u) / K_p(u)), formed in log space."""
    return log_bessel_k(p + 1.0, u) - log_bessel_k(p, u)

