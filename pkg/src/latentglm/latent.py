"""Stationary latent processes with unit mean.

Three kinds are supported:

* ``lnar`` -- exp of a Gaussian AR(1) with N(-sigma2/2, sigma2) marginals;
* ``gar``  -- gamma AR(1) with Gamma(1/sigma2, rate 1/sigma2) marginals and
  a Bessel-I transition density;
* ``arch`` -- nu_t = Z_t**2 for an ARCH(1) recursion with omega = 1 - rho.

``sigma2 = 0`` is accepted for LNAR and GAR as the degenerate process
``nu_t = 1``; it is the natural plug-in when a latent variance is estimated
as zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .errors import DomainError, UnsupportedError
from .specfun import log_bessel_i

__all__ = [
    "LatentKind",
    "LatentSpec",
    "simulate",
    "moment",
    "variance",
    "autocorrelation",
    "autocovariance",
    "conditional_mean",
    "stationary_log_density",
    "gar_transition_log_density",
    "ARCH_BURN_IN",
]

ARCH_BURN_IN = 1000
ARCH_RHO_MAX = 1.0 / math.sqrt(3.0)


class LatentKind(str, enum.Enum):
    LNAR = "lnar"
    GAR = "gar"
    ARCH = "arch"


@dataclass(frozen=True)
class LatentSpec:
    kind: LatentKind
    sigma2: float | None = None
    rho: float = 0.0

    def __post_init__(self):
        kind = LatentKind(self.kind)
        object.__setattr__(self, "kind", kind)
        rho = float(self.rho)
        object.__setattr__(self, "rho", rho)
        if kind is LatentKind.ARCH:
            if self.sigma2 is not None:
                raise DomainError("ARCH latent process has no sigma2")
            if not 0.0 < rho < ARCH_RHO_MAX:
                raise DomainError(f"ARCH rho must lie in (0, 1/sqrt(3)), got {rho}")
            return
        if self.sigma2 is None:
            raise DomainError(f"{kind.value} latent process needs sigma2")
        s2 = float(self.sigma2)
        if not math.isfinite(s2) or s2 < 0:
            raise DomainError(f"sigma2 must be non-negative, got {s2}")
        object.__setattr__(self, "sigma2", s2)
        if kind is LatentKind.LNAR and not -1.0 < rho < 1.0:
            raise DomainError(f"LNAR rho must lie in (-1, 1), got {rho}")
        if kind is LatentKind.GAR and not 0.0 < rho < 1.0:
            raise DomainError(f"GAR rho must lie in (0, 1), got {rho}")

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0

    @property
    def omega(self) -> float:
        return 1.0 - self.rho


# ---------------------------------------------------------------------------
# simulation kernels


@numba.njit(cache=True)
def _lnar_kernel(eps, sigma2, rho, start):
    m, n = eps.shape
    out = np.empty((m, n))
    sd = math.sqrt(sigma2)
    innov = math.sqrt(sigma2 * (1.0 - rho * rho))
    drift = -0.5 * sigma2 * (1.0 - rho)
    for i in range(m):
        if start > 0.0:
            z = drift + rho * math.log(start) + innov * eps[i, 0]
        else:
            z = -0.5 * sigma2 + sd * eps[i, 0]
        out[i, 0] = math.exp(z)
        for t in range(1, n):
            z = drift + rho * z + innov * eps[i, t]
            out[i, t] = math.exp(z)
    return out


@numba.njit(cache=True)
def _gar_kernel(rng, m, n, sigma2, rho, start):
    out = np.empty((m, n))
    shape = 1.0 / sigma2
    c = sigma2 * (1.0 - rho)
    for i in range(m):
        if start > 0.0:
            nu = rng.gamma(shape + rng.poisson(rho * start / c), c)
        else:
            nu = rng.gamma(shape, sigma2)
        out[i, 0] = nu
        for t in range(1, n):
            k = rng.poisson(rho * nu / c)
            nu = rng.gamma(shape + k, c)
            out[i, t] = nu
    return out


@numba.njit(cache=True)
def _arch_kernel(eps, rho, burn, start):
    m, total = eps.shape
    n = total - burn
    out = np.empty((m, n))
    omega = 1.0 - rho
    for i in range(m):
        z2 = start
        for t in range(total):
            z2 = (omega + rho * z2) * eps[i, t] * eps[i, t]
            if t >= burn:
                out[i, t - burn] = z2
    return out


def simulate(
    spec: LatentSpec,
    n: int,
    rng: np.random.Generator,
    size: int | None = None,
    start: float | None = None,
):
    """Draw a stationary path of length ``n``.

    With ``size`` given, returns ``size`` independent paths as a
    ``(size, n)`` array.  LNAR and GAR start from the exact stationary
    marginal; ARCH runs a burn-in of ``ARCH_BURN_IN`` steps from nu_0 = 1.

    With ``start`` given, the path is nu_1..nu_n of the chain conditioned
    on nu_0 = start (no burn-in), so column 0 is a draw from the
    one-step transition law.
    """
    n = int(n)
    if n < 1:
        raise DomainError("path length must be at least 1")
    if start is not None and not (math.isfinite(start) and start > 0):
        raise DomainError(f"start value must be positive, got {start}")
    m = 1 if size is None else int(size)
    init = -1.0 if start is None else float(start)
    if spec.kind is not LatentKind.ARCH and spec.degenerate:
        paths = np.ones((m, n))
    elif spec.kind is LatentKind.LNAR:
        eps = rng.standard_normal((m, n))
        paths = _lnar_kernel(eps, spec.sigma2, spec.rho, init)
    elif spec.kind is LatentKind.GAR:
        paths = _gar_kernel(rng, m, n, spec.sigma2, spec.rho, init)
    else:
        burn = ARCH_BURN_IN if start is None else 0
        eps = rng.standard_normal((m, n + burn))
        paths = _arch_kernel(eps, spec.rho, burn, 1.0 if start is None else float(start))
    return paths[0] if size is None else paths


# ---------------------------------------------------------------------------
# moments


def moment(spec: LatentSpec, j: float) -> float:
    """kappa_j = E(nu_t**j)."""
    j = float(j)
    if j < 0:
        raise DomainError("moment order must be non-negative")
    if j == 0.0 or j == 1.0:
        return 1.0
    if spec.kind is LatentKind.ARCH:
        if j != 2.0:
            raise DomainError("ARCH latent moments are available for j in {0, 1, 2}")
        r2 = spec.rho**2
        return 3.0 * (1.0 - r2) / (1.0 - 3.0 * r2)
    s2 = spec.sigma2
    if s2 == 0.0:
        return 1.0
    if spec.kind is LatentKind.LNAR:
        return math.exp(0.5 * s2 * j * (j - 1.0))
    shape = 1.0 / s2
    return math.exp(gammaln(shape + j) - gammaln(shape) + j * math.log(s2))


def variance(spec: LatentSpec) -> float:
    if spec.kind is LatentKind.LNAR:
        return math.expm1(spec.sigma2)
    return moment(spec, 2.0) - 1.0


def autocorrelation(spec: LatentSpec, lag):
    """corr(nu_{t+lag}, nu_t); ``lag`` may be an integer array."""
    lag = np.asarray(lag)
    if np.any(lag < 0):
        raise DomainError("lag must be non-negative")
    lag = lag.astype(float)
    rl = spec.rho**lag
    if spec.kind is LatentKind.LNAR and spec.sigma2 > 0:
        out = np.expm1(spec.sigma2 * rl) / math.expm1(spec.sigma2)
    else:
        out = rl
    out = np.where(lag == 0, 1.0, out)
    return out.item() if out.ndim == 0 else out


def autocovariance(spec: LatentSpec, lag):
    """cov(nu_{t+lag}, nu_t) = autocorrelation * Var(nu_t)."""
    return autocorrelation(spec, lag) * variance(spec)


def conditional_mean(spec: LatentSpec, nu_t, horizon: int):
    """E(nu_{t+horizon} | nu_t)."""
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    nu_t = np.asarray(nu_t, dtype=float)
    if np.any(nu_t <= 0):
        raise DomainError("latent value must be positive")
    rl = spec.rho**horizon
    if spec.kind is LatentKind.LNAR:
        out = np.exp(0.5 * rl * spec.sigma2 * (1.0 - rl) + rl * np.log(nu_t))
    elif spec.kind is LatentKind.GAR and spec.degenerate:
        out = np.ones_like(nu_t)
    else:
        out = 1.0 + rl * (nu_t - 1.0)
    return out.item() if out.ndim == 0 else out


def stationary_log_density(spec: LatentSpec, nu):
    """log of the stationary marginal density of nu_t.

    Not available for ARCH, whose stationary law has no closed form.
    """
    if spec.kind is LatentKind.ARCH:
        raise UnsupportedError("ARCH stationary density has no closed form")
    if spec.degenerate:
        raise UnsupportedError("degenerate latent process has no density")
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise DomainError("latent value must be positive")
    s2 = spec.sigma2
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind is LatentKind.LNAR:
            lz = np.log(nu)
            out = (
                -lz
                - 0.5 * np.log(2.0 * np.pi * s2)
                - (lz + 0.5 * s2) ** 2 / (2.0 * s2)
            )
            out = np.where(nu == 0, -np.inf, out)
        else:
            a = 1.0 / s2
            out = a * np.log(a) + (a - 1.0) * np.log(nu) - a * nu - gammaln(a)
            if a == 1.0:
                out = np.where(nu == 0, 0.0, out)
    return out.item() if out.ndim == 0 else out


def gar_transition_log_density(spec: LatentSpec, nu_t: float, nu_prev: float) -> float:
    """log f(nu_t | nu_{t-1}) of the gamma AR(1) process (Bessel-I form)."""
    if spec.kind is not LatentKind.GAR or spec.degenerate:
        raise DomainError("transition density defined for non-degenerate GAR only")
    if nu_t <= 0 or nu_prev <= 0:
        raise DomainError("latent values must be positive")
    s2, rho = spec.sigma2, spec.rho
    c = s2 * (1.0 - rho)
    u = 1.0 / s2 - 1.0
    arg = 2.0 * math.sqrt(rho * nu_t * nu_prev) / c
    return (
        -math.log(c)
        + 0.5 * u * (math.log(nu_t) - math.log(rho * nu_prev))
        - (nu_t + rho * nu_prev) / c
        + log_bessel_i(u, arg)
    )
