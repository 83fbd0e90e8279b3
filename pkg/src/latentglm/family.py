"""Bi-parameter exponential family EF(mu, phi) with canonical parameter theta.

Density convention: ``exp{(theta*y - b(theta))/phi + c(y; phi)}`` with
``mu = b'(theta)`` and ``Var(Y) = phi * V(mu)``.  The gamma member uses
shape ``1/phi`` so that ``Var(Y) = phi * mu**2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln, logit, xlogy

from .errors import DomainError

__all__ = [
    "Family",
    "FamilySpec",
    "cumulant",
    "mean_from_theta",
    "theta_from_mean",
    "variance_function",
    "expected_variance",
    "log_density",
    "sample",
    "check_support",
]


class Family(str, enum.Enum):
    POISSON = "poisson"
    GAMMA = "gamma"
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


_POWER = {Family.POISSON: 1.0, Family.GAMMA: 2.0, Family.GAUSSIAN: 0.0}


@dataclass(frozen=True)
class FamilySpec:
    """Which exponential family, its dispersion and variance power.

    ``gamma_power`` is ``None`` for Bernoulli, whose variance function
    ``mu*(1-mu)`` is not a power of the mean.
    """

    family: Family
    phi: float = 1.0
    gamma_power: float | None = field(default=None)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        phi = float(self.phi)
        if not np.isfinite(phi) or phi <= 0:
            raise DomainError(f"dispersion must be positive, got {phi}")
        if fam in (Family.POISSON, Family.BERNOULLI) and phi != 1.0:
            raise DomainError(f"{fam.value} family has phi fixed to 1")
        object.__setattr__(self, "phi", phi)
        expected = _POWER.get(fam)
        if self.gamma_power is not None and expected is not None:
            if float(self.gamma_power) != expected:
                raise DomainError(
                    f"{fam.value} family has variance power {expected}, "
                    f"got {self.gamma_power}"
                )
        object.__setattr__(self, "gamma_power", expected)

    @property
    def name(self) -> str:
        return self.family.value

    def with_phi(self, phi: float) -> "FamilySpec":
        return FamilySpec(self.family, phi)


def _fam(family) -> Family:
    return family.family if isinstance(family, FamilySpec) else Family(family)


def _check_theta(fam: Family, theta):
    theta = np.asarray(theta, dtype=float)
    if fam is Family.GAMMA and np.any(theta >= 0):
        raise DomainError("gamma natural parameter must be negative")
    if not np.all(np.isfinite(theta)):
        raise DomainError("natural parameter must be finite")
    return theta


def _check_mean(fam: Family, mu):
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise DomainError("mean must be finite")
    if fam in (Family.POISSON, Family.GAMMA) and np.any(mu <= 0):
        raise DomainError(f"{fam.value} mean must be positive")
    if fam is Family.BERNOULLI and np.any((mu <= 0) | (mu >= 1)):
        raise DomainError("Bernoulli mean must lie in (0, 1)")
    return mu


def _out(x):
    return x.item() if np.ndim(x) == 0 else x


def cumulant(family, theta):
    """Cumulant function b(theta)."""
    fam = _fam(family)
    theta = _check_theta(fam, theta)
    if fam is Family.POISSON:
        b = np.exp(theta)
    elif fam is Family.GAMMA:
        b = -np.log(-theta)
    elif fam is Family.GAUSSIAN:
        b = 0.5 * theta**2
    else:
        b = np.logaddexp(0.0, theta)
    return _out(b)


def mean_from_theta(family, theta):
    """b'(theta)."""
    fam = _fam(family)
    theta = _check_theta(fam, theta)
    if fam is Family.POISSON:
        mu = np.exp(theta)
    elif fam is Family.GAMMA:
        mu = -1.0 / theta
    elif fam is Family.GAUSSIAN:
        mu = theta.copy()
    else:
        mu = expit(theta)
    return _out(mu)


def theta_from_mean(family, mu):
    """Canonical link g(mu)."""
    fam = _fam(family)
    mu = _check_mean(fam, mu)
    if fam is Family.POISSON:
        theta = np.log(mu)
    elif fam is Family.GAMMA:
        theta = -1.0 / mu
    elif fam is Family.GAUSSIAN:
        theta = mu.copy()
    else:
        theta = logit(mu)
    return _out(theta)


def variance_function(family, mu):
    """V(mu); ``mu**gamma`` except Bernoulli's ``mu*(1-mu)``."""
    fam = _fam(family)
    mu = _check_mean(fam, mu)
    if fam is Family.BERNOULLI:
        v = mu * (1.0 - mu)
    else:
        v = mu ** _POWER[fam]
    return _out(v)


def expected_variance(family, mu, kappa):
    """E[V(mu * nu)] for a latent factor with moments ``kappa(j) = E(nu**j)``.

    Power families give ``mu**gamma * kappa(gamma)``; Bernoulli gives
    ``mu - mu**2 * kappa(2)``.
    """
    fam = _fam(family)
    mu = np.asarray(mu, dtype=float)
    if fam is Family.BERNOULLI:
        return _out(mu - mu**2 * kappa(2.0))
    g = _POWER[fam]
    return _out(mu**g * kappa(g))


def check_support(family, y):
    """Indices of ``y`` outside the family's support."""
    fam = _fam(family)
    y = np.asarray(y, dtype=float)
    bad = ~np.isfinite(y)
    if fam is Family.POISSON:
        bad |= (y < 0) | (y != np.floor(y))
    elif fam is Family.GAMMA:
        bad |= y <= 0
    elif fam is Family.BERNOULLI:
        bad |= (y != 0) & (y != 1)
    return np.flatnonzero(np.atleast_1d(bad))


def log_density(family, y, mu, phi=1.0):
    """Log density (or log pmf) of EF(mu, phi) at ``y``, including c(y; phi)."""
    fam = _fam(family)
    mu = _check_mean(fam, mu)
    phi = float(phi)
    if phi <= 0:
        raise DomainError("dispersion must be positive")
    y = np.asarray(y, dtype=float)
    if check_support(fam, y).size:
        raise DomainError(f"observation outside {fam.value} support")
    if fam is Family.POISSON:
        out = xlogy(y, mu) - mu - gammaln(y + 1.0)
    elif fam is Family.GAMMA:
        k = 1.0 / phi
        out = (
            k * (-y / mu - np.log(mu))
            + k * np.log(k)
            + (k - 1.0) * np.log(y)
            - gammaln(k)
        )
    elif fam is Family.GAUSSIAN:
        out = -0.5 * (y - mu) ** 2 / phi - 0.5 * np.log(2.0 * np.pi * phi)
    else:
        out = np.where(y == 1, np.log(mu), np.log1p(-mu))
    return _out(out)


def sample(family, mu, phi, rng, size=None):
    """Draw from EF(mu, phi) using the caller's ``numpy.random.Generator``."""
    fam = _fam(family)
    mu = _check_mean(fam, mu)
    if phi <= 0:
        raise DomainError("dispersion must be positive")
    if fam is Family.POISSON:
        return rng.poisson(mu, size=size).astype(float)
    if fam is Family.GAMMA:
        k = 1.0 / phi
        return rng.gamma(k, mu / k, size=size)
    if fam is Family.GAUSSIAN:
        return rng.normal(mu, np.sqrt(phi), size=size)
    return (rng.random(size=size if size is not None else mu.shape) < mu).astype(float)
