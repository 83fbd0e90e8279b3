"""Conditional-expectation prediction E(Y_{t+l} | Y_t).

The latent value at time t is integrated against its posterior given the
single observation Y_t:

* GAR: Poisson posterior is gamma, gamma posterior is generalised inverse
  Gaussian (a Bessel-K ratio); other families fall back to quadrature.
* LNAR: E[nu^a | Y_t] with ``a = rho**l`` by quadrature in log nu.
* ARCH: self-normalised Monte Carlo over stationary latent draws.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, UnsupportedError
from .family import Family, FamilySpec, check_support, log_density
from .glm import Dataset, FitResult
from .latent import LatentKind, LatentSpec, simulate
from .moments import MomEstimate
from .specfun import QuadratureSettings, log_bessel_k_ratio, log_integrate

__all__ = [
    "PredictionMethod",
    "PredictionReport",
    "MonteCarloPrecisionWarning",
    "arch_latent_draws",
    "posterior_latent_mean",
    "posterior_power_moment",
    "conditional_expectation",
    "in_sample_predictions",
    "glm_predictions",
    "rmse",
    "correlation",
]

POSTERIOR_QUADRATURE = QuadratureSettings(rel_tol=1e-10, abs_tol=1e-300, max_subdivisions=200)
MC_REL_SE_LIMIT = 0.01


class PredictionMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


class MonteCarloPrecisionWarning(UserWarning):
    """Monte Carlo posterior mean has relative standard error above 1%."""


@dataclass(frozen=True)
class PredictionReport:
    horizon: int
    predictions: np.ndarray
    rmse: float
    correlation: float
    method: PredictionMethod
    mc_draws: int = 0
    max_mc_rel_se: float = 0.0


def rmse(pred, obs) -> float:
    d = np.asarray(pred, dtype=float) - np.asarray(obs, dtype=float)
    return float(np.sqrt(np.mean(d * d)))


def correlation(pred, obs) -> float:
    return float(np.corrcoef(np.asarray(pred, float), np.asarray(obs, float))[0, 1])


def arch_latent_draws(spec: LatentSpec, m: int, rng) -> np.ndarray:
    """``m`` independent stationary ARCH latent draws (one per trajectory)."""
    if spec.kind is not LatentKind.ARCH:
        raise DomainError("ARCH draws requested for a non-ARCH latent process")
    return simulate(spec, 1, rng, size=m)[:, 0]


def _arch_posterior(family, y, mu, draws):
    logw = np.asarray(log_density(family, y, mu * draws, family.phi))
    w = np.exp(logw - logw.max())
    sw = w.sum()
    est = float(w @ draws / sw)
    se = float(np.sqrt(np.sum(w * w * (draws - est) ** 2)) / sw)
    return est, se


def _posterior_log_integrand(spec, family, y, mu):
    """log of f(y | mu e^z) f_nu(e^z) e^z up to a constant, with z = log nu.

    Terms free of z are dropped; only ratios of integrals are ever used.
    """
    fam, s2 = family.family, spec.sigma2
    if fam is Family.POISSON:
        def loglik(z, nu):
            return y * z - mu * nu
    elif fam is Family.GAMMA:
        k = 1.0 / family.phi
        def loglik(z, nu):
            return -k * (y / (mu * nu) + z)
    elif fam is Family.GAUSSIAN:
        def loglik(z, nu):
            return -0.5 * (y - mu * nu) ** 2 / family.phi
    else:
        raise UnsupportedError("Bernoulli mean mu*nu is unbounded under the latent process")
    if spec.kind is LatentKind.LNAR:
        def logprior(z, nu):
            return -((z + 0.5 * s2) ** 2) / (2.0 * s2)
    elif spec.kind is LatentKind.GAR:
        a = 1.0 / s2
        def logprior(z, nu):
            return a * (z - nu)
    else:
        raise UnsupportedError("ARCH stationary density has no closed form")

    def logg(z):
        if abs(z) > 700.0:
            return -math.inf
        nu = math.exp(z)
        return loglik(z, nu) + logprior(z, nu)

    return logg


def _check_inputs(family, y, mu):
    if check_support(family, np.array([y], dtype=float)).size:
        raise DomainError(f"observation {y!r} outside the {family.name} support")
    if not (math.isfinite(mu) and (mu > 0 or family.family is Family.GAUSSIAN)):
        raise DomainError(f"mean {mu!r} outside the {family.name} mean domain")


def _mode(logg, start):
    res = optimize.minimize_scalar(lambda z: -logg(z), bracket=(start - 1.0, start + 1.0))
    z = float(res.x)
    h = 1e-3
    curv = -(logg(z + h) - 2.0 * logg(z) + logg(z - h)) / (h * h)
    scale = 1.0 / math.sqrt(curv) if curv > 0 and math.isfinite(curv) else 1.0
    return z, scale


def posterior_power_moment(
    spec: LatentSpec,
    family: FamilySpec,
    y: float,
    mu: float,
    power: float,
    settings: QuadratureSettings = POSTERIOR_QUADRATURE,
) -> float:
    """E(nu_t**power | Y_t = y) by quadrature in z = log nu."""
    _check_inputs(family, y, mu)
    if spec.degenerate:
        return 1.0
    logg = _posterior_log_integrand(spec, family, y, mu)
    start = -0.5 * spec.sigma2 if spec.kind is LatentKind.LNAR else 0.0
    z0, scale = _mode(logg, start)
    log_den, _ = log_integrate(logg, z0, scale, settings)
    if power == 0.0:
        return 1.0
    log_num, _ = log_integrate(lambda z: power * z + logg(z), z0, scale, settings)
    return math.exp(log_num - log_den)


def posterior_latent_mean(
    spec: LatentSpec,
    family: FamilySpec,
    y: float,
    mu: float,
    draws: np.ndarray | None = None,
) -> float:
    """E(nu_t | Y_t = y) under EF(mu nu, phi) with ``phi = family.phi``."""
    _check_inputs(family, y, mu)
    if spec.kind is not LatentKind.ARCH and spec.degenerate:
        return 1.0
    fam = family.family
    if spec.kind is LatentKind.ARCH:
        if draws is None:
            raise DomainError("ARCH posterior mean needs Monte Carlo latent draws")
        est, se = _arch_posterior(family, y, mu, draws)
        if se > MC_REL_SE_LIMIT * est:
            warnings.warn(
                f"Monte Carlo relative SE {se / est:.3g} exceeds 1%; increase draws",
                MonteCarloPrecisionWarning,
                stacklevel=2,
            )
        return est
    if spec.kind is LatentKind.GAR:
        s2 = spec.sigma2
        if fam is Family.POISSON:
            return (y + 1.0 / s2) / (mu + 1.0 / s2)
        if fam is Family.GAMMA:
            phi = family.phi
            p = 1.0 / s2 - 1.0 / phi
            arg = 2.0 * math.sqrt(y / (s2 * phi * mu))
            return math.sqrt(s2 * y / (phi * mu)) * math.exp(log_bessel_k_ratio(p, arg))
    return posterior_power_moment(spec, family, y, mu, 1.0)


def _method(spec: LatentSpec, family: FamilySpec) -> PredictionMethod:
    if spec.kind is LatentKind.ARCH:
        return PredictionMethod.MONTE_CARLO
    if spec.degenerate or (
        spec.kind is LatentKind.GAR and family.family in (Family.POISSON, Family.GAMMA)
    ):
        return PredictionMethod.CLOSED_FORM
    return PredictionMethod.QUADRATURE


def _check_prediction(family, value):
    fam = family.family
    if not math.isfinite(value) or (fam in (Family.POISSON, Family.GAMMA) and value <= 0):
        raise ArithmeticError(f"prediction {value!r} outside the {fam.value} mean domain")
    return value


def conditional_expectation(
    spec: LatentSpec,
    family: FamilySpec,
    y_t: float,
    mu_t: float,
    mu_next: float,
    horizon: int = 1,
    draws: np.ndarray | None = None,
) -> float:
    """E(Y_{t+horizon} | Y_t = y_t), with ``mu_next`` the GLM mean at t+horizon."""
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    rl = spec.rho**horizon
    if spec.kind is LatentKind.LNAR:
        if spec.degenerate:
            return _check_prediction(family, float(mu_next))
        power = posterior_power_moment(spec, family, y_t, mu_t, rl)
        value = mu_next * math.exp(0.5 * rl * spec.sigma2 * (1.0 - rl)) * power
    else:
        post = posterior_latent_mean(spec, family, y_t, mu_t, draws)
        value = mu_next * (1.0 + rl * (post - 1.0))
    return _check_prediction(family, float(value))


def glm_predictions(data: Dataset, fit: FitResult) -> PredictionReport:
    """Static GLM baseline: the prediction at t is the fitted mean."""
    pred = np.array(fit.mu_hat, dtype=float)
    return PredictionReport(
        horizon=1,
        predictions=pred,
        rmse=rmse(pred, data.y),
        correlation=correlation(pred, data.y),
        method=PredictionMethod.CLOSED_FORM,
    )


def in_sample_predictions(
    data: Dataset,
    fit: FitResult,
    latent_fit: MomEstimate | None,
    horizon: int = 1,
    m_arch: int = 10_000,
    rng=None,
) -> PredictionReport:
    """In-sample predictions Y-hat_t = E(Y_t | Y_{t-horizon}) at fitted values.

    The first ``horizon`` points have nothing to condition on and use the
    fitted mean.  ``latent_fit=None`` gives the GLM baseline.
    """
    if latent_fit is None:
        return glm_predictions(data, fit)
    spec = latent_fit.latent_spec()
    family = data.family.with_phi(latent_fit.phi)
    y, mu = data.y, np.asarray(fit.mu_hat)
    draws = None
    m = 0
    if spec.kind is LatentKind.ARCH:
        if rng is None:
            raise DomainError("ARCH predictions need an rng for the Monte Carlo draws")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        draws = arch_latent_draws(spec, m_arch, rng)
        m = int(m_arch)

    pred = np.array(mu, dtype=float)
    worst = 0.0
    rl = spec.rho**horizon
    for t in range(horizon, data.n):
        s = t - horizon
        if draws is not None:
            est, se = _arch_posterior(family, y[s], mu[s], draws)
            worst = max(worst, se / est)
            pred[t] = _check_prediction(family, mu[t] * (1.0 + rl * (est - 1.0)))
        else:
            pred[t] = conditional_expectation(spec, family, y[s], mu[s], mu[t], horizon)
    if worst > MC_REL_SE_LIMIT:
        warnings.warn(
            f"largest Monte Carlo relative SE {worst:.3g} exceeds 1%; increase m_arch",
            MonteCarloPrecisionWarning,
            stacklevel=2,
        )
    return PredictionReport(
        horizon=horizon,
        predictions=pred,
        rmse=rmse(pred, y),
        correlation=correlation(pred, y),
        method=_method(spec, family),
        mc_draws=m,
        max_mc_rel_se=worst,
    )
