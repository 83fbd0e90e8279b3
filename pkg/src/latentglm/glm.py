"""GLM pseudo-likelihood fitting with canonical links.

The latent process is ignored here: the fit maximises the ordinary GLM
log-likelihood of ``y`` given the linear predictor ``eta = X @ beta``.

Gamma uses the inverse link with a positive linear predictor,
``mu = 1/eta`` and natural parameter ``theta = -eta``; every other family
has ``theta = eta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logit

from .errors import ConvergenceError, DataError, DomainError, RankDeficiencyError
from .family import Family, FamilySpec, check_support, cumulant, variance_function

__all__ = [
    "Dataset",
    "FitResult",
    "mean_from_eta",
    "eta_from_mean",
    "theta_sign",
    "score",
    "pseudo_log_likelihood",
    "fit",
]


def theta_sign(family: FamilySpec) -> float:
    return -1.0 if family.family is Family.GAMMA else 1.0


def _check_eta(family, eta):
    if not np.all(np.isfinite(eta)):
        raise DomainError("linear predictor is not finite")
    if family.family is Family.GAMMA and np.any(eta <= 0):
        raise DomainError("gamma linear predictor must be positive (inverse link)")


def mean_from_eta(family: FamilySpec, eta):
    """Inverse link h(eta)."""
    eta = np.asarray(eta, dtype=float)
    _check_eta(family, eta)
    fam = family.family
    if fam is Family.POISSON:
        return np.exp(eta)
    if fam is Family.GAMMA:
        return 1.0 / eta
    if fam is Family.BERNOULLI:
        return expit(eta)
    return eta.copy()


def eta_from_mean(family: FamilySpec, mu):
    mu = np.asarray(mu, dtype=float)
    fam = family.family
    if fam is Family.POISSON:
        return np.log(mu)
    if fam is Family.GAMMA:
        return 1.0 / mu
    if fam is Family.BERNOULLI:
        return logit(mu)
    return mu.copy()


def _log_c(family: FamilySpec, y):
    """c(y; phi), the part of the log density free of theta."""
    fam, phi = family.family, family.phi
    if fam is Family.POISSON:
        return -gammaln(y + 1.0)
    if fam is Family.GAMMA:
        k = 1.0 / phi
        return k * np.log(k) + (k - 1.0) * np.log(y) - gammaln(k)
    if fam is Family.GAUSSIAN:
        return -0.5 * y**2 / phi - 0.5 * np.log(2.0 * np.pi * phi)
    return np.zeros_like(y)


@dataclass(frozen=True)
class Dataset:
    """Observed series ``y`` (length n) with an n x p design ``X``."""

    y: np.ndarray
    X: np.ndarray
    family: FamilySpec

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DomainError("y must be a vector with one design row per entry")
        n, p = X.shape
        if not n > p >= 1:
            raise DomainError(f"need n > p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(X)):
            raise DomainError("design matrix has non-finite entries")
        bad = check_support(self.family, y)
        if bad.size:
            raise DataError(
                f"{bad.size} observation(s) outside the {self.family.name} support",
                bad,
            )
        rank = np.linalg.matrix_rank(X)
        if rank < p:
            raise RankDeficiencyError(f"design has rank {rank} < {p} columns")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    mu_hat: np.ndarray
    iterations: int
    converged: bool
    max_score_norm: float
    loglik: float
    tol: float


def pseudo_log_likelihood(data: Dataset, beta) -> float:
    """GLM log-likelihood of ``beta``, latent process ignored, c(y; phi) included."""
    fam = data.family
    eta = data.X @ np.asarray(beta, dtype=float)
    _check_eta(fam, eta)
    theta = theta_sign(fam) * eta
    terms = (theta * data.y - cumulant(fam, theta)) / fam.phi + _log_c(fam, data.y)
    return float(np.sum(terms))


def score(data: Dataset, beta) -> np.ndarray:
    """phi times the gradient of the pseudo log-likelihood."""
    mu = mean_from_eta(data.family, data.X @ np.asarray(beta, dtype=float))
    return theta_sign(data.family) * (data.X.T @ (data.y - mu))


def _initial_beta(data: Dataset) -> np.ndarray:
    fam, y, X = data.family.family, data.y, data.X
    if fam is Family.POISSON:
        z = np.log(y + 0.5)
    elif fam is Family.GAMMA:
        z = 1.0 / y
    elif fam is Family.BERNOULLI:
        z = logit((y + 0.5) / 2.0)
    else:
        z = y
    beta = np.linalg.lstsq(X, z, rcond=None)[0]
    if fam is Family.GAMMA and np.any(X @ beta <= 0):
        beta = np.linalg.lstsq(X, np.full(len(y), 1.0 / y.mean()), rcond=None)[0]
        if np.any(X @ beta <= 0):
            raise DomainError("no feasible starting value for the gamma fit")
    return beta


def _loglik_or_none(data, beta):
    try:
        return pseudo_log_likelihood(data, beta)
    except DomainError:
        return None


def fit(data: Dataset, init=None, tol: float = 1e-10, max_iter: int = 100) -> FitResult:
    """Maximise the pseudo log-likelihood by Newton/IRLS with step-halving.

    Converged when ``max|X'(y - mu)| < tol * (1 + |loglik|/n)``.  A step is
    halved while it leaves the natural-parameter domain or lowers the
    log-likelihood.
    """
    fam = data.family
    X, y, n = data.X, data.y, data.n
    beta = _initial_beta(data) if init is None else np.array(init, dtype=float)
    ll = _loglik_or_none(data, beta)
    if ll is None:
        raise DomainError("initial value outside the natural-parameter domain")
    sgn = theta_sign(fam)

    iterations = 0
    while True:
        mu = mean_from_eta(fam, X @ beta)
        g = sgn * (X.T @ (y - mu))
        gnorm = float(np.max(np.abs(g)))
        threshold = tol * (1.0 + abs(ll) / n)
        if gnorm < threshold:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"IRLS did not converge in {max_iter} iterations "
                f"(score norm {gnorm:.3g})",
                partial=beta,
            )
        w = variance_function(fam, mu)
        sw = np.sqrt(w)
        step, _, rank, _ = np.linalg.lstsq(X * sw[:, None], sgn * (y - mu) / sw, rcond=None)
        if rank < X.shape[1]:
            raise RankDeficiencyError("weighted design lost full column rank")
        slack = 1e-13 * (1.0 + abs(ll))
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            ll_new = _loglik_or_none(data, cand)
            if ll_new is not None and ll_new >= ll - slack:
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"step-halving failed to increase the likelihood "
                f"(score norm {gnorm:.3g})",
                partial=beta,
            )
        beta, ll = cand, ll_new
        iterations += 1

    mu = mean_from_eta(fam, X @ beta)
    beta.setflags(write=False)
    mu.setflags(write=False)
    return FitResult(
        beta_hat=beta,
        mu_hat=mu,
        iterations=iterations,
        converged=True,
        max_score_norm=gnorm,
        loglik=ll,
        tol=tol,
    )
