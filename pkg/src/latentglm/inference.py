"""Standard errors for the GLM coefficients under a latent process.

Three routes: the naive GLM information, the sandwich that accounts for the
latent autocovariance, and a parametric bootstrap.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, RankDeficiencyError
from .family import expected_variance, sample, variance_function
from .glm import Dataset, FitResult, fit as glm_fit
from .latent import autocorrelation, autocovariance, moment, simulate
from .moments import MomEstimate

__all__ = [
    "CovarianceReport",
    "BootstrapReport",
    "BootstrapDegradedWarning",
    "estimate_omegas",
    "parametric_bootstrap",
    "truncation_lag",
]


class BootstrapDegradedWarning(UserWarning):
    """At least 5% of bootstrap refits failed."""


@dataclass(frozen=True)
class CovarianceReport:
    omega_I: np.ndarray
    omega_I_dagger: np.ndarray
    omega_II: np.ndarray
    sandwich: np.ndarray
    naive: np.ndarray
    se_naive: np.ndarray
    se_sandwich: np.ndarray
    phi: float
    max_lag: int


@dataclass(frozen=True)
class BootstrapReport:
    replications: int
    estimates: np.ndarray
    se_boot: np.ndarray
    mean_boot: np.ndarray
    failed: int

    @property
    def degraded(self) -> bool:
        return self.failed >= 0.05 * self.replications


def _sym(a):
    return 0.5 * (a + a.T)


def truncation_lag(spec, n: int, lag_tol: float = 1e-8) -> int:
    """Smallest lag L < n with |corr(L)| < lag_tol, or n - 1 if none."""
    if n <= 1:
        return 0
    lags = np.arange(1, n)
    rho = np.abs(np.atleast_1d(autocorrelation(spec, lags)))
    below = np.flatnonzero(rho < lag_tol)
    return int(lags[below[0]]) if below.size else n - 1


def estimate_omegas(
    data: Dataset,
    fit: FitResult,
    latent_fit: MomEstimate,
    lag_tol: float = 1e-8,
    max_lag: int | None = None,
) -> CovarianceReport:
    """Plug-in estimates of Omega_I, Omega_I-dagger and Omega_II, and the
    naive and sandwich covariance matrices of beta-hat.

    Omega_II uses the parametric latent autocovariance at the estimated
    parameters, summed up to the lag where the autocorrelation falls below
    ``lag_tol`` (or ``max_lag`` when given).
    """
    if not fit.converged:
        raise DomainError("GLM fit did not converge")
    spec = latent_fit.latent_spec()
    X, mu, n = data.X, np.asarray(fit.mu_hat), data.n
    fam = data.family
    phi = latent_fit.phi

    omega_I = _sym((X * variance_function(fam, mu)[:, None]).T @ X / n)
    ev = expected_variance(fam, mu, lambda j: moment(spec, j))
    omega_Id = _sym((X * ev[:, None]).T @ X / n)

    L = truncation_lag(spec, n, lag_tol) if max_lag is None else min(int(max_lag), n - 1)
    a = X * mu[:, None]
    omega_II = autocovariance(spec, 0) * (a.T @ a)
    if L > 0:
        gam = np.atleast_1d(autocovariance(spec, np.arange(1, L + 1)))
        for lag, g in enumerate(gam, start=1):
            if g == 0.0:
                continue
            c = a[lag:].T @ a[:-lag]
            omega_II += g * (c + c.T)
    omega_II = _sym(omega_II / n)

    try:
        inv_I = np.linalg.inv(omega_I)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError("Omega_I is singular") from exc
    inv_I = _sym(inv_I)
    naive = _sym(phi * inv_I / n)
    # naive plus the latent correction; equals the usual sandwich form, and is
    # exactly the naive matrix when the latent process is degenerate
    correction = phi * (omega_Id - omega_I) + omega_II
    sandwich = _sym(naive + inv_I @ correction @ inv_I / n)
    return CovarianceReport(
        omega_I=omega_I,
        omega_I_dagger=omega_Id,
        omega_II=omega_II,
        sandwich=sandwich,
        naive=naive,
        se_naive=np.sqrt(np.diag(naive)),
        se_sandwich=np.sqrt(np.diag(sandwich)),
        phi=phi,
        max_lag=L,
    )


def _seed_sequence(rng):
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2**63)))
    return np.random.SeedSequence(rng)


def parametric_bootstrap(
    data: Dataset,
    fit: FitResult,
    latent_fit: MomEstimate,
    B: int = 1000,
    rng=None,
    workers: int = 1,
) -> BootstrapReport:
    """Parametric bootstrap standard errors of beta-hat.

    Each replication simulates a latent path at the estimated parameters,
    draws ``Y*_t ~ EF(mu_hat_t * nu*_t, phi_hat)`` and refits the GLM from
    beta-hat.  Replication ``b`` uses the ``b``-th child of the master seed,
    so the report is identical for any ``workers`` count.
    """
    if B < 2:
        raise DomainError("bootstrap needs at least 2 replications")
    spec = latent_fit.latent_spec()
    phi = latent_fit.phi
    fam = data.family
    mu = np.asarray(fit.mu_hat)
    children = _seed_sequence(rng).spawn(B)

    def one(seed):
        g = np.random.default_rng(seed)
        nu = simulate(spec, data.n, g)
        try:
            ystar = np.asarray(sample(fam, mu * nu, phi, g), dtype=float)
            res = glm_fit(Dataset(ystar, data.X, fam), init=fit.beta_hat)
        except (ConvergenceError, DomainError, np.linalg.LinAlgError):
            return None
        return res.beta_hat

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(s) for s in children]

    ok = [r for r in results if r is not None]
    failed = B - len(ok)
    est = np.array(ok).reshape(len(ok), data.p)
    if len(ok) >= 2:
        se = est.std(axis=0, ddof=1)
        mean = est.mean(axis=0)
    else:
        se = np.full(data.p, np.nan)
        mean = est.mean(axis=0) if ok else np.full(data.p, np.nan)
    report = BootstrapReport(
        replications=B, estimates=est, se_boot=se, mean_boot=mean, failed=failed
    )
    if report.degraded:
        warnings.warn(
            f"{failed} of {B} bootstrap refits failed", BootstrapDegradedWarning, stacklevel=2
        )
    return report
