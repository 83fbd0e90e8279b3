import math

import numpy as np
import pytest
from conftest import population_sums

from latentglm.errors import DomainError, UnsupportedError
from latentglm.family import Family, FamilySpec
from latentglm.glm import Dataset, fit
from latentglm.latent import LatentKind, LatentSpec
from latentglm.moments import (
    MomentSums,
    empirical_moment_sums,
    estimate_latent,
    mom_gamma_arch,
    mom_gamma_gar,
    mom_gamma_lnar,
    mom_poisson_arch,
    mom_poisson_gar,
    mom_poisson_lnar,
)

MU = 3.0 + 2.0 * np.sin(np.arange(300) / 7.0) + np.arange(300) / 100.0

CASES = [
    (FamilySpec(Family.POISSON), LatentSpec(LatentKind.LNAR, 0.6, 0.85)),
    (FamilySpec(Family.POISSON), LatentSpec(LatentKind.GAR, 1.1, 0.9)),
    (FamilySpec(Family.POISSON), LatentSpec(LatentKind.ARCH, None, 0.33)),
    (FamilySpec(Family.GAMMA, 0.12), LatentSpec(LatentKind.LNAR, 0.3, 0.88)),
    (FamilySpec(Family.GAMMA, 0.15), LatentSpec(LatentKind.GAR, 0.35, 0.87)),
    (FamilySpec(Family.GAMMA, 0.2), LatentSpec(LatentKind.ARCH, None, 0.25)),
]


def brute_sums(y, mu):
    n = len(y)
    r = [y[t] - mu[t] for t in range(n)]
    S = [0.0, 0.0, 0.0]
    M = [0.0, 0.0, 0.0]
    for lag in range(3):
        for t in range(lag, n):
            S[lag] += r[t] * r[t - lag]
            M[lag] += mu[t] * mu[t - lag]
    return S, M, sum(mu)


class TestSums:
    def test_zero_residuals(self):
        s = empirical_moment_sums(MU, MU)
        assert s.S0 == s.S1 == s.S2 == 0.0

    def test_brute_force(self):
        y = [3.0, 0.0, 5.0, 2.0, 7.0]
        mu = [2.5, 1.0, 4.0, 3.5, 6.0]
        s = empirical_moment_sums(y, mu)
        S, M, P = brute_sums(y, mu)
        assert (s.S0, s.S1, s.S2) == pytest.approx(tuple(S), rel=1e-15)
        assert (s.M0, s.M1, s.M2, s.P) == pytest.approx((*M, P), rel=1e-15)

    def test_iid_poisson(self, rng):
        n = 10**6
        y = rng.poisson(1.0, n).astype(float)
        s = empirical_moment_sums(y, np.ones(n))
        assert abs(s.S0 / n - 1.0) < 5 * math.sqrt(3.0 / n)  # Var((Y-1)^2) = 3 for Poisson(1)
        assert abs(s.S1 / n) < 5 / math.sqrt(n)

    def test_short(self):
        with pytest.raises(DomainError):
            empirical_moment_sums([1.0, 2.0], [1.0, 2.0])


class TestPopulationRoundTrip:
    @pytest.mark.parametrize("family, spec", CASES, ids=lambda v: getattr(v, "name", None) or v.kind.value)
    def test_recovers_parameters(self, family, spec):
        est = estimate_latent(family, spec.kind, population_sums(family, spec, MU))
        assert est.valid, est.reason
        assert est.rho_hat == pytest.approx(spec.rho, rel=1e-10)
        if spec.sigma2 is not None:
            assert est.sigma2_hat == pytest.approx(spec.sigma2, rel=1e-10)
        if family.family is Family.GAMMA:
            assert est.phi_hat == pytest.approx(family.phi, rel=1e-10)
        else:
            assert est.phi_hat is None and est.phi == 1.0

    def test_arch_forward_map(self):
        rho = 0.3
        r = rho * (3 * (1 - rho**2) / (1 - 3 * rho**2) - 1)
        sums = MomentSums(S0=0, S1=r, S2=0, M0=1, M1=1, M2=1, P=0, n=10)
        assert mom_poisson_arch(sums).rho_hat == pytest.approx(0.3, rel=1e-10)

    def test_arch_small_ratio(self):
        sums = MomentSums(S0=0, S1=1e-12, S2=0, M0=1, M1=1, M2=1, P=0, n=10)
        assert mom_poisson_arch(sums).rho_hat == pytest.approx(5e-13, rel=1e-6)


class TestInvalid:
    def test_residual_free(self):
        s = empirical_moment_sums(MU, MU)
        for est in (mom_poisson_lnar(s), mom_poisson_gar(s), mom_poisson_arch(s)):
            assert not est.valid
        assert "negative variance" in mom_poisson_lnar(s).reason

    def test_gar_zero_variance(self):
        s = MomentSums(S0=5.0, S1=1.0, S2=0.5, M0=2.0, M1=2.0, M2=2.0, P=5.0, n=10)
        assert not mom_poisson_gar(s).valid

    def test_gamma_gar_opposite_signs(self):
        s = MomentSums(S0=5.0, S1=1.0, S2=-0.5, M0=2.0, M1=2.0, M2=2.0, P=5.0, n=10)
        est = mom_gamma_gar(s)
        assert est.rho_hat < 0 and not est.valid

    def test_gamma_lnar_log_domain(self):
        s = MomentSums(S0=5.0, S1=-3.0, S2=0.5, M0=2.0, M1=2.0, M2=2.0, P=5.0, n=10)
        assert not mom_gamma_lnar(s).valid

    def test_gamma_arch_negative_dispersion(self):
        s = MomentSums(S0=0.1, S1=0.5, S2=0.1, M0=1.0, M1=1.0, M2=1.0, P=1.0, n=10)
        est = mom_gamma_arch(s)
        assert est.phi_hat < 0 and not est.valid and "dispersion" in est.reason

    def test_invalid_spec_raises(self):
        s = empirical_moment_sums(MU, MU)
        with pytest.raises(DomainError):
            mom_poisson_gar(s).latent_spec()

    def test_unsupported_families(self):
        s = empirical_moment_sums(MU + 1, MU)
        with pytest.raises(UnsupportedError):
            estimate_latent(FamilySpec(Family.GAUSSIAN), "gar", s)
        with pytest.raises(UnsupportedError):
            estimate_latent("bernoulli", "lnar", s)


def test_permuting_covariates_leaves_estimates_unchanged(rng):
    n = 400
    X = np.column_stack([np.ones(n), np.arange(n) / n, np.cos(np.arange(n) / 5)])
    y = rng.poisson(np.exp(X @ [1.0, 0.5, 0.3]) * rng.gamma(2.0, 0.5, n))
    fam = FamilySpec(Family.POISSON)
    a = empirical_moment_sums(y, fit(Dataset(y, X, fam)).mu_hat)
    b = empirical_moment_sums(y, fit(Dataset(y, X[:, [2, 0, 1]], fam)).mu_hat)
    ea, eb = mom_poisson_gar(a), mom_poisson_gar(b)
    assert ea.sigma2_hat == pytest.approx(eb.sigma2_hat, rel=1e-9)
    assert ea.rho_hat == pytest.approx(eb.rho_hat, rel=1e-9)
