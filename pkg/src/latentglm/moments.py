"""Method-of-moments estimators of the latent parameters and dispersion.

Every estimator is a function of weighted residual sums computed from the
observations and the GLM fitted means.  Estimates outside the admissible
parameter region are returned flagged invalid rather than raised, since a
negative variance or dispersion estimate is an ordinary outcome on real data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedError
from .family import Family, FamilySpec
from .latent import LatentKind, LatentSpec

__all__ = [
    "MomentSums",
    "MomEstimate",
    "empirical_moment_sums",
    "mom_poisson_lnar",
    "mom_poisson_gar",
    "mom_poisson_arch",
    "mom_gamma_lnar",
    "mom_gamma_gar",
    "mom_gamma_arch",
    "estimate_latent",
]


@dataclass(frozen=True)
class MomentSums:
    """Residual and fitted-mean cross products at lags 0, 1 and 2.

    S1 and M1 run over t = 2..n, S2 and M2 over t = 3..n.
    """

    S0: float
    S1: float
    S2: float
    M0: float
    M1: float
    M2: float
    P: float
    n: int

    def as_dict(self):
        return {k: getattr(self, k) for k in ("S0", "S1", "S2", "M0", "M1", "M2", "P", "n")}


@dataclass(frozen=True)
class MomEstimate:
    kind: LatentKind
    family: Family
    sigma2_hat: float | None
    rho_hat: float
    phi_hat: float | None
    valid: bool
    reason: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def phi(self) -> float:
        """Dispersion to use downstream (1 for families with fixed phi)."""
        return 1.0 if self.phi_hat is None else self.phi_hat

    def latent_spec(self) -> LatentSpec:
        if not self.valid:
            raise DomainError(f"invalid {self.kind.value} estimate: {self.reason}")
        return LatentSpec(self.kind, self.sigma2_hat, self.rho_hat)


def empirical_moment_sums(y, mu_hat) -> MomentSums:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu_hat, dtype=float)
    if y.shape != mu.shape or y.ndim != 1:
        raise DomainError("y and mu_hat must be vectors of equal length")
    if len(y) < 3:
        raise DomainError("moment sums need at least 3 observations")
    r = y - mu
    return MomentSums(
        S0=float(r @ r),
        S1=float(r[1:] @ r[:-1]),
        S2=float(r[2:] @ r[:-2]),
        M0=float(mu @ mu),
        M1=float(mu[1:] @ mu[:-1]),
        M2=float(mu[2:] @ mu[:-2]),
        P=float(mu.sum()),
        n=len(y),
    )


def _estimate(kind, family, sigma2, rho, phi, problems, diag):
    return MomEstimate(
        kind=LatentKind(kind),
        family=Family(family),
        sigma2_hat=sigma2,
        rho_hat=rho,
        phi_hat=phi,
        valid=not problems,
        reason="; ".join(problems) if problems else None,
        diagnostics=diag,
    )


def _ratio(num, den):
    return num / den if den != 0 else math.nan


def mom_poisson_lnar(sums: MomentSums) -> MomEstimate:
    a0 = _ratio(sums.S0 - sums.P, sums.M0) + 1.0
    a1 = _ratio(sums.S1, sums.M1) + 1.0
    diag = {"lag0_ratio": a0, "lag1_ratio": a1}
    problems = []
    sigma2 = rho = math.nan
    if not a0 > 0:
        problems.append("negative variance: log argument for sigma2 is not positive")
    else:
        sigma2 = math.log(a0)
        if sigma2 <= 0:
            problems.append("negative variance: sigma2 estimate is not positive")
    if not a1 > 0:
        problems.append("log argument for rho is not positive")
    elif math.isfinite(sigma2) and sigma2 != 0:
        rho = math.log(a1) / sigma2
    if math.isfinite(rho) and not -1.0 < rho < 1.0:
        problems.append(f"rho estimate {rho:.6g} outside (-1, 1)")
    return _estimate("lnar", "poisson", sigma2, rho, None, problems, diag)


def mom_poisson_gar(sums: MomentSums) -> MomEstimate:
    sigma2 = _ratio(sums.S0 - sums.P, sums.M0)
    problems = []
    rho = math.nan
    if not sigma2 > 0:
        problems.append("negative variance: sigma2 estimate is not positive")
    else:
        rho = sums.S1 / (sigma2 * sums.M1)
        if not 0.0 < rho < 1.0:
            problems.append(f"rho estimate {rho:.6g} outside (0, 1)")
    return _estimate("gar", "poisson", sigma2, rho, None, problems, {"lag1_ratio": _ratio(sums.S1, sums.M1)})


def _arch_rho(r):
    # rho (kappa2(rho) - 1) = 2 rho / (1 - 3 rho^2) = r is increasing from 0 to
    # inf on (0, 1/sqrt 3); the positive quadratic root, in cancellation-free form
    return r / (1.0 + math.sqrt(1.0 + 3.0 * r * r))


def _arch_kappa2(rho):
    return 3.0 * (1.0 - rho * rho) / (1.0 - 3.0 * rho * rho)


def mom_poisson_arch(sums: MomentSums) -> MomEstimate:
    r = _ratio(sums.S1, sums.M1)
    problems = []
    rho = math.nan
    if not r > 0:
        problems.append("lag-1 moment ratio is not positive; no root in (0, 1/sqrt(3))")
    else:
        rho = _arch_rho(r)
    return _estimate("arch", "poisson", None, rho, None, problems, {"lag1_ratio": r})


def mom_gamma_lnar(sums: MomentSums) -> MomEstimate:
    a1 = _ratio(sums.S1, sums.M1) + 1.0
    a2 = _ratio(sums.S2, sums.M2) + 1.0
    diag = {"lag1_ratio": a1, "lag2_ratio": a2}
    problems = []
    rho = sigma2 = phi = math.nan
    if not (a1 > 0 and a2 > 0):
        problems.append("log argument is not positive")
    else:
        l1, l2 = math.log(a1), math.log(a2)
        if l1 == 0 or l2 == 0:
            problems.append("degenerate lag-1 or lag-2 moment")
        else:
            rho = l2 / l1
            sigma2 = l1 * l1 / l2
            phi = math.exp(-sigma2) * (sums.S0 / sums.M0 + 1.0) - 1.0
    if math.isfinite(rho) and not -1.0 < rho < 1.0:
        problems.append(f"rho estimate {rho:.6g} outside (-1, 1)")
    if math.isfinite(sigma2) and not sigma2 > 0:
        problems.append("negative variance: sigma2 estimate is not positive")
    if math.isfinite(phi) and not phi > 0:
        problems.append("negative dispersion: phi estimate is not positive")
    return _estimate("lnar", "gamma", sigma2, rho, phi, problems, diag)


def mom_gamma_gar(sums: MomentSums) -> MomEstimate:
    problems = []
    rho = sigma2 = phi = math.nan
    if sums.S1 == 0 or sums.S2 == 0 or sums.M2 == 0 or sums.M1 == 0:
        problems.append("zero lag-1 or lag-2 moment")
    else:
        rho = (sums.S2 / sums.S1) * (sums.M1 / sums.M2)
        sigma2 = (sums.S1 / sums.M1) ** 2 * (sums.M2 / sums.S2)
        phi = _ratio(sums.S0 / sums.M0 + 1.0, sigma2 + 1.0) - 1.0
        if not 0.0 < rho < 1.0:
            problems.append(f"rho estimate {rho:.6g} outside (0, 1)")
        if not sigma2 > 0:
            problems.append("negative variance: sigma2 estimate is not positive")
        if math.isfinite(phi) and not phi > 0:
            problems.append("negative dispersion: phi estimate is not positive")
    diag = {"lag1_ratio": _ratio(sums.S1, sums.M1), "lag2_ratio": _ratio(sums.S2, sums.M2)}
    return _estimate("gar", "gamma", sigma2, rho, phi, problems, diag)


def mom_gamma_arch(sums: MomentSums) -> MomEstimate:
    """Gamma response with ARCH latent process.

    rho solves the same lag-1 equation as the Poisson case; then
    ``S0/M0 + 1 = kappa2 (1 + phi)`` gives the dispersion.
    """
    r = _ratio(sums.S1, sums.M1)
    problems = []
    rho = phi = math.nan
    if not r > 0:
        problems.append("lag-1 moment ratio is not positive; no root in (0, 1/sqrt(3))")
    else:
        rho = _arch_rho(r)
        phi = (sums.S0 / sums.M0 + 1.0) / _arch_kappa2(rho) - 1.0
        if not phi > 0:
            problems.append(f"negative dispersion: phi estimate {phi:.6g} is not positive")
    return _estimate("arch", "gamma", None, rho, phi, problems, {"lag1_ratio": r})


_ESTIMATORS = {
    (Family.POISSON, LatentKind.LNAR): mom_poisson_lnar,
    (Family.POISSON, LatentKind.GAR): mom_poisson_gar,
    (Family.POISSON, LatentKind.ARCH): mom_poisson_arch,
    (Family.GAMMA, LatentKind.LNAR): mom_gamma_lnar,
    (Family.GAMMA, LatentKind.GAR): mom_gamma_gar,
    (Family.GAMMA, LatentKind.ARCH): mom_gamma_arch,
}


def estimate_latent(family, kind, sums: MomentSums) -> MomEstimate:
    """Dispatch to the estimator for a family/latent-kind pair."""
    fam = family.family if isinstance(family, FamilySpec) else Family(family)
    kind = LatentKind(kind)
    try:
        estimator = _ESTIMATORS[(fam, kind)]
    except KeyError:
        raise UnsupportedError(
            f"no moment estimator for {fam.value} responses with {kind.value} latent process"
        ) from None
    return estimator(sums)
