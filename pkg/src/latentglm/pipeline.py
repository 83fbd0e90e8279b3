"""End-to-end analysis: GLM fit, per-kind moment estimation, standard errors
and in-sample prediction, collected into a JSON-ready report.

Randomness comes only from the configured seed.  Each latent kind owns a
fixed child of the master ``SeedSequence`` (by its position in
``LatentKind``), so adding or dropping a kind leaves the others unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design import DesignSpec
from .errors import ConfigError, ConvergenceError, DomainError, UnsupportedError
from .family import Family, FamilySpec
from .glm import Dataset, FitResult, fit as glm_fit, mean_from_eta
from .inference import estimate_omegas, parametric_bootstrap
from .io import SCHEMA_VERSION, CsvSchema, emit_report, load_csv
from .latent import LatentKind
from .moments import MomEstimate, empirical_moment_sums, estimate_latent
from .predict import PredictionReport, in_sample_predictions

__all__ = [
    "PipelineConfig",
    "run_pipeline",
    "kind_streams",
    "fit_section",
    "estimate_section",
    "prediction_section",
    "estimate_from_section",
    "fit_from_beta",
]

log = logging.getLogger(__name__)

_KIND_ORDER = list(LatentKind)
_RECOVERABLE = (DomainError, UnsupportedError, ConvergenceError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class PipelineConfig:
    data: str
    seed: int
    family: str = "poisson"
    kinds: tuple = ("lnar", "gar", "arch")
    response: str = "y"
    covariates: tuple = ()
    design: DesignSpec = field(default_factory=DesignSpec)
    bootstrap: int = 1000
    horizon: int = 1
    m_arch: int = 10_000
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("a seed is required")
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", seed)
        try:
            Family(self.family)
        except ValueError:
            raise ConfigError(f"unknown family {self.family!r}") from None
        kinds = tuple(self.kinds)
        if not kinds:
            raise ConfigError("at least one latent kind is required")
        try:
            kinds = tuple(LatentKind(k).value for k in kinds)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if len(set(kinds)) != len(kinds):
            raise ConfigError("latent kinds listed twice")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if isinstance(self.design, dict):
            object.__setattr__(self, "design", DesignSpec(**self.design))
        if int(self.bootstrap) < 0 or int(self.bootstrap) == 1:
            raise ConfigError("bootstrap must be 0 (skip) or at least 2")
        if int(self.horizon) < 1:
            raise ConfigError("horizon must be at least 1")
        if int(self.m_arch) < 1 or int(self.workers) < 1:
            raise ConfigError("m_arch and workers must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        """Settings that determine the report (the output path is not one)."""
        return {
            "data": str(self.data),
            "seed": self.seed,
            "family": self.family,
            "kinds": list(self.kinds),
            "response": self.response,
            "covariates": list(self.covariates),
            "design": self.design.to_dict(),
            "bootstrap": int(self.bootstrap),
            "horizon": int(self.horizon),
            "m_arch": int(self.m_arch),
            "workers": int(self.workers),
        }

    def load_data(self) -> Dataset:
        schema = CsvSchema(self.response, self.covariates)
        return load_csv(Path(self.data), schema, FamilySpec(Family(self.family)), self.design)


def kind_streams(seed: int) -> dict[LatentKind, tuple]:
    """(bootstrap, prediction) seed sequences for every latent kind."""
    children = np.random.SeedSequence(seed).spawn(len(_KIND_ORDER))
    return {k: tuple(c.spawn(2)) for k, c in zip(_KIND_ORDER, children)}


def fit_section(fit: FitResult) -> dict:
    return {
        "beta_hat": fit.beta_hat,
        "mu_hat": fit.mu_hat,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "loglik": fit.loglik,
        "max_score_norm": fit.max_score_norm,
    }


def fit_from_beta(data: Dataset, beta) -> FitResult:
    """Rebuild a FitResult from saved coefficients (no refitting)."""
    beta = np.asarray(beta, dtype=float)
    mu = mean_from_eta(data.family, data.X @ beta)
    return FitResult(beta, mu, 0, True, float("nan"), float("nan"), float("nan"))


def estimate_section(est: MomEstimate) -> dict:
    return {
        "kind": est.kind.value,
        "family": est.family.value,
        "sigma2_hat": est.sigma2_hat,
        "rho_hat": est.rho_hat,
        "phi_hat": est.phi_hat,
        "valid": est.valid,
        "reason": est.reason,
        "diagnostics": dict(est.diagnostics),
    }


def estimate_from_section(sec: dict) -> MomEstimate:
    def num(v):
        return float("nan") if v is None else float(v)

    return MomEstimate(
        kind=LatentKind(sec["kind"]),
        family=Family(sec["family"]),
        sigma2_hat=None if sec["kind"] == "arch" else num(sec["sigma2_hat"]),
        rho_hat=num(sec["rho_hat"]),
        phi_hat=None if sec["phi_hat"] is None else float(sec["phi_hat"]),
        valid=bool(sec["valid"]),
        reason=sec.get("reason"),
    )


def prediction_section(rep: PredictionReport) -> dict:
    return {
        "horizon": rep.horizon,
        "method": rep.method.value,
        "rmse": rep.rmse,
        "correlation": rep.correlation,
        "mc_draws": rep.mc_draws,
        "max_mc_rel_se": rep.max_mc_rel_se,
        "predictions": rep.predictions,
    }


def _analyze_kind(config, data, fit, sums, kind, streams):
    try:
        est = estimate_latent(data.family, kind, sums)
    except UnsupportedError as exc:
        return {"status": "failed", "reason": f"{type(exc).__name__}: {exc}"}
    entry = {"status": "ok", "reason": None, "estimate": estimate_section(est)}
    if not est.valid:
        entry["status"] = "invalid"
        entry["reason"] = est.reason
        return entry
    boot_seed, pred_seed = streams
    try:
        cov = estimate_omegas(data, fit, est)
        entry["covariance"] = {
            "phi": cov.phi,
            "max_lag": cov.max_lag,
            "omega_I": cov.omega_I,
            "omega_I_dagger": cov.omega_I_dagger,
            "omega_II": cov.omega_II,
            "sandwich": cov.sandwich,
            "naive": cov.naive,
            "se_naive": cov.se_naive,
            "se_sandwich": cov.se_sandwich,
        }
        if config.bootstrap:
            boot = parametric_bootstrap(
                data, fit, est, B=config.bootstrap, rng=boot_seed, workers=config.workers
            )
            entry["bootstrap"] = {
                "replications": boot.replications,
                "failed": boot.failed,
                "degraded": boot.degraded,
                "se_boot": boot.se_boot,
                "mean_boot": boot.mean_boot,
            }
        pred = in_sample_predictions(
            data,
            fit,
            est,
            horizon=config.horizon,
            m_arch=config.m_arch,
            rng=np.random.default_rng(pred_seed),
        )
        entry["prediction"] = prediction_section(pred)
    except _RECOVERABLE as exc:
        log.warning("%s stage failed: %s", kind.value, exc)
        entry["status"] = "failed"
        entry["reason"] = f"{type(exc).__name__}: {exc}"
    return entry


def run_pipeline(config: PipelineConfig, data: Dataset | None = None) -> dict:
    """Run the full analysis and return the report (written if ``config.out``).

    A GLM fit failure propagates; failures of a single latent kind are
    recorded in its report entry.
    """
    data = config.load_data() if data is None else data
    fit = glm_fit(data)
    sums = empirical_moment_sums(data.y, fit.mu_hat)
    streams = kind_streams(config.seed)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "analyze",
        "config": config.to_dict(),
        "data": {"n": data.n, "p": data.p, "y": data.y},
        "glm": fit_section(fit),
        "moment_sums": sums.as_dict(),
        "glm_prediction": prediction_section(in_sample_predictions(data, fit, None)),
        "latent": {},
    }
    for name in config.kinds:
        kind = LatentKind(name)
        report["latent"][name] = _analyze_kind(config, data, fit, sums, kind, streams[kind])
    emit_report(report, config.out)
    return report
