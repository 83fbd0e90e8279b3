"""Command-line interface.

Subcommands
-----------
simulate   write a synthetic series from a fully specified model
fit        GLM pseudo-likelihood fit only
analyze    fit, moment estimates, standard errors and predictions
predict    in-sample predictions from a saved analyze report
evaluate   RMSE and correlation of predictions against observations

Configuration is a JSON file; command-line flags override its entries.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .design import DesignSpec, build_design
from .errors import ConfigError, DataError, ParseError, SchemaError
from .family import Family, FamilySpec, sample
from .glm import fit as glm_fit, mean_from_eta
from .io import SCHEMA_VERSION, dumps_report, emit_report, load_report, read_columns
from .latent import LatentKind, LatentSpec, simulate
from .pipeline import (
    PipelineConfig,
    estimate_from_section,
    fit_from_beta,
    fit_section,
    kind_streams,
    prediction_section,
    run_pipeline,
)
from .predict import correlation, in_sample_predictions, rmse

__all__ = ["main", "build_parser"]

log = logging.getLogger("latentglm")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _kinds(text):
    return tuple(k.strip() for k in text.split(",") if k.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentglm", description="GLMs for time series with a multiplicative latent process"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", type=Path, help="JSON configuration file")
        if data:
            p.add_argument("--data", help="input CSV")
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        p.add_argument("--family", choices=[f.value for f in Family])
        return p

    p = common(sub.add_parser("simulate", help="simulate a series"), data=False)
    p.add_argument("--n", type=int, help="series length")

    p = common(sub.add_parser("fit", help="GLM fit only"))
    p.add_argument("--response", help="response column name")

    for name, text in (("analyze", "full analysis"), ("predict", "predict from a saved report")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--response", help="response column name")
        p.add_argument("--kinds", type=_kinds, help="comma list from lnar,gar,arch")
        p.add_argument("--bootstrap", type=int, help="bootstrap replications (0 skips)")
        p.add_argument("--horizon", type=int, help="prediction horizon")
        p.add_argument("--m-arch", type=int, dest="m_arch", help="ARCH Monte Carlo draws")
        p.add_argument("--workers", type=int, help="bootstrap worker threads")
        if name == "predict":
            p.add_argument("--report", type=Path, required=True, help="analyze report JSON")

    p = sub.add_parser("evaluate", help="score predictions against observations")
    p.add_argument("--data", required=True, help="CSV with the observed series")
    p.add_argument("--response", default="y", help="observed column in --data")
    p.add_argument("--predictions", required=True, help="CSV with the predictions")
    p.add_argument("--column", default="prediction", help="prediction column")
    p.add_argument("--out", help="output path (stdout when omitted)")
    return parser


def _config_dict(args) -> dict:
    cfg = {}
    if getattr(args, "config", None) is not None:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("data", "out", "seed", "family", "response", "kinds", "bootstrap",
                "horizon", "m_arch", "workers", "n"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = list(value) if key == "kinds" else value
    return cfg


def _write(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pipeline_config(cfg) -> PipelineConfig:
    for key in ("data", "seed"):
        if cfg.get(key) is None:
            raise ConfigError(f"missing required setting {key!r}")
    return PipelineConfig.from_dict(cfg)


def cmd_analyze(args) -> int:
    config = _pipeline_config(_config_dict(args))
    report = run_pipeline(config)
    if config.out is None:
        sys.stdout.write(dumps_report(report))
    for kind, entry in report["latent"].items():
        log.info("%s: %s", kind, entry["status"])
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _config_dict(args)
    cfg.setdefault("seed", 0)
    cfg["kinds"] = cfg.get("kinds") or ["gar"]
    cfg = {k: v for k, v in cfg.items() if k in PipelineConfig.__dataclass_fields__}
    config = _pipeline_config(cfg)
    data = config.load_data()
    fit = glm_fit(data)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "config": config.to_dict(),
        "data": {"n": data.n, "p": data.p},
        "glm": fit_section(fit),
    }
    text = emit_report(report, config.out)
    if config.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    saved = load_report(args.report)
    if saved.get("command") != "analyze":
        raise ConfigError("predict needs a report written by analyze")
    cfg = dict(saved["config"])
    cfg.update({k: v for k, v in _config_dict(args).items() if k in PipelineConfig.__dataclass_fields__})
    cfg["out"] = args.out
    config = _pipeline_config(cfg)
    data = config.load_data()
    fit = fit_from_beta(data, saved["glm"]["beta_hat"])
    streams = kind_streams(config.seed)
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "predict",
        "config": config.to_dict(),
        "data": {"n": data.n, "p": data.p},
        "latent": {},
    }
    for name in config.kinds:
        entry = saved["latent"].get(name)
        if entry is None or "estimate" not in entry or not entry["estimate"]["valid"]:
            out["latent"][name] = {"status": "invalid", "reason": "no valid estimate in report"}
            continue
        est = estimate_from_section(entry["estimate"])
        rng = np.random.default_rng(streams[LatentKind(name)][1])
        pred = in_sample_predictions(data, fit, est, config.horizon, config.m_arch, rng)
        out["latent"][name] = {"status": "ok", "reason": None, "prediction": prediction_section(pred)}
    text = emit_report(out, config.out)
    if config.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    y = read_columns(args.data, [args.response])[args.response]
    pred = read_columns(args.predictions, [args.column])[args.column]
    if len(y) != len(pred):
        raise DataError(f"{len(pred)} predictions for {len(y)} observations")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "evaluate",
        "config": {
            "data": args.data,
            "response": args.response,
            "predictions": args.predictions,
            "column": args.column,
        },
        "evaluation": {"n": len(y), "rmse": rmse(pred, y), "correlation": correlation(pred, y)},
    }
    text = emit_report(report, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Config keys: n, seed, family, phi, beta, latent {kind, sigma2, rho}, design."""
    cfg = _config_dict(args)
    for key in ("n", "seed", "beta", "latent"):
        if cfg.get(key) is None:
            raise ConfigError(f"missing required setting {key!r}")
    n = int(cfg["n"])
    family = FamilySpec(Family(cfg.get("family", "poisson")), float(cfg.get("phi", 1.0)))
    design = DesignSpec(**cfg.get("design", {}))
    X = build_design(n, design)
    beta = np.asarray(cfg["beta"], dtype=float)
    if beta.shape != (X.shape[1],):
        raise ConfigError(f"beta has {beta.size} entries for {X.shape[1]} design columns")
    lat = dict(cfg["latent"])
    spec = LatentSpec(LatentKind(lat["kind"]), lat.get("sigma2"), lat.get("rho", 0.0))
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg["seed"])))
    mu = mean_from_eta(family, X @ beta)
    nu = simulate(spec, n, rng)
    y = np.asarray(sample(family, mu * nu, family.phi, rng), dtype=float)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "y", "mu", "nu"])
    for t in range(n):
        writer.writerow([t + 1, format(y[t], ".17g"), format(mu[t], ".17g"), format(nu[t], ".17g")])
    _write(buf.getvalue(), cfg.get("out"))
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "analyze": cmd_analyze,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SchemaError) as exc:
        print(f"latentglm: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DataError, OSError) as exc:
        print(f"latentglm: input error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"latentglm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
