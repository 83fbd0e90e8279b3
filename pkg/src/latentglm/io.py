"""CSV ingestion and JSON report emission.

Reports are written with keys in insertion order and every float printed
with 17 significant digits, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .design import DesignSpec, build_design
from .errors import DataError, ParseError, SchemaError
from .family import FamilySpec, check_support
from .glm import Dataset

__all__ = [
    "CsvSchema",
    "REPORT_SCHEMA",
    "SCHEMA_VERSION",
    "read_columns",
    "load_csv",
    "dumps_report",
    "emit_report",
    "load_report",
    "validate_report",
]

SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class CsvSchema:
    """Column roles in an input CSV.

    ``covariates`` empty means the design is built from a ``DesignSpec``.
    """

    response: str
    covariates: tuple = ()


def read_columns(path, columns) -> dict[str, np.ndarray]:
    """Read the named numeric columns of a headed UTF-8 CSV."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1) from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(map(repr, missing))}")
        idx = [header.index(c) for c in columns]
        values = [[] for _ in columns]
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{line}: expected {len(header)} fields, got {len(row)}", line=line
                )
            for out, i in zip(values, idx):
                cell = row[i].strip()
                try:
                    out.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}:{line}: column {header[i]!r} value {cell!r} is not a number",
                        line=line,
                    ) from None
    return {c: np.array(v, dtype=float) for c, v in zip(columns, values)}


def load_csv(path, schema: CsvSchema, family: FamilySpec, design: DesignSpec | None = None):
    """Load a Dataset from CSV.

    The design comes from the schema's covariate columns (with an intercept
    prepended) or, when there are none, from ``design``.
    """
    cols = read_columns(path, [schema.response, *schema.covariates])
    y = cols[schema.response]
    bad = check_support(family, y)
    if bad.size:
        shown = ", ".join(str(i) for i in bad[:20])
        more = "" if bad.size <= 20 else f" (+{bad.size - 20} more)"
        raise DataError(
            f"{path}: {bad.size} value(s) of {schema.response!r} outside the "
            f"{family.name} support at row index {shown}{more}",
            bad,
        )
    if schema.covariates:
        X = np.column_stack([np.ones(len(y))] + [cols[c] for c in schema.covariates])
    else:
        X = build_design(len(y), design if design is not None else DesignSpec())
    return Dataset(y, X, family)


# ---------------------------------------------------------------------------
# report writing


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        # keep floats distinguishable from integers after a reload
        return text if any(c in text for c in ".e") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(report: dict) -> str:
    return _encode(report, 2, 0) + "\n"


_num = {"type": ["number", "null"]}
_vec = {"type": "array", "items": _num}
_mat = {"type": "array", "items": _vec}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "config"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["simulate", "fit", "analyze", "predict", "evaluate"]},
        "config": {"type": "object"},
        "data": {
            "type": "object",
            "required": ["n", "p"],
            "properties": {"n": {"type": "integer"}, "p": {"type": "integer"}},
        },
        "glm": {
            "type": "object",
            "required": ["beta_hat", "mu_hat", "iterations", "converged", "loglik"],
            "properties": {
                "beta_hat": _vec,
                "mu_hat": _vec,
                "iterations": {"type": "integer"},
                "converged": {"type": "boolean"},
                "loglik": _num,
                "max_score_norm": _num,
            },
        },
        "glm_prediction": {"$ref": "#/$defs/prediction"},
        "latent": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["status"],
                "properties": {
                    "status": {"enum": ["ok", "invalid", "failed"]},
                    "reason": {"type": ["string", "null"]},
                    "estimate": {
                        "type": "object",
                        "required": ["sigma2_hat", "rho_hat", "phi_hat", "valid"],
                    },
                    "covariance": {
                        "type": "object",
                        "required": ["sandwich", "naive", "se_naive", "se_sandwich"],
                        "properties": {
                            "omega_I": _mat,
                            "omega_I_dagger": _mat,
                            "omega_II": _mat,
                            "sandwich": _mat,
                            "naive": _mat,
                            "se_naive": _vec,
                            "se_sandwich": _vec,
                        },
                    },
                    "bootstrap": {
                        "type": "object",
                        "required": ["replications", "se_boot", "mean_boot", "failed"],
                    },
                    "prediction": {"$ref": "#/$defs/prediction"},
                },
            },
        },
        "prediction": {"$ref": "#/$defs/prediction"},
        "evaluation": {
            "type": "object",
            "required": ["rmse", "correlation", "n"],
        },
        "simulation": {"type": "object"},
    },
    "$defs": {
        "prediction": {
            "type": "object",
            "required": ["horizon", "method", "rmse", "correlation", "predictions"],
            "properties": {
                "horizon": {"type": "integer", "minimum": 1},
                "method": {"enum": ["closed_form", "quadrature", "monte_carlo"]},
                "rmse": _num,
                "correlation": _num,
                "predictions": _vec,
                "mc_draws": {"type": "integer"},
            },
        }
    },
}


def validate_report(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``report`` breaks the schema."""
    jsonschema.validate(json.loads(dumps_report(report)), REPORT_SCHEMA)


def emit_report(report: dict, path) -> str:
    """Validate and write ``report``; returns the text written."""
    text = dumps_report(report)
    jsonschema.validate(json.loads(text), REPORT_SCHEMA)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_report(path) -> dict:
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    jsonschema.validate(report, REPORT_SCHEMA)
    return report
