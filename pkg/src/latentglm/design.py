"""Covariate builders: intercept, linear trend and harmonic pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RankDeficiencyError

__all__ = ["DesignSpec", "build_design", "design_column_names"]


@dataclass(frozen=True)
class DesignSpec:
    """Harmonic design.

    Parameters
    ----------
    periods : tuple of float
        Seasonal periods P.  Each contributes cos/sin pairs at 2 pi k t / P.
    harmonics : tuple of int
        Harmonic multipliers k, shared by every period.
    include_trend : bool
        Add the column t / n_for_scaling after the intercept.
    n_for_scaling : int or None
        Trend denominator; defaults to the series length.
    """

    periods: tuple = ()
    harmonics: tuple = (1,)
    include_trend: bool = True
    n_for_scaling: int | None = None

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        harmonics = tuple(int(k) for k in self.harmonics)
        if any(not np.isfinite(p) or p <= 0 for p in periods):
            raise ConfigError("periods must be positive")
        if len(set(periods)) != len(periods):
            raise ConfigError(f"duplicate periods in {periods}")
        if periods and (not harmonics or any(k < 1 for k in harmonics)):
            raise ConfigError("harmonic multipliers must be positive integers")
        if len(set(harmonics)) != len(harmonics):
            raise ConfigError(f"duplicate harmonics in {harmonics}")
        if self.n_for_scaling is not None and int(self.n_for_scaling) < 1:
            raise ConfigError("n_for_scaling must be positive")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "harmonics", harmonics)

    def to_dict(self):
        return {
            "periods": list(self.periods),
            "harmonics": list(self.harmonics),
            "include_trend": bool(self.include_trend),
            "n_for_scaling": self.n_for_scaling,
        }


def design_column_names(spec: DesignSpec) -> list[str]:
    names = ["intercept"]
    if spec.include_trend:
        names.append("trend")
    for period in spec.periods:
        for k in spec.harmonics:
            names += [f"cos_{k}_{period:g}", f"sin_{k}_{period:g}"]
    return names


def build_design(n: int, spec: DesignSpec) -> np.ndarray:
    """n x p design with rows x_t for t = 1..n.

    Columns: ones, then t/n_for_scaling if requested, then for each period
    and each multiplier k the pair cos(2 pi k t/P), sin(2 pi k t/P).
    """
    n = int(n)
    if n < 1:
        raise ConfigError("design needs n >= 1")
    t = np.arange(1, n + 1, dtype=float)
    cols = [np.ones(n)]
    if spec.include_trend:
        cols.append(t / float(spec.n_for_scaling or n))
    for period in spec.periods:
        for k in spec.harmonics:
            arg = 2.0 * np.pi * k * t / period
            cols += [np.cos(arg), np.sin(arg)]
    X = np.column_stack(cols)
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise RankDeficiencyError(f"design has rank {rank} < {X.shape[1]} columns")
    return X
