import os
from pathlib import Path

import numpy as np
import pytest

from latentglm.family import Family, FamilySpec
from latentglm.latent import autocovariance, moment
from latentglm.moments import MomentSums

DATA_DIR = Path(os.environ.get("LATENTGLM_DATA_DIR", "/root/data"))
VARVE_CSV = DATA_DIR / "varve_raw.csv"
MEASLES_CSV = DATA_DIR / "measles.csv"


def population_sums(family: FamilySpec, spec, mu) -> MomentSums:
    """Model-implied expectations of the moment sums at fitted means ``mu``."""
    mu = np.asarray(mu, dtype=float)
    g = family.gamma_power
    var = family.phi * mu**g * moment(spec, g) + mu**2 * (moment(spec, 2) - 1.0)
    return MomentSums(
        S0=float(var.sum()),
        S1=float(autocovariance(spec, 1) * (mu[1:] @ mu[:-1])),
        S2=float(autocovariance(spec, 2) * (mu[2:] @ mu[:-2])),
        M0=float(mu @ mu),
        M1=float(mu[1:] @ mu[:-1]),
        M2=float(mu[2:] @ mu[:-2]),
        P=float(mu.sum()),
        n=len(mu),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def poisson():
    return FamilySpec(Family.POISSON)


@pytest.fixture
def varve_path():
    if not VARVE_CSV.exists():
        pytest.skip(f"varve extract not found at {VARVE_CSV}")
    return VARVE_CSV


@pytest.fixture
def measles_path():
    if not MEASLES_CSV.exists():
        pytest.skip(f"measles extract not found at {MEASLES_CSV}")
    return MEASLES_CSV


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(pytestconfig):
    """Record one PASS/FAIL/SKIP line for an acceptance criterion."""

    def record(number, title, ok, detail=""):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"[{number:>2}] {status} {title}" + (f": {detail}" if detail else "")
        print(line)
        pytestconfig.stash.setdefault(ACCEPTANCE_LINES, []).append(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s[1:3])):
            terminalreporter.write_line(line)
