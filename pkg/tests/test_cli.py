import json

import numpy as np
import pytest

from latentglm.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from latentglm.io import load_report

# few ARCH draws keep these runs fast; precision is covered in test_predict
pytestmark = pytest.mark.filterwarnings("ignore::latentglm.predict.MonteCarloPrecisionWarning")

SIM_CONFIG = {
    "n": 400,
    "seed": 5,
    "family": "poisson",
    "beta": [1.5, 0.5],
    "latent": {"kind": "gar", "sigma2": 0.5, "rho": 0.8},
}


@pytest.fixture(scope="module")
def sim_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "sim.json"
    cfg.write_text(json.dumps(SIM_CONFIG))
    out = root / "sim.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    return out


def analyze(tmp_path, data, name="r.json", *extra):
    out = tmp_path / name
    code = main(["analyze", "--data", str(data), "--seed", "11", "--bootstrap", "20",
                 "--m-arch", "4000", "--out", str(out), *extra])
    return code, out


class TestSimulate:
    def test_columns_and_determinism(self, sim_csv, tmp_path):
        lines = sim_csv.read_text().splitlines()
        assert lines[0] == "t,y,mu,nu"
        assert len(lines) == 401
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps(SIM_CONFIG))
        again = tmp_path / "again.csv"
        main(["simulate", "--config", str(cfg), "--out", str(again)])
        assert again.read_bytes() == sim_csv.read_bytes()

    def test_counts_are_integral(self, sim_csv):
        y = np.loadtxt(sim_csv, delimiter=",", skiprows=1, usecols=1)
        assert np.all(y == np.round(y)) and np.all(y >= 0)

    def test_missing_setting(self, tmp_path, capsys):
        assert main(["simulate", "--n", "10", "--seed", "1"]) == EXIT_USAGE
        assert "beta" in capsys.readouterr().err

    def test_beta_length_checked(self, tmp_path):
        cfg = dict(SIM_CONFIG, beta=[1.0])
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg))
        assert main(["simulate", "--config", str(p)]) == EXIT_USAGE


@pytest.fixture(scope="module")
def report(sim_csv, tmp_path_factory):
    code, out = analyze(tmp_path_factory.mktemp("an"), sim_csv)
    assert code == EXIT_OK
    return out


class TestAnalyze:
    def test_byte_identical_runs(self, sim_csv, report, tmp_path):
        code, again = analyze(tmp_path, sim_csv)
        assert code == EXIT_OK
        assert again.read_bytes() == report.read_bytes()

    def test_report_contents(self, report):
        r = load_report(report)
        assert r["command"] == "analyze" and r["schema_version"] == "1.0"
        assert r["config"]["seed"] == 11
        assert list(r["latent"]) == ["lnar", "gar", "arch"]
        gar = r["latent"]["gar"]
        assert gar["status"] == "ok"
        assert gar["bootstrap"]["replications"] == 20
        assert len(gar["prediction"]["predictions"]) == r["data"]["n"]

    def test_bootstrap_zero_omits_block(self, sim_csv, tmp_path):
        code, out = analyze(tmp_path, sim_csv, "z.json", "--bootstrap", "0", "--kinds", "gar")
        assert code == EXIT_OK
        entry = load_report(out)["latent"]["gar"]
        assert "bootstrap" not in entry and "covariance" in entry

    def test_unsupported_kind_recorded(self, tmp_path):
        p = tmp_path / "g.csv"
        g = np.random.default_rng(2)
        y = g.normal(5.0, 1.0, 200)
        p.write_text("y\n" + "".join(f"{float(v)!r}\n" for v in y))
        out = tmp_path / "g.json"
        code = main(["analyze", "--data", str(p), "--seed", "1", "--family", "gaussian",
                     "--bootstrap", "0", "--kinds", "gar", "--out", str(out)])
        assert code == EXIT_OK
        assert load_report(out)["latent"]["gar"]["status"] == "failed"

    def test_stdout_when_no_out(self, sim_csv, capsys):
        code = main(["analyze", "--data", str(sim_csv), "--seed", "3", "--bootstrap", "0",
                     "--kinds", "gar"])
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["command"] == "analyze"


class TestFitPredictEvaluate:
    def test_fit(self, sim_csv, tmp_path):
        out = tmp_path / "f.json"
        assert main(["fit", "--data", str(sim_csv), "--out", str(out)]) == EXIT_OK
        r = load_report(out)
        assert r["command"] == "fit" and len(r["glm"]["beta_hat"]) == 2
        assert "latent" not in r

    def test_predict_reproduces_analyze(self, sim_csv, tmp_path):
        code, rep = analyze(tmp_path, sim_csv, "a.json", "--bootstrap", "0")
        assert code == EXIT_OK
        out = tmp_path / "p.json"
        assert main(["predict", "--report", str(rep), "--out", str(out)]) == EXIT_OK
        a, p = load_report(rep), load_report(out)
        for kind, entry in a["latent"].items():
            if entry["status"] == "ok":
                assert p["latent"][kind]["prediction"] == entry["prediction"]

    def test_predict_needs_analyze_report(self, sim_csv, tmp_path):
        fit_out = tmp_path / "f.json"
        main(["fit", "--data", str(sim_csv), "--out", str(fit_out)])
        assert main(["predict", "--report", str(fit_out)]) == EXIT_USAGE

    def test_evaluate(self, tmp_path):
        obs = tmp_path / "o.csv"
        obs.write_text("y\n1\n2\n3\n")
        pred = tmp_path / "p.csv"
        pred.write_text("prediction\n1\n2\n5\n")
        out = tmp_path / "e.json"
        assert main(["evaluate", "--data", str(obs), "--predictions", str(pred),
                     "--out", str(out)]) == EXIT_OK
        ev = load_report(out)["evaluation"]
        assert ev["rmse"] == pytest.approx(np.sqrt(4 / 3), rel=1e-15)
        assert ev["n"] == 3

    def test_evaluate_length_mismatch(self, tmp_path):
        obs = tmp_path / "o.csv"
        obs.write_text("y\n1\n2\n3\n")
        pred = tmp_path / "p.csv"
        pred.write_text("prediction\n1\n2\n")
        assert main(["evaluate", "--data", str(obs), "--predictions", str(pred)]) == EXIT_FAILURE


class TestExitCodes:
    def test_missing_seed(self, sim_csv, capsys):
        assert main(["analyze", "--data", str(sim_csv)]) == EXIT_USAGE
        assert "seed" in capsys.readouterr().err

    def test_missing_column(self, sim_csv):
        assert main(["analyze", "--data", str(sim_csv), "--seed", "1",
                     "--response", "count"]) == EXIT_USAGE

    def test_parse_error(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("y\n1\nx\n")
        assert main(["fit", "--data", str(p)]) == EXIT_FAILURE
        assert ":3:" in capsys.readouterr().err

    def test_support_violation(self, tmp_path):
        p = tmp_path / "neg.csv"
        p.write_text("y\n1\n-1\n2\n")
        assert main(["fit", "--data", str(p)]) == EXIT_FAILURE

    def test_unknown_config_key(self, sim_csv, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "bogus": 2}))
        assert main(["analyze", "--config", str(cfg), "--data", str(sim_csv)]) == EXIT_USAGE

    def test_argparse_usage(self):
        with pytest.raises(SystemExit) as info:
            main(["analyze", "--family", "weibull"])
        assert info.value.code == 2
