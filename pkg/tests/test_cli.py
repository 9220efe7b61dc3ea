import csv
import json
import subprocess
import sys

import pytest

from sondlab.cli import bode_sweep, fitted_slope, main
from sondlab.differentiators import SOND_CASE1, natural_frequency_damping


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[0], rows[1:]


class TestTd:
    def test_case1_sond(self, tmp_path, capsys):
        assert run("td", "--case", "case1", "--models", "sond", "--out", tmp_path) == 0
        header, rows = read_csv(tmp_path / "metrics_case1.csv")
        assert header == ["label", "mse", "iae", "itae", "itse"]
        mse, iae, itae, itse = map(float, rows[0][1:])
        for got, want in ((mse, 0.011647), (iae, 0.091862), (itae, 0.081136), (itse, 0.004204)):
            assert abs(got - want) / want <= 0.25
        header, rows = read_csv(tmp_path / "td_case1_sond.csv")
        assert header == ["t", "r", "x1", "x2", "r_hat", "dr_hat", "e"]
        assert len(rows) == 1001
        assert "backend=" in capsys.readouterr().out

    def test_clean_beats_case1(self, tmp_path):
        assert run("td", "--case", "case1", "--out", tmp_path) == 0
        assert run("td", "--case", "clean", "--out", tmp_path) == 0
        noisy = list(map(float, read_csv(tmp_path / "metrics_case1.csv")[1][0][1:]))
        clean = list(map(float, read_csv(tmp_path / "metrics_clean.csv")[1][0][1:]))
        assert all(c < n for c, n in zip(clean, noisy))

    def test_several_models_keep_order(self, tmp_path):
        assert run("td", "--models", "red,sond,hgtd", "--out", tmp_path) == 0
        _, rows = read_csv(tmp_path / "metrics_case1.csv")
        assert [r[0] for r in rows] == ["red", "sond", "hgtd"]

    def test_unknown_model(self, tmp_path, capsys):
        assert run("td", "--case", "case1", "--models", "nosuch", "--out", tmp_path) == 2
        err = capsys.readouterr().err
        assert "unknown differentiator 'nosuch'" in err
        assert "sond" in err

    def test_dormant_model(self, tmp_path):
        assert run("td", "--models", "hcnd", "--out", tmp_path) == 2

    def test_bad_override(self, tmp_path, capsys):
        assert run("td", "--sond.rho", "-3", "--out", tmp_path) == 2
        assert "rho" in capsys.readouterr().err

    def test_override_changes_result(self, tmp_path):
        run("td", "--out", tmp_path / "a")
        run("td", "--sond.rho", "10", "--out", tmp_path / "b")
        assert (tmp_path / "a" / "metrics_case1.csv").read_bytes() != (tmp_path / "b" / "metrics_case1.csv").read_bytes()

    def test_divergence_exit(self, tmp_path, capsys):
        assert run("td", "--h", "0.5", "--out", tmp_path) == 3
        assert "diverged" in capsys.readouterr().err

    def test_bad_step(self, tmp_path):
        assert run("td", "--h", "-1", "--out", tmp_path) == 2

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "td.json"
        cfg.write_text(json.dumps({"kind": "td-benchmark", "case": "clean", "models": ["hgtd"],
                                   "integrator": {"tf": 1.0}}))
        assert run("td", "--config", cfg, "--out", tmp_path) == 0
        _, rows = read_csv(tmp_path / "td_clean_hgtd.csv")
        assert len(rows) == 501

    def test_out_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SONDLAB_OUT", str(tmp_path))
        assert run("td", "--tf", "0.2") == 0
        assert (tmp_path / "metrics_case1.csv").exists()

    def test_byte_identical(self, tmp_path):
        run("td", "--models", "sond,hgtd,red", "--out", tmp_path / "a")
        run("td", "--models", "sond,hgtd,red", "--out", tmp_path / "b")
        for name in ("metrics_case1.csv", "td_case1_sond.csv", "td_case1_red.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestBode:
    def test_header_reports_wn(self, tmp_path, capsys):
        assert run("bode", "--out", tmp_path) == 0
        first = (tmp_path / "bode.csv").read_text().splitlines()[0]
        wn = float(first.split("wn=")[1].split()[0])
        assert abs(wn - 1118.8) / 1118.8 < 0.005
        assert "wn = 1118.7" in capsys.readouterr().out

    def test_low_and_high_slopes(self):
        wn, _ = natural_frequency_damping(SOND_CASE1)
        w, m = bode_sweep(SOND_CASE1, wn / 1000, wn / 100, 20)
        assert fitted_slope(w, m) == pytest.approx(20.0, abs=0.5)
        w, m = bode_sweep(SOND_CASE1, 100 * wn, 1000 * wn, 20)
        assert fitted_slope(w, m) == pytest.approx(-20.0, abs=0.5)

    def test_range_flags(self, tmp_path):
        assert run("bode", "--omega-min", "1", "--omega-max", "100", "--points-per-decade", "10", "--out", tmp_path) == 0
        _, rows = read_csv(tmp_path / "bode.csv")
        assert len(rows) == 21
        assert float(rows[0][0]) == 1.0

    @pytest.mark.parametrize("flags", [("--omega-min", "10", "--omega-max", "1"), ("--omega-min", "-1"),
                                       ("--points-per-decade", "0")])
    def test_bad_range(self, tmp_path, flags):
        assert run("bode", *flags, "--out", tmp_path) == 2


class TestAdrc:
    def test_default_run(self, tmp_path):
        assert run("adrc", "--out", tmp_path) == 0
        header, rows = read_csv(tmp_path / "adrc.csv")
        assert header == ["t", "y", "r_hat", "dr_hat", "z1", "z2", "z3", "u", "u0", "e0", "e1", "torque"]
        assert len(rows) == 5001
        summary = dict(read_csv(tmp_path / "adrc_summary.csv")[1])
        assert summary["disturbance_events"] == "1"
        assert float(summary["settling_time"]) < 5.0
        assert float(summary["event0.recovery_time"]) < 10.0

    def test_zero_disturbance(self, tmp_path):
        cfg = tmp_path / "quiet.json"
        cfg.write_text(json.dumps({"kind": "adrc", "disturbance": {"events": []}, "integrator": {"tf": 2.0}}))
        assert run("adrc", "--config", cfg, "--out", tmp_path) == 0
        summary = dict(read_csv(tmp_path / "adrc_summary.csv")[1])
        assert summary["disturbance_events"] == "0"
        assert not any(k.startswith("event0") for k in summary)

    def test_malformed(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"kind": "adrc", "inlsef": {"delta": -1}}))
        assert run("adrc", "--config", cfg, "--out", tmp_path) == 2
        assert "bad.json.inlsef" in capsys.readouterr().err

    def test_unreadable(self, tmp_path):
        assert run("adrc", "--config", tmp_path / "missing.json", "--out", tmp_path) == 2

    def test_divergence_exit(self, tmp_path):
        assert run("adrc", "--h", "0.1", "--tf", "2", "--out", tmp_path) == 3


class TestVerify:
    def test_pristine(self, capsys):
        assert run("verify") == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "all 9 checks passed" in out

    def test_negated_rho(self, capsys):
        assert run("verify", "--debug-rho-sign", "-1") == 1
        out = capsys.readouterr().out
        assert "[FAIL] sond-params" in out
        assert "rho" in out

    def test_perturbed_lyapunov(self, capsys):
        assert run("verify", "--debug-lyapunov-scale", "2") == 1
        assert "violated: lyapunov-monotone" in capsys.readouterr().out


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        out = subprocess.run([sys.executable, "-m", "sondlab", "bode", "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert (tmp_path / "bode.csv").exists()

    def test_usage_error(self):
        out = subprocess.run([sys.executable, "-m", "sondlab", "frobnicate"], capture_output=True, text=True)
        assert out.returncode == 2
