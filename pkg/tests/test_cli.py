"""Command-line surface: outputs, manifests, determinism, exit codes."""

import hashlib
import json
import math

import numpy as np
import pytest

from rascap import __version__
from rascap.channel import SystemConfig
from rascap.cli import main
from rascap.mc import sample_bub_exact, sample_selected_capacity
from rascap.bounds import mub_ergodic_moments


def read(path):
    return path.read_text().splitlines()


def run(args):
    return main([str(a) for a in args])


class TestCdf:
    def test_writes_table_and_manifest(self, tmp_path, capsys):
        rc = run(["cdf", "--regime", "bub", "--nt", "4", "--l", "2",
                  "--nr", "16,24", "--snr-db", "8", "--trials", "1500",
                  "--seed", "3", "--out", tmp_path])
        assert rc == 0
        for nr in (16, 24):
            lines = read(tmp_path / f"cdf_bub_nr{nr}.csv")
            assert lines[0] == "x_bits,cdf_exact_mc,cdf_asymptotic"
            assert lines[-1].startswith("ks_distance,")
            body = [l.split(",") for l in lines[1:-1]]
            xs = [float(r[0]) for r in body]
            assert xs == sorted(xs)
            for r in body:
                assert 0.0 <= float(r[1]) <= 1.0
                assert -1e-12 <= float(r[2]) <= 1.0 + 1e-12
            manifest = json.loads((tmp_path / f"cdf_bub_nr{nr}.csv.manifest.json")
                                  .read_text())
            digest = hashlib.sha256((tmp_path / f"cdf_bub_nr{nr}.csv")
                                    .read_bytes()).hexdigest()
            assert manifest["sha256"] == digest
            assert manifest["params"]["n_r"] == nr
            assert manifest["rows"] == len(lines) - 1

    def test_mub_regime(self, tmp_path):
        rc = run(["cdf", "--regime", "mub", "--nt", "2", "--l", "6",
                  "--nr", "24", "--snr-db", "8", "--trials", "1000",
                  "--seed", "1", "--out", tmp_path])
        assert rc == 0
        assert (tmp_path / "cdf_mub_nr24.csv").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["cdf", "--regime", "bub", "--nt", "4", "--l", "2", "--nr", "16",
                "--snr-db", "8", "--trials", "1200", "--seed", "5"]
        run(args + ["--out", tmp_path / "a"])
        run(args + ["--out", tmp_path / "b"])
        assert ((tmp_path / "a" / "cdf_bub_nr16.csv").read_bytes()
                == (tmp_path / "b" / "cdf_bub_nr16.csv").read_bytes())

    def test_worker_env_does_not_change_bytes(self, tmp_path, monkeypatch):
        args = ["cdf", "--regime", "bub", "--nt", "4", "--l", "2", "--nr", "16",
                "--snr-db", "8", "--trials", "1200", "--seed", "5"]
        monkeypatch.setenv("RASCAP_WORKERS", "1")
        run(args + ["--out", tmp_path / "w1"])
        monkeypatch.setenv("RASCAP_WORKERS", "5")
        run(args + ["--out", tmp_path / "w5"])
        assert ((tmp_path / "w1" / "cdf_bub_nr16.csv").read_bytes()
                == (tmp_path / "w5" / "cdf_bub_nr16.csv").read_bytes())

    def test_json_format(self, tmp_path):
        rc = run(["cdf", "--regime", "bub", "--nt", "2", "--l", "1", "--nr", "8",
                  "--snr-db", "0", "--trials", "500", "--seed", "0",
                  "--out", tmp_path, "--format", "json"])
        assert rc == 0
        rows = json.loads((tmp_path / "cdf_bub_nr8.json").read_text())
        assert rows[-1]["x_bits"] == "ks_distance"


class TestErgodic:
    def test_single_point_matches_direct_evaluation(self, tmp_path):
        rc = run(["ergodic", "--regime", "bub", "--nt", "4", "--l", "2",
                  "--nr", "12", "--snr-db", "8", "--trials", "800",
                  "--seed", "9", "--out", tmp_path, "--method", "exhaustive"])
        assert rc == 0
        lines = read(tmp_path / "ergodic_bub_l2.csv")
        assert lines[0] == ("snr_db,rho_bar,asym_bound_mean,exact_bound_mean,"
                            "capacity_mean,capacity_method")
        row = lines[1].split(",")
        cfg = SystemConfig.from_db(4, 12, 2, 8.0)
        # file values carry nine significant digits
        assert float(row[3]) == pytest.approx(
            sample_bub_exact(cfg, 800, seed=9).mean(), rel=1e-7)
        assert float(row[4]) == pytest.approx(
            sample_selected_capacity(cfg, 800, seed=9, method="exhaustive").mean(),
            rel=1e-7)
        assert row[5] == "exhaustive"

    def test_sweep_and_method_labels(self, tmp_path):
        rc = run(["ergodic", "--regime", "mub", "--nt", "2", "--l", "4,6",
                  "--nr", "16", "--snr-db", "0:8:16", "--trials", "300",
                  "--seed", "2", "--method", "greedy", "--out", tmp_path])
        assert rc == 0
        for l in (4, 6):
            lines = read(tmp_path / f"ergodic_mub_l{l}.csv")
            assert len(lines) == 4  # header + 3 SNR points
            for line in lines[1:]:
                row = line.split(",")
                assert row[5] == "greedy"
                # bound mean dominates capacity mean at every point
                assert float(row[3]) >= float(row[4])

    def test_mub_asym_column_is_quadrature_mean(self, tmp_path):
        run(["ergodic", "--regime", "mub", "--nt", "2", "--l", "4", "--nr", "16",
             "--snr-db", "8", "--trials", "200", "--seed", "2",
             "--method", "greedy", "--out", tmp_path])
        row = read(tmp_path / "ergodic_mub_l4.csv")[1].split(",")
        cfg = SystemConfig.from_db(2, 16, 4, 8.0)
        assert float(row[2]) == pytest.approx(mub_ergodic_moments(cfg)[0], rel=1e-8)


class TestMoments:
    def test_bub_table(self, tmp_path):
        rc = run(["moments", "--regime", "bub", "--nt", "8", "--l", "4",
                  "--nr", "64:64:256", "--snr-db", "8", "--out", tmp_path])
        assert rc == 0
        lines = read(tmp_path / "moments_bub.csv")
        assert lines[0] == "n_r,asym_mean,asym_variance"
        rows = [l.split(",") for l in lines[1:]]
        assert [int(r[0]) for r in rows] == [64, 128, 192, 256]
        variances = [float(r[2]) for r in rows]
        assert all(v > 0 for v in variances)
        assert variances[-1] < variances[0]
        means = [float(r[1]) for r in rows]
        assert means == sorted(means)

    def test_mub_table(self, tmp_path):
        rc = run(["moments", "--regime", "mub", "--nt", "2", "--l", "8",
                  "--nr", "32,64", "--snr-db", "8", "--out", tmp_path])
        assert rc == 0
        rows = [l.split(",") for l in read(tmp_path / "moments_mub.csv")[1:]]
        assert all(float(r[2]) > 0 for r in rows)


class TestUsageErrors:
    def test_zero_trials_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["cdf", "--regime", "bub", "--nt", "4", "--l", "2", "--nr", "16",
                 "--snr-db", "8", "--trials", "0"])
        assert exc.value.code == 2

    def test_unknown_regime_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run(["cdf", "--regime", "bogus", "--nt", "4", "--l", "2",
                 "--nr", "16", "--snr-db", "8"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run(["cdf", "--regime", "bub", "--nt", "4", "--l", "2", "--nr", "16"])
        assert exc.value.code == 2

    def test_bad_range_syntax_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run(["cdf", "--regime", "bub", "--nt", "4", "--l", "2",
                 "--nr", "16:4", "--snr-db", "8"])
        assert exc.value.code == 2

    def test_invalid_config_exits_1(self, tmp_path, capsys):
        # l > n_r passes flag parsing but fails domain validation
        rc = run(["cdf", "--regime", "bub", "--nt", "4", "--l", "20",
                  "--nr", "16", "--snr-db", "8", "--trials", "100",
                  "--out", tmp_path])
        assert rc == 1
        assert "error" in capsys.readouterr().err


class TestValidate:
    def test_passing_criterion_exits_0(self, tmp_path, capsys):
        rc = run(["validate", "--suite", "fast", "--criteria", "7",
                  "--out", tmp_path])
        assert rc == 0
        out = capsys.readouterr().out
        assert "PASS  criterion 7" in out
        report = json.loads((tmp_path / "validate_report.json").read_text())
        assert report["passed"] is True
        assert report["criteria"][0]["number"] == 7
        assert all({"name", "measured", "requirement", "passed"}
                   <= set(c.keys()) for c in report["criteria"][0]["checks"])

    def test_forced_failure_exits_1_and_names_criterion(self, tmp_path,
                                                        monkeypatch, capsys):
        monkeypatch.setenv("RASCAP_FORCE_FAIL", "7")
        rc = run(["validate", "--suite", "fast", "--criteria", "7",
                  "--out", tmp_path])
        assert rc == 1
        out = capsys.readouterr().out
        assert "FAIL  criterion 7" in out
        report = json.loads((tmp_path / "validate_report.json").read_text())
        assert report["passed"] is False
        assert report["criteria"][0]["passed"] is False


def test_version_prints(capsys):
    assert run(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__
