"""CLI contract: schemas, exit codes, manifests, determinism."""

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from spheroreg import cli
from spheroreg import moments as mo


def run_cli(argv, env_extra=None, capsys=None):
    """Invoke the entry point in-process; returns (exit_code)."""
    return cli.main(argv)


def read_csv_text(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestMoments:
    def test_power_law_csv(self, tmp_path, capsys):
        out = tmp_path / "moments.csv"
        code = run_cli(["moments", "--power-law", "1,3", "--ell-max", "4",
                        "--lambda", "1.0", "--out", str(out)])
        assert code == 0
        header, rows = read_csv_text(out.read_text())
        assert header == ["ell", "nu", "gamma0", "gamma1", "gamma2", "gamma3",
                          "kappa_pole"]
        assert len(rows) == 4
        # row ell=1: nu = 1/sqrt(1) = 1
        assert float(rows[0][1]) == pytest.approx(1.0)
        assert float(rows[0][2]) == pytest.approx(mo.gamma0(1.0), rel=1e-12)
        assert (out.parent / "moments.csv.manifest.json").exists()

    def test_zero_penalty_kappa_three(self, tmp_path):
        out = tmp_path / "m.csv"
        run_cli(["moments", "--power-law", "1,3", "--ell-max", "3",
                 "--lambda", "0", "--out", str(out)])
        _, rows = read_csv_text(out.read_text())
        assert all(float(r[6]) == pytest.approx(3.0, abs=1e-10) for r in rows)

    def test_json_schema(self, tmp_path):
        out = tmp_path / "m.json"
        code = run_cli(["moments", "--power-law", "2,2.5", "--ell-max", "5",
                        "--lambda", "0.5", "--format", "json", "--out",
                        str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["schema_version"] == 1
        assert doc["columns"][0] == "ell"
        assert len(doc["rows"]) == 5
        assert doc["manifest"]["command"] == "moments"
        assert "timestamp" in doc["manifest"]

    def test_spectrum_file_roundtrip(self, tmp_path):
        spec_file = tmp_path / "spec.csv"
        spec_file.write_text("ell,c_ell\n1,1.0\n2,0.125\n3,0.037\n")
        out = tmp_path / "m.csv"
        code = run_cli(["moments", "--spectrum", str(spec_file),
                        "--lambda", "1.0", "--out", str(out)])
        assert code == 0
        _, rows = read_csv_text(out.read_text())
        assert [r[0] for r in rows] == ["1", "2", "3"]

    def test_malformed_spectrum_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("ell,c_ell\n1,1.0\n2,zap\n")
        code = run_cli(["moments", "--spectrum", str(bad), "--out",
                        str(tmp_path / "x.csv")])
        assert code == 2

    def test_invalid_flags_exit_3(self, capsys):
        assert run_cli(["moments", "--power-law", "1,3",
                        "--lambda", "-1"]) == 3
        with pytest.raises(SystemExit) as exc:
            run_cli(["moments", "--power-law", "nonsense"])
        assert exc.value.code == 3


class TestMap:
    def test_constant_at_zero_penalty(self, tmp_path):
        out = tmp_path / "map.csv"
        code = run_cli(["map", "--ell", "4", "--lambda", "0", "--order", "2",
                        "--grid", "9", "--out", str(out)])
        assert code == 0
        header, rows = read_cli_csv(out)
        assert header == ["theta", "value", "envelope"]
        values = {float(r[1]) for r in rows}
        assert len(rows) == 9
        assert max(values) - min(values) < 1e-12

    def test_trispectrum_envelope_tracks_map(self, tmp_path):
        out = tmp_path / "map.csv"
        run_cli(["map", "--ell", "10", "--lambda", "8", "--order", "4",
                 "--grid", "41", "--out", str(out)])
        _, rows = read_cli_csv(out)
        for r in rows:
            theta, value, envelope = (float(v) for v in r)
            if envelope > 1e-2 * mo.trispectrum_map(10, 8.0, "complex", 0, 0):
                assert value / envelope == pytest.approx(1.0, abs=0.15)

    def test_montecarlo_adds_se_column(self, tmp_path):
        out = tmp_path / "map.csv"
        code = run_cli(["map", "--ell", "3", "--lambda", "1", "--order", "2",
                        "--grid", "5", "--montecarlo", "2000", "--seed", "3",
                        "--out", str(out)])
        assert code == 0
        header, rows = read_cli_csv(out)
        assert header == ["theta", "value", "envelope", "se"]
        assert all(float(r[3]) > 0 for r in rows)

    def test_bad_order_exit_3(self):
        assert run_cli(["map", "--ell", "3", "--lambda", "1",
                        "--order", "5"]) == 3

    def test_bad_grid_exit_3(self):
        assert run_cli(["map", "--ell", "3", "--lambda", "1",
                        "--grid", "1"]) == 3


def read_cli_csv(path):
    rows = list(csv.reader(io.StringIO(path.read_text())))
    return rows[0], rows[1:]


class TestVerify:
    def test_probability_suite_report(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(["verify", "--suite", "probability", "--budget",
                        "small", "--seed", "0", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["passed"] is True
        assert doc["manifest"]["timestamp"] is None
        names = [c["name"] for c in doc["checks"]]
        assert "probability.reconstruction.wilson_low" in names
        for c in doc["checks"]:
            assert set(c) >= {"name", "observed", "expected", "tol", "passed"}

    def test_bitwise_identical_across_thread_counts(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(["verify", "--suite", "probability", "--seed", "5",
                 "--threads", "1", "--out", str(a)])
        run_cli(["verify", "--suite", "probability", "--seed", "5",
                 "--threads", "4", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_tampered_reference_fails_with_name(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPHEROREG_TAMPER", "gamma1=1.01")
        out = tmp_path / "report.json"
        code = run_cli(["verify", "--suite", "coeff", "--budget", "small",
                        "--out", str(out)])
        assert code == 1
        doc = json.loads(out.read_text())
        failed = [c["name"] for c in doc["checks"] if not c["passed"]]
        assert failed and all("gamma1" in n for n in failed)


class TestPaperTable:
    def test_reproduction_and_deviation_column(self, tmp_path):
        out = tmp_path / "table.csv"
        code = run_cli(["paper-table", "--lambda", "1.0", "--out", str(out)])
        assert code == 0
        header, rows = read_cli_csv(out)
        assert header == ["ell", "c_ell", "kappa_reference", "kappa_computed",
                          "relative_deviation"]
        assert len(rows) == 9
        for r in rows:
            assert abs(float(r[4])) < 0.02
        row10 = rows[0]
        assert abs(float(row10[3]) - 3.50) < 0.05
        row80 = rows[7]
        assert abs(float(row80[3]) - 7.22) < 0.2

    def test_stdout_default(self, capsys):
        code = run_cli(["paper-table", "--no-timestamp"])
        assert code == 0
        captured = capsys.readouterr()
        header, rows = read_csv_text(captured.out)
        assert len(rows) == 9


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "spheroreg.cli", "paper-table",
             "--no-timestamp"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "kappa_computed" not in proc.stderr
        assert proc.stdout.splitlines()[0].startswith("ell,")

    def test_version_flag(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
