"""Command line interface: parsing, output formats, exit codes and determinism."""

import argparse
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from heavylss.cli import fmt, main, parse_c, parse_complex, parse_test_function, to_json
from heavylss.covariance import FIGURE_C, ModelParams, cov_closed


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParsing:
    @pytest.mark.parametrize("text,value", [("0+2i", 2j), ("1-1i", 1 - 1j), ("-1.5+0.25i", -1.5 + 0.25j),
                                            ("3+i", 3 + 1j), ("1e-3+2e1j", 0.001 + 20j)])
    def test_complex(self, text, value):
        assert parse_complex(text) == value

    @pytest.mark.parametrize("text", ["2i", "1", "1+2", "abc", "1+2i+3i"])
    def test_complex_rejected(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_complex(text)

    def test_c(self):
        assert parse_c("figure") == FIGURE_C
        assert parse_c("1.5") == 1.5
        with pytest.raises(argparse.ArgumentTypeError):
            parse_c("big")

    def test_test_functions(self):
        assert parse_test_function("resolvent:0+2i").pole == 2j
        assert parse_test_function("bump:0.5,1").support == (-0.5, 1.5)
        assert parse_test_function("indicator:-1,1,0.2").kind == "smoothed_indicator"
        for bad in ("bump:1", "spline:1,2", "resolvent:1+0i", "indicator:1,0,0.1"):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_test_function(bad)

    def test_serialization(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(float("nan")) == "null"
        assert json.loads(to_json({"a": [1, 2.5, None, True], "b": "x"})) == {
            "a": [1, 2.5, None, True], "b": "x"}


class TestCov:
    def test_example(self, capsys):
        code, out, _ = run(capsys, "cov", "--z", "0+2i", "--w", "0+3i", "--alpha", "3", "--c", "1")
        assert code == 0
        rec = json.loads(out)
        assert rec["schema"] == 1
        ref = cov_closed(2j, 3j, ModelParams(3.0))
        assert rec["re"] == ref.real and rec["im"] == ref.imag
        assert rec["oracle_rel_err"] < 1e-8
        np.testing.assert_allclose(rec["remark_re"], ref.real, rtol=1e-12)

    def test_no_oracle_and_csv(self, capsys):
        code, out, _ = run(capsys, "cov", "--z", "1+1i", "--w", "1-1i", "--no-oracle", "--format", "csv")
        assert code == 0
        header, row = out.strip().split("\n")
        fields = dict(zip(header.split(","), row.split(",")))
        assert fields["oracle_rel_err"] == ""
        assert float(fields["re"]) > 0

    def test_bad_alpha(self, capsys):
        code, _, err = run(capsys, "cov", "--z", "0+2i", "--w", "0+3i", "--alpha", "5")
        assert code == 2 and "(2, 4)" in err

    def test_on_support(self, capsys):
        code, _, err = run(capsys, "cov", "--z", "1+0i", "--w", "0+3i")
        assert code == 2 and "support" in err

    def test_malformed_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["cov", "--z", "2i", "--w", "0+3i"])
        assert info.value.code == 2

    def test_nonconvergence_exit(self, capsys):
        code, _, _ = run(capsys, "cov", "--z", "0+2i", "--w", "0.5+0.01i", "--max-subdivisions", "2")
        assert code == 3


class TestKernelGrid:
    def test_grid(self, tmp_path, capsys):
        path = tmp_path / "k.csv"
        assert main(["kernel-grid", "--alpha", "3", "--c", "figure", "--n", "101", "-o", str(path)]) == 0
        lines = path.read_text().splitlines()
        assert lines[0] == "E,F,K"
        assert len(lines) == 101**2 + 1
        E, F, K = (float(v) for v in lines[1 + 50 * 101 + 50].split(","))
        assert abs(E) < 1e-15 and abs(F) < 1e-15
        np.testing.assert_allclose(K, 1 / (2 * np.pi), rtol=1e-12)

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            main(["kernel-grid", "--alpha", "2.7", "--c", "1.3", "--n", "20", "-o", str(p)])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_n(self, capsys):
        code, _, _ = run(capsys, "kernel-grid", "--n", "1")
        assert code == 2

    def test_unwritable(self, tmp_path, capsys):
        code, _, _ = run(capsys, "kernel-grid", "--n", "3", "-o", str(tmp_path / "missing" / "k.csv"))
        assert code == 1


class TestPair:
    def test_resolvent(self, capsys):
        code, out, _ = run(capsys, "pair", "--psi", "resolvent:0+2i", "--phi", "resolvent:0+3i")
        rec = json.loads(out)
        ref = cov_closed(2j, 3j, ModelParams(3.0))
        assert code == 0 and abs(complex(rec["re"], rec["im"]) - ref) / abs(ref) < 1e-6

    def test_via_kernel(self, capsys):
        code, out, _ = run(capsys, "pair", "--psi", "bump:0.3,0.8", "--phi", "indicator:2.2,3,0.1",
                           "--via-kernel")
        rec = json.loads(out)
        assert code == 0 and rec["rel_diff"] < 1e-4

    def test_bad_function(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["pair", "--psi", "bump:1", "--phi", "bump:0,1"])
        assert info.value.code == 2


class TestValidate:
    def test_default_passes(self, capsys):
        code, out, err = run(capsys, "validate", "--alpha", "3", "--n-sigma", "20")
        rec = json.loads(out)
        assert code == 0
        assert all(s["passed"] for s in rec["suites"])
        assert err.count("PASS") == len(rec["suites"])

    def test_fd_step_tamper(self, capsys):
        code, out, err = run(capsys, "validate", "--fd-step", "1e-1", "--n-sigma", "5")
        assert code == 4
        failed = {s["name"] for s in json.loads(out)["suites"] if not s["passed"]}
        assert "oracle log-product FD" in failed
        assert "oracle log-product FD" in err.splitlines()[-1]

    def test_near_boundary(self, capsys):
        code, out, _ = run(capsys, "validate", "--alpha", "2.05", "--n-sigma", "10")
        rec = json.loads(out)
        assert code == 0
        assert all(s["tolerance"] >= 1e-6 for s in rec["suites"])


class TestSimulate:
    argv = ["simulate", "--N", "48", "--M", "100", "--alpha", "3", "--seed", "7",
            "--z", "0+2i", "--z", "1+1i"]

    def test_report(self, capsys):
        code, out, _ = run(capsys, *self.argv)
        rec = json.loads(out)
        assert code == 0
        np.testing.assert_allclose(rec["c"], 2 / np.sqrt(3), rtol=1e-15)
        assert len(rec["estimates"]) == 3
        for e in rec["estimates"]:
            assert e["stderr"] > 0 and e["z_score"] >= 0

    def test_same_bytes(self, capsys):
        _, a, _ = run(capsys, *self.argv)
        _, b, _ = run(capsys, *self.argv)
        assert a == b

    def test_threads_do_not_matter(self, capsys):
        _, a, _ = run(capsys, *self.argv, "--threads", "1")
        _, b, _ = run(capsys, *self.argv, "--threads", "8")
        assert a == b

    def test_csv_and_traces(self, tmp_path, capsys):
        traces = tmp_path / "t.csv"
        code, out, _ = run(capsys, *self.argv, "--format", "csv", "--traces", str(traces),
                           "--bootstrap", "20")
        assert code == 0
        assert out.splitlines()[0].startswith("z_re,z_im,w_re,w_im,est_re")
        assert len(traces.read_text().splitlines()) == 1 + 100 * 2

    def test_bad_z(self, capsys):
        code, _, err = run(capsys, "simulate", "--N", "8", "--M", "4", "--z", "0.5+0.01i")
        assert code == 2


@pytest.mark.skipif(shutil.which("heavylss") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["heavylss", "cov", "--z", "0+2i", "--w", "0+3i", "--no-oracle"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "cov"


def test_module_entry():
    proc = subprocess.run([sys.executable, "-m", "heavylss.cli", "cov", "--z", "0+2i", "--w", "0+3i",
                           "--alpha", "5"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2
