import csv
import io
import json
import math
import subprocess
import sys

import pytest

from shgpla.cli import fmt, main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_fmt():
    assert fmt(-0.0) == "0"
    assert fmt(math.sqrt(2)) == "1.41421356237"
    assert fmt(float("nan")) == "nan"
    assert fmt(1e-20) == "1e-20"


def test_spectrum_two_level(tmp_path):
    assert run(tmp_path, "spectrum", "--k", "0", "--s", "1", "--resonance", "--g", "1") == 0
    raw = (tmp_path / "spectrum.csv").read_bytes()
    assert raw == b"v,lambda\n0,-1.41421356237\n1,1.41421356237\n"


def test_spectrum_single_level(tmp_path):
    assert run(tmp_path, "spectrum", "--k", "1", "--s", "0", "--delta", "1.5") == 0
    assert read_csv(tmp_path / "spectrum.csv") == [["v", "lambda"], ["0", "0.5"]]
    assert run(tmp_path, "spectrum", "--k", "0", "--s", "0") == 0
    assert read_csv(tmp_path / "spectrum.csv")[1] == ["0", "0"]


def test_spectrum_s100_and_amplitudes(tmp_path):
    assert run(tmp_path, "spectrum", "--s", "100", "--resonance", "--amplitudes", "--method", "both") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert float(rows[1][1]) == pytest.approx(-1536.9, abs=0.2)
    amp = read_csv(tmp_path / "amplitudes.csv")
    assert amp[0] == ["v", "f", "Q"] and len(amp) == 1 + 101 * 101
    assert amp[1][:2] == ["0", "0"] and amp[2][:2] == ["0", "1"]


def test_spectrum_table1_rounding(tmp_path):
    assert run(tmp_path, "spectrum", "--s", "100", "--table1") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert rows[1][1] == "-1536.9" and rows[51][1] == "0.0"


def test_compare_two_level_with_qc(tmp_path):
    assert run(tmp_path, "compare", "--k", "0", "--s", "1", "--resonance", "--qc") == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert rows[0] == ["v", "lambda_exact", "cmf_r1", "cmf_mp_r1", "cmf_r2", "cmf_r3", "qc_r1", "qc_r2", "qc_r3"]
    for row, sign in zip(rows[1:3], (-1, 1)):
        assert float(row[1]) == pytest.approx(sign * math.sqrt(2), abs=1e-11)
        assert float(row[8]) == pytest.approx(sign * math.sqrt(2), abs=1e-11)
    assert [r[0] for r in rows[3:]] == ["delta2_H", "delta2_E", "delta2_E_up"]


def test_compare_every_tenth_level(tmp_path):
    assert run(tmp_path, "compare", "--s", "100", "--resonance", "--stride", "10") == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert rows[0] == ["v", "lambda_exact", "cmf_r1", "cmf_mp_r1", "cmf_r2", "cmf_r3"]
    assert [r[0] for r in rows[1:12]] == [str(v) for v in range(0, 101, 10)]
    footer = {r[0]: r for r in rows[12:]}
    assert footer["delta2_E"][1] == ""
    assert float(footer["delta2_E"][5]) == pytest.approx(0.657, abs=0.02)
    ov = read_csv(tmp_path / "overlap.csv")
    assert ov[0] == ["v", "strategy", "cos", "delta2_ef"]
    assert len(ov) == 1 + 101 * 3
    assert {r[1] for r in ov[1:]} == {"r1", "r2", "r3"}


def test_compare_json(tmp_path):
    assert run(tmp_path, "compare", "--s", "20", "--delta", "0.5", "--format", "json") == 0
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert {"v", "lambda", "cmf", "delta2"} <= set(doc)
    assert set(doc["cmf"]) == {"r1", "mp_r1", "r2", "r3"}


def test_compare_zero_spectrum_marks_nan(tmp_path):
    with pytest.warns(RuntimeWarning):
        assert run(tmp_path, "compare", "--s", "3", "--g", "0") == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert rows[-1][2] == "nan"


def test_dynamics_fock_two_level(tmp_path):
    assert run(tmp_path, "dynamics", "--init", "fock:0,1", "--t-max", "3", "--steps", "99") == 0
    rows = read_csv(tmp_path / "dynamics.csv")
    assert rows[0] == ["t", "tau", "Y0", "N0", "N1"]
    assert len(rows) == 101
    assert rows[1][:2] == ["0", "0"] and float(rows[1][3]) == 1.0
    for r in rows[1:]:
        assert float(r[3]) == pytest.approx(math.cos(math.sqrt(2) * float(r[0])) ** 2, abs=1e-10)


def test_dynamics_cluster_s100_with_closed_form(tmp_path):
    argv = ["dynamics", "--k", "0", "--s", "100", "--resonance", "--g", "1", "--init", "cluster",
            "--tau-max", "25", "--steps", "2000", "--qc", "--normalize"]
    assert run(tmp_path, *argv) == 0
    rows = read_csv(tmp_path / "dynamics.csv")
    assert rows[0] == ["t", "tau", "Y0", "N0", "N1", "Y0_qc", "N0_qc"]
    assert len(rows) == 2002
    assert float(rows[1][3]) == 1.0 and float(rows[1][6]) == 1.0
    assert float(rows[-1][1]) == pytest.approx(25.0)


def test_dynamics_strategy_columns_and_json(tmp_path):
    assert run(tmp_path, "dynamics", "--s", "10", "--tau-max", "5", "--steps", "10", "--strategy", "r2",
               "--format", "json") == 0
    doc = json.loads((tmp_path / "dynamics.json").read_text())
    assert set(doc["series"]) == {"t", "tau", "Y0", "N0", "N1", "Y0_r2", "N0_r2"}
    assert len(doc["series"]["t"]) == 11


@pytest.mark.parametrize("argv,code", [
    (["spectrum", "--s", "3", "--delta", "1", "--resonance"], 2),
    (["spectrum", "--s", "3", "--omega0", "1"], 2),
    (["spectrum", "--s", "3", "--k", "2"], 2),
    (["spectrum"], 2),
    (["spectrum", "--s", "3", "--g", "-1"], 2),
    (["compare", "--s", "3", "--stride", "0"], 2),
    (["dynamics", "--s", "3"], 2),
    (["dynamics", "--init", "fock:0,0", "--tau-max", "1"], 2),
    (["dynamics", "--init", "coherent:0,1", "--t-max", "1", "--qc"], 2),
    (["dynamics", "--s", "1", "--t-max", "1", "--qc"], 2),
    (["dynamics", "--init", "coherent:0,8", "--t-max", "1", "--s-max", "20"], 4),
    (["bogus"], 2),
])
def test_exit_codes(tmp_path, argv, code):
    assert run(tmp_path, *argv) == code


def test_convergence_exit_code(tmp_path, monkeypatch):
    import shgpla.cli as cli
    from shgpla.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("forced")

    monkeypatch.setattr(cli, "solve", boom)
    assert run(tmp_path, "spectrum", "--s", "4") == 3


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("SHGPLA_OUTDIR", str(tmp_path / "env"))
    monkeypatch.setenv("SHGPLA_WORKERS", "3")
    assert main(["spectrum", "--s", "5"]) == 0
    assert (tmp_path / "env" / "spectrum.csv").exists()
    monkeypatch.setenv("SHGPLA_WORKERS", "zero")
    assert main(["spectrum", "--s", "5"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "shgpla", "spectrum", "--s", "2", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    rows = list(csv.reader(io.StringIO((tmp_path / "spectrum.csv").read_text())))
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([-4, 0, 4], abs=1e-12)
