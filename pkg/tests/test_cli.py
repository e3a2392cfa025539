import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gcqw import experiments
from gcqw.cli import main, parse_values


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    cols = body[0].split(",")
    rows = [r.split(",") for r in body[1:]]
    summary = dict(l[len("# summary "):].split("=", 1) for l in header if l.startswith("# summary "))
    return header, cols, rows, summary


def test_parse_values():
    assert parse_values("0.1,0.2") == [0.1, 0.2]
    assert parse_values("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(parse_values("0.05:0.95:0.05")) == 19


def test_recurrence_sweep(capsys):
    code, out, _ = run(["recurrence-sweep", "--p", "9", "--D", "0.1:0.9:0.1"], capsys)
    assert code == 0
    header, cols, rows, summary = read_csv(out)
    assert header[0] == "# gcqw 0.1.0 recurrence-sweep"
    assert header[1].startswith("# params: {")
    assert cols == ["D", "P_T_simulated", "P_T_formula"]
    assert len(rows) == 9
    assert float(summary["max_abs_error"]) <= 0.01


def test_recurrence_sweep_edges(capsys):
    code, out, _ = run(["recurrence-sweep", "--p", "4", "--D", "0,1"], capsys)
    _, _, rows, _ = read_csv(out)
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[1][1]) == pytest.approx(0.0, abs=1e-12)


def test_multi_recurrence(capsys):
    code, out, _ = run(["multi-recurrence", "--p", "10", "--D", "0.5", "--k-max", "30"], capsys)
    assert code == 0
    _, cols, rows, summary = read_csv(out)
    assert len(rows) == 31
    assert float(summary["max_abs_error"]) <= 0.05
    assert summary["first_min_k_simulated"] == summary["first_min_k_formula"] == "7"


def test_sigma_dynamics_ballistic(capsys):
    code, out, _ = run(["sigma-dynamics", "--p", "4", "--D", "1", "--t-max", "40"], capsys)
    _, _, rows, _ = read_csv(out)
    np.testing.assert_allclose([float(r[1]) for r in rows], np.arange(41), atol=1e-10)


def test_sigma_dynamics_budget(capsys):
    code, _, err = run(["sigma-dynamics", "--p", "4", "--D", "0.5", "--t-max", "5000000"], capsys)
    assert code == 2
    assert "use t_max <=" in err


def test_spectrum_default_N_and_adiabatic_levels(capsys):
    code, out, _ = run(["spectrum", "--p", "3", "--d", "0"], capsys)
    assert code == 0
    header, cols, rows, _ = read_csv(out)
    assert json.loads(header[1][len("# params: "):])["N"] == 21
    E = np.array([float(r[2]) for r in rows])
    np.testing.assert_allclose(np.exp(6j * E), 1.0, atol=1e-9)


def test_spectrum_closed_matches_numeric(capsys):
    code, out, _ = run(["spectrum", "--p", "5", "--q", "2", "--N", "35", "--d", "0:1:0.25"], capsys)
    _, _, rows, summary = read_csv(out)
    assert float(summary["closed_form_max_distance"]) < 1e-8
    assert summary["closed_form_rejected_d"] == "none"
    assert {r[3] for r in rows} == {"numeric", "closed_form"}


def test_spectrum_even_printed_rejected(capsys):
    code, out, _ = run(["spectrum", "--p", "4", "--N", "24", "--d", "0.5"], capsys)
    _, _, rows, summary = read_csv(out)
    assert summary["closed_form_rejected_d"] == "0.5"
    assert {r[3] for r in rows} == {"numeric"}
    code, out, _ = run(["spectrum", "--p", "4", "--N", "24", "--d", "0.5", "--even-form", "corrected"],
                       capsys)
    _, _, rows, summary = read_csv(out)
    assert float(summary["closed_form_max_distance"]) < 1e-8


def test_bloch_compare_trivial_coupling(capsys):
    code, out, _ = run(["bloch-compare", "--D", "0", "--phi", "0.6283185307179586", "--t-max", "20"],
                       capsys)
    assert code == 0
    _, cols, rows, _ = read_csv(out)
    assert cols == ["t", "P_discrete", "P_ode", "P_closed_form"]
    for r in rows:
        t = int(r[0])
        assert float(r[1]) == pytest.approx(1.0 if t % 2 == 0 else 0.0, abs=1e-12)
        assert float(r[2]) == pytest.approx(1.0, abs=1e-12)
        assert float(r[3]) == pytest.approx(1.0, abs=1e-12)


def test_bloch_compare_peaks(capsys):
    code, out, _ = run(["bloch-compare", "--D", "0.25", "--p", "10", "--t-max", "100"], capsys)
    _, _, _, summary = read_csv(out)
    peaks = summary["peaks"].split(";")
    assert [p.split("->")[1].split(":")[0] for p in peaks] == [str(10 * k) for k in range(1, 11)]
    assert float(summary["ode_vs_closed_form"]) < 1e-6


def test_localization(capsys):
    code, out, _ = run(["localization", "--D", "0.5", "--phi", "0.5", "--t-max", "200"], capsys)
    _, _, rows, summary = read_csv(out)
    assert len(rows) == 201
    assert float(summary["sigma_max_formula"]) == pytest.approx(3.40, abs=0.01)


def test_evolve_dump(capsys):
    code, out, _ = run(["evolve", "--D", "0.5", "--p", "4", "--N", "8", "--t-max", "2"], capsys)
    _, cols, rows, summary = read_csv(out)
    assert cols == ["t", "c", "n", "re", "im"]
    assert len(rows) == 3 * 2 * 8
    assert float(summary["final_norm"]) == pytest.approx(1.0, abs=1e-12)
    t0 = [r for r in rows if r[0] == "0" and float(r[3]) != 0]
    assert [(r[1], r[2]) for r in t0] == [("0", "0"), ("1", "0")]


def test_initial_flag(capsys):
    code, out, _ = run(["recurrence-sweep", "--p", "9", "--D", "0.5", "--initial", "0:1,0,0,1"], capsys)
    header, _, _, summary = read_csv(out)
    params = json.loads(header[1][len("# params: "):])
    assert params["initial"]["coin"][1][1] == pytest.approx(math.sqrt(0.5))


def test_json_format(capsys):
    code, out, _ = run(["recurrence-sweep", "--p", "3", "--D", "0.2,0.4", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["command"] == "recurrence-sweep"
    assert doc["columns"] == ["D", "P_T_simulated", "P_T_formula"]
    assert len(doc["rows"]) == 2
    assert "max_abs_error" in doc["summary"]


def test_out_file_deterministic(tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    args = ["recurrence-sweep", "--p", "5", "--D", "0.1:0.9:0.2"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert main(args + ["--out", str(c), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


@pytest.mark.parametrize("argv", [
    ["recurrence-sweep", "--p", "9", "--D", "1.5"],
    ["multi-recurrence", "--p", "10"],
    ["multi-recurrence", "--p", "10", "--D", "0.5", "--d", "0.5"],
    ["bloch-compare", "--D", "0.5", "--t-max", "10"],
    ["spectrum", "--p", "4", "--N", "10", "--d", "0.5"],
    ["recurrence-sweep", "--p", "4", "--q", "2", "--D", "0.5"],
])
def test_usage_errors(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert out == ""
    assert "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["recurrence-sweep", "--p", "9", "--D", "a,b"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["recurrence-sweep", "--p", "9", "--D", "0.5", "--initial", "0:0,0,0,0"])
    assert info.value.code == 2


def test_validation_failure_exit_3(capsys, monkeypatch):
    monkeypatch.setattr(experiments, "NORM_DRIFT_TOL", -1.0)
    code, out, err = run(["recurrence-sweep", "--p", "3", "--D", "0.5"], capsys)
    assert code == 3
    assert out == ""
    diag = json.loads(err)
    assert diag["status"] == "validation_failed"
    assert diag["check"] == "norm_drift"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gcqw", "recurrence-sweep", "--p", "2", "--D", "0.5"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("# gcqw 0.1.0 recurrence-sweep")
