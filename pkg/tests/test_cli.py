import io
import json
import subprocess
import sys

import numpy as np
import pytest

from h3kernel.cli import run
from h3kernel.csvio import read_csv, write_csv
from h3kernel.fit import FitParams, synthetic_dataset
from h3kernel.kernel import eval_kernel_origin, log_kernel
from h3kernel.params import DiffusionParams


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_eval_origin_example():
    code, out, _ = call("eval", "--rho", "1", "--rho0", "0", "--t", "1", "--D", "1")
    assert code == 0
    assert float(out) == eval_kernel_origin(1.0, DiffusionParams(1.0, 1.0)).value


def test_eval_log():
    code, out, _ = call("eval", "--rho", "2", "--rho0", "0.5", "--t", "0.3", "--D", "2", "--log")
    assert code == 0
    assert float(out) == log_kernel(2.0, 0.5, 0.6)


def test_missing_option_is_usage_error():
    code, out, err = call("eval", "--rho", "1", "--t", "1")
    assert code == 1
    assert out == ""
    assert "usage:" in err and "--D" in err


@pytest.mark.parametrize("argv", [
    ["eval", "--rho", "-1", "--t", "1", "--D", "1"],
    ["eval", "--rho", "1", "--t", "0", "--D", "1"],
    ["eval", "--rho", "nan", "--t", "1", "--D", "1"],
    ["table", "--rho-max", "2", "--n", "0", "--t", "1", "--D", "1"],
    ["table", "--rho-min", "3", "--rho-max", "2", "--n", "5", "--t", "1", "--D", "1"],
    ["check", "--suite", "nope"],
    ["check", "--tol", "unknown.metric=1"],
    ["check", "--tol", "novalue"],
    ["bogus"],
    [],
])
def test_usage_errors(argv):
    code, _, err = call(*argv)
    assert code == 1
    assert "usage:" in err


def test_table_round_trip():
    code, out, _ = call("table", "--rho-min", "0", "--rho-max", "5", "--n", "11",
                        "--rho0", "0.5", "--t", "0.7", "--D", "1.5")
    assert code == 0
    meta, header, rows = read_csv(io.StringIO(out))
    assert header == ["rho", "density", "log_density"]
    rows = np.array(rows)
    assert np.array_equal(rows[:, 2], log_kernel(rows[:, 0], 0.5, 1.5 * 0.7))
    assert np.array_equal(rows[:, 1], np.exp(rows[:, 2]))
    assert meta == {"rho0": "0.5", "t": "0.69999999999999996", "D": "1.5"}


def test_table_golden_lines():
    code, out, _ = call("table", "--rho-max", "2", "--n", "3", "--t", "1", "--D", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[3] == "rho,density,log_density"
    assert lines[5] == "1,0.0054727407763734024,-5.2079757320251314"


def test_check_normalization_passes():
    code, out, _ = call("check", "--suite", "normalization")
    assert code == 0
    line = out.splitlines()[0]
    assert line.startswith("suite=normalization metric=max_abs_error value=")
    assert line.endswith("status=PASS")
    assert float(line.split("value=")[1].split()[0]) < 1e-8
    assert out.splitlines()[-1].endswith("status=PASS")


def test_check_failure_exit_code():
    code, out, _ = call("check", "--suite", "limit", "--tol", "limit.max_rel_diff=1e-30")
    assert code == 2
    assert "status=FAIL" in out


def test_sample_csv(tmp_path):
    target = tmp_path / "s.csv"
    code, _, _ = call("sample", "--n", "50", "--method", "cdf", "--rho0", "1", "--t", "0.5",
                      "--D", "1", "--out", str(target))
    assert code == 0
    meta, header, rows = read_csv(target)
    assert header == ["rho"] and len(rows) == 50
    assert meta["seed"] == "42" and meta["method"] == "cdf"
    _, again, _ = call("sample", "--n", "50", "--rho0", "1", "--t", "0.5", "--D", "1")
    assert again == target.read_text()


def test_sample_sde():
    code, out, _ = call("sample", "--n", "10", "--method", "sde", "--t", "0.01", "--D", "1",
                        "--step", "1e-3", "--seed", "7")
    assert code == 0
    meta, _, rows = read_csv(io.StringIO(out))
    assert meta["method"] == "sde" and meta["seed"] == "7" and len(rows) == 10


def test_sample_step_size_error_is_runtime():
    code, _, err = call("sample", "--n", "10", "--method", "sde", "--t", "0.01", "--D", "1",
                        "--step", "1e-3", "--epsilon", "1e-6")
    assert code == 3
    assert "StepSizeError" in err


def test_spectrum_csv():
    code, out, _ = call("spectrum", "--mass", "0.14", "--rho0", "1", "--Dt", "0.5",
                        "--pt-min", "0.1", "--pt-max", "3", "--n", "5")
    assert code == 0
    meta, header, rows = read_csv(io.StringIO(out))
    assert header == ["pt", "density"]
    assert len(rows) == 5 and all(r[1] > 0 for r in rows)
    assert meta["Dt"] == "0.5"


def test_fit_report(tmp_path):
    pt = np.geomspace(0.2, 6.0, 6)
    d = synthetic_dataset(0.14, pt, FitParams(0.8, 1.2, 100.0), rel_noise=0.0)
    f = tmp_path / "d.csv"
    write_csv(f, {"pt": d.pt, "yield": d.yields, "sigma": d.sigma})
    code, out, _ = call("fit", "--data", str(f), "--mass", "0.14", "--dt0", "0.8", "--rho00", "1.2")
    assert code == 0
    rep = json.loads(out)
    assert rep["converged"] is True
    assert rep["n_dof"] == 3
    assert rep["params.dt_product"] == pytest.approx(0.8, rel=1e-3)
    assert rep["params.rho0"] == pytest.approx(1.2, rel=1e-3)
    assert rep["params.norm"] == pytest.approx(100.0, rel=1e-3)


def test_fit_empty_data_is_runtime_error(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("pt,yield,sigma\n")
    code, _, err = call("fit", "--data", str(f), "--mass", "0.14")
    assert code == 3
    assert "DataError" in err


def test_fit_missing_file_is_runtime_error(tmp_path):
    code, _, _ = call("fit", "--data", str(tmp_path / "none.csv"), "--mass", "0.14")
    assert code == 3


def test_module_entry_point():
    cp = subprocess.run([sys.executable, "-m", "h3kernel", "eval", "--rho", "1", "--t", "1",
                         "--D", "1"], capture_output=True, text=True)
    assert cp.returncode == 0, cp.stderr
    assert float(cp.stdout) == eval_kernel_origin(1.0, DiffusionParams(1.0, 1.0)).value


def test_module_usage_exit_code():
    cp = subprocess.run([sys.executable, "-m", "h3kernel", "eval", "--rho", "1", "--t", "1"],
                        capture_output=True, text=True)
    assert cp.returncode == 1
    assert "usage:" in cp.stderr


def test_help():
    cp = subprocess.run([sys.executable, "-m", "h3kernel", "--help"], capture_output=True, text=True)
    assert cp.returncode == 0
    assert "check" in cp.stdout and "spectrum" in cp.stdout
