import csv
import io
import json

import numpy as np
import pytest

from gzstokes.cli import main, matrix_from_json, matrix_to_json


def run(argv, monkeypatch=None):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, json.loads(out.getvalue()) if out.getvalue() else None


@pytest.fixture
def write_matrix(tmp_path):
    def _write(M, name="a.json"):
        path = tmp_path / name
        path.write_text(json.dumps(matrix_to_json(np.asarray(M, dtype=complex))))
        return str(path)

    return _write


def test_matrix_json_round_trip():
    M = np.array([[1 + 2j, -3], [0.5j, 4]])
    assert np.array_equal(matrix_from_json(matrix_to_json(M)), M)


def test_connection_zero_and_levi(write_matrix):
    code, doc = run(["connection", "--a", write_matrix(np.zeros((3, 3)))])
    assert code == 0
    assert np.allclose(matrix_from_json(doc["C"]), np.eye(3), atol=1e-12)
    code, doc = run(["connection", "--a", write_matrix(np.diag([0.3, -0.2]))])
    assert code == 0
    assert np.allclose(matrix_from_json(doc["C"]), np.eye(2), atol=1e-8)
    assert set(doc) >= {"C", "b_minus", "b_plus", "middle", "diagnostics"}


def test_connection_resonant_exit_code(write_matrix):
    code, doc = run(["connection", "--a", write_matrix(np.diag([0, 2j * np.pi]))])
    assert code == 2 and doc["error"] == "RESONANT"


def test_connection_degenerate_irregular_type(write_matrix):
    code, doc = run(["connection", "--lambda-a", "1", "--lambda-b", "1", "--a", write_matrix(np.eye(2))])
    assert code == 2 and doc["error"] == "DEGENERATE_IRREGULAR_TYPE"


def test_connection_solver_flags(write_matrix):
    A = [[0, 1], [1, 0]]
    code, doc = run(["connection", "--lambda-a", "1", "--lambda-b", "0", "--a", write_matrix(A), "--order", "40", "--tol", "1e-11", "--oracle"])
    assert code == 0
    assert doc["diagnostics"]["oracle_deviation"] <= 1e-7
    C = matrix_from_json(doc["C"])
    assert np.linalg.norm(C.conj().T @ C - np.eye(2)) <= 1e-8


def test_gamma_and_gz(write_matrix):
    code, doc = run(["gamma", "--a", write_matrix(np.zeros((2, 2)))])
    assert code == 0
    assert np.allclose(matrix_from_json(doc["gamma"]), np.eye(2))
    assert doc["gz"] == [[0.0], [0.0, 0.0]] and np.allclose(np.concatenate(doc["log_gz"]), 0)
    code, doc = run(["gamma", "--a", write_matrix(np.diag([1.0, 2.0]))])
    assert np.allclose(matrix_from_json(doc["gamma"]), np.diag([np.e, np.e**2]))
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    code, doc = run(["gz", "--a", write_matrix((X + X.conj().T) / 4)])
    assert code == 0 and doc["max_difference"] <= 1e-7


def test_gamma_rejects_non_hermitian(write_matrix):
    code, doc = run(["gamma", "--a", write_matrix([[0, 1], [0, 0]])])
    assert code == 2 and doc["error"] == "NOT_HERMITIAN"


def test_configuration_errors(tmp_path, write_matrix):
    assert run(["verify", "--suite", "nope"])[0] == 3
    assert run(["verify", "--suite", "gz", "--n", "9"])[0] == 3
    assert run(["connection", "--a", str(tmp_path / "missing.json")])[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": 2}')
    assert run(["connection", "--a", str(bad)])[0] == 3
    assert run(["not-a-command"])[0] == 3


def test_config_file_via_env(tmp_path, monkeypatch, write_matrix):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"solver": {"max_steps": 2}}))
    monkeypatch.setenv("GZSTOKES_CONFIG", str(cfg))
    rng = np.random.default_rng(1)
    X = rng.normal(size=(2, 2))
    code, doc = run(["connection", "--a", write_matrix(X + X.T)])
    assert code == 2 and doc["error"] == "STEP_LIMIT"
    cfg.write_text(json.dumps({"solver": {"bogus": 1}}))
    assert run(["connection", "--a", write_matrix(X + X.T)])[0] == 3


def test_verify_unitarity_passes_and_is_deterministic():
    argv = ["verify", "--suite", "unitarity", "--n", "2", "--samples", "50", "--seed", "7", "--no-timing"]
    out1, out2 = io.StringIO(), io.StringIO()
    assert main(argv, out=out1) == 0
    assert main(argv, out=out2) == 0
    assert out1.getvalue() == out2.getvalue()
    doc = json.loads(out1.getvalue())
    assert doc["pass"] and doc["max_residual"] <= 1e-7 and len(doc["residuals"]) == 50
    assert doc["config"]["tolerances"]["sts_real_form_constant"] == 2.0


def test_verify_gz_n3():
    code, doc = run(["verify", "--suite", "gz", "--n", "3", "--samples", "5", "--seed", "1"])
    assert code == 0 and doc["pass"]


def test_verify_gauge_constant_fails():
    code, doc = run(["verify", "--suite", "gauge", "--n", "2", "--samples", "3", "--rho", "constant"])
    assert code == 1 and not doc["pass"]


def test_verify_csv(tmp_path):
    path = tmp_path / "out.csv"
    code, _ = run(["verify", "--suite", "unitarity", "--n", "2", "--samples", "2", "--csv", str(path)])
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert sum(r["section"] == "residual" for r in rows) == 2
    conv = [r for r in rows if r["section"] == "convergence"]
    assert len(conv) == 2 * 5
