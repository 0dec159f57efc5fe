"""The command-line interface: exit codes, artifacts, determinism."""

import json

import numpy as np
import pytest

from dpkit.cli import main


def write_config(tmp_path, name="run.json", **extra):
    data = {
        "mesh": {"kind": "interval", "n": 32},
        "fields": {"p": 2.0, "q": 3.0, "mu": 1.0, "dim": 3},
        "output_dir": "out",
        "seed": 0,
    }
    data.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def read_report(tmp_path):
    return json.loads((tmp_path / "out" / "report.json").read_text())


# ---------------------------------------------------------------------------
# validate


def test_validate_default_gate_passes(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["validate", str(path), "--no-timestamp"]) == 0
    rep = read_report(tmp_path)
    assert rep["passed"] is True
    assert rep["reports"]["H"]["passed"] is True
    assert "Hprime" in rep["reports"]  # all checks always reported


def test_validate_failing_gate_exits_one(tmp_path):
    path = write_config(tmp_path)
    # q/p = 1.5 > 1 + 1/3 violates the ratio condition
    assert main(["validate", str(path), "--check", "Hprime", "--no-timestamp"]) == 1


def test_validate_reports_witness_when_q_supercritical(tmp_path):
    path = write_config(
        tmp_path, fields={"p": 2.0, "q": 6.5, "mu": 1.0, "dim": 3}
    )  # p* = 6 < q
    assert main(["validate", str(path), "--check", "H", "--no-timestamp"]) == 1
    rep = read_report(tmp_path)
    checks = {c["name"]: c for c in rep["reports"]["H"]["checks"]}
    assert not checks["q < p*"]["passed"]
    assert "witness" in checks["q < p*"]


def test_validate_malformed_config_exits_two(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{oops")
    assert main(["validate", str(path)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


# ---------------------------------------------------------------------------
# norm


def test_norm_constant_two(tmp_path):
    cfgpath = write_config(
        tmp_path, fields={"p": 2.0, "q": 2.0, "mu": 0.0, "dim": 3}
    )
    fn = tmp_path / "u.csv"
    rows = ["node_index,value"] + [f"{i},2.0" for i in range(33)]
    fn.write_text("\n".join(rows) + "\n")
    assert main(["norm", str(cfgpath), "--input", str(fn), "--no-timestamp"]) == 0
    rep = read_report(tmp_path)
    assert rep["norm"] == pytest.approx(2.0, abs=1e-10)
    assert rep["modular"]["total"] == pytest.approx(4.0, rel=1e-12)


def test_norm_plastic_number_fixture(tmp_path):
    cfgpath = write_config(tmp_path)
    fn = tmp_path / "u.csv"
    rows = ["node_index,value"] + [f"{i},1.0" for i in range(33)]
    fn.write_text("\n".join(rows) + "\n")
    assert main(["norm", str(cfgpath), "--input", str(fn), "--no-timestamp"]) == 0
    assert read_report(tmp_path)["norm"] == pytest.approx(1.3247180, abs=1e-6)


def test_norm_zero_function(tmp_path):
    cfgpath = write_config(tmp_path)
    fn = tmp_path / "u.csv"
    rows = ["node_index,value"] + [f"{i},0.0" for i in range(33)]
    fn.write_text("\n".join(rows) + "\n")
    assert main(["norm", str(cfgpath), "--input", str(fn), "--no-timestamp"]) == 0
    assert read_report(tmp_path)["norm"] == 0.0


def test_norm_node_mismatch_exits_two(tmp_path):
    cfgpath = write_config(tmp_path)
    fn = tmp_path / "u.csv"
    fn.write_text("node_index,value\n0,1.0\n1,2.0\n")
    assert main(["norm", str(cfgpath), "--input", str(fn)]) == 2


# ---------------------------------------------------------------------------
# eigen


def test_eigen_linear_interval(tmp_path):
    cfgpath = write_config(tmp_path, mesh={"kind": "interval", "n": 128})
    out = tmp_path / "eig.csv"
    code = main(
        ["eigen", str(cfgpath), "--r", "2.0", "--eigenfunction", str(out), "--no-timestamp"]
    )
    assert code == 0
    rep = read_report(tmp_path)
    assert rep["lambda"] == pytest.approx(np.pi**2, rel=1e-3)
    assert rep["r"] == 2.0
    assert rep["iterations"] >= 1
    assert out.exists()


def test_eigen_rejects_bad_exponent(tmp_path):
    cfgpath = write_config(tmp_path)
    assert main(["eigen", str(cfgpath), "--r", "0.5"]) == 2


# ---------------------------------------------------------------------------
# solve


def test_solve_builtin_poisson(tmp_path):
    cfgpath = write_config(
        tmp_path,
        mesh={"kind": "interval", "n": 64},
        problem={"kind": "builtin", "name": "poisson-1d"},
    )
    assert main(["solve", str(cfgpath), "--no-timestamp"]) == 0
    rep = read_report(tmp_path)
    assert rep["converged"] is True
    assert rep["residual"] <= 1e-10
    assert rep["l2_error"] <= 2e-4
    out = tmp_path / "out"
    for artifact in ("solution.csv", "nodes.csv", "elements.csv", "boundary.csv"):
        assert (out / artifact).exists()
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "node_index,x,value"


def test_solve_rhs_expression_with_vtk(tmp_path):
    cfgpath = write_config(tmp_path, problem={"kind": "rhs", "expr": "sin(pi * x)"})
    assert main(["solve", str(cfgpath), "--vtk", "--no-timestamp"]) == 0
    assert (tmp_path / "out" / "solution.vtk").exists()
    rep = read_report(tmp_path)
    assert rep["residual_recomputed"] == pytest.approx(rep["residual"], rel=1e-14, abs=1e-300)


def test_solve_without_problem_exits_two(tmp_path):
    cfgpath = write_config(tmp_path)
    assert main(["solve", str(cfgpath)]) == 2


def test_solve_bad_margin_exits_one(tmp_path):
    cfgpath = write_config(
        tmp_path,
        problem={
            "kind": "term",
            "expr": "0.1 * s",
            "a1": 0.1,
            "a2": 0.1,
            "b1": 2.0,
            "b2": 0.0,
            "r": 2.0,
        },
    )
    assert main(["solve", str(cfgpath)]) == 1


def test_solve_numeric_failure_exits_three(tmp_path):
    cfgpath = write_config(
        tmp_path,
        problem={
            "kind": "term",
            "expr": "100 * s + 1",
            "a1": 0.0,
            "a2": 100.0,
            "b1": 0.01,
            "b2": 0.01,
            "r": 2.0,
        },
    )
    assert main(["solve", str(cfgpath)]) == 3


def test_solve_output_dir_override(tmp_path):
    cfgpath = write_config(
        tmp_path, problem={"kind": "builtin", "name": "poisson-1d"},
        mesh={"kind": "interval", "n": 16},
    )
    other = tmp_path / "elsewhere"
    assert main(
        ["solve", str(cfgpath), "--output-dir", str(other), "--no-timestamp"]
    ) == 0
    assert (other / "report.json").exists()


# ---------------------------------------------------------------------------
# verify


def test_verify_subset_and_list(tmp_path, capsys):
    assert main(["verify", write_config(tmp_path).as_posix(), "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert "modular-unit-ball" in names
    cfgpath = write_config(tmp_path)
    code = main(
        [
            "verify",
            str(cfgpath),
            "--names",
            "modular-unit-ball,fem-partition-of-unity",
            "--no-timestamp",
        ]
    )
    assert code == 0
    rep = read_report(tmp_path)
    assert rep["passed"] is True
    assert len(rep["properties"]) == 2


def test_verify_deterministic_bytes(tmp_path):
    cfgpath = write_config(tmp_path)
    args = [
        "verify",
        str(cfgpath),
        "--names",
        "modular-unit-ball,operator-strict-monotonicity",
        "--no-timestamp",
    ]
    assert main(args) == 0
    first = (tmp_path / "out" / "report.json").read_bytes()
    assert main(args) == 0
    assert (tmp_path / "out" / "report.json").read_bytes() == first


def test_verify_seed_override_changes_details(tmp_path):
    cfgpath = write_config(tmp_path)
    base = ["verify", str(cfgpath), "--names", "modular-unit-ball", "--no-timestamp"]
    assert main(base) == 0
    rep_a = read_report(tmp_path)
    assert main(base + ["--seed", "7"]) == 0
    rep_b = read_report(tmp_path)
    assert rep_a["seed"] == 0 and rep_b["seed"] == 7


# ---------------------------------------------------------------------------
# convergence


def test_convergence_poisson_1d(tmp_path):
    cfgpath = write_config(
        tmp_path, problem={"kind": "builtin", "name": "poisson-1d"}
    )
    code = main(
        ["convergence", str(cfgpath), "--meshes", "16,32,64", "--no-timestamp"]
    )
    assert code == 0
    rep = read_report(tmp_path)
    assert len(rep["l2_errors"]) == 3
    assert all(3.5 <= r <= 4.5 for r in rep["ratios"])


def test_convergence_requires_exact_solution(tmp_path):
    cfgpath = write_config(tmp_path, problem={"kind": "builtin", "name": "dp-1d"})
    assert main(["convergence", str(cfgpath), "--meshes", "8,16"]) == 2


def test_convergence_bad_mesh_list(tmp_path):
    cfgpath = write_config(tmp_path)
    assert main(["convergence", str(cfgpath), "--case", "poisson-1d", "--meshes", "8"]) == 2
    assert main(["convergence", str(cfgpath), "--case", "poisson-1d", "--meshes", "a,b"]) == 2


# ---------------------------------------------------------------------------
# global flags


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_threads_flag_sets_environment(tmp_path, monkeypatch):
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    cfgpath = write_config(tmp_path)
    assert main(["--threads", "2", "validate", str(cfgpath), "--no-timestamp"]) == 0
    import os

    assert os.environ["OMP_NUM_THREADS"] == "2"


def test_threads_env_var_equivalent(tmp_path, monkeypatch):
    monkeypatch.setenv("DPKIT_THREADS", "3")
    monkeypatch.delenv("MKL_NUM_THREADS", raising=False)
    cfgpath = write_config(tmp_path)
    assert main(["validate", str(cfgpath), "--no-timestamp"]) == 0
    import os

    assert os.environ["MKL_NUM_THREADS"] == "3"


def test_threads_rejects_garbage(monkeypatch):
    monkeypatch.setenv("DPKIT_THREADS", "lots")
    with pytest.raises(SystemExit):
        main(["verify", "whatever.json", "--list"])
