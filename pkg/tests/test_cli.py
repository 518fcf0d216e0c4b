import json

from srcurv.cli import run


def test_validate_exit_zero(capsys):
    code = run(["validate", "--model", "heisenberg", "--points", "100",
                "--tol", "1e-9"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] is True
    assert rep["tool"] == "srcurv"
    assert "config_hash" in rep


def test_verdict_failure_exit_one(capsys):
    # an absurd tolerance turns residual roundoff into a verdict failure
    code = run(["verify-bochner", "--model", "su2", "--fields", "2",
                "--points", "3", "--tol", "1e-18"])
    assert code == 1
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] is False


def test_usage_errors_exit_two(tmp_path, capsys):
    assert run(["validate", "--model", "nosuchmodel"]) == 2
    assert run(["validate"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{definitely not json")
    assert run(["validate", "--structure", str(bad)]) == 2
    capsys.readouterr()


def test_constants_deterministic_bytes(capsys):
    run(["constants", "--model", "su2"])
    first = capsys.readouterr().out
    run(["constants", "--model", "su2"])
    second = capsys.readouterr().out
    assert first == second
    rep = json.loads(first)
    assert rep["results"]["D"] == 8.0
    assert abs(rep["results"]["diameter_bound"] - 26.657297628950193) < 1e-9
    assert rep["results"]["lambda1_bound"] == 1.6


def test_output_formats_and_file(tmp_path, capsys):
    out = tmp_path / "rep.csv"
    code = run(["certify", "--model", "heisenberg", "--points", "20",
                "--format", "csv", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("key,value")
    assert "results.min_r_margin" in text
    code = run(["certify", "--model", "heisenberg", "--points", "20",
                "--format", "text"])
    assert code == 0
    assert "passed" in capsys.readouterr().out


def test_geodesic_csv_export(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = run(["geodesic", "--model", "heisenberg", "--x", "0,0,0",
                "--u", "1,0", "--a", "1.0", "--time", "1.0",
                "--steps", "100", "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,x0,x1,x2,u0,u1,a0"
    assert len(lines) == 102


def test_distance_command(capsys):
    code = run(["distance", "--model", "heisenberg", "--x", "0,0,0",
                "--y", "1,0,0"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert abs(rep["results"]["distance"] - 1.0) < 1e-6
    assert rep["results"]["lower_bound"] == 1.0


def test_simulate_command_with_export(tmp_path, capsys):
    out = tmp_path / "ens.srhe"
    code = run(["simulate", "--model", "heisenberg", "--paths", "2000",
                "--dt", "1e-3", "--time", "0.2", "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    blob = out.read_bytes()
    assert blob[:4] == b"SRHE"


def test_lambda1_command(capsys):
    code = run(["lambda1", "--model", "sphere2"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert abs(rep["results"]["lambda1"] - 2.0) < 0.04
    assert run(["lambda1", "--model", "euclidean2"]) == 2
    capsys.readouterr()


def test_structure_file_through_cli(tmp_path, capsys):
    from srcurv import models, srsio

    path = tmp_path / "h.json"
    srsio.save_structure(models.build("heisenberg"), path)
    code = run(["validate", "--structure", str(path), "--points", "20"])
    assert code == 0
    capsys.readouterr()
