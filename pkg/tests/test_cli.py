"""CLI behavior: payloads, CSV shapes, exit codes, reproducibility."""

import json
import math
from pathlib import Path

import pytest

from cslheat import load_spec, spec_hash
from cslheat.cli import main

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_heat_point_payload(capsys):
    code, out, _ = run(capsys, "heat", "--spec", str(SPECS / "point.json"))
    assert code == 0
    payload = json.loads(out)
    assert payload["command"] == "heat"
    result = payload["result"]
    assert result["reduction_factor"] == pytest.approx(1.0, rel=1e-9)
    assert result["gamma_cm"] == pytest.approx(result["gamma_total"], rel=1e-9)
    assert result["gamma_int"] >= 0.0


def test_payload_spec_hash_traceable(capsys):
    path = SPECS / "cube_large.json"
    code, out, _ = run(capsys, "heat", "--spec", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["spec_hash"] == spec_hash(load_spec(path))
    assert payload["constants_version"] == "codata2018"
    assert payload["quadrature"]["rel_tol"] == 1e-9


def test_mu_zero_row(capsys):
    code, out, _ = run(
        capsys, "mu", "--spec", str(SPECS / "cube_large.json"), "--at", "0,0,0"
    )
    assert code == 0
    rows = json.loads(out)["result"]["rows"]
    assert rows[0]["abs_norm"] == pytest.approx(1.0, rel=1e-12)


def test_mu_sinc_zero_and_row_count(capsys):
    lx = 10e-7
    k0 = 2 * math.pi / lx
    code, out, _ = run(
        capsys,
        "mu", "--spec", str(SPECS / "cube_large.json"), "--csv",
        "--axis", "x", "--k-min", str(k0), "--k-max", str(2 * k0), "--num", "1000",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "kx,ky,kz,re,im,abs_norm"
    assert len(lines) == 1001
    first = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert abs(float(first["abs_norm"])) < 1e-12


def test_mu_requires_points(capsys):
    code, _, err = run(capsys, "mu", "--spec", str(SPECS / "cube_large.json"))
    assert code == 2
    assert "provide" in err


def test_scan_flags_and_csv(capsys):
    code, out, _ = run(
        capsys,
        "scan", "--spec", str(SPECS / "point.json"), "--csv",
        "--rc-min", "1e-8", "--rc-max", "1e-6", "--num", "5",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 6
    assert lines[0].split(",")[0] == "r_c"


def test_bound_zero_power(tmp_path, capsys):
    doc = json.loads((SPECS / "bound.json").read_text())
    doc["task"]["observed_power"] = 0.0
    path = tmp_path / "bound0.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "bound", "--spec", str(path))
    assert code == 0
    result = json.loads(out)["result"]
    assert result["lambda_max"] == 0.0
    assert result["unbounded"] is False


def test_bound_round_trip(capsys):
    code, out, _ = run(capsys, "bound", "--spec", str(SPECS / "bound.json"))
    assert code == 0
    result = json.loads(out)["result"]
    assert result["lambda_max"] > 0.0


def test_exit_2_on_malformed_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "heat", "--spec", str(bad))
    assert code == 2
    assert "spec error" in err


def test_exit_2_on_invalid_value(tmp_path, capsys):
    doc = json.loads((SPECS / "point.json").read_text())
    doc["csl"]["r_c"] = 0.0
    path = tmp_path / "rc0.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "heat", "--spec", str(path))
    assert code == 2
    assert "csl.r_c" in err


def test_exit_2_on_missing_file(capsys):
    code, _, _ = run(capsys, "heat", "--spec", "/nonexistent/spec.json")
    assert code == 2


def test_exit_2_on_missing_task(tmp_path, capsys):
    code, _, err = run(capsys, "bound", "--spec", str(SPECS / "point.json"))
    assert code == 2
    assert "task.observed_power" in err


def test_exit_3_on_compute_error(tmp_path, capsys):
    doc = json.loads((SPECS / "bound.json").read_text())
    doc["task"]["observed_power"] = -1.0
    path = tmp_path / "neg.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "bound", "--spec", str(path))
    assert code == 3
    assert "compute error" in err


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("CSL_MASSMODEL_THREADS", "4")
    code, out, _ = run(capsys, "heat", "--spec", str(SPECS / "point.json"))
    assert code == 0
    assert json.loads(out)["threads"] == 4
    code, out, _ = run(
        capsys, "heat", "--spec", str(SPECS / "point.json"), "--threads", "2"
    )
    assert json.loads(out)["threads"] == 2


def test_exit_4_on_infeasible_design(tmp_path, capsys):
    doc = json.loads((SPECS / "optimize.json").read_text())
    doc["task"]["n_min"] = 5
    doc["task"]["n_max"] = 4  # empty range
    path = tmp_path / "infeasible.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "optimize", "--spec", str(path))
    assert code == 4
    assert "infeasible" in err


def test_optimize_payload(tmp_path, capsys):
    doc = json.loads((SPECS / "optimize.json").read_text())
    doc["task"]["n_max"] = 4
    path = tmp_path / "opt.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "optimize", "--spec", str(path))
    assert code == 0
    result = json.loads(out)["result"]
    assert len(result["evaluations"]) == 4
    assert result["gamma_cm"] == max(e["gamma_cm"] for e in result["evaluations"])


def test_discriminate_payload(capsys):
    code, out, _ = run(capsys, "discriminate", "--spec", str(SPECS / "discriminate.json"))
    assert code == 0
    result = json.loads(out)["result"]
    assert result["spread"] > 0.1
    assert result["discriminating"] is True
    assert len(result["gamma_cms"]) == 2


def test_lattice_check_passes(capsys):
    code, out, _ = run(capsys, "lattice-check", "--spec", str(SPECS / "point.json"))
    assert code == 0
    result = json.loads(out)["result"]
    assert result["all_passed"] is True


def test_seed_override_recorded_and_effective(capsys):
    code1, out1, _ = run(
        capsys, "heat", "--spec", str(SPECS / "cube_small.json"), "--mc",
        "--seed", "1",
    )
    code2, out2, _ = run(
        capsys, "heat", "--spec", str(SPECS / "cube_small.json"), "--mc",
        "--seed", "2",
    )
    assert code1 == code2 == 0
    p1, p2 = json.loads(out1), json.loads(out2)
    assert p1["quadrature"]["rng_seed"] == 1
    assert p2["quadrature"]["rng_seed"] == 2
    assert p1["result"]["gamma_cm_mc"] != p2["result"]["gamma_cm_mc"]
    assert p1["result"]["gamma_cm"] == p2["result"]["gamma_cm"]


def test_out_file(tmp_path, capsys):
    target = tmp_path / "payload.json"
    code, out, _ = run(
        capsys, "heat", "--spec", str(SPECS / "point.json"), "--out", str(target)
    )
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["command"] == "heat"


@pytest.mark.parametrize(
    "argv",
    [
        ("heat", "--spec", "point.json", "--mc"),
        ("heat", "--spec", "stack16.json"),
        ("mu", "--spec", "cube_large.json", "--k-min", "0", "--k-max", "1e8",
         "--num", "64"),
        ("scan", "--spec", "point.json", "--rc-min", "1e-8", "--rc-max", "1e-6",
         "--num", "4"),
        ("bound", "--spec", "bound.json"),
        ("discriminate", "--spec", "discriminate.json"),
        ("lattice-check", "--spec", "point.json"),
    ],
)
def test_byte_reproducibility(capsys, argv):
    argv = list(argv)
    argv[2] = str(SPECS / argv[2])
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
