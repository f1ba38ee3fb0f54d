"""
Test the sphere-energy command line
"""
import json

import pandas as pd
import pytest

from src.analysis import diffop
from src.cli import run
from src.config.settings import settings


def _json(capsys, argv, code=0):
    assert run(argv) == code
    out = capsys.readouterr().out
    return json.loads(out) if code == 0 else out


def test_expand(capsys):
    """expand reports coefficients and the regime"""
    data = _json(capsys, ["expand", "--kernel", "pframe:3", "--d", "3", "--nmax", "8", "--no-meta"])
    assert len(data["coeffs"]) == 9
    assert data["normalization"] == "gegenbauer"
    assert 6 in data["classification"]["n_minus"]
    assert "meta" not in data


def test_meta_block(capsys):
    """meta is present unless --no-meta"""
    data = _json(capsys, ["classify", "--kernel", "poly:0,1,-1", "--d", "2", "--nmax", "4"])
    assert data["meta"]["subcommand"] == "classify"
    assert data["support_bound"] == 3
    assert data["regime"] == "antipodal"


def test_no_meta_is_byte_identical(capsys):
    """Two runs with --no-meta produce the same bytes"""
    argv = ["energy", "--kernel", "pframe:3", "--config", "builtin:ngon:6", "--no-meta"]
    assert run(argv) == 0
    first = capsys.readouterr().out
    assert run(argv) == 0
    assert capsys.readouterr().out == first


def test_minimize_report_is_deterministic(capsys):
    """The full minimize report is byte-identical across runs and worker counts"""
    argv = ["minimize", "--kernel", "poly:0,0,1", "--d", "3", "--atoms", "3", "--starts", "2",
            "--seed", "5", "--no-meta"]
    outputs = []
    for extra in ([], [], ["--jobs", "2"]):
        assert run(argv + extra) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1] == outputs[2]


def test_energy(capsys):
    """Hexagon energy through the CLI"""
    data = _json(capsys, ["energy", "--kernel", "pframe:3", "--config", "builtin:ngon:6", "--nmax", "40", "--no-meta"])
    assert data["energy"] == pytest.approx(5 / 12, rel=1e-14)
    assert data["spectral_energy"] == pytest.approx(5 / 12, abs=2e-5)
    assert data["sigma_energy"] > data["energy"]


def test_potential(capsys):
    """potential reports the support extremes"""
    data = _json(capsys, ["potential", "--kernel", "poly:0,0,1", "--config", "builtin:onb:3", "--grid", "100"])
    assert data["constancy_gap"] == pytest.approx(0.0, abs=1e-14)
    assert data["support_min_eigenvalue"] == pytest.approx(1.0)


def test_minimize(capsys, tmp_path):
    """minimize writes a report and traces"""
    out = tmp_path / "min.json"
    argv = ["minimize", "--kernel", "poly:0,0,1", "--d", "3", "--atoms", "3", "--starts", "2",
            "--trace", str(tmp_path / "traces"), "--out", str(out)]
    assert run(argv) == 0
    data = json.loads(out.read_text())
    assert data["best_energy"] == pytest.approx(1 / 3, abs=1e-8)
    assert (tmp_path / "traces" / "start0.csv").exists()


def test_reduce_from_config(capsys):
    """reduce --config keeps the support within the bound"""
    data = _json(capsys, ["reduce", "--kernel", "poly:0,1,-1", "--config", "builtin:ngon:8", "--nmax", "4", "--no-meta"])
    assert data["final_support"] <= data["support_bound"] == 3
    assert data["energy_after"] <= data["energy_before"] + 1e-12


def test_reduce_without_config_needs_atoms(capsys):
    """Running the optimizer first needs --d and --atoms"""
    assert run(["reduce", "--kernel", "poly:0,1,-1"]) == 2


def test_witness(capsys):
    """witness reports a negative form"""
    data = _json(capsys, ["witness", "--p", "3", "--d", "3", "--no-meta"])
    assert data["quadratic_form_value"] < 0
    assert data["hadamard_bound"] == 4
    assert data["value_source"] == "series"
    assert data["direct_within_bound"]


def test_witness_scan(tmp_path):
    """witness --scan writes a CSV table"""
    out = tmp_path / "scan.csv"
    assert run(["witness", "--scan", "0.5", "2.5", "0.5", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame["status"]) == ["ok", "ok", "ok", "even", "ok"]


def test_verify_diffop(capsys, tmp_path):
    """verify-diffop passes and writes the verdict matrix"""
    csv = tmp_path / "verdicts.csv"
    data = _json(capsys, ["verify-diffop", "--k", "1", "--d", "3", "--p-grid", "2.5", "3", "--csv", str(csv)])
    assert data["passed"]
    assert pd.read_csv(csv, index_col=0).shape == (2, 10)


def test_designs(capsys):
    """designs lists builtins or reports design defects"""
    data = _json(capsys, ["designs", "--no-meta"])
    assert "icosahedron" in data["builtins"]
    data = _json(capsys, ["designs", "--config", "builtin:icosahedron", "--nmax", "5", "--no-meta"])
    assert max(data["design_defect"].values()) < 1e-7


@pytest.mark.parametrize(
    "argv",
    [
        ["witness", "--p", "4"],
        ["witness", "--p", "3", "--eps", "1.0"],
        ["expand", "--kernel", "bogus", "--d", "3"],
        ["energy", "--kernel", "pframe:3", "--config", "missing.csv"],
        ["minimize", "--kernel", "pframe:3", "--d", "3", "--atoms", "0"],
    ],
)
def test_domain_errors_exit_2(capsys, argv):
    """Bad input exits with status 2 and a message on stderr"""
    assert run(argv) == 2
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exits_3(capsys):
    """Harmonic dimensions beyond double precision exit with status 3"""
    assert run(["expand", "--kernel", "poly:1", "--d", "60", "--nmax", "20"]) == 3
    assert "numerical failure" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["expand", "--d", "3"], ["nope"]])
def test_usage_errors_exit_1(capsys, argv):
    """argparse usage errors exit with status 1"""
    assert run(argv) == 1


def test_verify_diffop_violations_exit_3(capsys, monkeypatch):
    """A sign contradiction is reported and fails the run"""
    monkeypatch.setattr(diffop, "expected_sign", lambda k, p: "positive")
    assert run(["verify-diffop", "--k", "1", "--d", "3", "--p-grid", "3", "--no-meta"]) == 3
    captured = capsys.readouterr()
    data = json.loads(captured.out)
    assert not data["passed"]
    assert data["violations"]
    assert "sign violations" in captured.err


def test_schema_failure_exits_2(capsys, monkeypatch, tmp_path):
    """A report that fails its schema exits with status 2"""
    (tmp_path / "classify.schema.json").write_text(json.dumps({"type": "object", "required": ["missing_field"]}))
    monkeypatch.setattr(settings, "schemas_dir", tmp_path)
    assert run(["classify", "--kernel", "poly:0,1,-1", "--d", "2", "--nmax", "4", "--no-meta"]) == 2
    assert "missing_field" in capsys.readouterr().err
