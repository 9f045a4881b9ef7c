"""End-to-end command tests, run in process through ``octabif.cli.main``.

Covers output schemas, exit codes, and byte-for-byte determinism of the
file formats.
"""

import csv
import json
import os

import pytest

from octabif.cli import EXIT_DOMAIN, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main

T2 = "0.25,0.333333333333,0.333333333333,1.0"
T3 = "0.5,0.5,0.333333333333,1.0"


def test_exit_code_constants():
    assert (EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DOMAIN) == (0, 1, 2, 3)


def test_singular_json_schema(capsys):
    assert main(["singular", "--t", T3, "--j", "2"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["j"] == 2.0
    assert len(doc["points"]) == 4
    us = sorted(p["u"] for p in doc["points"])
    assert us == pytest.approx([-2.23607, 1.56842, 2.23607, 2.74592], abs=1e-4)
    for p in doc["points"]:
        assert p["type"] in ("elliptic-regular", "hyperbolic-regular")
        assert p["branch"] in ("theta2=0", "theta2=pi")
        assert set(p) == {"u", "v", "type", "branch", "h", "degeneracy_margin"}


def test_singular_csv_rows(tmp_path):
    out = tmp_path / "pts.csv"
    code = main(["singular", "--t", T3, "--j", "2",
                 "--format", "csv", "--output", str(out)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert {r["type"] for r in rows} == {"elliptic-regular", "hyperbolic-regular"}
    # shortest round-trip floats survive a parse exactly
    for r in rows:
        assert repr(float(r["u"])) == r["u"]


def test_singular_rejects_degenerate_family(capsys):
    code = main(["singular", "--t", "0,0.3,0.3,1", "--j", "2"])
    assert code == EXIT_NUMERIC
    assert "t1 = 0" in capsys.readouterr().err


def test_usage_errors():
    assert main(["singular", "--t", "1,2,3", "--j", "2"]) == EXIT_USAGE  # three slots
    assert main(["no-such-command"]) == EXIT_USAGE
    assert main(["singular", "--j", "2"]) == EXIT_USAGE  # missing --t


def test_domain_error_exit(tmp_path):
    code = main(["fibre", "--t", T3, "--j", "5", "--h", "1.0",
                 "--out-prefix", str(tmp_path / "f")])
    assert code == EXIT_DOMAIN


def test_classify_invariant(capsys):
    assert main(["classify-invariant", "--t", T2]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["points"]) == 4
    assert {p["type"] for p in doc["points"]} == {"elliptic-elliptic"}
    assert sorted(p["chart"] for p in doc["points"]) == [2, 3, 6, 7]


def test_fibre_outputs(tmp_path, capsys):
    prefix = str(tmp_path / "fib")
    code = main(["fibre", "--t", T3, "--j", "2", "--h", "auto",
                 "--grid", "400", "--svg", "--out-prefix", prefix])
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "fib_summary.json").read_text())
    assert summary["k"] == 3
    assert summary["n_components"] == 1
    assert summary["vertices"] == 2
    assert summary["edges"] == 4
    assert summary["h"] == pytest.approx(1.3891784, abs=1e-4)
    assert not summary["open_unresolved"]
    rows = list(csv.DictReader((tmp_path / "fib_contour.csv").open()))
    assert rows
    assert set(rows[0]) == {"component_id", "polyline_id", "u", "v"}
    svg = (tmp_path / "fib.svg").read_text()
    assert svg.startswith("<svg")
    assert "<polyline" in svg


def test_fibre_empty_level_warns(tmp_path, capsys):
    prefix = str(tmp_path / "none")
    code = main(["fibre", "--t", "0.001,0,0,0", "--j", "1.5", "--h", "auto",
                 "--grid", "400", "--out-prefix", prefix])
    assert code == EXIT_OK
    assert "no hyperbolic" in capsys.readouterr().err.lower()
    summary = json.loads((tmp_path / "none_summary.json").read_text())
    assert summary["h"] is None
    assert summary["components"] == []
    assert summary["k"] == 0
    # contour file exists with just a header
    assert (tmp_path / "none_contour.csv").read_text().strip() == "component_id,polyline_id,u,v"


def test_bifurcation_csv_and_determinism(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    argv = ["bifurcation", "--t", T3, "--j-min", "1.9", "--j-max", "2.1",
            "--steps", "40", "--format", "csv"]
    assert main(argv + ["--output", str(a)]) == EXIT_OK
    os.environ["OCTABIF_THREADS"] = "1"
    try:
        assert main(argv + ["--output", str(b)]) == EXIT_OK
    finally:
        del os.environ["OCTABIF_THREADS"]
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert rows
    assert set(rows[0]) == {"j", "h", "kind", "source"}
    kinds = {r["kind"] for r in rows}
    assert "hyperbolic-regular" in kinds
    assert "elliptic-regular" in kinds


def test_sweep_transitions_file(tmp_path):
    out = tmp_path / "transitions.json"
    code = main(["sweep", "--family", "tau,0,0,0", "--tau-min", "0.9",
                 "--tau-max", "1.0", "--detect", "rank0-type",
                 "--snapshots", "0", "--out-dir", str(tmp_path / "snaps"),
                 "--output", str(out)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["family"] == "tau,0,0,0"
    assert doc["observable"] == "rank0-type"
    assert len(doc["transitions"]) == 1
    assert doc["transitions"][0] == pytest.approx(25 / 26, abs=1e-6)


def test_sweep_writes_snapshots(tmp_path):
    out = tmp_path / "t.json"
    snaps = tmp_path / "snaps"
    code = main(["sweep", "--family", "tau/2,tau/2,tau/3,tau",
                 "--tau-min", "0.30", "--tau-max", "0.42",
                 "--j-min", "0.9", "--j-max", "1.1", "--steps", "40",
                 "--snapshots", "2", "--out-dir", str(snaps),
                 "--output", str(out)])
    assert code == EXIT_OK
    files = sorted(p.name for p in snaps.glob("tau_*.csv"))
    assert len(files) == 2
    rows = list(csv.DictReader((snaps / files[0]).open()))
    assert set(rows[0]) == {"j", "h", "kind", "source"}


def test_verify_passes_and_reports(tmp_path, capsys):
    out = tmp_path / "verify.json"
    code = main(["verify", "--seed", "42", "--samples", "60",
                 "--output", str(out)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert doc["seed"] == 42
    names = {c["name"] for c in doc["checks"]}
    assert {"manifold-residual", "poisson-bracket", "polar-round-trip",
            "flow-period", "jet-vs-difference", "nonneg-det",
            "gamma-cap-selftest", "max-hyperbolic-bound",
            "euler-audit"} <= names
    assert all(c["passed"] for c in doc["checks"])


def test_verify_rejects_bad_samples():
    assert main(["verify", "--samples", "0"]) == EXIT_USAGE


def test_verify_rejects_unknown_mutation():
    assert main(["verify", "--samples", "10", "--mutate", "bogus"]) == EXIT_USAGE


def test_verify_detects_injected_bug(tmp_path):
    out = tmp_path / "mut.json"
    code = main(["verify", "--seed", "42", "--samples", "40",
                 "--mutate", "gamma2-sign", "--output", str(out)])
    assert code == EXIT_NUMERIC
    doc = json.loads(out.read_text())
    assert doc["passed"] is False
    failed = {c["name"] for c in doc["checks"] if not c["passed"]}
    assert "gamma-cap-selftest" in failed
