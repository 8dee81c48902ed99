import json
import subprocess
import sys

import numpy as np
import pytest

from emprint import catalog
from emprint.cli import main

CHIRP = ["--family", "damped_chirp", "--k", "25", "--l", "201"]


def read(path):
    return path.read_text().splitlines()


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def test_generate_writes_training_csv(tmp_path):
    assert main(["generate", *CHIRP, "--out-dir", str(tmp_path)]) == 0
    lines = read(tmp_path / "training.csv")
    assert lines[0] == "# emprint-training v1, L=201, t_start=0.0, t_end=1.0, d=1"
    assert len(lines) == 26
    ts = catalog.load_training_csv(tmp_path / "training.csv")
    assert ts.k == 25


def test_generate_unknown_family_names_it(tmp_path, capsys):
    code = main(["generate", "--family", "warbler", "--out-dir", str(tmp_path)])
    assert code == 2
    assert "warbler" in capsys.readouterr().err


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["generate", *CHIRP, "--out-dir", str(out)]) == 0
    assert (a / "training.csv").read_bytes() == (b / "training.csv").read_bytes()


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------

def test_basis_poly_fourier_has_ten_rows(tmp_path):
    code = main(["basis", "--family", "poly_fourier", "--k", "40", "--l", "201",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    lines = read(tmp_path / "greedy_errors.csv")
    assert lines[0] == "n,sigma_sq"
    assert len(lines) == 11
    grid, rows = __import__("emprint.rbm", fromlist=["load_basis_csv"]).load_basis_csv(
        tmp_path / "basis.csv")
    assert rows.shape == (10, 201)


def test_basis_huge_tol_gives_single_vector(tmp_path):
    code = main(["basis", *CHIRP, "--tol", "1e6", "--out-dir", str(tmp_path)])
    assert code == 0
    assert len(read(tmp_path / "greedy_errors.csv")) == 2


def test_basis_missing_input(tmp_path, capsys):
    code = main(["basis", "--input", str(tmp_path / "nope.csv"),
                 "--out-dir", str(tmp_path)])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_basis_from_ingested_csv(tmp_path):
    assert main(["generate", *CHIRP, "--out-dir", str(tmp_path)]) == 0
    code = main(["basis", "--input", str(tmp_path / "training.csv"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "basis.csv").exists()


# ---------------------------------------------------------------------------
# eim and compare
# ---------------------------------------------------------------------------

def test_eim_writes_interpolant_json(tmp_path):
    code = main(["eim", *CHIRP, "--criteria", "classic,lambda", "--n", "5",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    for tag in ("classic", "lambda"):
        doc = json.loads((tmp_path / f"interpolant_{tag}.json").read_text())
        assert doc["criterion"] == tag
        assert len(doc["node_indices"]) == 5
        assert "v_matrix_csv" not in doc


def test_eim_embed_matrices(tmp_path):
    code = main(["eim", *CHIRP, "--criteria", "classic", "--n", "3",
                 "--embed-matrices", "--out-dir", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "interpolant_classic.json").read_text())
    assert len(doc["v_matrix_csv"].splitlines()) == 3


def test_eim_bad_criterion(tmp_path, capsys):
    code = main(["eim", *CHIRP, "--criteria", "sideways", "--out-dir", str(tmp_path)])
    assert code == 2
    assert "sideways" in capsys.readouterr().err


def test_compare_outputs(tmp_path):
    code = main(["compare", *CHIRP, "--criteria", "classic,kappa,lambda",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    for name in ("kappa.csv", "lambda.csv", "errors.csv", "nodes.csv",
                 "report_classic.json", "report_kappa.json", "report_lambda.json"):
        assert (tmp_path / name).exists()

    err_lines = read(tmp_path / "errors.csv")
    assert err_lines[0].split(",")[1] == "proj_err_sq"
    for line in err_lines[1:]:
        cells = [float(x) for x in line.split(",")]
        assert all(cells[1] <= v * (1 + 1e-10) + 1e-28 for v in cells[2:])

    node_rows = {}
    for line in read(tmp_path / "nodes.csv")[1:]:
        criterion, _, nodes = line.split(",")
        node_rows.setdefault(criterion, []).append(nodes.split())
    assert set(node_rows) == {"classic", "kappa", "lambda"}
    for rows in node_rows.values():
        for prev, cur in zip(rows, rows[1:]):
            assert cur[: len(prev)] == prev


def test_compare_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code = main(["compare", *CHIRP, "--criteria", "classic,kappa",
                     "--out-dir", str(out)])
        assert code == 0
    for name in ("kappa.csv", "lambda.csv", "errors.csv", "nodes.csv",
                 "report_classic.json", "report_kappa.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# ---------------------------------------------------------------------------
# verify-theorem
# ---------------------------------------------------------------------------

def test_verify_theorem_passes(tmp_path):
    code = main(["verify-theorem", *CHIRP, "--out-dir", str(tmp_path)])
    assert code == 0
    lines = read(tmp_path / "theorem_check.csv")
    assert lines[0] == "step,max_rel_discrepancy"
    assert all(float(line.split(",")[1]) <= 1e-7 for line in lines[1:])


def test_verify_theorem_two_steps(tmp_path):
    code = main(["verify-theorem", *CHIRP, "--n", "2", "--out-dir", str(tmp_path)])
    assert code == 0
    lines = read(tmp_path / "theorem_check.csv")
    assert len(lines) == 2
    step, disc = lines[1].split(",")
    assert step == "2"
    assert float(disc) <= 1e-10


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"family": "damped_chirp", "k": 10, "l": 101}))
    out = tmp_path / "out"
    code = main(["generate", "--config", str(cfg), "--k", "12",
                 "--out-dir", str(out)])
    assert code == 0
    ts = catalog.load_training_csv(out / "training.csv")
    assert ts.k == 12  # flag wins
    assert ts.grid.n_samples == 101  # config fills the rest


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"familly": "damped_chirp"}))
    assert main(["generate", "--config", str(cfg)]) == 2
    assert "familly" in capsys.readouterr().err


def test_missing_data_source(tmp_path, capsys):
    assert main(["basis", "--out-dir", str(tmp_path)]) == 2
    assert "--input or --family" in capsys.readouterr().err


def test_bad_tol(tmp_path, capsys):
    assert main(["basis", *CHIRP, "--tol", "-1", "--out-dir", str(tmp_path)]) == 2


def test_corrupt_training_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("garbage\n")
    assert main(["basis", "--input", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "emprint", "generate", *CHIRP,
         "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert (tmp_path / "training.csv").exists()
