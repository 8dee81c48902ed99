import json
import math

import numpy as np
import pytest

from emprint import catalog, diagnostics, numerics as nm, rbm
from emprint.catalog import LengthMismatch, TimeGrid
from emprint.diagnostics import (error_ratio_curve, identity_checks,
                                 run_comparison, write_curve_csvs,
                                 write_report_json)
from emprint.eim import SelectionCriterion, build_interpolant, truncate_interpolant
from emprint.rbm import ReducedBasis

from oracles import orthonormal_rows

ALL = list(SelectionCriterion)


@pytest.fixture(scope="module")
def small_reports(small_basis, small_training):
    return run_comparison(small_basis, small_training, criteria=ALL,
                          dataset_id="chirp-small")


# ---------------------------------------------------------------------------
# Comparison runs
# ---------------------------------------------------------------------------

def test_projection_bounds_interpolation(small_reports):
    for report in small_reports.values():
        for rec in report.per_n:
            assert rec.max_proj_err_sq <= rec.max_interp_err_sq * (1 + 1e-10) + 1e-28


def test_projection_errors_monotone(small_reports):
    for report in small_reports.values():
        errs = [rec.max_proj_err_sq for rec in report.per_n]
        assert all(b <= a * (1 + 1e-12) + 1e-28 for a, b in zip(errs, errs[1:]))


def test_kappa_matches_stored_prefix(small_basis, small_reports):
    report = small_reports[SelectionCriterion.CLASSIC]
    itp = build_interpolant(small_basis, SelectionCriterion.CLASSIC, small_basis.n)
    for rec in report.per_n:
        recomputed = nm.condition_number_2(itp.v_matrix[: rec.n, : rec.n])
        assert abs(rec.kappa - recomputed) <= 1e-10 * recomputed


def test_nodes_nested_within_report(small_reports):
    for report in small_reports.values():
        for prev, cur in zip(report.per_n, report.per_n[1:]):
            assert cur.nodes[: prev.n] == prev.nodes


def test_poly_fourier_interpolant_is_exact_at_full_order():
    spec = catalog.make_family_spec("poly_fourier", 60, grid=TimeGrid(0.0, 1.0, 301))
    ts = catalog.generate_family(spec)
    rb = rbm.build_reduced_basis(ts, tol=1e-12)
    assert rb.n == 10
    reports = run_comparison(rb, ts, criteria=[SelectionCriterion.CLASSIC])
    assert reports[SelectionCriterion.CLASSIC].per_n[-1].max_interp_err_sq <= 1e-18


# ---------------------------------------------------------------------------
# Ratio curves
# ---------------------------------------------------------------------------

def test_ratio_of_report_with_itself(small_reports):
    report = small_reports[SelectionCriterion.CLASSIC]
    assert error_ratio_curve(report, report) == [1.0] * len(report.per_n)


def test_ratio_below_floor_is_one(small_reports):
    import dataclasses
    report = small_reports[SelectionCriterion.CLASSIC]
    rec = dataclasses.replace(report.per_n[-1], max_interp_err_sq=1e-30,
                              max_proj_err_sq=0.0)
    tiny = dataclasses.replace(report, per_n=(rec,))
    assert error_ratio_curve(tiny, tiny) == [1.0]


def test_ratio_classic_vs_kappa_band(small_reports):
    ratios = error_ratio_curve(small_reports[SelectionCriterion.CLASSIC],
                               small_reports[SelectionCriterion.MIN_KAPPA])
    assert all(1e-2 <= r <= 1e2 for r in ratios)


def test_ratio_length_mismatch(small_reports):
    import dataclasses
    a = small_reports[SelectionCriterion.CLASSIC]
    b = dataclasses.replace(a, per_n=a.per_n[:-1])
    with pytest.raises(LengthMismatch):
        error_ratio_curve(a, b)


# ---------------------------------------------------------------------------
# Norm identities
# ---------------------------------------------------------------------------

def test_identity_checks_scalar_case(small_basis):
    itp = build_interpolant(small_basis, SelectionCriterion.CLASSIC, 1)
    t1 = itp.node_indices[0]
    expected = 1.0 / abs(small_basis.basis[0, t1])
    operator_norm = nm.two_norm(itp.b_matrix.T)
    assert operator_norm == pytest.approx(expected, rel=1e-12)
    checks = identity_checks(itp)
    assert checks.norm_product_residual <= 1e-12
    assert checks.operator_norm_residual <= 1e-12


def test_operator_norm_identity_random_unitary_basis(rng):
    rows = orthonormal_rows(rng, 6, 120)
    rb = ReducedBasis(TimeGrid(0.0, 1.0, 120), rows, np.full(6, 0.5),
                      tuple(range(6)), 1e-12)
    itp = build_interpolant(rb, SelectionCriterion.CLASSIC, 6)
    checks = identity_checks(itp)
    assert checks.operator_norm_residual <= 1e-8
    # Oracle: the zero-padded grid-to-grid operator has the same largest
    # singular value as the node-value block the check materializes.
    full = np.zeros((120, 120), dtype=complex)
    full[:, list(itp.node_indices)] = itp.b_matrix.T
    sv = np.linalg.svd(full, compute_uv=False)
    lam = nm.inverse_two_norm(itp.v_matrix)
    assert abs(sv[0] - lam) <= 1e-8 * lam


def test_norm_product_identity_every_prefix(small_basis):
    full = build_interpolant(small_basis, SelectionCriterion.CLASSIC, small_basis.n)
    for n in range(1, small_basis.n + 1):
        checks = identity_checks(truncate_interpolant(full, n))
        assert checks.norm_product_residual <= 1e-10
        assert checks.operator_norm_residual <= 1e-8


def test_operator_check_skipped_on_huge_grids(rng):
    length = diagnostics.OPERATOR_CHECK_MAX_GRID + 10
    rows = orthonormal_rows(rng, 2, length)
    rb = ReducedBasis(TimeGrid(0.0, 1.0, length), rows, np.full(2, 0.5),
                      (0, 1), 1e-12)
    itp = build_interpolant(rb, SelectionCriterion.CLASSIC, 2)
    checks = identity_checks(itp)
    assert checks.operator_norm_residual is None
    assert "skipped" in checks.note
    assert checks.norm_product_residual <= 1e-10


def test_weighted_and_euclidean_operator_norms_coincide(rng, small_basis):
    # With a uniform weight the operator norm is weight-independent: feeding
    # the weighted norm through the interpolation map scales top and bottom
    # by the same sqrt(dt).
    itp = build_interpolant(small_basis, SelectionCriterion.CLASSIC, small_basis.n)
    grid = small_basis.grid
    op_norm = nm.two_norm(itp.b_matrix.T)
    worst = 0.0
    for _ in range(40):
        vals = rng.standard_normal(itp.n) + 1j * rng.standard_normal(itp.n)
        h = np.zeros(grid.n_samples, dtype=complex)
        h[list(itp.node_indices)] = vals
        from emprint.catalog import discrete_norm
        from emprint.eim import interpolate
        ratio = discrete_norm(interpolate(itp, vals), grid) / discrete_norm(h, grid)
        worst = max(worst, ratio)
    assert worst <= op_norm * (1 + 1e-10)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_report_json(tmp_path, small_reports):
    report = small_reports[SelectionCriterion.MIN_LAMBDA]
    path = tmp_path / "report.json"
    write_report_json(report, path)
    doc = json.loads(path.read_text())
    assert doc["criterion"] == "lambda"
    assert doc["dataset_id"] == "chirp-small"
    assert doc["basis_convention"] == diagnostics.BASIS_CONVENTION
    assert len(doc["per_n"]) == len(report.per_n)
    assert doc["per_n"][0]["nodes"] == list(report.per_n[0].nodes)


def test_curve_csvs(tmp_path, small_reports):
    names = write_curve_csvs(small_reports, tmp_path)
    assert sorted(names) == ["errors.csv", "kappa.csv", "lambda.csv", "nodes.csv"]

    err_lines = (tmp_path / "errors.csv").read_text().splitlines()
    header = err_lines[0].split(",")
    assert header[0] == "n" and header[1] == "proj_err_sq"
    assert set(header[2:]) == {"interp_err_sq_classic", "interp_err_sq_kappa",
                               "interp_err_sq_lambda"}
    for line in err_lines[1:]:
        cells = [float(x) for x in line.split(",")]
        proj = cells[1]
        for interp in cells[2:]:
            assert proj <= interp * (1 + 1e-10) + 1e-28

    node_lines = (tmp_path / "nodes.csv").read_text().splitlines()[1:]
    by_criterion = {}
    for line in node_lines:
        criterion, n, nodes = line.split(",")
        by_criterion.setdefault(criterion, []).append(nodes.split())
    for rows in by_criterion.values():
        for prev, cur in zip(rows, rows[1:]):
            assert cur[: len(prev)] == prev

    kappa_lines = (tmp_path / "kappa.csv").read_text().splitlines()
    assert kappa_lines[0].split(",")[1:] == ["kappa_classic", "kappa_kappa",
                                             "kappa_lambda"]
    assert all(float(v) >= 1.0 for v in kappa_lines[1].split(",")[1:])
