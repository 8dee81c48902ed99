"""Empirical interpolation: greedy node selection over the time grid, the
node-value matrix, cardinal functions, and interpolant evaluation.

Given an orthonormal basis e_1..e_n (rows of a ReducedBasis), an interpolant
of order n is fixed by n grid nodes T_1..T_n through the square node-value
matrix V[i, j] = e_j(T_i). Nodes are selected one at a time, so the node set
of order n-1 is always a prefix of the order-n set. Three selection rules are
supported for the node added at step j:

* classic: maximize |r_j(t)|, the residual of interpolating e_j with the
  previous j-1 nodes. Equivalently, this maximizes |det V_j| over the
  candidate rows.
* kappa:   minimize the 2-norm condition number of V_j with the candidate row
  appended.
* lambda:  minimize ||V_j^{-1}||, which for an orthonormal basis is the
  2-norm of the resulting interpolation operator (the Lebesgue constant).

The first node is the location of max |e_1| under every rule by default; an
opt-in flag applies each rule's own objective to the first node as well.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import numerics as nm
from .catalog import LengthMismatch
from .rbm import ReducedBasis
from ._fileio import atomic_write_text, fmt_float

# Two candidate objectives are "tied" when they agree to this relative
# tolerance; ties resolve to the lowest grid index for determinism.
TIE_REL_TOL = 1e-14


class NoAdmissibleNode(Exception):
    """More nodes were requested than there are grid points."""


class SingularVMatrix(Exception):
    """The node-value matrix is singular to working precision."""


class SelectionCriterion(enum.Enum):
    CLASSIC = "classic"
    MIN_KAPPA = "kappa"
    MIN_LAMBDA = "lambda"


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics for one prefix of the node set.

    ``det_v``: determinant of the j x j node-value matrix.
    ``kappa``: its 2-norm condition number.
    ``lebesgue``: ||V_j^{-1}||, the Lebesgue constant for an orthonormal basis.
    ``residual_at_node``: |r_j(T_j)|; for j = 1 this is |e_1(T_1)|, matching
    the determinant ratio convention det(V_1)/det(V_0) with det(V_0) = 1.
    """

    det_v: complex
    kappa: float
    lebesgue: float
    residual_at_node: float


@dataclass(frozen=True)
class EmpiricalInterpolant:
    """Interpolation nodes plus everything needed to apply the interpolant.

    ``v_matrix`` is V[i, j] = e_j(T_i); ``b_matrix`` holds the cardinal
    functions as rows, B_i = sum_j (V^{-1})_{ji} e_j, which satisfy
    B_i(T_j) = delta_ij. ``per_step`` has one StepRecord per prefix order.
    """

    basis: ReducedBasis
    n: int
    node_indices: tuple[int, ...]
    v_matrix: np.ndarray
    b_matrix: np.ndarray
    criterion: SelectionCriterion
    per_step: tuple[StepRecord, ...]

    def __post_init__(self):
        nodes = tuple(int(i) for i in self.node_indices)
        if len(nodes) != self.n or len(set(nodes)) != self.n:
            raise ValueError("node indices must be distinct and match n")
        if self.v_matrix.shape != (self.n, self.n):
            raise ValueError("v_matrix shape mismatch")
        if self.b_matrix.shape != (self.n, self.basis.grid.n_samples):
            raise ValueError("b_matrix shape mismatch")
        cardinal = self.b_matrix[:, list(nodes)]
        if np.max(np.abs(cardinal - np.eye(self.n))) > 1e-10:
            raise SingularVMatrix(
                "cardinal property violated beyond 1e-10; node-value matrix "
                "is too ill-conditioned"
            )
        object.__setattr__(self, "node_indices", nodes)


def _argmax_tied(values: np.ndarray) -> int:
    """Lowest index whose value ties the maximum within TIE_REL_TOL."""
    best = float(values.max())
    return int(np.flatnonzero(values >= best * (1.0 - TIE_REL_TOL))[0])


def _pick_first_node(basis_rows: np.ndarray, criterion: SelectionCriterion,
                     variant: bool) -> int:
    moduli = np.abs(basis_rows[0])
    if not variant or criterion is SelectionCriterion.CLASSIC:
        return _argmax_tied(moduli)
    if criterion is SelectionCriterion.MIN_LAMBDA:
        # ||V_1^{-1}|| = 1/|e_1(t)|: same argmax, written via the objective.
        return _argmax_tied(moduli)
    # kappa of a 1x1 matrix is 1 wherever e_1(t) != 0, so the tie rule picks
    # the lowest index with a nonzero sample.
    nonzero = np.flatnonzero(moduli > 0.0)
    if nonzero.size == 0:
        raise SingularVMatrix("first basis row vanishes everywhere")
    return int(nonzero[0])


def _classic_residual(basis_rows: np.ndarray, j: int, nodes: list[int]) -> np.ndarray:
    """Residual r_j = e_j - I_{j-1}[e_j] over the whole grid (j >= 2)."""
    prefix = nodes[: j - 1]
    v_prev = basis_rows[: j - 1][:, prefix].T
    try:
        fact = nm.lu_factor(v_prev)
    except nm.ExactlySingular as exc:
        raise SingularVMatrix(f"node-value matrix singular at order {j - 1}") from exc
    coeff = nm.solve(fact, basis_rows[j - 1, prefix])
    return basis_rows[j - 1] - coeff @ basis_rows[: j - 1]


def _scan_variant(basis_rows: np.ndarray, j: int, nodes: list[int],
                  criterion: SelectionCriterion) -> int:
    """Objective scan for the kappa/lambda rules; lowest tied index wins."""
    objective = (nm.condition_number_2 if criterion is SelectionCriterion.MIN_KAPPA
                 else nm.inverse_two_norm)
    n_grid = basis_rows.shape[1]
    chosen = set(nodes)
    candidate = np.empty((j, j), dtype=np.complex128)
    candidate[: j - 1] = basis_rows[:j][:, nodes].T
    best = math.inf
    best_idx = -1
    for t in range(n_grid):
        if t in chosen:
            continue
        candidate[j - 1] = basis_rows[:j, t]
        value = objective(candidate)
        if best_idx < 0 or value < best * (1.0 - TIE_REL_TOL):
            best, best_idx = value, t
    if best_idx < 0:
        raise NoAdmissibleNode(f"no unchosen grid index left at order {j}")
    if math.isinf(best):
        raise SingularVMatrix(f"every candidate matrix is singular at order {j}")
    return best_idx


def _select_nodes(basis_rows: np.ndarray, criterion: SelectionCriterion, n: int,
                  first_node_variant: bool) -> list[int]:
    nodes = [_pick_first_node(basis_rows, criterion, first_node_variant)]
    for j in range(2, n + 1):
        if criterion is SelectionCriterion.CLASSIC:
            moduli = np.abs(_classic_residual(basis_rows, j, nodes))
            if moduli.max() == 0.0:
                raise SingularVMatrix(
                    f"residual of basis row {j} vanishes identically; basis "
                    f"rows are not independent on the grid"
                )
            pick = _argmax_tied(moduli)
            if pick in nodes:
                raise SingularVMatrix(
                    f"classic rule re-selected node {pick} at order {j}"
                )
        else:
            pick = _scan_variant(basis_rows, j, nodes, criterion)
        nodes.append(pick)
    return nodes


def _assemble(basis: ReducedBasis, nodes: list[int], n: int,
              criterion: SelectionCriterion) -> EmpiricalInterpolant:
    rows = basis.basis[:n]
    v = rows[:, nodes].T.copy()
    try:
        fact_t = nm.lu_factor(v.T)
    except nm.ExactlySingular as exc:
        raise SingularVMatrix("final node-value matrix is exactly singular") from exc
    # B = (V^{-1})^T E comes from solving V^T X = E, never from an inverse.
    b = nm.solve(fact_t, rows)
    per_step = tuple(
        _step_record(basis.basis, nodes, j) for j in range(1, n + 1)
    )
    return EmpiricalInterpolant(
        basis=basis, n=n, node_indices=tuple(nodes), v_matrix=v,
        b_matrix=b, criterion=criterion, per_step=per_step,
    )


def _step_record(basis_rows: np.ndarray, nodes: list[int], j: int) -> StepRecord:
    vj = basis_rows[:j][:, nodes[:j]].T
    det = nm.determinant(vj)
    kappa = nm.condition_number_2(vj)
    lebesgue = nm.inverse_two_norm(vj)
    if j == 1:
        residual = abs(basis_rows[0, nodes[0]])
    else:
        prefix = nodes[: j - 1]
        fact = nm.lu_factor(basis_rows[: j - 1][:, prefix].T)
        coeff = nm.solve(fact, basis_rows[j - 1, prefix])
        at_node = basis_rows[j - 1, nodes[j - 1]] - coeff @ basis_rows[: j - 1, nodes[j - 1]]
        residual = abs(at_node)
    return StepRecord(det_v=det, kappa=kappa, lebesgue=lebesgue,
                      residual_at_node=float(residual))


def build_interpolant(rb: ReducedBasis, criterion: SelectionCriterion, n: int,
                      first_node_variant: bool = False) -> EmpiricalInterpolant:
    """Select n interpolation nodes for the first n basis rows.

    Parameters
    ----------
    rb : ReducedBasis
        Source basis; only its first n rows are used.
    criterion : SelectionCriterion
        Node selection rule (classic residual maximization, condition-number
        minimization, or Lebesgue-constant minimization).
    n : int
        Interpolant order, 1 <= n <= rb.n (and at most the grid size).
    first_node_variant : bool
        When true, apply the criterion's own objective to the first node too
        instead of the shared max |e_1| rule. Off by default.

    Raises
    ------
    NoAdmissibleNode
        If n exceeds the number of grid points.
    SingularVMatrix
        If a node-value matrix becomes singular to working precision.
    """
    if not 1 <= n <= rb.n:
        raise ValueError(f"order {n} outside 1..{rb.n}")
    if n > rb.grid.n_samples:
        raise NoAdmissibleNode(
            f"cannot place {n} distinct nodes on {rb.grid.n_samples} grid points"
        )
    nodes = _select_nodes(rb.basis[:n], criterion, n, first_node_variant)
    return _assemble(rb, nodes, n, criterion)


def truncate_interpolant(itp: EmpiricalInterpolant, n: int) -> EmpiricalInterpolant:
    """Order-n interpolant reusing the first n nodes of ``itp``.

    Node selection is nested, so this equals rebuilding at order n with the
    same criterion, at the cost of one matrix solve.
    """
    if not 1 <= n <= itp.n:
        raise ValueError(f"order {n} outside 1..{itp.n}")
    if n == itp.n:
        return itp
    rows = itp.basis.basis[:n]
    nodes = list(itp.node_indices[:n])
    v = itp.v_matrix[:n, :n].copy()
    try:
        fact_t = nm.lu_factor(v.T)
    except nm.ExactlySingular as exc:
        raise SingularVMatrix(f"prefix matrix of order {n} is exactly singular") from exc
    b = nm.solve(fact_t, rows)
    return EmpiricalInterpolant(
        basis=itp.basis, n=n, node_indices=tuple(nodes), v_matrix=v,
        b_matrix=b, criterion=itp.criterion, per_step=itp.per_step[:n],
    )


def interpolate(itp: EmpiricalInterpolant, node_values) -> np.ndarray:
    """Evaluate the interpolant from its values at the nodes:
    sum_i node_values[i] * B_i."""
    vals = np.asarray(node_values, dtype=np.complex128)
    if vals.shape != (itp.n,):
        raise LengthMismatch(f"expected {itp.n} node values, got shape {vals.shape}")
    return vals @ itp.b_matrix


def interpolate_function(itp: EmpiricalInterpolant, h) -> np.ndarray:
    """Interpolate a gridded waveform by reading it off at the nodes."""
    hv = np.asarray(h, dtype=np.complex128)
    if hv.shape != (itp.basis.grid.n_samples,):
        raise LengthMismatch(
            f"waveform has shape {hv.shape}, grid expects "
            f"({itp.basis.grid.n_samples},)"
        )
    return interpolate(itp, hv[list(itp.node_indices)])


def verify_determinant_identity(rb: ReducedBasis, n: int) -> list[float]:
    """Check that every classic-rule residual is a ratio of determinants.

    Runs the classic selection for the first n basis rows. At each step
    j = 2..n it computes, over the whole grid, the residual
    r_j(t) = e_j(t) - I_{j-1}[e_j](t) through the linear-solve path, and
    independently det(V_j with last node replaced by t) / det(V_{j-1})
    through LU determinants. Returns, per step, the maximum over t of
    |residual - ratio| normalized by max_t |residual| (a per-point relative
    error is meaningless at the residual's zeros).
    """
    itp = build_interpolant(rb, SelectionCriterion.CLASSIC, n)
    rows = rb.basis
    n_grid = rb.grid.n_samples
    discrepancies: list[float] = []
    for j in range(2, n + 1):
        prefix = list(itp.node_indices[: j - 1])
        residual = _classic_residual(rows, j, prefix)
        det_prev = nm.determinant(rows[: j - 1][:, prefix].T)
        if det_prev == 0:
            raise SingularVMatrix(f"prefix determinant vanished at order {j - 1}")
        vj = np.empty((j, j), dtype=np.complex128)
        vj[: j - 1] = rows[:j][:, prefix].T
        ratios = np.empty(n_grid, dtype=np.complex128)
        for t in range(n_grid):
            vj[j - 1] = rows[:j, t]
            ratios[t] = nm.determinant(vj) / det_prev
        scale = float(np.abs(residual).max())
        discrepancies.append(float(np.abs(residual - ratios).max() / scale))
    return discrepancies


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _complex_str(z: complex) -> str:
    return f"{fmt_float(z.real)}:{fmt_float(z.imag)}"


def _matrix_csv(m: np.ndarray) -> str:
    return "\n".join(",".join(_complex_str(z) for z in row) for row in m)


def interpolant_to_dict(itp: EmpiricalInterpolant, include_matrices: bool = False) -> dict:
    """JSON-ready summary: nodes, criterion, per-step diagnostics, and
    optionally the V and B matrices as CSV blocks of re:im pairs."""
    doc = {
        "criterion": itp.criterion.value,
        "n": itp.n,
        "node_indices": list(itp.node_indices),
        "grid": {
            "t_start": itp.basis.grid.t_start,
            "t_end": itp.basis.grid.t_end,
            "n_samples": itp.basis.grid.n_samples,
        },
        "per_step": [
            {
                "n": j + 1,
                "det_v": _complex_str(rec.det_v),
                "kappa": rec.kappa,
                "lambda": rec.lebesgue,
                "residual_at_node": rec.residual_at_node,
            }
            for j, rec in enumerate(itp.per_step)
        ],
    }
    if include_matrices:
        doc["v_matrix_csv"] = _matrix_csv(itp.v_matrix)
        doc["b_matrix_csv"] = _matrix_csv(itp.b_matrix)
    return doc


def save_interpolant_json(itp: EmpiricalInterpolant, path,
                          include_matrices: bool = False) -> None:
    doc = interpolant_to_dict(itp, include_matrices=include_matrices)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
