"""Dense complex linear algebra kernels shared by the rest of the package.

Everything here operates on plain 2-d complex128 numpy arrays and is a pure
function of its inputs. Factorizations use LAPACK partial-pivoting LU via
scipy; singular values come from a dense SVD. Condition numbers and inverse
norms are defined through singular values, never through adjugates or
explicit inverses.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class ExactlySingular(Exception):
    """An LU pivot is exactly zero, so the matrix has no usable factorization."""


class ConvergenceFailure(Exception):
    """The underlying singular-value computation failed to converge."""


def as_complex_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-d complex128 array, rejecting empty or non-finite input."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix must be at least 1x1, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")


@dataclass(frozen=True)
class LuFactorization:
    """Packed partial-pivoting LU factors of a square matrix, P A = L U.

    ``factors`` holds U in the upper triangle and the strictly lower part of
    the unit-diagonal L below it (LAPACK getrf layout). ``pivots`` is the
    sequential row-swap record: row i was exchanged with row ``pivots[i]``.
    ``sign`` is the parity (+1 or -1) of the accumulated row permutation.
    """

    factors: np.ndarray
    pivots: np.ndarray
    sign: int

    @property
    def n(self) -> int:
        return self.factors.shape[0]


def _getrf(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    # scipy warns instead of raising on exactly zero pivots; singularity is
    # detected afterwards from the U diagonal.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    sign = -1 if swaps % 2 else 1
    return lu, piv, sign


def lu_factor(m) -> LuFactorization:
    """Factor a square complex matrix with partial pivoting.

    Raises
    ------
    ExactlySingular
        If a pivot is exactly zero. Callers for which singularity is a
        valid outcome (e.g. a determinant of zero) must handle this.
    """
    a = as_complex_matrix(m)
    _require_square(a)
    lu, piv, sign = _getrf(a)
    diag = np.diagonal(lu)
    if np.any(diag == 0):
        pos = int(np.flatnonzero(diag == 0)[0])
        raise ExactlySingular(f"zero pivot at position {pos}")
    return LuFactorization(lu, piv, sign)


def determinant(m) -> complex:
    """Determinant of a square complex matrix, as permutation sign times the
    product of the U diagonal. Exactly singular input yields 0."""
    a = as_complex_matrix(m)
    _require_square(a)
    lu, _, sign = _getrf(a)
    diag = np.diagonal(lu)
    if np.any(diag == 0):
        return 0j
    return complex(sign * np.prod(diag))


def solve(f: LuFactorization, rhs) -> np.ndarray:
    """Solve A x = rhs from a factorization of A; rhs may be a vector or matrix."""
    b = np.asarray(rhs, dtype=np.complex128)
    if b.ndim not in (1, 2) or b.shape[0] != f.n:
        raise ValueError(f"rhs shape {b.shape} does not match system size {f.n}")
    return scipy.linalg.lu_solve((f.factors, f.pivots), b, check_finite=False)


def _singular_values(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def two_norm(m) -> float:
    """Induced 2-norm: the largest singular value of ``m``."""
    a = as_complex_matrix(m)
    return float(_singular_values(a)[0])


def condition_number_2(m) -> float:
    """2-norm condition number of a square matrix.

    Returns ``math.inf`` when the smallest singular value vanishes to
    working precision (sigma_min <= sigma_max * 1e-300).
    """
    a = as_complex_matrix(m)
    _require_square(a)
    s = _singular_values(a)
    if s[-1] <= s[0] * 1e-300:
        return math.inf
    return float(s[0] / s[-1])


def inverse_two_norm(m) -> float:
    """2-norm of the inverse of a square matrix, i.e. 1/sigma_min.

    Returns ``math.inf`` for matrices that are singular to working precision.
    """
    a = as_complex_matrix(m)
    _require_square(a)
    s = _singular_values(a)
    if s[-1] <= s[0] * 1e-300:
        return math.inf
    return float(1.0 / s[-1])
