"""Training data: synthetic waveform families, the uniform time grid, the
weighted discrete inner product, and CSV ingestion/serialization.

Waveforms are complex time series sampled on a closed uniform grid. The
discrete inner product carries the uniform quadrature weight dt, so
``discrete_norm(h)**2`` approximates the continuous squared L2 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text, fmt_float


class LengthMismatch(Exception):
    """Vector length disagrees with the grid or a paired vector."""


class UnknownFamily(Exception):
    """Requested synthetic family name is not registered."""


class InvalidRange(Exception):
    """A parameter range is empty or reversed."""


class ParseError(Exception):
    """A CSV file is structurally malformed; the message carries the line number."""


class GridMismatch(Exception):
    """The time grid in a file disagrees with the expected one."""


class NonFiniteSample(Exception):
    """A parsed sample or parameter is NaN or infinite."""


CSV_MAGIC = "emprint-training v1"


@dataclass(frozen=True)
class TimeGrid:
    """Closed uniform grid t_i = t_start + i*dt, i = 0..n_samples-1."""

    t_start: float
    t_end: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"grid needs at least 2 samples, got {self.n_samples}")
        if not (self.t_end > self.t_start):
            raise ValueError(f"need t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_samples)


@dataclass(frozen=True)
class TrainingSet:
    """K parametrized waveforms sampled on a shared grid.

    ``params`` is a (K, d) real array of parameter vectors, pairwise
    distinct; ``samples`` is the (K, L) complex array with row k holding the
    waveform for ``params[k]``.
    """

    grid: TimeGrid
    params: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        if params.ndim == 1:
            params = params.reshape(-1, 1)
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-d, got shape {samples.shape}")
        k = samples.shape[0]
        if k < 1:
            raise ValueError("training set must contain at least one waveform")
        if samples.shape[1] != self.grid.n_samples:
            raise LengthMismatch(
                f"samples have {samples.shape[1]} columns, grid has {self.grid.n_samples}"
            )
        if params.shape[0] != k:
            raise ValueError(f"{params.shape[0]} parameter rows for {k} waveforms")
        if not np.all(np.isfinite(params)):
            raise NonFiniteSample("parameter values must be finite")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSample("waveform samples must be finite")
        if np.unique(params, axis=0).shape[0] != k:
            raise ValueError("parameter vectors must be pairwise distinct")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "samples", samples)

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.params.shape[1]


# ---------------------------------------------------------------------------
# Weighted discrete inner product and norm
# ---------------------------------------------------------------------------

def _as_grid_vector(f, grid: TimeGrid, name: str) -> np.ndarray:
    v = np.asarray(f, dtype=np.complex128)
    if v.ndim != 1 or v.shape[0] != grid.n_samples:
        raise LengthMismatch(
            f"{name} has shape {v.shape}, expected ({grid.n_samples},)"
        )
    return v


def discrete_inner(f, g, grid: TimeGrid) -> complex:
    """Weighted inner product sum(conj(f) * g) * dt, conjugate-linear in ``f``."""
    fv = _as_grid_vector(f, grid, "f")
    gv = _as_grid_vector(g, grid, "g")
    return complex(np.vdot(fv, gv)) * grid.dt


def discrete_norm(f, grid: TimeGrid) -> float:
    """Weighted 2-norm sqrt(sum |f|^2 * dt)."""
    fv = _as_grid_vector(f, grid, "f")
    return math.sqrt(float(np.vdot(fv, fv).real) * grid.dt)


# ---------------------------------------------------------------------------
# Synthetic families
# ---------------------------------------------------------------------------

def _damped_chirp(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    lam = params[:, [0]]
    return np.exp(1j * (lam * t + 0.1 * lam * t**2)) / (1.0 + lam * t**2)


def _gaussian_packet(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    center = params[:, [0]]
    width = params[:, [1]]
    envelope = np.exp(-((t - center) ** 2) / (2.0 * width**2))
    return envelope * np.exp(1j * 20.0 * t * center)


def _poly_fourier(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    # Exactly 10-dimensional span regardless of how many parameters are drawn.
    lam = params[:, [0]]
    acc = np.zeros((params.shape[0], t.size), dtype=np.complex128)
    for m in range(10):
        acc += lam**m * np.exp(1j * m * np.pi * t) / math.factorial(m)
    return acc


# name -> (parameter dimension, default per-dimension ranges, evaluator)
FAMILIES = {
    "damped_chirp": (1, ((1.0, 5.0),), _damped_chirp),
    "gaussian_packet": (2, ((0.25, 0.75), (0.05, 0.2)), _gaussian_packet),
    "poly_fourier": (1, ((-5.0, 5.0),), _poly_fourier),
}

DEFAULT_GRID = TimeGrid(0.0, 1.0, 1001)


@dataclass(frozen=True)
class FamilySpec:
    """Recipe for a synthetic training set.

    ``param_range`` holds one (lo, hi) pair per parameter dimension.
    ``sampling`` is "equispaced" (default) or "random"; random draws use
    ``seed`` so generation stays deterministic either way.
    """

    family: str
    param_range: tuple[tuple[float, float], ...]
    n_params: int
    grid: TimeGrid = DEFAULT_GRID
    sampling: str = "equispaced"
    seed: int = 0

    def __post_init__(self):
        rng = tuple((float(lo), float(hi)) for lo, hi in self.param_range)
        for lo, hi in rng:
            if not lo < hi:
                raise InvalidRange(f"parameter range [{lo}, {hi}] is empty")
        if self.n_params < 1:
            raise ValueError(f"n_params must be >= 1, got {self.n_params}")
        if self.sampling not in ("equispaced", "random"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")
        object.__setattr__(self, "param_range", rng)


def make_family_spec(family: str, n_params: int, grid: TimeGrid | None = None,
                     param_range=None, sampling: str = "equispaced",
                     seed: int = 0) -> FamilySpec:
    """Build a FamilySpec, filling the family's default parameter ranges."""
    if family not in FAMILIES:
        raise UnknownFamily(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    dim, default_range, _ = FAMILIES[family]
    rng = tuple(param_range) if param_range is not None else default_range
    if len(rng) != dim:
        raise InvalidRange(
            f"family {family!r} takes {dim} parameter range(s), got {len(rng)}"
        )
    return FamilySpec(family, rng, n_params, grid or DEFAULT_GRID, sampling, seed)


def _equispaced_params(ranges, k: int) -> np.ndarray:
    d = len(ranges)
    if d == 1:
        lo, hi = ranges[0]
        return np.linspace(lo, hi, k).reshape(-1, 1)
    # Tensor grid with c points per dimension, c the smallest integer with
    # c**d >= k; rows are row-major (first dimension slowest) and the first
    # k rows are kept.
    c = 1
    while c**d < k:
        c += 1
    axes = [np.linspace(lo, hi, c) for lo, hi in ranges]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return mesh[:k]


def _random_params(ranges, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(lo, hi, size=k) for lo, hi in ranges]
    return np.column_stack(cols)


def generate_family(spec: FamilySpec) -> TrainingSet:
    """Sample a synthetic family into a TrainingSet.

    Parameters are drawn equispaced over ``spec.param_range`` (a tensor grid
    for multi-parameter families) or uniformly at random with ``spec.seed``.
    Identical specs always produce identical training sets.
    """
    if spec.family not in FAMILIES:
        raise UnknownFamily(
            f"unknown family {spec.family!r}; known: {sorted(FAMILIES)}"
        )
    dim, _, evaluator = FAMILIES[spec.family]
    if len(spec.param_range) != dim:
        raise InvalidRange(
            f"family {spec.family!r} takes {dim} parameter range(s), "
            f"got {len(spec.param_range)}"
        )
    if spec.sampling == "equispaced":
        params = _equispaced_params(spec.param_range, spec.n_params)
    else:
        params = _random_params(spec.param_range, spec.n_params, spec.seed)
    samples = evaluator(params, spec.grid.points)
    return TrainingSet(spec.grid, params, samples)


# ---------------------------------------------------------------------------
# CSV format
#
# Header:  # emprint-training v1, L=<int>, t_start=<float>, t_end=<float>, d=<int>
#          (plus ", kind=basis" for serialized bases, which carry d=0)
# Rows:    d comma-separated parameter floats, then L "re:im" pairs.
# UTF-8, LF line endings, floats in decimal with optional exponent.
# ---------------------------------------------------------------------------

def _format_row(params_row: np.ndarray, samples_row: np.ndarray) -> str:
    cells = [fmt_float(p) for p in params_row]
    cells += [f"{fmt_float(z.real)}:{fmt_float(z.imag)}" for z in samples_row]
    return ",".join(cells)


def write_waveform_csv(path, grid: TimeGrid, params: np.ndarray,
                       samples: np.ndarray, kind: str | None = None) -> None:
    d = params.shape[1] if params.size else 0
    header = (
        f"# {CSV_MAGIC}, L={grid.n_samples}, t_start={fmt_float(grid.t_start)}, "
        f"t_end={fmt_float(grid.t_end)}, d={d}"
    )
    if kind is not None:
        header += f", kind={kind}"
    lines = [header]
    empty = np.empty(0)
    for k in range(samples.shape[0]):
        prow = params[k] if d else empty
        lines.append(_format_row(prow, samples[k]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_training_csv(ts: TrainingSet, path) -> None:
    """Serialize a training set; ``load_training_csv`` restores it bit-for-bit."""
    write_waveform_csv(path, ts.grid, ts.params, ts.samples)


def _parse_header(line: str):
    if not line.startswith(f"# {CSV_MAGIC}"):
        raise ParseError("line 1: missing 'emprint-training v1' header")
    fields = {}
    for chunk in line[len(f"# {CSV_MAGIC}"):].split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ParseError(f"line 1: malformed header field {chunk!r}")
        key, value = chunk.split("=", 1)
        fields[key.strip()] = value.strip()
    try:
        grid = TimeGrid(float(fields["t_start"]), float(fields["t_end"]),
                        int(fields["L"]))
        d = int(fields["d"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"line 1: bad or missing header field ({exc})") from exc
    return grid, d, fields.get("kind")


def _parse_float(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: bad float {text!r}") from exc


def read_waveform_csv(path):
    """Parse a waveform CSV; returns (grid, params, samples, kind)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("line 1: empty file")
    grid, d, kind = _parse_header(lines[0])
    l = grid.n_samples
    params_rows, sample_rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = lineno - 2
        cells = line.split(",")
        if len(cells) != d + l:
            raise ParseError(
                f"line {lineno}: expected {d + l} fields ({d} parameters + "
                f"{l} samples), got {len(cells)}"
            )
        prow = []
        for i, cell in enumerate(cells[:d]):
            value = _parse_float(cell, lineno)
            if not math.isfinite(value):
                raise NonFiniteSample(
                    f"non-finite parameter at row {row}, component {i} (line {lineno})"
                )
            prow.append(value)
        srow = np.empty(l, dtype=np.complex128)
        for i, cell in enumerate(cells[d:]):
            parts = cell.split(":")
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: bad sample pair {cell!r}")
            re = _parse_float(parts[0], lineno)
            im = _parse_float(parts[1], lineno)
            if not (math.isfinite(re) and math.isfinite(im)):
                raise NonFiniteSample(
                    f"non-finite sample at row {row}, column {i} (line {lineno})"
                )
            srow[i] = complex(re, im)
        params_rows.append(prow)
        sample_rows.append(srow)
    if not sample_rows:
        raise ParseError("line 2: file contains no waveform rows")
    params = np.asarray(params_rows, dtype=float).reshape(len(sample_rows), d)
    samples = np.vstack(sample_rows)
    return grid, params, samples, kind


def load_training_csv(path, expected_grid: TimeGrid | None = None) -> TrainingSet:
    """Load a training CSV written by ``save_training_csv``.

    Raises GridMismatch when ``expected_grid`` is given and the file's grid
    differs from it.
    """
    grid, params, samples, kind = read_waveform_csv(path)
    if kind is not None:
        raise ParseError(f"line 1: expected a training file, found kind={kind}")
    if expected_grid is not None and (
        grid.n_samples != expected_grid.n_samples
        or grid.t_start != expected_grid.t_start
        or grid.t_end != expected_grid.t_end
    ):
        raise GridMismatch(
            f"file grid [{grid.t_start}, {grid.t_end}] x {grid.n_samples} does not "
            f"match expected [{expected_grid.t_start}, {expected_grid.t_end}] "
            f"x {expected_grid.n_samples}"
        )
    if params.shape[1] < 1:
        raise ParseError("line 1: training files need d >= 1")
    return TrainingSet(grid, params, samples)
