"""Command-line driver for the full pipeline.

Subcommands
-----------
generate        synthesize a training CSV from a named family
basis           build the greedy reduced basis, write basis + error curves
eim             build interpolants for the requested criteria, write JSON
compare         run the multi-criterion comparison, write reports + curves
verify-theorem  check the residual/determinant-ratio identity step by step

Every command reads either a training CSV (--input) or a family spec
(--family/--k/--l ...). Options may come from a single JSON config file
(--config); explicit command-line flags override it, and the environment is
never consulted. All outputs are plain CSV/JSON written atomically, and a
rerun with the same configuration reproduces them byte for byte.

Exit codes: 0 success, 1 verification failure, 2 input or configuration
error, 3 numerical degeneracy while building the basis, 4 interpolant
construction failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import catalog, diagnostics, eim, rbm
from .catalog import (GridMismatch, InvalidRange, LengthMismatch, NonFiniteSample,
                      ParseError, TimeGrid, UnknownFamily)
from .eim import NoAdmissibleNode, SelectionCriterion, SingularVMatrix
from .numerics import ConvergenceFailure
from .rbm import DegenerateResidual, EmptyTraining
from ._fileio import atomic_write_text, fmt_float

THEOREM_TOLERANCE = 1e-7

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_INTERPOLANT = 4


class ConfigError(Exception):
    """Bad or inconsistent command-line/config-file options."""


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    family: str | None = None
    k: int = 101
    l: int = 1001
    t_start: float = 0.0
    t_end: float = 1.0
    param_range: str | None = None
    sampling: str = "equispaced"
    seed: int = 0
    out_dir: str = "."
    tol: float = rbm.DEFAULT_TOL
    n_max: int | None = None
    n: int | None = None
    criteria: str = "classic,kappa,lambda"
    first_node_variant: bool = False
    embed_matrices: bool = False


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--input", help="training CSV path")
    p.add_argument("--family", help="synthetic family name")
    p.add_argument("--k", type=int, help="number of training waveforms")
    p.add_argument("--l", type=int, help="number of time samples")
    p.add_argument("--t-start", type=float, dest="t_start")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--param-range", dest="param_range",
                   help="per-dimension ranges, e.g. '1:50' or '0.2:0.8,0.05:0.2'")
    p.add_argument("--sampling", choices=["equispaced", "random"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--tol", type=float)
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--n", type=int, help="interpolant order (default: basis size)")
    p.add_argument("--criteria", help="comma list from classic,kappa,lambda")
    p.add_argument("--first-node-variant", action="store_true", default=None,
                   dest="first_node_variant")
    p.add_argument("--embed-matrices", action="store_true", default=None,
                   dest="embed_matrices")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emprint",
        description="Greedy reduced bases and empirical interpolants for "
                    "parametrized complex time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("generate", "write a synthetic training CSV"),
        ("basis", "build the reduced basis and greedy error curve"),
        ("eim", "build empirical interpolants"),
        ("compare", "compare node-selection criteria"),
        ("verify-theorem", "check the residual/determinant-ratio identity"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_common_options(p)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge precedence: command-line flag > config file > built-in default."""
    file_values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_values = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")

    cfg = RunConfig(command=args.command)
    known = {f.name for f in fields(RunConfig)} - {"command"}
    for key in file_values:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    for name in known:
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            setattr(cfg, name, cli_value)
        elif name in file_values:
            setattr(cfg, name, file_values[name])

    try:
        if cfg.tol <= 0:
            raise ConfigError(f"tol must be positive, got {cfg.tol}")
        if cfg.n_max is not None and cfg.n_max < 1:
            raise ConfigError(f"n-max must be >= 1, got {cfg.n_max}")
        if cfg.k < 1 or cfg.l < 2:
            raise ConfigError(f"need k >= 1 and l >= 2, got k={cfg.k}, l={cfg.l}")
    except TypeError as exc:
        raise ConfigError(f"config value has the wrong type: {exc}") from exc
    return cfg


def _parse_criteria(spec: str) -> tuple[SelectionCriterion, ...]:
    out = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(SelectionCriterion(token))
        except ValueError:
            valid = ",".join(c.value for c in SelectionCriterion)
            raise ConfigError(f"unknown criterion {token!r}; valid: {valid}")
    if not out:
        raise ConfigError("no criteria requested")
    return tuple(dict.fromkeys(out))


def _parse_param_range(text: str) -> tuple[tuple[float, float], ...]:
    ranges = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(f"bad range {chunk!r}, expected lo:hi")
        try:
            ranges.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"bad range {chunk!r}: {exc}") from exc
    return tuple(ranges)


def _family_spec(cfg: RunConfig) -> catalog.FamilySpec:
    grid = TimeGrid(cfg.t_start, cfg.t_end, cfg.l)
    param_range = _parse_param_range(cfg.param_range) if cfg.param_range else None
    return catalog.make_family_spec(
        cfg.family, cfg.k, grid=grid, param_range=param_range,
        sampling=cfg.sampling, seed=cfg.seed,
    )


def _load_training(cfg: RunConfig) -> catalog.TrainingSet:
    if cfg.input is not None:
        path = Path(cfg.input)
        if not path.exists():
            raise ConfigError(f"input file not found: {path}")
        return catalog.load_training_csv(path)
    if cfg.family is not None:
        return catalog.generate_family(_family_spec(cfg))
    raise ConfigError("no data source: pass --input or --family")


def _build_basis(cfg: RunConfig) -> tuple[catalog.TrainingSet, rbm.ReducedBasis]:
    ts = _load_training(cfg)
    rb = rbm.build_reduced_basis(ts, tol=cfg.tol, n_max=cfg.n_max)
    return ts, rb


def _order(cfg: RunConfig, rb: rbm.ReducedBasis) -> int:
    if cfg.n is None:
        return rb.n
    if not 1 <= cfg.n <= rb.n:
        raise ConfigError(f"--n must lie in 1..{rb.n} (basis size), got {cfg.n}")
    return cfg.n


def cmd_generate(cfg: RunConfig) -> int:
    if cfg.family is None:
        raise ConfigError("generate needs --family")
    ts = catalog.generate_family(_family_spec(cfg))
    out = Path(cfg.out_dir) / "training.csv"
    catalog.save_training_csv(ts, out)
    print(f"wrote {out} ({ts.k} waveforms, {ts.grid.n_samples} samples)")
    return EXIT_OK


def cmd_basis(cfg: RunConfig) -> int:
    _, rb = _build_basis(cfg)
    out_dir = Path(cfg.out_dir)
    rbm.save_basis_csv(rb, out_dir / "basis.csv")
    rbm.save_greedy_errors_csv(rb, out_dir / "greedy_errors.csv")
    print(f"wrote {out_dir / 'basis.csv'} and {out_dir / 'greedy_errors.csv'} "
          f"(n={rb.n}, final error {rb.greedy_errors[-1]:.3e})")
    return EXIT_OK


def cmd_eim(cfg: RunConfig) -> int:
    _, rb = _build_basis(cfg)
    n = _order(cfg, rb)
    out_dir = Path(cfg.out_dir)
    for criterion in _parse_criteria(cfg.criteria):
        itp = eim.build_interpolant(rb, criterion, n,
                                    first_node_variant=cfg.first_node_variant)
        path = out_dir / f"interpolant_{criterion.value}.json"
        eim.save_interpolant_json(itp, path, include_matrices=cfg.embed_matrices)
        print(f"wrote {path} (n={n})")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    ts, rb = _build_basis(cfg)
    criteria = _parse_criteria(cfg.criteria)
    dataset_id = Path(cfg.input).name if cfg.input else f"family:{cfg.family}"
    reports = diagnostics.run_comparison(
        rb, ts, criteria=criteria, dataset_id=dataset_id,
        first_node_variant=cfg.first_node_variant,
    )
    out_dir = Path(cfg.out_dir)
    for criterion in criteria:
        diagnostics.write_report_json(
            reports[criterion], out_dir / f"report_{criterion.value}.json")
    names = diagnostics.write_curve_csvs(reports, out_dir)
    print(f"wrote {len(criteria)} report(s) and {', '.join(names)} in {out_dir}")
    return EXIT_OK


def cmd_verify_theorem(cfg: RunConfig) -> int:
    _, rb = _build_basis(cfg)
    n = _order(cfg, rb)
    discrepancies = eim.verify_determinant_identity(rb, n)
    lines = ["step,max_rel_discrepancy"]
    lines += [f"{j + 2},{fmt_float(d)}" for j, d in enumerate(discrepancies)]
    out = Path(cfg.out_dir) / "theorem_check.csv"
    atomic_write_text(out, "\n".join(lines) + "\n")
    worst = max(discrepancies) if discrepancies else 0.0
    ok = worst <= THEOREM_TOLERANCE
    print(f"wrote {out}; worst step discrepancy {worst:.3e} "
          f"({'pass' if ok else 'FAIL'} at {THEOREM_TOLERANCE:g})")
    return EXIT_OK if ok else EXIT_VERIFICATION


COMMANDS = {
    "generate": cmd_generate,
    "basis": cmd_basis,
    "eim": cmd_eim,
    "compare": cmd_compare,
    "verify-theorem": cmd_verify_theorem,
}

_CONFIG_ERRORS = (ConfigError, UnknownFamily, InvalidRange, ParseError,
                  GridMismatch, NonFiniteSample, LengthMismatch,
                  FileNotFoundError, ValueError)
_DEGENERACY_ERRORS = (DegenerateResidual, EmptyTraining)
_INTERPOLANT_ERRORS = (SingularVMatrix, NoAdmissibleNode, ConvergenceFailure)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return COMMANDS[args.command](cfg)
    except _DEGENERACY_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except _INTERPOLANT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERPOLANT
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
