"""Command-line surface: analysis, discarding, diagnostics, and simulation.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
Errors are printed to stderr as single-line JSON {"code", "message"}.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .core import PlaConfig, discard, run_pla
from .dispersion import DispersionMatrix, eigendecompose
from .errors import (
    ConsistencyError,
    DegenerateColumnError,
    DimensionError,
    FactorizationError,
    InsufficientInputError,
    NumericalError,
    ParseError,
    SymmetryError,
    TrackingError,
    ZeroTraceError,
)
from .ingest import load_csv, write_csv
from .perturbation import PerturbationPair, eigengap_bound, variance_sensitivity
from .simulate import MonteCarloSpec, ScenarioSpec, reproduce_table, type_one_error

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_DATA_ERRORS = (
    ParseError,
    DimensionError,
    DegenerateColumnError,
    ConsistencyError,
    InsufficientInputError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)
_NUMERICAL_ERRORS = (
    SymmetryError,
    NumericalError,
    ZeroTraceError,
    FactorizationError,
    TrackingError,
    np.linalg.LinAlgError,
)


class CliExit(SystemExit):
    pass


def _fail(code: int, message: str) -> None:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)
    raise CliExit(code)


class _Parser(argparse.ArgumentParser):
    """argparse with the JSON-on-stderr usage-error contract."""

    def error(self, message):
        _fail(EXIT_USAGE, message)


def _emit(payload: dict, out: str | None, as_text: bool = False) -> None:
    if as_text:
        rendered = _render_text(payload)
    else:
        rendered = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered)


def _render_text(payload: dict, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                lines.append(f"{pad}{key}[{i}]:")
                lines.append(_render_text(item, indent + 1))
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(lines) + ("\n" if indent == 0 else "")


def _load_square_array(path: str) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if row:
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError:
                    raise ParseError(f"{path}: non-numeric matrix cell") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError(f"{path}: matrix file must be square and numeric")
    return np.array(rows)


def _load_symmetric_matrix(path: str, kind: str) -> DispersionMatrix:
    return DispersionMatrix(_load_square_array(path), kind)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PLA_THREADS", "1")))
    except ValueError:
        return 1


def _pla_flags(sub) -> None:
    sub.add_argument("--mode", default="correlation-rescaled",
                     choices=["covariance", "correlation",
                              "covariance-rescaled", "correlation-rescaled"])
    sub.add_argument("--tau", type=float, default=0.6)
    sub.add_argument("--ev-cutoff", type=float, default=0.05)
    sub.add_argument("--ev-formula", default="exact", choices=["exact", "approx"])


def _input_flags(sub) -> None:
    sub.add_argument("--input", required=True, help="input CSV dataset")
    sub.add_argument("--delimiter", default=",")
    sub.add_argument("--no-header", action="store_true")
    sub.add_argument("--na-policy", default="fail", choices=["fail", "drop-row"])


def build_parser() -> _Parser:
    parser = _Parser(prog="pla", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("analyze", help="run PLA on a CSV dataset")
    _input_flags(p)
    _pla_flags(p)
    p.add_argument("--out", help="write report here instead of stdout")
    p.add_argument("--format", default="json", choices=["json", "text"])

    p = subs.add_parser("discard", help="analyze and write the reduced dataset")
    _input_flags(p)
    _pla_flags(p)
    p.add_argument("--out", required=True, help="output CSV for the kept columns")

    p = subs.add_parser("bound", help="eigengap perturbation bound diagnostic")
    p.add_argument("--matrix", required=True, help="CSV of the symmetric base matrix")
    p.add_argument("--kind", default="covariance", choices=["covariance", "correlation"])
    p.add_argument("--delta", required=True, help="CSV of the symmetric perturbation")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "text"])

    p = subs.add_parser("sensitivity", help="variance-sensitivity finite differences")
    p.add_argument("--matrix", required=True, help="CSV of the symmetric covariance")
    p.add_argument("--variable", type=int, required=True, help="0-based variable index")
    p.add_argument("--increments", required=True,
                   help="comma-separated positive increasing grid")
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "text"])

    p = subs.add_parser("simulate", help="Type-I-error Monte Carlo for one scenario")
    p.add_argument("--scenario", required=True, choices=["single-vars", "one-block"])
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--k", "--kappa", dest="count", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--S", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="correlation-rescaled",
                   choices=["covariance", "correlation",
                            "covariance-rescaled", "correlation-rescaled"])
    p.add_argument("--epsilon-scale", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "text"])

    p = subs.add_parser("reproduce-table", help="Type-I-error grid as CSV")
    p.add_argument("--table", required=True, choices=["I", "II"])
    p.add_argument("--M", type=int, action="append")
    p.add_argument("--k", "--kappa", dest="count", type=int, action="append")
    p.add_argument("--N", type=int, action="append")
    p.add_argument("--tau", type=float, action="append")
    p.add_argument("--S", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--manifest", help="optional JSON run-manifest path")
    return parser


def _cmd_analyze(args) -> int:
    data = load_csv(args.input, delimiter=args.delimiter,
                    has_header=not args.no_header, na_policy=args.na_policy)
    config = PlaConfig(tau=args.tau, mode=args.mode,
                       ev_cutoff=args.ev_cutoff, ev_formula=args.ev_formula)
    report = run_pla(data, config)
    _emit(report.to_dict(), args.out, as_text=args.format == "text")
    return EXIT_OK


def _cmd_discard(args) -> int:
    data = load_csv(args.input, delimiter=args.delimiter,
                    has_header=not args.no_header, na_policy=args.na_policy)
    config = PlaConfig(tau=args.tau, mode=args.mode,
                       ev_cutoff=args.ev_cutoff, ev_formula=args.ev_formula)
    report = run_pla(data, config)
    reduced = discard(data, report)
    write_csv(reduced, args.out, delimiter=args.delimiter)
    print(json.dumps({"kept": list(reduced.variable_names),
                      "discarded": list(report.recommendation)}, sort_keys=True))
    return EXIT_OK


def _cmd_bound(args) -> int:
    base = _load_symmetric_matrix(args.matrix, args.kind)
    delta = _load_square_array(args.delta)
    pair = PerturbationPair(base, delta)
    diag = eigengap_bound(eigendecompose(base), pair, args.tau)
    payload = {
        "tau": args.tau,
        "frobenius_norm": pair.frobenius_norm,
        "eigengaps": diag.eigengaps.tolist(),
        "bounds": [None if not np.isfinite(b) else float(b) for b in diag.bounds],
        "implies_below_tau": diag.implies_below_tau.tolist(),
    }
    _emit(payload, args.out, as_text=args.format == "text")
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    matrix = _load_symmetric_matrix(args.matrix, "covariance")
    try:
        increments = [float(x) for x in args.increments.split(",") if x.strip()]
    except ValueError:
        _fail(EXIT_USAGE, "--increments must be comma-separated numbers")
    try:
        profile = variance_sensitivity(matrix, args.variable, increments)
    except (ValueError, IndexError) as exc:
        _fail(EXIT_USAGE, str(exc))
    payload = {
        "target_variable": profile.target_variable,
        "eigen_index": profile.eigen_index,
        "increments": profile.increments.tolist(),
        "finite_differences": [
            None if d is None else d.tolist() for d in profile.diffs
        ],
        "tracking_errors": list(profile.tracking_errors),
        "sign_contract_ok": list(profile.sign_contract_ok),
    }
    _emit(payload, args.out, as_text=args.format == "text")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = ScenarioSpec(m_total=args.M, scenario=args.scenario, count=args.count,
                        n_sample=args.N, tau=args.tau, mode=args.mode,
                        epsilon_scale=args.epsilon_scale)
    mc = MonteCarloSpec(iterations=args.S, master_seed=args.seed, workers=_workers())
    est = type_one_error(spec, mc)
    payload = {
        "scenario": args.scenario, "M": args.M, "k_or_kappa": args.count,
        "N": args.N, "tau": args.tau, "S": args.S, "seed": args.seed,
        "failures": est.failures, "rate": est.rate,
        "ci_low": est.wilson_ci95[0], "ci_high": est.wilson_ci95[1],
        "numerical_failures": est.numerical_failures,
    }
    _emit(payload, args.out, as_text=args.format == "text")
    return EXIT_OK


def _cmd_reproduce_table(args) -> int:
    mc = MonteCarloSpec(iterations=args.S, master_seed=args.seed, workers=_workers())
    start = time.time()
    rows = reproduce_table(args.table, mc, m_values=args.M,
                           count_values=args.count, n_values=args.N, taus=args.tau)
    header = ["M", "k_or_kappa", "N", "tau", "rate", "ci_low", "ci_high", "S"]
    target = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(target, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            target.close()
    if args.manifest:
        manifest = {
            "table": args.table, "S": args.S, "master_seed": args.seed,
            "M": args.M, "k_or_kappa": args.count, "N": args.N, "tau": args.tau,
            "rows": len(rows), "wall_time_s": time.time() - start,
        }
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "discard": _cmd_discard,
    "bound": _cmd_bound,
    "sensitivity": _cmd_sensitivity,
    "simulate": _cmd_simulate,
    "reproduce-table": _cmd_reproduce_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliExit as exc:
        return int(exc.code)
    except _DATA_ERRORS as exc:
        print(json.dumps({"code": EXIT_DATA, "message": str(exc)}), file=sys.stderr)
        return EXIT_DATA
    except _NUMERICAL_ERRORS as exc:
        print(json.dumps({"code": EXIT_NUMERICAL, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
