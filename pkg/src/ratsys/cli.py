"""Command-line front end.

Every invocation writes exactly one JSON document to standard output;
diagnostics go to standard error. Exit codes: 0 success, 1 negative
analysis result, 2 input or usage error, 3 Gröbner budget exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

from . import canform, obsfield
from .exprio import SpecError, dump_system, emit_report, load_system
from .groebner import Budget, BudgetExceeded, set_default_budget
from .simulate import PiecewiseConstantInput, response_equiv_probe, simulate
from .sysmodel import RationalSystem, UnsupportedVariety, validate_system

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ratsys", description="Observability and canonical forms of rational control systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("validate", help="check a system spec against the system invariants")
    c.add_argument("spec")

    c = sub.add_parser("analyze", help="decide rational observability")
    c.add_argument("spec")
    c.add_argument("--method", choices=("jacobian", "exact"), default="jacobian")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--kmax", type=int, default=8)

    c = sub.add_parser("index", help="compute the observability index")
    c.add_argument("spec")
    c.add_argument("--kmax", type=int, default=8)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("canonicalize", help="transform into observable canonical form")
    c.add_argument("spec")
    c.add_argument("--out", help="also write the canonical system spec to this path")
    c.add_argument("--kmax", type=int, default=8)

    c = sub.add_parser("check-ocf", help="check observable canonical form structure")
    c.add_argument("spec")

    c = sub.add_parser("simulate", help="integrate under a piecewise-constant input")
    c.add_argument("spec")
    c.add_argument("--input", required=True, help='segments "value:duration,..."')
    c.add_argument("--rtol", type=float, default=1e-9)
    c.add_argument("--csv", help="write the sampled trajectory to this path")

    c = sub.add_parser("compare", help="probe response-map equality of two systems")
    c.add_argument("spec_a")
    c.add_argument("spec_b")
    c.add_argument("--trials", type=int, default=20)
    c.add_argument("--horizon", type=float, default=2.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-6)
    return p


def _load(path: str, validate: bool = True) -> RationalSystem:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SpecError("io", f"cannot read {path}: {exc.strerror or exc}") from exc
    return load_system(data, validate=validate)


def _cmd_validate(args) -> tuple[dict, int]:
    s = _load(args.spec, validate=False)
    problems = validate_system(s)
    return {"valid": not problems, "violations": problems}, EXIT_OK if not problems else EXIT_NEGATIVE


def _cmd_analyze(args) -> tuple[dict, int]:
    s = _load(args.spec)
    report = obsfield.rationally_observable(s, method=args.method, k_max=args.kmax, seed=args.seed)
    return report.to_dict(), EXIT_OK if report.rationally_observable else EXIT_NEGATIVE


def _cmd_index(args) -> tuple[dict, int]:
    s = _load(args.spec)
    try:
        report = obsfield.observability_index_report(s, k_max=args.kmax, seed=args.seed)
    except (obsfield.NotObservable, obsfield.IndexNotAchieved) as exc:
        return {"n_o": None, "error": {"kind": "not-observable", "message": str(exc)}}, EXIT_NEGATIVE
    return report.to_dict(), EXIT_OK


def _cmd_canonicalize(args) -> tuple[dict, int]:
    s = _load(args.spec)
    try:
        result = canform.to_ocf(s, k_max=args.kmax)
    except obsfield.NotObservable as exc:
        return {"error": {"kind": "not-observable", "message": str(exc)}}, EXIT_NEGATIVE
    doc = result.to_dict()
    doc["is_ocf"] = canform.is_ocf(result.system).to_dict()
    if args.out:
        Path(args.out).write_text(dump_system(result.system))
        print(f"wrote {args.out}", file=sys.stderr)
    return doc, EXIT_OK


def _cmd_check_ocf(args) -> tuple[dict, int]:
    report = canform.is_ocf(_load(args.spec))
    return report.to_dict(), EXIT_OK if report.is_ocf else EXIT_NEGATIVE


def _cmd_simulate(args) -> tuple[dict, int]:
    s = _load(args.spec)
    try:
        u = PiecewiseConstantInput.parse(args.input)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    tr = simulate(s, u, rtol=args.rtol)
    if args.csv:
        Path(args.csv).write_text(tr.to_csv())
        print(f"wrote {args.csv}", file=sys.stderr)
    doc = tr.to_dict()
    doc["input"] = u.to_dict()
    return doc, EXIT_OK if tr.status.completed else EXIT_NEGATIVE


def _cmd_compare(args) -> tuple[dict, int]:
    a, b = _load(args.spec_a), _load(args.spec_b)
    if args.trials < 1 or args.horizon <= 0:
        raise UsageError("--trials must be positive and --horizon greater than zero")
    try:
        report = response_equiv_probe(a, b, trials=args.trials, horizon=args.horizon, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = report.to_dict()
    doc["tol"] = args.tol
    doc["equivalent"] = report.max_deviation < args.tol
    return doc, EXIT_OK if doc["equivalent"] else EXIT_NEGATIVE


_COMMANDS = {
    "validate": _cmd_validate,
    "analyze": _cmd_analyze,
    "index": _cmd_index,
    "canonicalize": _cmd_canonicalize,
    "check-ocf": _cmd_check_ocf,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def _error(kind: str, message: str, **extra) -> dict:
    return {"error": {"kind": kind, "message": message, **extra}}


def run(argv: Sequence[str] | None = None) -> tuple[str, int]:
    """Execute a command; returns the JSON text for standard output and the exit code."""
    try:
        if os.environ.get("RATSYS_BUDGET"):
            set_default_budget(Budget.from_env())
        args = _build_parser().parse_args(argv)
        doc, code = _COMMANDS[args.command](args)
    except UsageError as exc:
        doc, code = _error("usage", str(exc)), EXIT_INPUT
    except SpecError as exc:
        doc, code = _error(exc.kind, str(exc), violations=exc.violations), EXIT_INPUT
    except canform.MissingAssumption as exc:
        doc, code = _error("missing-assumption", str(exc)), EXIT_INPUT
    except canform.InverseExtractionError as exc:
        doc, code = _error("inverse-extraction", str(exc), basis=exc.basis), EXIT_NEGATIVE
    except canform.CanonicalFormError as exc:
        doc, code = _error("canonical-form", str(exc)), EXIT_NEGATIVE
    except UnsupportedVariety as exc:
        doc, code = _error("unsupported-variety", str(exc)), EXIT_INPUT
    except BudgetExceeded as exc:
        doc, code = _error("budget", str(exc), resource=exc.resource, limit=exc.limit), EXIT_BUDGET
    except ValueError as exc:
        doc, code = _error("input", str(exc)), EXIT_INPUT
    if code and "error" in doc:
        print(f"ratsys: {doc['error']['message']}", file=sys.stderr)
    return emit_report(doc), code


def main(argv: Sequence[str] | None = None) -> int:
    text, code = run(argv)
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
