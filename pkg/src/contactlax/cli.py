"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import jsonschema

from . import contact, numerics, systemgen
from .exprio import (
    ParseError,
    ProblemDocument,
    SystemDocument,
    format_system,
    parse_substitution,
    print_canonical,
    print_latex,
)
from .jetalg import Substitution

DEFAULT_DKP_SUBS = "w=0,q=(3/2)*u"


class UsageError(Exception):
    pass


def _load_problem(path) -> ProblemDocument:
    if path is None:
        f, g = systemgen.example1()
        return ProblemDocument.from_polys(f, g, systemgen.EXAMPLE1_VARIABLES, description="example 1")
    try:
        return ProblemDocument.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _emit_system(system, fmt: str, out) -> None:
    if fmt == "json":
        out.write(SystemDocument.from_system(system).to_json())
    else:
        out.write(format_system(system, latex=(fmt == "latex")) + "\n")


def cmd_derive(args, out) -> int:
    doc = _load_problem(args.input)
    system = systemgen.extract_system(doc.f, doc.g, doc.variables)
    _emit_system(system, args.format, out)
    return 0


def cmd_verify_identities(args, out) -> int:
    failures = contact.verify_identities(args.trials, args.seed, args.max_degree)
    for name, count in failures.items():
        out.write(f"{name}: {'PASS' if count == 0 else 'FAIL'} ({count}/{args.trials} failing)\n")
    return 0 if not any(failures.values()) else 1


def _reduced(doc: ProblemDocument, drop, subs_text):
    if drop == "y":
        system = systemgen.reduce_drop_y(doc.f, doc.g, doc.variables)
    elif drop == "z":
        system = systemgen.reduce_drop_z(doc.f, doc.g, doc.variables)
    else:
        system = systemgen.extract_system(doc.f, doc.g, doc.variables)
    if subs_text:
        system = system.substitute(Substitution(parse_substitution(subs_text, doc.variables)))
    return system


def cmd_reduce(args, out) -> int:
    doc = _load_problem(args.input)
    _emit_system(_reduced(doc, args.drop, args.subs), args.format, out)
    return 0


def cmd_example2(args, out) -> int:
    try:
        f, g = systemgen.example2(args.m, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    variables = systemgen.example2_variables(args.m, args.n)
    system = systemgen.extract_system(f, g, variables)
    _emit_system(system, args.format, out)
    if args.check:
        ok = system.same_as(systemgen.gndkp_closed_form(args.m, args.n)) and system.M == args.m + args.n + 1
        sys.stderr.write(f"closed form {'matches' if ok else 'DOES NOT match'} for m={args.m}, n={args.n}\n")
        return 0 if ok else 1
    return 0


def cmd_hierarchy(args, out) -> int:
    doc = _load_problem(args.input)
    if args.order < 0:
        raise UsageError("--order must be non-negative")
    n = len(doc.variables)
    names = list(doc.variables) + [f"chi{k}" for k in range(args.order + 1)]
    for eq in systemgen.hierarchy_split(doc.f, doc.g, args.order, n):
        out.write(f"[p^{eq.power}] {print_canonical(eq.expression, names)} = 0\n")
    return 0


def cmd_laxtest(args, out) -> int:
    try:
        deltas = [float(x) for x in args.deltas.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --deltas {args.deltas!r}") from None
    if len(deltas) < 3 or any(d <= 0 for d in deltas):
        raise UsageError("--deltas needs at least three positive values")
    rows, order = numerics.lax_test(deltas, args.perturb)
    numerics.write_csv(rows, out)
    certified = order >= 3.0
    sys.stderr.write(f"observed order {order:.3f}: flows {'commute' if certified else 'do not commute'}\n")
    return 0 if certified else 1


def cmd_eliminate_dkp(args, out) -> int:
    doc = _load_problem(args.input)
    system = _reduced(doc, "z", args.subs)
    result = systemgen.dkp_eliminate(system)
    printer = print_latex if args.format == "latex" else print_canonical
    out.write(printer(result, system.variables) + " = 0\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contactlax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = dict(choices=["text", "json", "latex"], default="text")

    p = sub.add_parser("derive", help="quasi-linear system from a problem document")
    p.add_argument("--input", help="problem JSON (default: example 1)")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("verify-identities", help="randomized bracket identity suite")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-degree", type=int, default=2)
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("reduce", help="(2+1)-dimensional reduction and substitution")
    p.add_argument("--input")
    p.add_argument("--drop", choices=["y", "z"])
    p.add_argument("--subs", help='e.g. "w=0,q=(3/2)*u"')
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("example2", help="the (m, n) polynomial family")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--check", action="store_true", help="compare with the closed form")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_example2)

    p = sub.add_parser("hierarchy", help="conservation-law hierarchy equations")
    p.add_argument("--input")
    p.add_argument("--order", type=int, default=0)
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("laxtest", help="numeric commutation of the linear Lax flows")
    p.add_argument("--deltas", default="0.02,0.01,0.005")
    p.add_argument("--perturb", type=float, default=1.0)
    p.set_defaults(func=cmd_laxtest)

    p = sub.add_parser("eliminate-dkp", help="drop z, substitute, and eliminate v")
    p.add_argument("--input")
    p.add_argument("--subs", default=DEFAULT_DKP_SUBS)
    p.add_argument("--format", choices=["text", "latex"], default="text")
    p.set_defaults(func=cmd_eliminate_dkp)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except systemgen.SystemError_ as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (UsageError, ParseError, ValueError, jsonschema.ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
