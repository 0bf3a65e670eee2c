"""
Command-line entry point.

    python -m habibullin_verify verify --conjecture 2 --epsilon 1
    python -m habibullin_verify sweep --conjecture 2 --epsilon-grid 1/10:1:1/10
    python -m habibullin_verify emit --function h --epsilon 1 --range 0:1 --samples 5 --out h.csv
    python -m habibullin_verify conjectures | chain | selfcheck

Exit codes: 0 decisive result, 1 invalid flags, 2 inconclusive,
3 hypothesis failed.
"""

import argparse
import logging
import re
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .agent import VerificationAgent
from .config import VERSION, configure_precision, load_settings
from .tools import CommandExecutor

logger = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"^-?\d+(/\d+)?$")


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_rational_flag(text: str) -> Fraction:
    """Exact 'p/q' or integer; decimals are refused so no rounding can creep in."""
    text = text.strip()
    if not RATIONAL_PATTERN.match(text):
        raise argparse.ArgumentTypeError(f"'{text}' is not an exact rational (use p/q)")
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise argparse.ArgumentTypeError(f"'{text}' has a zero denominator")


def parse_grid(text: str) -> List[Fraction]:
    """start:stop:step, stop included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid '{text}' must be start:stop:step")
    start, stop, step = (parse_rational_flag(p) for p in parts)
    if step <= 0:
        raise argparse.ArgumentTypeError("grid step must be positive")
    values = []
    k = 0
    while start + k * step <= stop:
        values.append(start + k * step)
        k += 1
    return values


def parse_range(text: str) -> Tuple[Fraction, Fraction]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"range '{text}' must be a:b")
    return parse_rational_flag(parts[0]), parse_rational_flag(parts[1])


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--extended-precision", action="store_true", help="80 significant digits instead of 40")

    parser = _ArgumentParser(
        prog="habibullin-verify",
        description="Certify the Sharipov counterexamples to the three forms of Habibullin's conjecture",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)

    verify = commands.add_parser("verify", parents=[common], help="shape -> hypothesis -> conclusion for one epsilon")
    verify.add_argument("--conjecture", type=int, choices=[1, 2, 3], required=True)
    verify.add_argument("--epsilon", type=parse_rational_flag, default=None)
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--exponent", type=parse_rational_flag, default=None, help="lambda for 1, alpha for 2 and 3")
    verify.add_argument("--tol", type=float, default=None)
    verify.add_argument("--truncation", type=parse_rational_flag, default=None, help="split point T >= knot")
    verify.add_argument("--exploratory", action="store_true", help="allow epsilon outside [0, 1]")
    verify.add_argument("--function-file", default=None, help="JSON function definition instead of the built-in family")
    verify.add_argument("--json", dest="json_path", default=None)

    sweep = commands.add_parser("sweep", parents=[common], help="verify over an epsilon grid")
    sweep.add_argument("--conjecture", type=int, choices=[1, 2, 3], required=True)
    sweep.add_argument("--epsilon-grid", type=parse_grid, required=True)
    sweep.add_argument("--n", type=int, default=None)
    sweep.add_argument("--exponent", type=parse_rational_flag, default=None)
    sweep.add_argument("--tol", type=float, default=None)
    sweep.add_argument("--exploratory", action="store_true")
    sweep.add_argument("--csv", dest="csv_path", default=None)

    emit = commands.add_parser("emit", parents=[common], help="sample q, h or S into a CSV")
    emit.add_argument("--function", dest="role", choices=["q", "h", "S"], required=True)
    emit.add_argument("--epsilon", type=parse_rational_flag, required=True)
    emit.add_argument("--range", dest="span", type=parse_range, required=True)
    emit.add_argument("--samples", type=int, required=True)
    emit.add_argument("--out", required=True)
    emit.add_argument("--exploratory", action="store_true")

    commands.add_parser("conjectures", parents=[common], help="list the conjecture registry")

    chain = commands.add_parser("chain", parents=[common], help="exact checks of q = h', h -> S and the moments")
    chain.add_argument("--epsilon", type=parse_rational_flag, default=Fraction(1))

    commands.add_parser("selfcheck", parents=[common], help="quadrature error model, tails and identities")
    return parser


def _parameters(args: argparse.Namespace) -> Dict[str, Any]:
    if args.command == "verify":
        return {
            "conjecture": args.conjecture,
            "epsilon": args.epsilon,
            "n": args.n,
            "exponent": args.exponent,
            "tol": args.tol,
            "exploratory": args.exploratory,
            "truncation": args.truncation,
            "function_file": args.function_file,
            "json_path": args.json_path,
        }
    if args.command == "sweep":
        return {
            "conjecture": args.conjecture,
            "grid": args.epsilon_grid,
            "n": args.n,
            "exponent": args.exponent,
            "tol": args.tol,
            "exploratory": args.exploratory,
            "csv_path": args.csv_path,
        }
    if args.command == "emit":
        return {
            "role": args.role,
            "epsilon": args.epsilon,
            "start": args.span[0],
            "stop": args.span[1],
            "samples": args.samples,
            "out": args.out,
            "exploratory": args.exploratory,
        }
    if args.command == "chain":
        return {"epsilon": args.epsilon}
    return {}


def _print_result(command: str, result: Dict[str, Any]) -> None:
    if not result.get("success") and result.get("error"):
        print(f"❌ {result['error']}", file=sys.stderr)
        return
    if command == "verify":
        report = result["report"]
        mark = "✅" if result["exit_code"] == 0 else ("⚠️ " if result["exit_code"] == 2 else "❌")
        print(f"{mark} Conjecture {report.run.conjecture}, eps = {report.run.epsilon}: {report.verdict.value}")
        if report.violation_report is not None and report.violation_report.margin is not None:
            margin = report.violation_report.margin
            print(f"   margin in [{margin.lo}, {margin.hi}]")
        for note in report.notes:
            print(f"   {note}")
        if result.get("json_path"):
            print(f"📝 Report written to {result['json_path']}")
    elif command == "sweep":
        print("epsilon      hypothesis      conclusion            verdict")
        for row in result["rows"]:
            print(f"{row['epsilon']:<12} {row['hypothesis']:<15} {row['conclusion'] or '-':<21} {row['verdict']}")
        print(f"ε-law: {result['linearity']}")
    elif command == "emit":
        print(f"📝 Wrote {len(result['rows'])} samples to {result['csv_path']}")
    elif command == "conjectures":
        for entry in result["conjectures"]:
            print(f"{entry['name']} ({entry['role']}): {entry['description']}")
            print(f"   hypothesis: {entry['hypothesis']}")
            print(f"   conclusion: {entry['conclusion']} <= {entry['rhs']}")
            print(f"   defaults: n = {entry['default_n']}, {entry['exponent_name']} = {entry['default_exponent']}")
    else:
        for name, ok in result["checks"].items():
            print(f"{'✅' if ok else '❌'} {name}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    try:
        settings = load_settings()
    except (ValidationError, ValueError) as e:
        print(f"❌ Invalid environment configuration: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=settings.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    configure_precision("extended" if args.extended_precision else settings.precision_mode)

    executor = CommandExecutor(VerificationAgent(settings))
    result = executor.execute_command(args.command, _parameters(args))
    _print_result(args.command, result)
    return result["exit_code"]


if __name__ == "__main__":
    raise SystemExit(main())
