import logging
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from mpmath import mp

from .agent import VerificationAgent
from .conclusion_evaluator import epsilon_linearity_check, tail_agreement
from .exact_core import RationalLike, as_rational, interval_midpoint, interval_width
from .hypothesis_certifier import Formulation
from .quadrature_engine import ToleranceNotMetError, validate_error_model
from .report import EXIT_CODES, ReportVerdict, write_csv, write_report
from .sharipov_family import BUILDERS, FamilyParams, Role, eval_function, load_family_definition

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["epsilon", "shape", "hypothesis", "conclusion", "margin_lo", "margin_hi", "verdict"]
EMIT_COLUMNS = ["x", "value", "width"]
TAIL_CHECK_POINTS = (Fraction(1), Fraction(2), Fraction(10))
TAIL_AGREEMENT = mp.mpf("1e-10")


class CommandExecutor:
    """Executes the CLI commands; every command returns a dict with success and exit_code"""

    def __init__(self, agent: Optional[VerificationAgent] = None):
        self.agent = agent or VerificationAgent()

    def verify(
        self,
        conjecture,
        epsilon: Optional[RationalLike] = None,
        n: Optional[int] = None,
        exponent: Optional[RationalLike] = None,
        tol: Optional[float] = None,
        exploratory: bool = False,
        truncation: Optional[RationalLike] = None,
        function_file: Optional[str] = None,
        json_path: Optional[str] = None,
    ) -> Dict[str, Any]:
        function = None
        if function_file:
            try:
                function = load_family_definition(function_file)
            except (FileNotFoundError, ValueError, TypeError) as e:
                return {"success": False, "exit_code": 1, "error": str(e)}
            if epsilon is None:
                epsilon = function.epsilon
        if epsilon is None:
            return {"success": False, "exit_code": 1, "error": "--epsilon is required"}

        result = self.agent.process(
            conjecture, epsilon, n=n, exponent=exponent, tol=tol,
            exploratory=exploratory, T=truncation, function=function,
        )
        if result["success"] and json_path:
            try:
                write_report(result["report"], json_path)
            except OSError as e:
                return {"success": False, "exit_code": 1, "error": f"Cannot write report: {e}"}
            result["json_path"] = json_path
        return result

    def sweep(
        self,
        conjecture,
        grid: Sequence[Fraction],
        n: Optional[int] = None,
        exponent: Optional[RationalLike] = None,
        tol: Optional[float] = None,
        exploratory: bool = False,
        csv_path: Optional[str] = None,
    ) -> Dict[str, Any]:
        """One verification per epsilon, plus the epsilon-law summary over the positive part of the grid."""
        if not grid:
            return {"success": False, "exit_code": 1, "error": "empty epsilon grid"}

        rows: List[Dict[str, str]] = []
        verdicts = []
        margins = {}
        for eps in grid:
            result = self.agent.process(conjecture, eps, n=n, exponent=exponent, tol=tol, exploratory=exploratory)
            if not result["success"]:
                return {"success": False, "exit_code": 1, "error": f"epsilon = {eps}: {result['error']}"}
            report = result["report"]
            violation = report.violation_report
            margin = violation.margin if violation is not None else None
            rows.append(
                {
                    "epsilon": str(as_rational(eps)),
                    "shape": "pass" if report.shape_report.passed else "fail",
                    "hypothesis": report.margin_certificate.verdict,
                    "conclusion": violation.verdict if violation is not None else "",
                    "margin_lo": margin.lo if margin is not None else "",
                    "margin_hi": margin.hi if margin is not None else "",
                    "verdict": report.verdict.value,
                }
            )
            verdicts.append(report.verdict)
            if margin is not None:
                margins[as_rational(eps)] = (mp.mpf(margin.lo), mp.mpf(margin.hi))

        summary = self._linearity_summary(conjecture, grid, verdicts, n, exponent, tol)
        positive = sorted(e for e in margins if e > 0)
        summary["margins_increasing"] = all(
            margins[a][1] < margins[b][0] for a, b in zip(positive, positive[1:])
        )
        if csv_path:
            try:
                write_csv(rows, csv_path, SWEEP_COLUMNS)
            except OSError as e:
                return {"success": False, "exit_code": 1, "error": f"Cannot write {csv_path}: {e}"}

        exit_code = max(EXIT_CODES[v] for v in verdicts)
        return {
            "success": True,
            "exit_code": exit_code,
            "rows": rows,
            "linearity": summary,
            "csv_path": csv_path,
        }

    def _linearity_summary(self, conjecture, grid, verdicts, n, exponent, tol) -> Dict[str, Any]:
        positive = [as_rational(e) for e, v in zip(grid, verdicts) if 0 < as_rational(e) <= 1]
        if not positive:
            return {"checked": False, "note": "no epsilon in (0, 1]"}
        if any(v is not ReportVerdict.COUNTEREXAMPLE_CONFIRMED for e, v in zip(grid, verdicts) if as_rational(e) in positive):
            return {"checked": False, "note": "some rows were not confirmed"}
        params = self.agent.resolve_params(conjecture, n, exponent)
        f = self.agent.build_function(params.formulation, 1)
        try:
            check = epsilon_linearity_check(f, params, positive, tol or self.agent.settings.tolerance)
        except (ToleranceNotMetError, ValueError) as e:
            return {"checked": False, "note": str(e)}
        return {
            "checked": True,
            "max_relative_deviation": mp.nstr(check.max_deviation, 6),
            "allowed": mp.nstr(check.bound, 6),
            "within_bounds": check.within_bounds,
        }

    def emit(
        self,
        role: str,
        epsilon: RationalLike,
        start: RationalLike,
        stop: RationalLike,
        samples: int,
        out: str,
        exploratory: bool = False,
    ) -> Dict[str, Any]:
        """Sample q, h or S at equally spaced rational points into a CSV of x, value, width."""
        try:
            start, stop = as_rational(start), as_rational(stop)
            if start < 0 or not start < stop:
                raise ValueError(f"invalid range {start}:{stop}; need 0 <= a < b")
            if samples < 2:
                raise ValueError("--samples must be at least 2")
            f = BUILDERS[Role(role.upper())](FamilyParams(as_rational(epsilon), exploratory))
        except (ValueError, TypeError) as e:
            return {"success": False, "exit_code": 1, "error": str(e)}

        rows = []
        step = (stop - start) / (samples - 1)
        for i in range(samples):
            x = start + i * step
            value = eval_function(f, x, self.agent.settings.knot_width)
            rows.append(
                {
                    "x": str(x),
                    "value": mp.nstr(interval_midpoint(value), 20),
                    "width": mp.nstr(interval_width(value), 6),
                }
            )
        try:
            write_csv(rows, out, EMIT_COLUMNS)
        except OSError as e:
            return {"success": False, "exit_code": 1, "error": f"Cannot write {out}: {e}"}
        return {"success": True, "exit_code": 0, "rows": rows, "csv_path": out}

    def conjectures(self) -> Dict[str, Any]:
        return {"success": True, "exit_code": 0, "conjectures": self.agent.conjectures()}

    def chain(self, epsilon: RationalLike = 1) -> Dict[str, Any]:
        try:
            result = self.agent.chain_report(epsilon)
        except (ValueError, TypeError) as e:
            return {"success": False, "exit_code": 1, "error": str(e)}
        result["exit_code"] = 0 if result["success"] else 2
        return result

    def selfcheck(self) -> Dict[str, Any]:
        """Quadrature error model, closed-form tails and the exact construction identities."""
        validation = validate_error_model()
        checks = {f"quadrature: {case.name}": case.passed for case in validation.cases}
        for formulation in Formulation:
            params = self.agent.resolve_params(int(formulation.value[1]))
            for T in TAIL_CHECK_POINTS:
                difference, _ = tail_agreement(params, T)
                checks[f"tail {formulation.value} at T={T}"] = difference <= TAIL_AGREEMENT
        chain = self.agent.chain_report(1)
        for name, ok in chain["checks"].items():
            checks[f"chain: {name}"] = ok
        passed = all(checks.values())
        logger.info("Self-check: %d/%d passed", sum(checks.values()), len(checks))
        return {"success": passed, "exit_code": 0 if passed else 2, "checks": checks}

    def execute_command(self, command: str, parameters: Dict[str, Any]) -> Dict[str, Any]:
        """
        Main command router
        Routes a parsed command to its handler
        """
        if command == "verify":
            return self.verify(**parameters)
        elif command == "sweep":
            return self.sweep(**parameters)
        elif command == "emit":
            return self.emit(**parameters)
        elif command == "conjectures":
            return self.conjectures()
        elif command == "chain":
            return self.chain(**parameters)
        elif command == "selfcheck":
            return self.selfcheck()
        else:
            return {"success": False, "exit_code": 1, "error": f"Unknown command: {command}"}
