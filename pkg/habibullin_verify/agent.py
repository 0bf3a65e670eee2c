import json
import logging
import os
from typing import Any, Dict, List, Optional

from .conclusion_evaluator import ViolationVerdict, violation_report
from .config import VERSION, Settings, current_precision_mode, load_settings
from .exact_core import RationalLike, RationalPolynomial, as_rational
from .hypothesis_certifier import (
    CertificateVerdict,
    ConjectureParams,
    Formulation,
    certify_hypothesis,
    vanishing_moments,
)
from .report import (
    ReportDocument,
    ReportVerdict,
    VerificationRun,
    margin_model,
    shape_model,
    violation_model,
)
from .sharipov_family import (
    BUILDERS,
    FamilyFunction,
    FamilyParams,
    REFLECT,
    Role,
    build_h,
    build_q,
    build_S,
    check_shape,
    differentiate_h,
    family_definition,
    integrate_q_to_h,
    lift_h_to_S,
)

logger = logging.getLogger(__name__)

MANIFEST_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "manifest.json")


class VerificationAgent:
    """
    Orchestrates the verification pipeline for one conjecture formulation:
    shape checks, then the exact hypothesis certificate, then the conclusion
    enclosure. Defaults and roles come from the conjecture registry.
    """

    def __init__(self, settings: Optional[Settings] = None, manifest_path: str = MANIFEST_PATH):
        self.settings = settings or load_settings()
        self.manifest_path = manifest_path
        # Load conjecture registry
        self.manifest = self._load_manifest()

    def _load_manifest(self) -> Dict[str, Any]:
        """Load the conjecture registry from JSON file"""
        try:
            with open(self.manifest_path, "r") as f:
                manifest = json.load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"manifest.json not found at {self.manifest_path}")
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in manifest.json: {e}")
        if "conjectures" not in manifest:
            raise ValueError("manifest.json has no 'conjectures' list")
        return manifest

    def conjectures(self) -> List[Dict[str, Any]]:
        return list(self.manifest["conjectures"])

    def entry(self, formulation) -> Dict[str, Any]:
        formulation = Formulation(formulation)
        for item in self.manifest["conjectures"]:
            if item["name"] == formulation.value:
                return item
        raise ValueError(f"Conjecture {formulation.value} is not in the registry")

    def resolve_params(self, conjecture, n: Optional[int] = None, exponent: Optional[RationalLike] = None) -> ConjectureParams:
        formulation = Formulation.from_number(conjecture)
        entry = self.entry(formulation)
        n = entry["default_n"] if n is None else n
        if n < entry["min_n"]:
            raise ValueError(f"Conjecture {entry['number']} needs n >= {entry['min_n']}, got {n}")
        exponent = entry["default_exponent"] if exponent is None else exponent
        return ConjectureParams(formulation, n, as_rational(exponent))

    def build_function(self, formulation, epsilon: RationalLike, exploratory: bool = False) -> FamilyFunction:
        role = Role(self.entry(formulation)["role"])
        return BUILDERS[role](FamilyParams(as_rational(epsilon), exploratory))

    def _run_record(self, params: ConjectureParams, f: FamilyFunction, tol: float, exploratory: bool, T) -> VerificationRun:
        return VerificationRun(
            conjecture=int(params.formulation.value[1]),
            n=params.n,
            exponent_name=params.exponent_name,
            exponent=str(params.exponent),
            epsilon=str(f.epsilon),
            exploratory=exploratory,
            tolerance=tol,
            truncation=None if T is None else str(as_rational(T)),
            precision_mode=current_precision_mode(),
            timestamp=self.settings.timestamp,
            library_version=VERSION,
            function=family_definition(f),
        )

    def verify(
        self,
        params: ConjectureParams,
        f: FamilyFunction,
        tol: Optional[float] = None,
        exploratory: bool = False,
        T: Optional[RationalLike] = None,
    ) -> ReportDocument:
        """Run shape -> hypothesis -> conclusion and fold the outcome into a report."""
        tol = self.settings.tolerance if tol is None else tol
        run = self._run_record(params, f, tol, exploratory, T)
        notes = []
        if not (0 < f.epsilon <= 1):
            notes.append(f"NON-CONFORMANT: epsilon = {f.epsilon} is outside (0, 1]")

        logger.info("Step 1/3: shape checks for %s", params.formulation.value)
        shape = check_shape(f, FamilyParams(f.epsilon, exploratory=True), self.entry(params.formulation)["checks"])
        logger.info("Step 2/3: hypothesis certificate")
        margin = certify_hypothesis(f, params)

        violation = None
        if not shape.passed:
            verdict = ReportVerdict.HYPOTHESIS_FAILED
            notes.append("shape checks failed: " + "; ".join(shape.failures))
        elif margin.verdict is CertificateVerdict.REFUTED:
            verdict = ReportVerdict.HYPOTHESIS_FAILED
            notes.append(margin.witness_note or "hypothesis margin refuted")
        elif margin.verdict is CertificateVerdict.NOT_APPLICABLE:
            verdict = ReportVerdict.INCONCLUSIVE
            notes.append(margin.reason or "hypothesis margin not certifiable")
        else:
            logger.info("Step 3/3: conclusion enclosure")
            violation = violation_report(f, params, tol, T, self.settings.max_evaluations)
            verdict = {
                ViolationVerdict.VIOLATED: ReportVerdict.COUNTEREXAMPLE_CONFIRMED,
                ViolationVerdict.SATISFIED: ReportVerdict.NOT_A_COUNTEREXAMPLE,
                ViolationVerdict.EQUALITY_WITHIN_TOL: ReportVerdict.NOT_A_COUNTEREXAMPLE,
                ViolationVerdict.INCONCLUSIVE: ReportVerdict.INCONCLUSIVE,
            }[violation.verdict]
            if violation.note:
                notes.append(violation.note)

        logger.info("Verdict for %s, eps=%s: %s", params.formulation.value, f.epsilon, verdict.value)
        return ReportDocument(
            run=run,
            shape_report=shape_model(shape),
            margin_certificate=margin_model(margin),
            violation_report=None if violation is None else violation_model(violation),
            verdict=verdict,
            notes=notes,
        )

    def process(
        self,
        conjecture,
        epsilon: RationalLike,
        n: Optional[int] = None,
        exponent: Optional[RationalLike] = None,
        tol: Optional[float] = None,
        exploratory: bool = False,
        T: Optional[RationalLike] = None,
        function: Optional[FamilyFunction] = None,
    ) -> Dict[str, Any]:
        """Resolve inputs and run the pipeline; input errors come back as success=False."""
        try:
            params = self.resolve_params(conjecture, n, exponent)
            if function is None:
                f = self.build_function(params.formulation, epsilon, exploratory)
            else:
                FamilyParams(as_rational(epsilon), exploratory)
                f = function.with_epsilon(epsilon).with_role(self.entry(params.formulation)["role"])
            report = self.verify(params, f, tol, exploratory, T)
            return {
                "success": True,
                "verdict": report.verdict.value,
                "exit_code": report.exit_code,
                "report": report,
                "error": None,
            }
        except (ValueError, TypeError) as e:
            logger.warning("Verification not run: %s", e)
            return {
                "success": False,
                "verdict": None,
                "exit_code": 1,
                "report": None,
                "error": str(e),
            }

    def chain_report(self, epsilon: RationalLike) -> Dict[str, Any]:
        """Exact checks that the transformation chain reproduces the built-in q, h and S."""
        params = FamilyParams(as_rational(epsilon), exploratory=True)
        q, h, S = build_q(params), build_h(params), build_S(params)
        u = h.theta_form()
        v = S.theta_form()
        moments = {
            "(1-z)U": vanishing_moments(h.perturbation, [REFLECT])[0],
            "(1-z)^2U": vanishing_moments(h.perturbation, [REFLECT**2])[0],
            "y^5V": vanishing_moments(v, [RationalPolynomial.monomial(5)])[0],
        }
        checks = {
            "differentiate_h(h) == q": differentiate_h(h) == q,
            "integrate_q_to_h(q) == h": integrate_q_to_h(q) == h,
            "lift_h_to_S(h) == S": lift_h_to_S(h) == S,
        }
        for name, value in moments.items():
            checks[f"moment {name} == 0"] = value == 0
        logger.info("Transformation chain at eps=%s: %s", epsilon, checks)
        return {
            "success": all(checks.values()),
            "epsilon": str(params.epsilon),
            "checks": checks,
            "moments": {name: str(value) for name, value in moments.items()},
            "theta_forms": {"h": u.to_strings(), "S": v.to_strings()},
        }
