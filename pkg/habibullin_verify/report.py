"""
JSON and CSV reports.

Field order in every model is the serialization order, rationals are
"p/q" strings and intervals are {"lo", "hi", "width"} with outward-rounded
decimal endpoints, so the same run always writes the same bytes.
"""

import csv
import json
import logging
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from .conclusion_evaluator import ViolationReport
from .exact_core import (
    Interval,
    RationalPolynomial,
    RootEnclosure,
    SignCertificate,
    SignVerdict,
    interval_to_dict,
)
from .hypothesis_certifier import MarginCertificate
from .sharipov_family import ShapeReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


class ReportVerdict(str, Enum):
    COUNTEREXAMPLE_CONFIRMED = "COUNTEREXAMPLE_CONFIRMED"
    NOT_A_COUNTEREXAMPLE = "NOT_A_COUNTEREXAMPLE"
    HYPOTHESIS_FAILED = "HYPOTHESIS_FAILED"
    INCONCLUSIVE = "INCONCLUSIVE"


EXIT_CODES = {
    ReportVerdict.COUNTEREXAMPLE_CONFIRMED: 0,
    ReportVerdict.NOT_A_COUNTEREXAMPLE: 0,
    ReportVerdict.INCONCLUSIVE: 2,
    ReportVerdict.HYPOTHESIS_FAILED: 3,
}


class IntervalModel(BaseModel):
    lo: str
    hi: str
    width: str


class RootEnclosureModel(BaseModel):
    lower: str
    upper: str
    multiplicity: int


class CertificateModel(BaseModel):
    """A sign certificate with everything needed to re-check it."""

    polynomial: List[str]
    domain: List[str]
    verdict: str
    root_enclosures: List[RootEnclosureModel] = Field(default_factory=list)
    endpoint_values: List[str]
    sample_points: List[str]
    witness: Optional[str] = None
    zero_polynomial: bool = False


class ShapeModel(BaseModel):
    role: Optional[str] = None
    continuous: bool
    nonnegative: Optional[bool] = None
    nondecreasing: Optional[bool] = None
    log_convex: Optional[bool] = None
    log_convex_method: Optional[str] = None
    non_conformant: bool = False
    passed: bool
    failures: List[str] = Field(default_factory=list)
    certificates: Dict[str, CertificateModel] = Field(default_factory=dict)


class MarginModel(BaseModel):
    verdict: str
    epsilon: str
    inner_polynomial: Optional[List[str]] = None
    outer_polynomial: Optional[List[str]] = None
    outer_A: Optional[str] = None
    outer_B: Optional[str] = None
    reduced_by_t: bool = False
    inner_certificate: Optional[CertificateModel] = None
    outer_certificate: Optional[CertificateModel] = None
    witness_t: Optional[IntervalModel] = None
    witness_note: Optional[str] = None
    reason: Optional[str] = None


class ViolationModel(BaseModel):
    verdict: str
    lhs: Optional[IntervalModel] = None
    rhs: IntervalModel
    rhs_closed_form: str
    margin: Optional[IntervalModel] = None
    error_budget: Optional[Dict[str, str]] = None
    truncation: Optional[str] = None
    tail_method: Optional[str] = None
    note: Optional[str] = None


class VerificationRun(BaseModel):
    conjecture: int
    n: int
    exponent_name: str
    exponent: str
    epsilon: str
    exploratory: bool = False
    tolerance: float
    truncation: Optional[str] = None
    precision_mode: str
    timestamp: Optional[str] = None
    library_version: str
    function: Dict[str, Any] = Field(default_factory=dict)


class ReportDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    run: VerificationRun
    shape_report: Optional[ShapeModel] = None
    margin_certificate: Optional[MarginModel] = None
    violation_report: Optional[ViolationModel] = None
    verdict: ReportVerdict
    notes: List[str] = Field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]


# -- conversions from the library objects ----------------------------------------


def interval_model(x: Optional[Interval]) -> Optional[IntervalModel]:
    return None if x is None else IntervalModel(**interval_to_dict(x))


def certificate_model(cert: Optional[SignCertificate]) -> Optional[CertificateModel]:
    if cert is None:
        return None
    return CertificateModel(
        polynomial=cert.polynomial.to_strings(),
        domain=[str(x) for x in cert.domain],
        verdict=cert.verdict.value,
        root_enclosures=[
            RootEnclosureModel(lower=str(e.lower), upper=str(e.upper), multiplicity=e.multiplicity)
            for e in cert.root_enclosures
        ],
        endpoint_values=[str(v) for v in cert.endpoint_values],
        sample_points=[str(x) for x in cert.sample_points],
        witness=None if cert.witness is None else str(cert.witness),
        zero_polynomial=cert.zero_polynomial,
    )


def certificate_from_model(model: CertificateModel) -> SignCertificate:
    """Rebuild a certificate from a report so that ``recheck`` can run on it."""
    return SignCertificate(
        polynomial=RationalPolynomial.from_strings(model.polynomial),
        domain=tuple(Fraction(x) for x in model.domain),
        verdict=SignVerdict(model.verdict),
        root_enclosures=tuple(
            RootEnclosure(Fraction(e.lower), Fraction(e.upper), e.multiplicity) for e in model.root_enclosures
        ),
        endpoint_values=tuple(Fraction(v) for v in model.endpoint_values),
        sample_points=tuple(Fraction(x) for x in model.sample_points),
        witness=None if model.witness is None else Fraction(model.witness),
        zero_polynomial=model.zero_polynomial,
    )


def shape_model(shape: ShapeReport) -> ShapeModel:
    return ShapeModel(
        role=None if shape.role is None else shape.role.value,
        continuous=shape.continuous,
        nonnegative=shape.nonnegative,
        nondecreasing=shape.nondecreasing,
        log_convex=shape.log_convex,
        log_convex_method=shape.log_convex_method,
        non_conformant=shape.non_conformant,
        passed=shape.passed,
        failures=list(shape.failures),
        certificates={name: certificate_model(cert) for name, cert in sorted(shape.certificates.items())},
    )


def margin_model(cert: MarginCertificate) -> MarginModel:
    margin = cert.margin
    return MarginModel(
        verdict=cert.verdict.value,
        epsilon=str(cert.epsilon),
        inner_polynomial=None if margin is None else margin.inner.to_strings(),
        outer_polynomial=None if margin is None else margin.outer.to_strings(),
        outer_A=None if margin is None else str(margin.outer_A),
        outer_B=None if margin is None else str(margin.outer_B),
        reduced_by_t=False if margin is None else margin.reduced_by_t,
        inner_certificate=certificate_model(cert.inner),
        outer_certificate=certificate_model(cert.outer),
        witness_t=interval_model(cert.witness_t),
        witness_note=cert.witness_note,
        reason=cert.reason,
    )


def violation_model(report: ViolationReport) -> ViolationModel:
    return ViolationModel(
        verdict=report.verdict.value,
        lhs=interval_model(report.lhs),
        rhs=interval_model(report.rhs),
        rhs_closed_form=report.rhs_closed_form,
        margin=interval_model(report.margin),
        error_budget=None if report.error_budget is None else report.error_budget.as_dict(),
        truncation=None if report.T is None else str(report.T),
        tail_method=report.tail_method,
        note=report.note,
    )


# -- files -----------------------------------------------------------------------


def render_report(doc: ReportDocument) -> str:
    return json.dumps(doc.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def write_report(doc: ReportDocument, path: str) -> str:
    text = render_report(doc)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("Wrote report %s (verdict %s)", path, doc.verdict.value)
    return path


def parse_report(path: str) -> ReportDocument:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ReportDocument.model_validate_json(f.read())
    except FileNotFoundError:
        raise FileNotFoundError(f"{path} not found")


def write_csv(rows: Sequence[Dict[str, Any]], path: str, columns: Optional[Sequence[str]] = None) -> str:
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in columns})
    logger.info("Wrote %d rows to %s", len(rows), path)
    return path
