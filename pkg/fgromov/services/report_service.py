"""Versioned JSON reports, their re-verification, and RFC-4180 CSV tables"""

import csv
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

from pydantic import BaseModel

from fgromov.config import settings
from fgromov.models import intmatrix
from fgromov.models.enums import DichotomyBranch, StepKind
from fgromov.models.group import MarkedGroup
from fgromov.schemas.pipeline import VerificationResult
from fgromov.services import lattice_service, milnor_wolf_service
from fgromov.services.ball_service import ball_service
from fgromov.services.group_spec_service import group_from_description
from fgromov.services.subgroup_service import build_certificate, nilpotency_check
from fgromov.utils.errors import NotFoundError, ValidationError

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

# constants that decide certificates, recorded in every report
RECORDED_SETTINGS = (
    "BALL_ELEMENT_CAP",
    "EXPONENTIAL_DELTA",
    "IDENTITY_TOL",
    "VOLUME_CLAMP_TOL",
    "DROP_FACTOR",
    "MAHLER_GUARD",
    "GROWTH_RATE_FLOOR",
    "RATIONAL_DENOMINATORS",
    "TORSION_F_SLOPE",
    "TORSION_F_OFFSET",
    "SLOWG_SPREAD",
    "DESCENT_THRESHOLD",
    "REDUCE_MAX_STEPS",
    "DEFAULT_SEED",
)


def build_report(kind: str, result: BaseModel, group: Optional[MarkedGroup] = None) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "tool": settings.APP_NAME,
        "version": settings.APP_VERSION,
        "schema": REPORT_SCHEMA_VERSION,
        "kind": kind,
        "group": None,
        "settings": {name: getattr(settings, name) for name in RECORDED_SETTINGS},
        "result": result.model_dump(mode="json"),
    }
    if group is not None:
        document["group"] = {**group.describe(), "fingerprint": group.fingerprint()}
    return document


def dumps_report(document: Dict[str, Any]) -> str:
    """Fixed key order: the header first, then fields in model declaration order"""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def emit_report(
    kind: str,
    result: BaseModel,
    path: Union[str, Path],
    group: Optional[MarkedGroup] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dumps_report(build_report(kind, result, group)).encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=".report-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info(f"wrote {kind} report to {path}")
    return path


def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"report {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: not a JSON report ({e.msg})")
    if document.get("tool") != settings.APP_NAME or document.get("schema") != REPORT_SCHEMA_VERSION:
        raise ValidationError(f"{path}: not an {settings.APP_NAME} report of schema {REPORT_SCHEMA_VERSION}")
    return document


def _verify_kr(group: MarkedGroup, cert: Dict[str, Any], require_verified: bool = False) -> bool:
    generators = [group.backend.from_row(row) for row in cert["generators"]]
    again = build_certificate(group, generators, cert["K"], cert["R"])
    if require_verified and not again.checked_inclusion:
        return False
    return again.checked_inclusion == cert["checked_inclusion"] and again.generator_radius == cert["generator_radius"]


def _verify_commutators(group: MarkedGroup, result: Dict[str, Any]) -> bool:
    backend = group.backend
    for w in result["witnesses"]:
        g = backend.from_row(w["conjugator"])
        c = backend.commutator(group.generators[w["e"]], group.generators[w["e_prime"]])
        if group.mul(group.mul(g, c), group.inv(g)) != backend.from_row(w["element"]):
            return False
    return True


def _verify_reduce(document: Dict[str, Any], failures: List[str]) -> int:
    checked = 0
    for step in document["result"]["steps"]:
        group = group_from_description(step["group"])
        if step["kind"] == StepKind.FINITE_INDEX.value:
            checked += 1
            if not step.get("certificate"):
                failures.append(f"step {step['index']}: finite-index passage carries no (K, R)-certificate")
            elif not _verify_kr(group, step["certificate"], require_verified=True):
                failures.append(f"step {step['index']}: (K, R)-certificate does not re-verify")
        if step["kind"] == StepKind.CYCLIC_KERNEL.value and step.get("commutators"):
            checked += 1
            if not _verify_commutators(group, step["commutators"]):
                failures.append(f"step {step['index']}: commutator witness mismatch")
    return checked


def _verify_certify(document: Dict[str, Any], failures: List[str]) -> int:
    group = group_from_description(document["group"])
    result = document["result"]
    sub_rows = result["subgroup"]["generators"]
    if not _verify_kr(group, result["subgroup"]):
        failures.append("(K, R)-certificate does not re-verify")
    sub = group.remark([group.backend.from_row(row) for row in sub_rows])
    if nilpotency_check(sub, result["s"]).nilpotent != result["nilpotency"]["nilpotent"]:
        failures.append("nilpotency verdict differs")
    return 2


def _verify_dichotomy(document: Dict[str, Any], failures: List[str]) -> int:
    T = intmatrix.as_int_matrix(document["result"]["matrix"])
    result = document["result"]["result"]
    if lattice_service.char_poly(T) != result["char_poly"]:
        failures.append("characteristic polynomial differs")
    if result["branch"] == DichotomyBranch.PERIODIC.value:
        Tn = intmatrix.power(T, result["period"])
        if intmatrix.mat_vec(Tn, result["w"]) != tuple(result["w"]) or not any(result["w"]):
            failures.append(f"T^{result['period']} does not fix w")
    else:
        TN = intmatrix.power(T, result["steps"])
        image = intmatrix.mat_vec(TN, result["v"])
        rate = math.exp(
            (math.log(sum(a * a for a in image)) - math.log(sum(a * a for a in result["v"]))) / (2 * result["steps"])
        )
        if rate < 1 + settings.GROWTH_RATE_FLOOR:
            failures.append(f"growth witness rate {rate} does not expand")
        if lattice_service.mahler_measure(result["char_poly"]) <= 1 + settings.MAHLER_GUARD:
            failures.append("Mahler measure does not exceed 1")
    tower = document["result"].get("tower")
    if tower and tower["unipotent_verified"]:
        D = len(T)
        shift = intmatrix.mat_sub(intmatrix.power(T, tower["P"]), intmatrix.identity(D))
        if not intmatrix.is_zero(intmatrix.power(shift, D)):
            failures.append(f"(T^{tower['P']} - I)^{D} is not zero")
    return 2 if tower else 1


def _verify_slowg(document: Dict[str, Any], failures: List[str]) -> int:
    group = group_from_description(document["group"])
    cert = document["result"]["certificate"]
    e = group.backend.from_row([1] + [0] * (len(cert["generators"][0]) - 1))
    S_tilde = [group.backend.from_row(row) for row in cert["generators"]]
    if not milnor_wolf_service.verify_slow_growth(group, e, S_tilde, cert["range"]):
        failures.append("T^n S~ escapes B_S~(3)")
    return 1


def _verify_growth(document: Dict[str, Any], failures: List[str]) -> int:
    group = group_from_description(document["group"])
    rows = document["result"]["rows"]
    ball = ball_service.enumerate_ball(group, rows[-1]["r"])
    if ball.cumulative_sizes != [row["size"] for row in rows]:
        failures.append("ball sizes differ from a fresh enumeration")
    return 1


VERIFIERS = {
    "reduce": _verify_reduce,
    "certify": _verify_certify,
    "dichotomy": _verify_dichotomy,
    "slowg": _verify_slowg,
    "growth": _verify_growth,
}


def verify_report(path: Union[str, Path]) -> VerificationResult:
    """Reload a report and re-verify every certificate it carries"""
    document = load_report(path)
    kind = document["kind"]
    failures: List[str] = []
    if document.get("group"):
        fingerprint = group_from_description(document["group"]).fingerprint()
        if fingerprint != document["group"]["fingerprint"]:
            failures.append("group fingerprint differs")
    verifier = VERIFIERS.get(kind)
    checked = verifier(document, failures) if verifier else 0
    if failures:
        logger.error(f"{path}: {len(failures)} certificates fail to re-verify")
    else:
        logger.info(f"{path}: {checked} certificates re-verified")
    return VerificationResult(kind=kind, checked=checked, failures=failures)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], target: Union[str, Path, TextIO]) -> None:
    def write(stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as stream:
            write(stream)
    else:
        write(target)
