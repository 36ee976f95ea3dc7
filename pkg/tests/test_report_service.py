import io
import json

import pytest

from fgromov.config import settings
from fgromov.models import catalog
from fgromov.models.enums import StepKind
from fgromov.services import pipeline_service as pipeline
from fgromov.services import report_service as reports
from fgromov.services.subgroup_service import build_certificate
from fgromov.utils.errors import NotFoundError, ValidationError


def _emit(tmp_path, kind, result, group=None, name="report.json"):
    return reports.emit_report(kind, result, tmp_path / name, group)


def _tamper(path, edit):
    document = json.loads(path.read_text(encoding="utf-8"))
    edit(document)
    path.write_text(json.dumps(document), encoding="utf-8")


class TestDocument:
    def test_header(self, z2):
        document = reports.build_report("growth", pipeline.growth_report(z2, 3), z2)
        assert list(document) == ["tool", "version", "schema", "kind", "group", "settings", "result"]
        assert document["tool"] == settings.APP_NAME
        assert document["schema"] == reports.REPORT_SCHEMA_VERSION
        assert document["group"]["fingerprint"] == z2.fingerprint()
        assert document["settings"]["DESCENT_THRESHOLD"] == settings.DESCENT_THRESHOLD

    def test_byte_identical_reruns(self, tmp_path, heisenberg):
        a = _emit(tmp_path, "growth", pipeline.growth_report(heisenberg, 4), heisenberg, "a.json")
        b = _emit(tmp_path, "growth", pipeline.growth_report(heisenberg, 4), heisenberg, "b.json")
        assert a.read_bytes() == b.read_bytes()
        c = _emit(tmp_path, "dichotomy", pipeline.dichotomy_report(catalog.CAT_MAP), name="c.json")
        d = _emit(tmp_path, "dichotomy", pipeline.dichotomy_report(catalog.CAT_MAP), name="d.json")
        assert c.read_bytes() == d.read_bytes()

    def test_utf8_and_trailing_newline(self, tmp_path):
        path = _emit(tmp_path, "milnor-check", pipeline.milnor_bound_check(2, 0, 1, 1, 10))
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert json.loads(text)["result"]["holds"] is True

    def test_rewrite_replaces_the_file_without_leftovers(self, tmp_path, z2):
        path = _emit(tmp_path, "growth", pipeline.growth_report(z2, 2), z2)
        _emit(tmp_path, "growth", pipeline.growth_report(z2, 3), z2)
        assert [p.name for p in tmp_path.iterdir()] == ["report.json"]
        assert len(json.loads(path.read_text(encoding="utf-8"))["result"]["rows"]) == 4


class TestLoad:
    def test_missing(self, tmp_path):
        with pytest.raises(NotFoundError):
            reports.load_report(tmp_path / "absent.json")

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{ not json")
        with pytest.raises(ValidationError):
            reports.load_report(path)

    def test_foreign_document(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"tool": "something-else", "schema": 1}))
        with pytest.raises(ValidationError):
            reports.load_report(path)


class TestVerify:
    def test_growth(self, tmp_path, z2):
        path = _emit(tmp_path, "growth", pipeline.growth_report(z2, 6), z2)
        result = reports.verify_report(path)
        assert result.ok and result.checked == 1

    def test_tampered_growth_sizes(self, tmp_path, z2):
        path = _emit(tmp_path, "growth", pipeline.growth_report(z2, 6), z2)
        _tamper(path, lambda d: d["result"]["rows"][3].update(size=24))
        result = reports.verify_report(path)
        assert not result.ok
        assert "fresh enumeration" in result.failures[0]

    def test_tampered_fingerprint(self, tmp_path, z2):
        path = _emit(tmp_path, "growth", pipeline.growth_report(z2, 2), z2)
        _tamper(path, lambda d: d["group"].update(fingerprint="0" * 64))
        assert "group fingerprint differs" in reports.verify_report(path).failures

    def test_reduce_trace(self, tmp_path, z2):
        path = _emit(tmp_path, "reduce", pipeline.reduce_group(z2), z2)
        result = reports.verify_report(path)
        assert result.ok
        assert result.checked == 2

    def test_certify(self, tmp_path, heisenberg):
        path = _emit(tmp_path, "certify", pipeline.certify_nilpotent(heisenberg, 2, 4, 4), heisenberg)
        assert reports.verify_report(path).ok

    def test_tampered_nilpotency(self, tmp_path, heisenberg):
        path = _emit(tmp_path, "certify", pipeline.certify_nilpotent(heisenberg, 2, 4, 4), heisenberg)
        _tamper(path, lambda d: d["result"].update(s=1))
        assert "nilpotency verdict differs" in reports.verify_report(path).failures

    @pytest.mark.parametrize("matrix", [catalog.CAT_MAP, catalog.ROTATION, catalog.SHEAR])
    def test_dichotomy(self, tmp_path, matrix):
        path = _emit(tmp_path, "dichotomy", pipeline.dichotomy_report(matrix))
        result = reports.verify_report(path)
        assert result.ok
        assert result.checked == 2

    def test_tampered_period(self, tmp_path):
        path = _emit(tmp_path, "dichotomy", pipeline.dichotomy_report(catalog.ROTATION, tower=False))
        _tamper(path, lambda d: d["result"]["result"].update(period=3))
        result = reports.verify_report(path)
        assert result.failures == ["T^3 does not fix w"]

    def test_slow_growth(self, tmp_path):
        shear = catalog.semidirect(catalog.SHEAR, name="shear")
        report = pipeline.slow_growth_report(shear, R_candidates=(1,), spread=3)
        path = _emit(tmp_path, "slowg", report, shear)
        assert reports.verify_report(path).ok

    def test_unverifiable_kind_checks_nothing(self, tmp_path):
        path = _emit(tmp_path, "milnor-check", pipeline.milnor_bound_check(2, 0, 1, 1, 10))
        result = reports.verify_report(path)
        assert result.ok and result.checked == 0


def test_csv_uses_crlf():
    stream = io.StringIO()
    reports.write_csv(["r", "ball"], [(0, 1), (1, 5)], stream)
    assert stream.getvalue() == "r,ball\r\n0,1\r\n1,5\r\n"


class TestReduceCertificates:
    def test_unverified_step1_certificate_is_rejected(self, tmp_path, z1):
        path = _emit(tmp_path, "reduce", pipeline.reduce_group(z1), z1)
        unverified = build_certificate(z1, [(5,), (-5,)], K=1, R=5)
        assert not unverified.checked_inclusion

        def splice(document):
            step1 = document["result"]["steps"][0]
            assert step1["kind"] == StepKind.FINITE_INDEX.value
            step1["certificate"] = unverified.model_dump(mode="json")

        _tamper(path, splice)
        result = reports.verify_report(path)
        assert not result.ok
        assert result.failures == ["step 0: (K, R)-certificate does not re-verify"]

    def test_missing_step1_certificate_is_rejected(self, tmp_path, z1):
        path = _emit(tmp_path, "reduce", pipeline.reduce_group(z1), z1)
        _tamper(path, lambda d: d["result"]["steps"][0].update(certificate=None))
        assert "step 0: finite-index passage carries no (K, R)-certificate" in reports.verify_report(path).failures
