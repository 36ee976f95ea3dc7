import pytest
from typer.testing import CliRunner

from fgromov.config import settings
from fgromov.main import app
from fgromov.services import pipeline_service

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def test_version():
    result = invoke("--version")
    assert result.exit_code == 0
    assert f"{settings.APP_NAME} {settings.APP_VERSION}" in result.output


def test_growth_csv_to_stdout():
    result = invoke("growth", "--group", "z2", "--radius", 5, "--no-cache", "--csv", "-")
    assert result.exit_code == 0, result.output
    assert "r,ball,sphere,stabilized" in result.output
    assert "5,61,20,0" in result.output


def test_growth_marks_stabilization(tmp_path):
    result = invoke("growth", "--group", "cyclic101", "--radius", 52, "--cache-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert "ball stabilizes at r = 50, |G| = 101" in result.output
    again = invoke("growth", "--group", "cyclic101", "--radius", 52, "--cache-dir", tmp_path)
    assert "(cached ball)" in again.output


def test_growth_csv_file(tmp_path):
    target = tmp_path / "z2.csv"
    result = invoke("growth", "-g", "z2", "-r", 2, "--no-cache", "--csv", target)
    assert result.exit_code == 0, result.output
    assert target.read_bytes() == b"r,ball,sphere,stabilized\r\n0,1,1,0\r\n1,5,4,0\r\n2,13,8,0\r\n"


def test_missing_group_file_exits_with_its_code():
    result = invoke("growth", "--group", "nowhere/at/all.spec")
    assert result.exit_code == 2
    assert "NotFoundError" in result.output


def test_malformed_spec(tmp_path):
    spec = tmp_path / "singular.spec"
    spec.write_text("kind = semidirect\nmatrix_row = 1 2\nmatrix_row = 2 4\ngenerator = 1 0 0\nauto_close = true\n")
    result = invoke("growth", "--group", spec)
    assert result.exit_code == 2
    assert "SpecParseError" in result.output


def test_reduce_z2(tmp_path):
    report = tmp_path / "reduce.json"
    result = invoke("reduce", "--group", "z2", "--no-cache", "--report", report)
    assert result.exit_code == 0, result.output
    assert "terminal: trivial" in result.output
    verified = invoke("verify", report)
    assert verified.exit_code == 0, verified.output
    assert "2 certificates re-verified" in verified.output


def test_reduce_uncertified_exits_one(monkeypatch):
    original = pipeline_service.generator_reduction

    def failing_reduction(group, R_0, kappa, d=None):
        S_prime, r, result = original(group, R_0, kappa, d)
        certificate = result.certificate.model_copy(update={"checked_inclusion": False})
        return S_prime, r, result.model_copy(update={"certificate": certificate})

    monkeypatch.setattr(pipeline_service, "generator_reduction", failing_reduction)
    result = invoke("reduce", "--group", "z2", "--no-cache")
    assert result.exit_code == 1
    assert "terminal: uncertified" in result.output
    assert "failed its" in result.output


def test_certify_heisenberg():
    result = invoke("certify", "--group", "heisenberg", "--step", 2)
    assert result.exit_code == 0, result.output
    assert "certified: yes" in result.output


def test_certify_failure_exits_one():
    result = invoke("certify", "--group", "heisenberg", "--step", 1)
    assert result.exit_code == 1
    assert "certified: no" in result.output


def test_certify_kernel_option(tmp_path):
    spec = tmp_path / "z.spec"
    spec.write_text("name = Z\nkind = free_abelian\ndimension = 1\ngenerator = 1\nauto_close = true\n")
    result = invoke("certify", "--group", spec, "--step", 1, "--kernel", "0,2")
    assert result.exit_code == 0, result.output
    assert "index: 2" in result.output
    assert "certified: yes" in result.output


def test_certify_rejects_bad_kernel():
    result = invoke("certify", "--group", "z2", "--step", 1, "--kernel", "0,x")
    assert result.exit_code == 2
    assert "--kernel" in result.output


@pytest.mark.parametrize(
    "matrix, expected",
    [("cat", "Mahler measure 2.618034"), ("rotation", "T^4 w = w"), ("shear", "T^1 w = w")],
)
def test_dichotomy(matrix, expected):
    result = invoke("dichotomy", "--matrix", matrix)
    assert result.exit_code == 0, result.output
    assert expected in result.output


def test_dichotomy_report_round_trip(tmp_path):
    report = tmp_path / "cat.json"
    assert invoke("dichotomy", "--matrix", "cat", "--report", report).exit_code == 0
    result = invoke("verify", report)
    assert result.exit_code == 0, result.output


def test_verify_detects_tampering(tmp_path):
    report = tmp_path / "rotation.json"
    invoke("dichotomy", "--matrix", "rotation", "--no-tower", "--report", report)
    report.write_text(report.read_text().replace('"period": 4', '"period": 3'))
    result = invoke("verify", report)
    assert result.exit_code == 1
    assert "does not fix w" in result.output


def test_slowg_shear():
    result = invoke("slowg", "--group", "shear", "--candidates", "1", "--spread", 3)
    assert result.exit_code == 0, result.output
    assert "R = 1, N = 0" in result.output
    assert "2-step nilpotent: yes" in result.output


def test_slowg_needs_semidirect_group():
    result = invoke("slowg", "--group", "z2")
    assert result.exit_code == 5


def test_milnor_check():
    result = invoke("milnor-check", "-n", 3, "-K", 0, "--Delta", 1, "--delta", 1, "-R", 100)
    assert result.exit_code == 0, result.output
    assert "inequality holds: yes" in result.output
    result = invoke("milnor-check", "-n", 3, "-K", 1, "--Delta", 1, "--delta", 0.1, "-R", 10)
    assert "inequality holds: no" in result.output


def test_harmonic_csv(tmp_path):
    target = tmp_path / "u.csv"
    result = invoke("harmonic", "--group", "cyclic101", "--radius", 4, "--csv", target)
    assert result.exit_code == 0, result.output
    assert target.read_text().startswith("key,norm,value")


def test_kleiner_dim(tmp_path):
    result = invoke("kleiner-dim", "--group", "z2", "--radius", 3, "--count", 4, "--seed", 1, "--cache-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert "dimension: 2" in result.output
