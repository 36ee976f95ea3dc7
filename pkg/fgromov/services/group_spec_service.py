"""Group specification (.spec) and integer matrix (.mat) files"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from fgromov.models import intmatrix
from fgromov.models.backends import (
    AbelianBackend,
    CyclicBackend,
    FreeAbelianBackend,
    FreeGroupBackend,
    GroupBackend,
    IntegerMatrixBackend,
    LamplighterBackend,
    SemidirectBackend,
)
from fgromov.models.enums import BackendKind
from fgromov.models.group import MarkedGroup
from fgromov.utils.errors import NotFoundError, SpecParseError, ValidationError
from fgromov.utils.validators import validate_integer_row, validate_square

logger = logging.getLogger(__name__)

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"

SCALAR_KEYS = {"name", "kind", "dimension", "modulus", "rank", "auto_close"}
LIST_KEYS = {"moduli"}
ROW_KEYS = {"generator", "matrix_row"}
REQUIRED_PARAMS = {
    BackendKind.CYCLIC: {"modulus"},
    BackendKind.ABELIAN: {"moduli"},
    BackendKind.FREE_ABELIAN: {"dimension"},
    BackendKind.INTEGER_MATRIX: {"dimension"},
    BackendKind.SEMIDIRECT: {"matrix_row"},
    BackendKind.LAMPLIGHTER: set(),
    BackendKind.FREE_GROUP: {"rank"},
}


def resolve_path(path: Union[str, Path], suffix: str) -> Path:
    """A file path, or the name of a bundled fixture"""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    bundled = FIXTURES_DIR / f"{candidate.stem}{suffix}"
    if candidate.parent == Path(".") and bundled.exists():
        return bundled
    raise NotFoundError(f"file {path}")


def _lines(text: str) -> List[Tuple[int, str]]:
    out = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((number, line))
    return out


def _ints(source: str, number: int, text: str) -> List[int]:
    tokens = text.split()
    valid, message = validate_integer_row(tokens)
    if not valid:
        raise SpecParseError(source, f"line {number}: {message}")
    return [int(t) for t in tokens]


def _parse_bool(source: str, number: int, text: str) -> bool:
    value = text.lower()
    if value not in ("true", "false"):
        raise SpecParseError(source, f"line {number}: expected true or false, got {text!r}")
    return value == "true"


def build_backend(kind: BackendKind, params: Dict[str, Any]) -> GroupBackend:
    if kind == BackendKind.CYCLIC:
        return CyclicBackend(params["modulus"])
    if kind == BackendKind.ABELIAN:
        return AbelianBackend(params["moduli"])
    if kind == BackendKind.FREE_ABELIAN:
        return FreeAbelianBackend(params["dimension"])
    if kind == BackendKind.INTEGER_MATRIX:
        return IntegerMatrixBackend(params["dimension"])
    if kind == BackendKind.SEMIDIRECT:
        return SemidirectBackend(params["matrix"])
    if kind == BackendKind.LAMPLIGHTER:
        return LamplighterBackend()
    return FreeGroupBackend(params["rank"])


def group_from_description(description: Dict[str, Any], auto_close: bool = True) -> MarkedGroup:
    """Inverse of MarkedGroup.describe()"""
    backend_desc = dict(description["backend"])
    kind = BackendKind(backend_desc.pop("kind"))
    backend = build_backend(kind, backend_desc)
    generators = [backend.from_row(row) for row in description["generators"]]
    return MarkedGroup(backend, generators, name=description.get("name", "group"), auto_close=auto_close)


def parse_group_spec_text(text: str, source: str = "<spec>") -> MarkedGroup:
    scalars: Dict[str, str] = {}
    rows: Dict[str, List[List[int]]] = {key: [] for key in ROW_KEYS}
    moduli: List[int] = []
    for number, line in _lines(text):
        if "=" not in line:
            raise SpecParseError(source, f"line {number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in ROW_KEYS:
            rows[key].append(_ints(source, number, value))
        elif key in LIST_KEYS or key in SCALAR_KEYS:
            if key in scalars:
                raise SpecParseError(source, f"line {number}: duplicate key {key!r}")
            if key in LIST_KEYS:
                moduli = _ints(source, number, value)
            scalars[key] = value
        else:
            raise SpecParseError(source, f"line {number}: unknown key {key!r}")

    if "kind" not in scalars:
        raise SpecParseError(source, "missing 'kind'")
    try:
        kind = BackendKind(scalars["kind"])
    except ValueError:
        raise SpecParseError(source, f"unknown kind {scalars['kind']!r}")
    present = {k for k in scalars} | {k for k, v in rows.items() if v}
    missing = REQUIRED_PARAMS[kind] - present
    if missing:
        raise SpecParseError(source, f"{kind.value} needs {', '.join(sorted(missing))}")
    if not rows["generator"]:
        raise SpecParseError(source, "no generator rows")

    params: Dict[str, Any] = {}
    for key in ("dimension", "modulus", "rank"):
        if key in scalars:
            params[key] = _ints(source, 0, scalars[key])[0]
    if moduli:
        params["moduli"] = moduli
    if rows["matrix_row"]:
        valid, message = validate_square(rows["matrix_row"])
        if not valid:
            raise SpecParseError(source, f"semidirect matrix: {message}")
        params["matrix"] = intmatrix.as_int_matrix(rows["matrix_row"])
    auto_close = _parse_bool(source, 0, scalars["auto_close"]) if "auto_close" in scalars else False

    try:
        backend = build_backend(kind, params)
        generators = [backend.from_row(row) for row in rows["generator"]]
        group = MarkedGroup(backend, generators, name=scalars.get("name", Path(source).stem), auto_close=auto_close)
    except SpecParseError:
        raise
    except ValidationError as e:
        raise SpecParseError(source, e.message)
    logger.info(f"parsed {group!r} from {source}")
    return group


def parse_group_spec(path: Union[str, Path]) -> MarkedGroup:
    resolved = resolve_path(path, ".spec")
    return parse_group_spec_text(resolved.read_text(encoding="utf-8"), source=str(resolved))


def emit_group_spec(group: MarkedGroup) -> str:
    """Flat key-value text that parses back to the same marked group"""
    desc = group.backend.describe()
    lines = [f"name = {group.name}", f"kind = {desc['kind']}"]
    for key in ("dimension", "modulus", "rank"):
        if key in desc:
            lines.append(f"{key} = {desc[key]}")
    if "moduli" in desc:
        lines.append("moduli = " + " ".join(str(m) for m in desc["moduli"]))
    for row in desc.get("matrix", []):
        lines.append("matrix_row = " + " ".join(str(a) for a in row))
    for s in group.generators:
        lines.append("generator = " + " ".join(str(a) for a in group.backend.to_row(s)))
    lines.append("auto_close = false")
    return "\n".join(lines) + "\n"


def parse_matrix_text(text: str, source: str = "<matrix>") -> intmatrix.IntMatrix:
    rows = [_ints(source, number, line) for number, line in _lines(text)]
    valid, message = validate_square(rows)
    if not valid:
        raise SpecParseError(source, message)
    return intmatrix.as_int_matrix(rows)


def parse_matrix_file(path: Union[str, Path]) -> intmatrix.IntMatrix:
    resolved = resolve_path(path, ".mat")
    return parse_matrix_text(resolved.read_text(encoding="utf-8"), source=str(resolved))


def emit_matrix(T: Sequence[Sequence[int]]) -> str:
    return "".join(" ".join(str(a) for a in row) + "\n" for row in T)
