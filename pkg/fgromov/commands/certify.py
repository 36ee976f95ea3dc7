from pathlib import Path
from typing import List, Optional

import typer

from fgromov.commands.common import (
    GroupOption,
    ReportOption,
    console,
    flag,
    handle_errors,
    int_list,
    load_group,
    write_report,
)
from fgromov.services import pipeline_service
from fgromov.utils.errors import ValidationError


@handle_errors
def certify_command(
    group: str = GroupOption,
    s: int = typer.Option(..., "--step", "-s", min=1, help="Nilpotency step"),
    K: int = typer.Option(4, "-K", min=1, help="K of the (K, R)-subgroup"),
    R: int = typer.Option(4, "-R", min=1, help="R of the (K, R)-subgroup"),
    subgroup: Optional[List[str]] = typer.Option(
        None, "--subgroup", help="Subgroup generator row, e.g. '1,0' (repeatable)"
    ),
    kernel: Optional[str] = typer.Option(
        None, "--kernel", help="Finite-index subgroup {coordinate j = 0 mod m}, given as 'j,m'"
    ),
    index_bound: Optional[int] = typer.Option(None, "--index-bound", min=1, help="Index bound for --kernel"),
    report: Optional[Path] = ReportOption,
):
    """Certify (K, R, s)-virtual nilpotency"""
    marked = load_group(group)
    if subgroup and kernel:
        raise ValidationError("give either --subgroup or --kernel, not both")
    generators = None
    if subgroup:
        generators = [marked.backend.from_row(int_list(row, "--subgroup")) for row in subgroup]
    kernel_pair = None
    if kernel:
        values = int_list(kernel, "--kernel")
        if len(values) != 2:
            raise ValidationError(f"--kernel takes 'coordinate,modulus', got {kernel!r}")
        kernel_pair = (values[0], values[1])

    cert = pipeline_service.certify_nilpotent(
        marked, s, K, R, subgroup=generators, kernel=kernel_pair, index_bound=index_bound
    )
    console.print(f"(K, R)-inclusion: {flag(cert.subgroup.checked_inclusion)}")
    console.print(f"{s}-step nilpotent: {flag(cert.nilpotency.nilpotent)}")
    if cert.nilpotency.witness is not None:
        console.print(f"non-trivial commutator of weight {s + 1}: {cert.nilpotency.witness}")
    if cert.finite_index is not None:
        console.print(f"index: {cert.subgroup.index} ({cert.kernel_oracle})")
    console.print(f"certified: {flag(cert.certified)}")
    write_report("certify", cert, report, marked)
    if not cert.certified:
        raise typer.Exit(code=1)
