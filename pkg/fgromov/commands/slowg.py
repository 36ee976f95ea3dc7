from pathlib import Path
from typing import Optional

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


@handle_errors
def slowg_command(
    group: str = GroupOption,
    candidates: str = typer.Option("1,2", "--candidates", help="Radii R tried for B_S(R), comma separated"),
    spread: Optional[int] = typer.Option(None, "--spread", min=1, help="Pigeonhole spread (defaults to SLOWG_SPREAD)"),
    range_: Optional[int] = typer.Option(None, "--range", min=1, help="Conjugation range |n| to certify"),
    report: Optional[Path] = ReportOption,
):
    """Slow-growth generators for Z acting on Z^D, then the nilpotent assembly"""
    marked = load_group(group)
    result = pipeline_service.slow_growth_report(
        marked, int_list(candidates, "--candidates"), spread=spread, range_=range_
    )
    cert = result.certificate
    console.print(f"R = {cert.R}, N = {cert.N}, |S~| = {len(cert.generators)}, range = {cert.range}")
    console.print(f"T^n S~ ⊆ B_S~(3) for |n| ≤ {cert.range}: {flag(cert.verified)}")
    if result.tower is not None:
        console.print(f"tower: periods {result.tower.periods}, P = {result.tower.P}")
    if result.assembly is not None:
        a = result.assembly
        console.print(f"finite-index subgroup is {a.step}-step nilpotent: {flag(a.nilpotent)}")
    write_report("slowg", result, report, marked)
