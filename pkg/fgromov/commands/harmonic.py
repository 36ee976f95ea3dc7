from pathlib import Path
from typing import Optional

import typer

from fgromov.commands.common import GroupOption, RadiusOption, ReportOption, console, handle_errors, load_group, write_report
from fgromov.services import harmonic_service, pipeline_service


@handle_errors
def harmonic_command(
    group: str = GroupOption,
    radius: int = RadiusOption,
    case: Optional[int] = typer.Option(None, "--case", min=1, max=2, help="Force case 1 (sign kernel) or 2 (spectral)"),
    csv: Optional[Path] = typer.Option(None, "--csv", help="Write key,norm,value of u to this CSV file"),
    report: Optional[Path] = ReportOption,
):
    """Build a non-constant almost-harmonic Lipschitz function on the ball"""
    marked = load_group(group)
    u, result = pipeline_service.harmonic_report(marked, radius, force_case=case)
    r = result.result
    console.print(f"case: {r.case}, working ball B({r.working_radius}) with {len(u.ball)} elements")
    console.print(f"eps = {r.eps:.6g} (bound |S| R^(-1/3) = {r.eps_bound:.6g}), lip = {r.lip:.6g}")
    console.print(f"|∇u(id)| = {r.grad_at_id:.6g}, sup |u| = {result.sup_norm:.6g}")
    if csv is not None:
        harmonic_service.export_csv(u, csv)
        console.print(f"[dim]values written to {csv}[/dim]")
    write_report("harmonic", result, report, marked)
