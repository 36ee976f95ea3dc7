from pathlib import Path
from typing import Optional

import typer

from fgromov.commands.common import ReportOption, console, flag, handle_errors, write_report
from fgromov.models.enums import DichotomyBranch
from fgromov.services import lattice_service, pipeline_service
from fgromov.services.group_spec_service import parse_matrix_file


@handle_errors
def dichotomy_command(
    matrix: str = typer.Option(..., "--matrix", "-m", help="Integer matrix file, or the name of a bundled fixture"),
    steps: int = typer.Option(
        lattice_service.DEFAULT_GROWTH_STEPS, "--steps", "-N", min=1, help="Iterations for the growth witness"
    ),
    tower: bool = typer.Option(True, "--tower/--no-tower", help="Also build the unipotent tower"),
    report: Optional[Path] = ReportOption,
):
    """Periodic vector or exponential growth witness for T in GL(D, Z)"""
    T = parse_matrix_file(matrix)
    result = pipeline_service.dichotomy_report(T, steps, tower=tower)
    d = result.result
    console.print(f"characteristic polynomial (ascending): {d.char_poly}")
    if d.branch == DichotomyBranch.PERIODIC.value:
        console.print(f"[green]periodic[/green]: T^{d.period} w = w for w = {d.w}")
    else:
        console.print(f"[yellow]growth[/yellow]: Mahler measure {d.mahler:.6f}, |λ_max| = {d.lambda_max:.6f}")
        console.print(f"witness v = {d.v}, measured rate {d.measured_rate:.6f} over {d.steps} steps")
        console.print(f"[dim]Dobrowolski reference {d.dobrowolski_reference:.6f}[/dim]")
    if result.tower is not None:
        console.print(f"tower: periods {result.tower.periods}, P = {result.tower.P}, ranks {result.tower.ranks}")
        console.print(f"polynomial growth: {flag(result.tower.polynomial)}")
    write_report("dichotomy", result, report)
