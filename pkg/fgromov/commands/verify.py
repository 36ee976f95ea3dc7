from pathlib import Path

import typer

from fgromov.commands.common import console, err_console, handle_errors
from fgromov.services import report_service


@handle_errors
def verify_command(
    report: Path = typer.Argument(..., help="JSON report written with --report"),
):
    """Reload a report and re-verify every certificate in it"""
    result = report_service.verify_report(report)
    if result.ok:
        console.print(f"[green]✓ {result.kind}: {result.checked} certificates re-verified[/green]")
        return
    for failure in result.failures:
        err_console.print(f"[red]✗ {failure}[/red]")
    raise typer.Exit(code=1)
