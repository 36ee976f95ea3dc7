import sys
from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from fgromov.commands.common import (
    CacheDirOption,
    GroupOption,
    NoCacheOption,
    ReportOption,
    cache_from_options,
    console,
    flag,
    handle_errors,
    load_group,
    write_report,
)
from fgromov.services import pipeline_service, report_service


@handle_errors
def growth_command(
    group: str = GroupOption,
    radius: int = typer.Option(16, "--radius", "-r", min=1, help="Largest radius R_max"),
    csv: Optional[str] = typer.Option(None, "--csv", help="Write r,|B(r)| as CSV to this path ('-' for stdout)"),
    cache_dir: Optional[Path] = CacheDirOption,
    no_cache: bool = NoCacheOption,
    report: Optional[Path] = ReportOption,
):
    """Ball sizes |B_S(r)| for r = 0..R_max with growth-degree estimates"""
    marked = load_group(group)
    result = pipeline_service.growth_report(marked, radius, cache_from_options(cache_dir, no_cache))

    rows = [(row.r, row.size, row.sphere, int(row.stabilized)) for row in result.rows]
    header = ("r", "ball", "sphere", "stabilized")
    if csv == "-":
        report_service.write_csv(header, rows, sys.stdout)
    else:
        if csv is not None:
            report_service.write_csv(header, rows, csv)
            console.print(f"[dim]table written to {csv}[/dim]")
        table = Table(title=f"Growth of {result.group}", show_header=True, header_style="bold magenta")
        for name in ("r", "|B(r)|", "|S(r)|"):
            table.add_column(name, justify="right")
        for row in result.rows:
            style = "dim" if row.stabilized else None
            table.add_row(str(row.r), str(row.size), str(row.sphere), style=style)
        console.print(table)

    if result.stabilization_radius is not None:
        size = result.rows[result.stabilization_radius].size
        console.print(f"finite: ball stabilizes at r = {result.stabilization_radius}, |G| = {size}")
    for estimate in result.estimates:
        console.print(f"d̂({estimate.r1}, {estimate.r2}) = {estimate.slope:.4f}")
    console.print(f"exponential: {flag(result.exponential)}" + ("  (cached ball)" if result.cached else ""))
    write_report("growth", result, report, marked)
