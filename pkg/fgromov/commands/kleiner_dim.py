from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from fgromov.commands.common import (
    CacheDirOption,
    GroupOption,
    NoCacheOption,
    RadiusOption,
    ReportOption,
    SeedOption,
    cache_from_options,
    console,
    handle_errors,
    load_group,
    write_report,
)
from fgromov.services import kleiner_service, pipeline_service


@handle_errors
def kleiner_dim_command(
    group: str = GroupOption,
    radius: int = RadiusOption,
    count: int = typer.Option(16, "--count", "-n", min=1, help="Number of harmonic candidates"),
    seed: Optional[int] = SeedOption,
    drop_factor: Optional[float] = typer.Option(None, "--drop-factor", help="Stop when the volume ratio falls below this"),
    csv: Optional[Path] = typer.Option(None, "--csv", help="Write k,volume,drop_ratio to this CSV file"),
    cache_dir: Optional[Path] = CacheDirOption,
    no_cache: bool = NoCacheOption,
    report: Optional[Path] = ReportOption,
):
    """Greedy dimension of the space of harmonic Lipschitz functions on B(R)"""
    marked = load_group(group)
    _, result = pipeline_service.kleiner_dimension(
        marked, radius, count, seed=seed, drop_factor=drop_factor, cache=cache_from_options(cache_dir, no_cache)
    )
    table = Table(title=f"Greedy volumes on B({radius})", show_header=True, header_style="bold magenta")
    for name in ("k", "candidate", "volume", "drop ratio"):
        table.add_column(name, justify="right")
    for step in result.steps:
        table.add_row(str(step.k), str(step.candidate), f"{step.volume:.6g}", f"{step.drop_ratio:.6g}")
    console.print(table)
    console.print(f"dimension: [bold]{result.dim}[/bold] (drop factor {result.drop_factor:g})")
    if csv is not None:
        kleiner_service.export_greedy_csv(result, csv)
        console.print(f"[dim]volumes written to {csv}[/dim]")
    write_report("kleiner-dim", result, report, marked)
