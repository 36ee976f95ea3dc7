from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from fgromov.commands.common import (
    BudgetOption,
    CacheDirOption,
    GroupOption,
    NoCacheOption,
    ReportOption,
    cache_from_options,
    console,
    handle_errors,
    load_group,
    write_report,
)
from fgromov.models.enums import TerminalState
from fgromov.services import pipeline_service


def _fmt(d: Optional[float]) -> str:
    return "-" if d is None else f"{d:.3f}"


@handle_errors
def reduce_command(
    group: str = GroupOption,
    budget: Optional[int] = BudgetOption,
    radius: int = typer.Option(
        pipeline_service.DEFAULT_REDUCE_RADIUS, "--radius", "-r", min=2, help="Radius for growth measurements"
    ),
    commutator_budget: int = typer.Option(
        pipeline_service.DEFAULT_COMMUTATOR_BUDGET, "--commutator-budget", min=2, help="Radius budget for commutators"
    ),
    harmonic_radius: int = typer.Option(
        pipeline_service.DEFAULT_HARMONIC_RADIUS, "--harmonic-radius", min=0, help="Almost-harmonic probe radius (0 skips)"
    ),
    cache_dir: Optional[Path] = CacheDirOption,
    no_cache: bool = NoCacheOption,
    report: Optional[Path] = ReportOption,
):
    """Descend through subgroup passages until the group is finite"""
    marked = load_group(group)
    trace = pipeline_service.reduce_group(
        marked,
        budget=budget,
        radius=radius,
        commutator_budget=commutator_budget,
        harmonic_radius=harmonic_radius,
        cache=cache_from_options(cache_dir, no_cache),
    )

    table = Table(title=f"Reduction of {trace.group}", show_header=True, header_style="bold magenta")
    table.add_column("#", justify="right")
    table.add_column("step")
    table.add_column("group")
    table.add_column("d before", justify="right")
    table.add_column("d after", justify="right")
    table.add_column("detail")
    for step in trace.steps:
        if step.certificate is not None:
            detail = f"index ≤ {step.index_bound}, (K, R) = ({step.certificate.K}, {step.certificate.R})"
        else:
            detail = f"{step.kernel_oracle}, |S'| = {len(step.subgroup_generators)}"
        table.add_row(
            str(step.index), step.kind, step.group["name"], _fmt(step.d_before), _fmt(step.d_after), detail
        )
    console.print(table)

    colour = "green" if trace.terminal in (TerminalState.TRIVIAL.value, TerminalState.FINITE.value) else "yellow"
    size = f", |G| = {trace.terminal_size}" if trace.terminal_size is not None else ""
    console.print(f"terminal: [{colour}]{trace.terminal}[/{colour}]{size}")
    console.print(f"total index bound: {trace.total_index_bound}")
    if trace.rejected_certificate is not None:
        cert = trace.rejected_certificate
        console.print(f"[red]generator reduction failed its ({cert.K}, {cert.R})-inclusion check[/red]")
    write_report("reduce", trace, report, marked)
    if trace.terminal == TerminalState.UNCERTIFIED.value:
        raise typer.Exit(code=1)
