"""Shared command options, error handling and console output"""

import functools
import logging
from pathlib import Path
from typing import Any, Callable, List, Optional, TypeVar

import typer
from pydantic import BaseModel
from rich.console import Console

from fgromov.models.group import MarkedGroup
from fgromov.services import pipeline_service, report_service
from fgromov.services.ball_cache import BallCache
from fgromov.services.group_spec_service import parse_group_spec
from fgromov.utils.errors import AppException, ValidationError
from fgromov.utils.validators import parse_int_list

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)

F = TypeVar("F", bound=Callable[..., Any])

GroupOption = typer.Option(..., "--group", "-g", help="Group spec file, or the name of a bundled fixture")
RadiusOption = typer.Option(8, "--radius", "-r", min=1, help="Ball radius")
BudgetOption = typer.Option(None, "--budget", min=0, help="Maximum number of reduction rounds")
CacheDirOption = typer.Option(None, "--cache-dir", help="Ball cache directory (overrides FGROMOV_CACHE)")
NoCacheOption = typer.Option(False, "--no-cache", help="Enumerate balls without reading or writing the cache")
ReportOption = typer.Option(None, "--report", help="Write a JSON report to this path")
SeedOption = typer.Option(None, "--seed", help="Random seed (defaults to DEFAULT_SEED)")


def handle_errors(func: F) -> F:
    """Turn AppException into a red message and its exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except AppException as e:
            logger.debug(f"{type(e).__name__}: {e.message} {e.details}")
            err_console.print(f"[red]✗ {type(e).__name__}: {e.message}[/red]")
            for key, value in e.details.items():
                err_console.print(f"[dim]   {key}: {value}[/dim]")
            raise typer.Exit(code=e.exit_code)

    return wrapper  # type: ignore[return-value]


def load_group(path: str) -> MarkedGroup:
    group = parse_group_spec(path)
    console.print(f"[bold]{group.name}[/bold]: {group.backend.kind.value}, |S| = {group.size}")
    return group


def cache_from_options(cache_dir: Optional[Path], no_cache: bool) -> Optional[BallCache]:
    return pipeline_service.open_cache(cache_dir, use_cache=not no_cache)


def write_report(kind: str, result: BaseModel, report: Optional[Path], group: Optional[MarkedGroup] = None) -> None:
    if report is None:
        return
    path = report_service.emit_report(kind, result, report, group)
    console.print(f"[dim]💾 report written to {path}[/dim]")


def flag(value: bool) -> str:
    return "[green]yes[/green]" if value else "[red]no[/red]"


def int_list(text: str, option: str) -> List[int]:
    try:
        return parse_int_list(text)
    except ValueError as e:
        raise ValidationError(f"{option}: {e}")
