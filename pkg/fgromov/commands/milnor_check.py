from pathlib import Path
from typing import Optional

import typer

from fgromov.commands.common import ReportOption, console, flag, handle_errors, write_report
from fgromov.services import pipeline_service


@handle_errors
def milnor_check_command(
    n: int = typer.Option(..., "--dimension", "-n", min=1, help="Manifold dimension"),
    K: float = typer.Option(..., "-K", min=0, help="Lower Ricci curvature bound -K"),
    Delta: float = typer.Option(..., "--Delta", help="Displacement diameter Δ"),
    delta: float = typer.Option(..., "--delta", help="Injectivity scale δ"),
    R: float = typer.Option(..., "-R", help="Radius R"),
    C: Optional[float] = typer.Option(None, "-C", help="Constant C for the hypothesis R ≥ exp(exp(C(2n)^C))"),
    report: Optional[Path] = ReportOption,
):
    """Evaluate 4(Δ/δ) exp(2πΔ√K R) < R and the ball bound"""
    result = pipeline_service.milnor_bound_check(n, K, Delta, delta, R, C)
    console.print(f"lhs = {result.lhs:.6g} (log {result.log_lhs:.6g}), rhs = {result.rhs:.6g}")
    console.print(f"inequality holds: {flag(result.holds)}")
    console.print(f"ball bound = {result.ball_bound:.6g} (log {result.log_ball_bound:.6g})")
    if result.hypothesis_holds is not None:
        console.print(f"size hypothesis on R: {flag(result.hypothesis_holds)}")
    write_report("milnor-check", result, report)
