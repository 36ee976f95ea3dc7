"""fgromov command-line application"""

import logging

import typer

from fgromov.commands import certify, dichotomy, growth, harmonic, kleiner_dim, milnor_check, reduce, slowg, verify
from fgromov.config import settings

# Configure logging
logging.basicConfig(
    level=settings.LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

app = typer.Typer(
    name=settings.APP_NAME,
    help="Finitary tools for the quantitative Gromov theorem on concrete finitely generated groups.",
    no_args_is_help=True,
)


def _version(value: bool):
    if value:
        typer.echo(f"{settings.APP_NAME} {settings.APP_VERSION}")
        raise typer.Exit()


@app.callback()
def main(
    log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    version: bool = typer.Option(False, "--version", callback=_version, is_eager=True, help="Show the version"),
):
    logging.getLogger().setLevel(log_level.upper())
    logger.debug(f"{settings.APP_NAME} {settings.APP_VERSION} starting")


# Register commands
app.command("growth")(growth.growth_command)
app.command("reduce")(reduce.reduce_command)
app.command("certify")(certify.certify_command)
app.command("dichotomy")(dichotomy.dichotomy_command)
app.command("harmonic")(harmonic.harmonic_command)
app.command("kleiner-dim")(kleiner_dim.kleiner_dim_command)
app.command("slowg")(slowg.slowg_command)
app.command("milnor-check")(milnor_check.milnor_check_command)
app.command("verify")(verify.verify_command)
