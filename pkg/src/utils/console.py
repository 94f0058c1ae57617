"""Console output and logging setup for the CLI."""
import logging

import typer
from rich.console import Console
from rich.logging import RichHandler

# Reports go to stdout, logs and errors to stderr.
console = Console()
err_console = Console(stderr=True)


def setup_logging(verbose: bool = False) -> None:
    """Route library loggers through rich on stderr."""
    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=verbose, rich_tracebacks=True)],
        force=True,
    )
    # numba's compiler is chatty at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)


def print_error(kind: str, detail: str) -> None:
    """Machine-parsable error line on stderr."""
    typer.echo(f"error: {kind}: {detail}", err=True)
