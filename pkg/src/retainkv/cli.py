"""retainkv CLI."""

import os
from importlib import import_module
from pathlib import Path

import typer

from retainkv import __version__
from retainkv.utils.cli_tools import configure_logging

app = typer.Typer(help="KV-cache eviction with trained retaining heads.", no_args_is_help=True)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output to stderr."),
) -> None:
    """KV-cache eviction with trained retaining heads during chunked prefill.

    Precision follows RETAINKV_PRECISION (single or double).
    """
    configure_logging(verbose)


@app.command()
def version() -> None:
    """Print the package version."""
    typer.echo(__version__)


def load_commands(directory: str = "subcommands") -> None:
    """Merge the commands of every ``*_cmd.py`` module into the root app."""
    subcommands_dir = Path(__file__).parent / directory
    for filename in sorted(os.listdir(subcommands_dir)):
        if filename.endswith("_cmd.py"):
            module = import_module(f"{__name__.split('.')[0]}.{directory}.{filename[:-3]}")
            if hasattr(module, "app"):
                app.registered_commands.extend(module.app.registered_commands)


load_commands()
