"""gen-data"""

from pathlib import Path

import typer

from retainkv.config import load_run_config
from retainkv.harness import gen_passkey_set
from retainkv.retaining import save_dataset
from retainkv.utils.cli_tools import OVERRIDE_CONTEXT, cli_errors, emit

app = typer.Typer()


@app.command(name="gen-data", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def gen_data(
    ctx: typer.Context,
    out: Path = typer.Option(..., "--out", "-o", help="JSONL dataset to write."),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)."),
    n: int | None = typer.Option(None, "--n", help="Examples to write; defaults to task.n_examples."),
) -> None:
    """Write seeded passkey examples as JSONL."""
    rc = load_run_config(config, ctx.args)
    examples = gen_passkey_set(rc.task, n)
    save_dataset(out, [e.example for e in examples])
    emit({"path": str(out), "examples": len(examples), "vocab_size": rc.task.vocab.vocab_size})
