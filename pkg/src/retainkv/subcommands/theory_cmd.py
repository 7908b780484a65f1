"""theory-check"""

from pathlib import Path

import typer

from retainkv.cache_theory import theorem_check
from retainkv.harness import report_header, write_json_report
from retainkv.utils.cli_tools import cli_errors, emit

app = typer.Typer()


@app.command(name="theory-check")
@cli_errors
def theory_check(
    trials: int = typer.Option(1000, "--trials", help="Randomized score sequences."),
    max_n: int = typer.Option(64, "--max-n", help="Longest random sequence."),
    max_b: int = typer.Option(16, "--max-b", help="Largest random budget."),
    seed: int = typer.Option(0, "--seed"),
    out: Path | None = typer.Option(None, "--out", "-o", help="JSON report to write."),
) -> None:
    """Check that top-b selection over causal scores fits a bounded cache."""
    report = theorem_check(trials, max_n, max_b, seed)
    payload = report.model_dump()
    if out is not None:
        write_json_report(out, report_header(command="theory-check", trials=trials, max_n=max_n, max_b=max_b, seed=seed), payload)
    emit(payload)
    if report.violations_topb or report.exhaustive_violations:
        raise typer.Exit(1)
