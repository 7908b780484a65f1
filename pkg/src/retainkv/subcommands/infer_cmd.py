"""infer"""

from pathlib import Path

import typer

from retainkv.backbone import greedy_generate, load_weights
from retainkv.config import load_run_config
from retainkv.eviction import chunked_prefill_with_eviction, decode, locret_q_prefill
from retainkv.harness import compression_ratio, report_header, write_json_report
from retainkv.utils.cli_tools import OVERRIDE_CONTEXT, cli_errors, emit, load_optional_headset
from retainkv.utils.file_tools import read_tokens

app = typer.Typer()


@app.command(name="infer", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def infer(
    ctx: typer.Context,
    weights: Path = typer.Option(..., "--weights", "-w", help="Backbone weights."),
    prompt: Path = typer.Option(..., "--prompt", "-p", help="JSON array of prompt token ids."),
    headset: Path | None = typer.Option(None, "--headset", help="Retaining heads; needed by locret policies."),
    query: Path | None = typer.Option(None, "--query", "-q", help="JSON array of question ids, prefilled first and never evicted."),
    max_new: int = typer.Option(8, "--max-new", help="Tokens to generate."),
    compare: bool = typer.Option(False, "--compare/--no-compare", help="Also decode with the full cache."),
    out: Path | None = typer.Option(None, "--out", "-o", help="Metrics JSON to write."),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)."),
) -> None:
    """Chunked prefill with eviction followed by greedy decoding.

    With ``--query`` the question is prefilled in front of the prompt and protected from
    eviction, as the ``locret_q`` policy requires.
    """
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    tokens = read_tokens(prompt)
    heads = load_optional_headset(headset, cfg)
    if query is not None:
        result = locret_q_prefill(backbone, cfg, read_tokens(query), tokens, rc.eviction, heads)
    else:
        result = chunked_prefill_with_eviction(backbone, cfg, tokens, rc.eviction, heads)
    lengths = result.pool.lengths().tolist()
    generated = decode(backbone, cfg, result, max_new)
    metrics: dict[str, object] = {
        "generated": generated,
        "prompt_len": len(tokens),
        "prefill_steps": result.steps,
        "cache_lengths": lengths,
        "compression_ratio": compression_ratio(len(tokens), rc.eviction.b),
        "policy": rc.eviction.policy.value,
        "query_len": 0 if query is None else result.n_tokens - len(tokens),
    }
    if compare:
        reference = greedy_generate(backbone, cfg, tokens, max_new)
        metrics["full_attention"] = reference
        metrics["matches_full_attention"] = reference == generated
    if out is not None:
        write_json_report(out, report_header(command="infer", config=rc.echo()), metrics)
    emit(metrics)
