"""init-model"""

from pathlib import Path

import typer
from loguru import logger

from retainkv.backbone import build_matched_filter, init_random, matched_filter_config, save_weights, weights_hash
from retainkv.config import load_run_config
from retainkv.utils.cli_tools import OVERRIDE_CONTEXT, cli_errors, emit

app = typer.Typer()


@app.command(name="init-model", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def init_model(
    ctx: typer.Context,
    out: Path = typer.Option(..., "--out", "-o", help="Weights file to write."),
    kind: str | None = typer.Option(None, "--kind", help="random or matched_filter; defaults to init.kind."),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)."),
) -> None:
    """Initialise a backbone and save it with its config."""
    overrides = list(ctx.args) + ([f"--init.kind={kind}"] if kind else [])
    rc = load_run_config(config, overrides)
    if rc.init.kind == "matched_filter":
        cfg = matched_filter_config(rc.task.vocab.vocab_size, n_layers=rc.model.n_layers, max_positions=rc.model.max_positions)
        weights = build_matched_filter(cfg, rc.init.match_gain, layout=rc.task.vocab, seed=rc.seed)
    else:
        cfg = rc.model
        weights = init_random(cfg, rc.seed)
    save_weights(out, weights, cfg)
    digest = weights_hash(weights)
    logger.info(f"{rc.init.kind} backbone {digest[:12]} -> {out}")
    emit({"path": str(out), "kind": rc.init.kind, "hash": digest, "config": cfg.model_dump()})
