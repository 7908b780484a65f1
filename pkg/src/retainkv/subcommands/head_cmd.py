"""train-head"""

from pathlib import Path

import typer

from retainkv.backbone import load_weights
from retainkv.config import load_run_config
from retainkv.harness import report_header, write_csv_report
from retainkv.retaining import init_headset, load_dataset, save_headset, train
from retainkv.utils.cli_tools import OVERRIDE_CONTEXT, cli_errors, emit

app = typer.Typer()


@app.command(name="train-head", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def train_head(
    ctx: typer.Context,
    weights: Path = typer.Option(..., "--weights", "-w", help="Frozen backbone."),
    dataset: Path = typer.Option(..., "--dataset", "-d", help="JSONL training examples."),
    out: Path = typer.Option(..., "--out", "-o", help="Headset file to write."),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)."),
) -> None:
    """Train one retaining head per layer; writes the headset and a loss-curve CSV."""
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    examples = load_dataset(dataset)
    headset = init_headset(cfg, rc.training.d_retain, rc.seed)
    result = train(headset, backbone, cfg, examples, rc.training, rc.seed)
    save_headset(out, result.headset, cfg)
    curve = out.with_suffix(".loss.csv")
    write_csv_report(
        curve,
        report_header(command="train-head", backbone_hash=result.backbone_hash, training=rc.training.model_dump(mode="json"), seed=rc.seed),
        ("step", "lr", "loss"),
        ([p.step, p.lr, p.loss] for p in result.loss_curve),
    )
    emit(
        {
            "path": str(out),
            "loss_curve": str(curve),
            "initial_loss": result.loss_curve[0].loss if result.loss_curve else None,
            "final_loss": result.loss_curve[-1].loss if result.loss_curve else None,
            "backbone_hash": result.backbone_hash,
        }
    )
