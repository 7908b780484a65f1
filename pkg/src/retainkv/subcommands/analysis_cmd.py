"""consistency, ablate-stabilizers, trace, passkey-eval"""

from pathlib import Path

import typer

from retainkv.backbone import load_weights
from retainkv.config import load_run_config
from retainkv.eviction import EvictionTrace, PolicyKind, chunked_prefill_with_eviction
from retainkv.eviction.trace import TRACE_COLUMNS
from retainkv.exceptions import ConfigError
from retainkv.harness import (
    ABLATION_COLUMNS,
    ACCURACY_COLUMNS,
    CONSISTENCY_COLUMNS,
    SYNTHETIC_NOTE,
    PasskeyTaskConfig,
    consistency_curve,
    gen_passkey,
    gen_passkey_set,
    matrix_rows,
    passkey_eval,
    report_header,
    scorer_for,
    stabilizer_ablation,
    trace_retained,
    write_csv_report,
    write_json_report,
)
from retainkv.retaining import init_headset
from retainkv.utils.cli_tools import OVERRIDE_CONTEXT, cli_errors, emit, load_optional_headset, parse_int_list
from retainkv.utils.file_tools import out_dir, read_tokens

app = typer.Typer()

WEIGHTS = typer.Option(..., "--weights", "-w", help="Backbone weights.")
HEADSET = typer.Option(None, "--headset", help="Retaining heads; needed by locret policies.")
CONFIG = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML).")
OUT = typer.Option(None, "--out", "-o", help="Report directory; defaults to io.out_dir.")


@app.command(name="consistency", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def consistency(
    ctx: typer.Context,
    weights: Path = WEIGHTS,
    headset: Path | None = HEADSET,
    scorers: str = typer.Option("locret,sirllm_entropy,h2o_sum,snapkv_window", "--scorers", help="Comma-separated policies."),
    length: int = typer.Option(512, "--length", help="Input length."),
    prefixes: str = typer.Option("64,128,192,256,320,384,448,512", "--prefixes", help="Comma-separated prefix grid."),
    top_frac: float = typer.Option(0.10, "--top-frac", help="Fraction of positions compared."),
    prompt: Path | None = typer.Option(None, "--prompt", "-p", help="Token file; defaults to a synthetic haystack."),
    config: Path | None = CONFIG,
    out: Path | None = OUT,
) -> None:
    """Agreement of each scorer's top positions judged from a prefix and from the full input."""
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    heads = load_optional_headset(headset, cfg)
    if prompt is not None:
        tokens = read_tokens(prompt)
    else:
        task = PasskeyTaskConfig.model_validate({**rc.task.model_dump(), "haystack_len": length})
        tokens = gen_passkey(task, rc.seed).example.prompt_tokens
    grid = parse_int_list(prefixes)
    reports = []
    for name in scorers.split(","):
        kind = PolicyKind(name.strip())
        scorer = scorer_for(kind, backbone, cfg, heads, rc.eviction.window, rc.eviction.seed)
        reports.append(consistency_curve(scorer, tokens, grid, top_frac, kind.value))
    target = out_dir(out or rc.io.out_dir)
    header = report_header(command="consistency", note=SYNTHETIC_NOTE, length=len(tokens), seed=rc.seed, config=rc.echo())
    write_csv_report(target / "consistency.csv", header, CONSISTENCY_COLUMNS, (row for r in reports for row in r.rows()))
    write_json_report(target / "consistency.json", header, [r.model_dump() for r in reports])
    emit({r.scorer: dict(zip(r.prefixes, r.consistency, strict=True)) for r in reports})


@app.command(name="ablate-stabilizers", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def ablate_stabilizers(
    ctx: typer.Context,
    weights: Path = WEIGHTS,
    headset: Path | None = HEADSET,
    grid: str = typer.Option("0,32,128,512", "--grid", help="Comma-separated n_s values."),
    seeds: int = typer.Option(10, "--seeds", help="Passkey tasks, one per seed."),
    config: Path | None = CONFIG,
    out: Path | None = OUT,
) -> None:
    """Accuracy, last-hidden error and CIS error for each stabilizer length."""
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    heads = load_optional_headset(headset, cfg) or init_headset(cfg, rc.training.d_retain, rc.seed)
    n_s_grid = parse_int_list(grid)
    if any(n_s > rc.eviction.b for n_s in n_s_grid):
        raise ConfigError(f"n_s grid {n_s_grid} exceeds the budget b={rc.eviction.b}")
    tasks = gen_passkey_set(rc.task, seeds)
    report = stabilizer_ablation(backbone, cfg, heads, tasks, rc.eviction, n_s_grid, rc.jobs)
    target = out_dir(out or rc.io.out_dir)
    header = report_header(command="ablate-stabilizers", note=SYNTHETIC_NOTE, trained_heads=headset is not None, config=rc.echo())
    rows = [r.as_row() for r in report.rows] + [r.as_row() for r in report.summary()]
    write_csv_report(target / "ablation.csv", header, ABLATION_COLUMNS, rows)
    emit([r.model_dump() for r in report.summary()])


@app.command(name="trace", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def trace(
    ctx: typer.Context,
    weights: Path = WEIGHTS,
    headset: Path | None = HEADSET,
    layer: int = typer.Option(0, "--layer"),
    kv_head: int = typer.Option(0, "--kv-head"),
    prompt: Path | None = typer.Option(None, "--prompt", "-p", help="Token file; defaults to a synthetic haystack."),
    config: Path | None = CONFIG,
    out: Path | None = OUT,
) -> None:
    """Record which units every eviction step keeps; writes the raw trace and a retained matrix."""
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    if not (0 <= layer < cfg.n_layers and 0 <= kv_head < cfg.n_kv_heads):
        raise ConfigError(f"(layer {layer}, KV head {kv_head}) outside {cfg.n_layers} layers x {cfg.n_kv_heads} KV heads")
    heads = load_optional_headset(headset, cfg)
    needle: list[int] = []
    if prompt is not None:
        tokens = read_tokens(prompt)
    else:
        task = gen_passkey(rc.task, rc.seed)
        tokens, needle = task.example.prompt_tokens, task.needle_positions
    recorded = EvictionTrace()
    chunked_prefill_with_eviction(backbone, cfg, tokens, rc.eviction, heads, trace=recorded)
    matrix = trace_retained(recorded, layer, kv_head)
    target = out_dir(out or rc.io.out_dir)
    header = report_header(command="trace", layer=layer, kv_head=kv_head, needle_positions=needle, config=rc.echo())
    recorded.write_csv(target / "trace.csv", [f"{k}: {v}" for k, v in sorted(header.items())])
    write_csv_report(
        target / "retained.csv", header, ["step", *(str(p) for p in range(matrix.shape[1]))], matrix_rows(matrix)
    )
    emit({"steps": int(matrix.shape[0]), "rows": len(recorded.rows), "columns": list(TRACE_COLUMNS), "retained_per_step": matrix.sum(axis=1).tolist()})


@app.command(name="passkey-eval", context_settings=OVERRIDE_CONTEXT)
@cli_errors
def passkey_eval_cmd(
    ctx: typer.Context,
    weights: Path = WEIGHTS,
    headset: Path | None = HEADSET,
    budgets: str | None = typer.Option(None, "--budgets", help="Comma-separated budgets; defaults to eviction.b."),
    chunk_sizes: str | None = typer.Option(None, "--chunk-sizes", help="Comma-separated chunk sizes; defaults to eviction.B."),
    policies: str | None = typer.Option(None, "--policies", help="Comma-separated policies; defaults to eviction.policy."),
    trials: int = typer.Option(50, "--trials", help="Seeded haystacks per cell."),
    random_heads: bool = typer.Option(False, "--random-heads", help="Add a column with untrained retaining heads."),
    config: Path | None = CONFIG,
    out: Path | None = OUT,
) -> None:
    """Needle recall per policy, budget and chunk size, next to the full-attention baseline."""
    rc = load_run_config(config, ctx.args)
    backbone, cfg = load_weights(weights)
    heads = load_optional_headset(headset, cfg)
    table = passkey_eval(
        backbone,
        cfg,
        heads,
        rc.eviction,
        parse_int_list(budgets) if budgets else [rc.eviction.b],
        trials,
        rc.task,
        policies=[PolicyKind(p.strip()) for p in policies.split(",")] if policies else None,
        chunk_sizes=parse_int_list(chunk_sizes) if chunk_sizes else None,
        control_headset=init_headset(cfg, rc.training.d_retain, rc.seed + 1) if random_heads else None,
        jobs=rc.jobs,
    )
    target = out_dir(out or rc.io.out_dir)
    header = report_header(command="passkey-eval", note=SYNTHETIC_NOTE, seeds=table.seeds, config=rc.echo())
    write_csv_report(target / "passkey.csv", header, ACCURACY_COLUMNS, (r.as_row() for r in table.rows))
    write_json_report(target / "passkey.json", header, table.model_dump())
    emit(table.model_dump())
