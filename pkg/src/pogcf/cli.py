"""Command-line interface.

Subcommands: build-graph, train, eval, sweep, recommend, make-synthetic.
Flag values override the YAML config file; every failure exits nonzero
after printing one machine-parsable ``error<TAB>Kind<TAB>message`` line.
"""

from __future__ import annotations

import functools
import os
import sys

import click

from . import plots
from .config import RunConfig
from .errors import (
    ConfigError,
    DimensionMismatchError,
    GridTooLargeError,
    PogcfError,
    UnknownUserError,
)
from .graph import load_pog, save_pog, write_edge_tsv, write_rank_table_tsv
from .manifest import ExperimentManifest
from .model import load_embeddings, propagate, save_embeddings, top_k
from .order import combination_label
from .pipeline import cell_configs, prepare, run_evaluation, run_training
from .synthetic import BEHAVIOR_LEVELS, write_synthetic
from .training import train


def _parse_levels(text: str) -> list[list[str]]:
    return [[name.strip() for name in level.split(",")] for level in text.split("|")]


def _parse_data(pairs: tuple[str, ...]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"--data expects behavior=path, got {pair!r}")
        behavior, path = pair.split("=", 1)
        out[behavior] = path
    return out


def config_options(fn):
    """Flags mirroring RunConfig fields; None means "not overridden"."""

    options = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="YAML run configuration file."),
        click.option("--data", "data", multiple=True,
                     help="behavior=path dataset TSV (repeatable)."),
        click.option("--levels", default=None,
                     help="Behavior levels, e.g. 'click|favor|share,follow'."),
        click.option("--dataset-name", default=None),
        click.option("--tau", type=float, default=None),
        click.option("--gamma", type=float, default=None),
        click.option("--layers", type=int, default=None),
        click.option("--dim", type=int, default=None),
        click.option("--lr", type=float, default=None),
        click.option("--reg", "l2_reg", type=float, default=None),
        click.option("--epochs", type=int, default=None),
        click.option("--batch-size", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--k", "ks", multiple=True, type=int,
                     help="Cutoff K (repeatable)."),
        click.option("--sampler-mode", default=None,
                     type=click.Choice(["pobpr", "uniform", "mtl"])),
        click.option("--split", "split_mode", default=None,
                     type=click.Choice(["random", "temporal"])),
        click.option("--test-fraction", type=float, default=None),
        click.option("--val-fraction", type=float, default=None),
        click.option("--min-interactions", type=int, default=None),
        click.option("--init-sigma", type=float, default=None),
        click.option("--rank-universe", default=None,
                     type=click.Choice(["all-subsets", "observed"])),
        click.option("--deterministic/--no-deterministic", default=None),
        click.option("--has-header/--no-header", default=None),
        click.option("--out-dir", default=None, type=click.Path()),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def resolve_config(config_path, data, levels, ks, **overrides) -> RunConfig:
    base = RunConfig.from_yaml(config_path) if config_path else RunConfig()
    if data:
        overrides["data"] = _parse_data(data)
    if levels:
        overrides["levels"] = _parse_levels(levels)
    if ks:
        overrides["ks"] = sorted(set(ks))
    return base.with_overrides(**overrides)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PogcfError, FileNotFoundError) as exc:
            click.echo(f"error\t{type(exc).__name__}\t{exc}", err=True)
            sys.exit(2)

    return wrapper


@click.group()
def main():
    """Multi-behavior graph collaborative filtering."""


@main.command("build-graph")
@config_options
@cli_errors
def cmd_build_graph(config_path, data, levels, ks, **overrides):
    """Build the weighted graph and dump its snapshot, edges, and rank table."""
    config = resolve_config(config_path, data, levels, ks, **overrides)
    prepared = prepare(config, do_split=False)
    os.makedirs(config.out_dir, exist_ok=True)
    g = prepared.graph
    save_pog(g, os.path.join(config.out_dir, "pog.bin"))
    write_edge_tsv(g, os.path.join(config.out_dir, "pog_edges.tsv"))
    write_rank_table_tsv(prepared.ranks, config.tau,
                         os.path.join(config.out_dir, "rank_table.tsv"))
    click.echo(f"users\t{g.num_users}")
    click.echo(f"items\t{g.num_items}")
    click.echo(f"edges\t{g.num_edges}")
    label_by_rank = {
        rank: " | ".join(combination_label(c, prepared.order) for c in cls)
        for rank, cls in enumerate(prepared.ranks.classes, start=1)
    }
    for rank in sorted(g.pools):
        click.echo(f"combination\t{label_by_rank.get(rank, '?')}\trank={rank}\t"
                   f"count={len(g.pools[rank])}")


def _persist_training(result, emb, best_emb, out_dir, num_layers, tau) -> str:
    """Write checkpoints, the training log, and the loss figure."""
    os.makedirs(out_dir, exist_ok=True)
    ckpt = os.path.join(out_dir, "checkpoint.bin")
    save_embeddings(emb, ckpt, num_layers=num_layers, tau=tau)
    save_embeddings(best_emb if best_emb is not None else emb,
                    os.path.join(out_dir, "checkpoint_best.bin"),
                    num_layers=num_layers, tau=tau)
    with open(os.path.join(out_dir, "train_log.tsv"), "w", encoding="utf-8") as fh:
        fh.write("epoch\tstep\tloss\tval_mean_ndcg\n")
        for record in result.records:
            fh.write(record.as_line() + "\n")
    plots.save_loss_figure(result.records, os.path.join(out_dir, "train_loss.png"))
    return ckpt


def _train_into(config: RunConfig, out_dir: str) -> tuple:
    """Shared by train and sweep: returns (prepared, result, emb, ckpt path)."""
    prepared = prepare(config)
    result, emb = run_training(prepared)
    best_emb = (
        propagate(result.best_model, prepared.graph)
        if result.best_model is not None else None
    )
    ckpt = _persist_training(result, emb, best_emb, out_dir, config.layers, config.tau)
    return prepared, result, emb, ckpt


@main.command("train")
@click.option("--graph", "graph_path", type=click.Path(), default=None,
              help="Train on a prebuilt graph snapshot instead of raw logs.")
@config_options
@cli_errors
def cmd_train(graph_path, config_path, data, levels, ks, **overrides):
    """Train embeddings and write checkpoints plus the training log."""
    config = resolve_config(config_path, data, levels, ks, **overrides)
    if graph_path:
        result, ckpt = _train_from_snapshot(config, graph_path)
    else:
        _, result, _, ckpt = _train_into(config, config.out_dir)
    manifest = ExperimentManifest(os.path.join(config.out_dir, "manifest.tsv"))
    manifest.register(config.config_hash(), None, ckpt)
    click.echo(f"checkpoint\t{ckpt}")
    click.echo(f"final_loss\t{result.records[-1].loss!r}")
    if result.best_val is not None:
        click.echo(f"best_val_ndcg\t{result.best_val!r}\tepoch={result.best_epoch}")


def _train_from_snapshot(config: RunConfig, graph_path: str):
    """Train on a stored graph; no split or validation, the edges are final."""
    if config.sampler_mode == "mtl":
        raise ConfigError("mtl sampling needs per-behavior logs, not a snapshot")
    g = load_pog(graph_path)
    result = train(g, config.train_config(), dim=config.dim,
                   num_layers=config.layers, init_sigma=config.init_sigma)
    emb = propagate(result.model, g)
    ckpt = _persist_training(result, emb, None, config.out_dir, config.layers, g.tau)
    return result, ckpt


def _print_report(report) -> None:
    click.echo("behavior\tmetric\tk\tvalue")
    for line in report.tsv_lines():
        click.echo(line)


@main.command("eval")
@click.option("--checkpoint", type=click.Path(), default=None,
              help="Embedding snapshot (defaults to <out-dir>/checkpoint.bin).")
@config_options
@cli_errors
def cmd_eval(checkpoint, config_path, data, levels, ks, **overrides):
    """Evaluate a checkpoint on the held-out split and write reports."""
    config = resolve_config(config_path, data, levels, ks, **overrides)
    ckpt = checkpoint or os.path.join(config.out_dir, "checkpoint.bin")
    emb, _meta = load_embeddings(ckpt)
    prepared = prepare(config)
    if (emb.num_users, emb.num_items) != (prepared.num_users, prepared.num_items):
        raise DimensionMismatchError(
            f"checkpoint is {emb.num_users}x{emb.num_items} but dataset is "
            f"{prepared.num_users}x{prepared.num_items}"
        )
    report = run_evaluation(prepared, emb)
    os.makedirs(config.out_dir, exist_ok=True)
    report.write_json(os.path.join(config.out_dir, "report.json"))
    report.write_tsv(os.path.join(config.out_dir, "report.tsv"))
    plots.save_report_figure(report, os.path.join(config.out_dir, "report.png"))
    _print_report(report)


@main.command("sweep")
@config_options
@cli_errors
def cmd_sweep(config_path, data, levels, ks, **overrides):
    """Run the tau/gamma/lr/reg grid; one manifest entry and report per cell."""
    config = resolve_config(config_path, data, levels, ks, **overrides)
    cells = cell_configs(config)
    if len(cells) > config.grid_cap:
        raise GridTooLargeError(
            f"grid has {len(cells)} cells, cap is {config.grid_cap}"
        )
    os.makedirs(config.out_dir, exist_ok=True)
    manifest = ExperimentManifest(os.path.join(config.out_dir, "manifest.tsv"))
    k_report = 20 if 20 in config.ks else max(config.ks)
    rows = []
    for cell in cells:
        cell_hash = cell.config_hash()
        cell_dir = os.path.join(config.out_dir, "cells", cell_hash[:12])
        prepared, _result, emb, ckpt = _train_into(cell, cell_dir)
        report = run_evaluation(prepared, emb)
        report_path = os.path.join(cell_dir, "report.json")
        report.write_json(report_path)
        report.write_tsv(os.path.join(cell_dir, "report.tsv"))
        manifest.register(cell_hash, report_path, ckpt)
        rows.append({
            "tau": cell.tau, "gamma": cell.gamma,
            "mean_ndcg": report.mean_metric("ndcg", k_report),
        })
        click.echo(f"cell\ttau={cell.tau:g}\tgamma={cell.gamma:g}\t"
                   f"lr={cell.lr:g}\treg={cell.l2_reg:g}\t"
                   f"mean_ndcg={rows[-1]['mean_ndcg']!r}")
    sweep_path = os.path.join(config.out_dir, "sweep.tsv")
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write("tau\tgamma\tmean_ndcg\n")
        for row in rows:
            fh.write(f"{row['tau']:g}\t{row['gamma']:g}\t{row['mean_ndcg']!r}\n")
    plots.save_sweep_figure(rows, os.path.join(config.out_dir, "sweep.png"))
    click.echo(f"sweep\t{sweep_path}")


@main.command("recommend")
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--users", "user_spec", required=True,
              help="Comma-separated user indices.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@config_options
@cli_errors
def cmd_recommend(checkpoint, user_spec, out_path,
                  config_path, data, levels, ks, **overrides):
    """Top-K items per user (--k) with training interactions masked."""
    config = resolve_config(config_path, data, levels, ks, **overrides)
    top_n = ks[0] if ks else 10
    ckpt = checkpoint or os.path.join(config.out_dir, "checkpoint.bin")
    emb, _meta = load_embeddings(ckpt)
    prepared = prepare(config)
    masks: dict[int, set[int]] = {}
    for log in prepared.train_logs:
        for u, i in zip(log.users.tolist(), log.items.tolist()):
            masks.setdefault(u, set()).add(i)
    lines = []
    for token in user_spec.split(","):
        u = int(token)
        if not 0 <= u < emb.num_users:
            raise UnknownUserError(f"user {u} outside [0, {emb.num_users})")
        items = top_k(emb, u, top_n, masks.get(u, set()))
        lines.append(f"{u}\t" + ",".join(str(i) for i in items))
    text = "\n".join(lines)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command("make-synthetic")
@click.option("--out-dir", default="synthetic", type=click.Path(), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--users", "num_users", type=int, default=200, show_default=True)
@click.option("--items", "num_items", type=int, default=300, show_default=True)
@cli_errors
def cmd_make_synthetic(out_dir, seed, num_users, num_items):
    """Write the planted-preference dataset and a ready-to-run config."""
    paths = write_synthetic(out_dir, seed=seed, num_users=num_users,
                            num_items=num_items)
    config = RunConfig(
        data=paths, levels=BEHAVIOR_LEVELS, dataset_name="synthetic",
        min_interactions=0, dim=32, epochs=30, batch_size=1024,
        lr=0.01, l2_reg=1e-5, tau=2.0, gamma=1.0, seed=seed,
        out_dir=os.path.join(out_dir, "runs"),
    )
    config_file = os.path.join(out_dir, "config.yaml")
    config.write_yaml(config_file)
    click.echo(f"config\t{config_file}")
    for behavior, path in paths.items():
        click.echo(f"data\t{behavior}\t{path}")


if __name__ == "__main__":
    main()
