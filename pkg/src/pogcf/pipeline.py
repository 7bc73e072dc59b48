"""Glue between configuration and the library: load, split, build, train, eval.

The CLI commands and the sweep loop are thin wrappers over these functions,
which keeps one code path for experiments driven programmatically or from
the command line.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .config import RunConfig
from .datasets import load_behavior_logs
from .errors import ConfigError
from .evaluation import EvalReport, SplitSpec, evaluate, split
from .graph import (
    CombinationGraph,
    InteractionLog,
    PogGraph,
    build_pog,
    filter_min_interactions,
    merge_logs,
)
from .model import EmbeddingModel, PropagatedEmbeddings, propagate
from .order import BehaviorOrder, CombinationRank, build_rank_function, validate_order
from .training import TrainResult, train


@dataclass
class PreparedRun:
    """Filtered logs, split, behavior order, ranks, and the training graph."""

    config: RunConfig
    order: BehaviorOrder
    ranks: CombinationRank
    num_users: int
    num_items: int
    full_logs: list[InteractionLog]
    train_logs: list[InteractionLog]
    test_logs: list[InteractionLog]
    val_logs: list[InteractionLog] | None
    fit_logs: list[InteractionLog]
    combination_graph: CombinationGraph
    graph: PogGraph


def _check_behaviors(config: RunConfig, behaviors: list[str]) -> None:
    declared = {name for level in config.levels for name in level}
    missing = [b for b in behaviors if b not in declared]
    if missing:
        raise ConfigError(f"behaviors {missing} missing from the level declaration")


def prepare(config: RunConfig, logs: list[InteractionLog] | None = None,
            do_split: bool = True) -> PreparedRun:
    """Build everything training needs from a config (and optional in-memory logs)."""
    if logs is None:
        if not config.data:
            raise ConfigError("no dataset paths configured")
        logs = load_behavior_logs(config.data, config.has_header)
    if not config.levels:
        raise ConfigError("no behavior levels configured")
    _check_behaviors(config, [l.behavior for l in logs])
    order = validate_order(config.levels)

    logs, remap = filter_min_interactions(logs, config.min_interactions)
    num_users, num_items = remap.num_users, remap.num_items

    if do_split:
        train_logs, test_logs = split(logs, config.split_spec())
    else:
        train_logs, test_logs = logs, []

    val_logs = None
    fit_logs = train_logs
    if do_split and config.val_fraction > 0:
        fit_logs, val_logs = split(
            train_logs,
            SplitSpec("random", config.val_fraction, config.seed + 1),
        )

    cg = merge_logs(fit_logs, num_users, num_items)
    universe = None if config.rank_universe == "all-subsets" else cg.observed_combinations()
    ranks = build_rank_function(order, universe)
    graph = build_pog(cg, ranks, config.tau)
    return PreparedRun(
        config, order, ranks, num_users, num_items, logs,
        train_logs, test_logs, val_logs, fit_logs, cg, graph,
    )


def _validation_callable(prepared: PreparedRun):
    """Mean NDCG@20 on the validation holdout, masked by the fit logs."""
    if prepared.val_logs is None or all(len(l) == 0 for l in prepared.val_logs):
        return None

    def validate(model: EmbeddingModel) -> float:
        emb = propagate(model, prepared.graph)
        report = evaluate(emb, prepared.fit_logs, prepared.val_logs, [20])
        return report.mean_metric("ndcg", 20)

    return validate


def run_training(prepared: PreparedRun) -> tuple[TrainResult, PropagatedEmbeddings]:
    """Train on the prepared graph; returns the result and final embeddings."""
    config = prepared.config
    result = train(
        prepared.graph,
        config.train_config(),
        dim=config.dim,
        num_layers=config.layers,
        init_sigma=config.init_sigma,
        logs=prepared.fit_logs if config.sampler_mode == "mtl" else None,
        validate=_validation_callable(prepared),
    )
    emb = propagate(result.model, prepared.graph)
    return result, emb


def run_evaluation(prepared: PreparedRun, emb: PropagatedEmbeddings) -> EvalReport:
    """Full-ranking evaluation of the test split; masks all training items."""
    config = prepared.config
    metadata = {
        "dataset": config.dataset_name,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "timestamp": None if config.deterministic
        else time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    return evaluate(emb, prepared.train_logs, prepared.test_logs, config.ks, metadata)


def cell_configs(config: RunConfig) -> list[RunConfig]:
    """Cartesian grid over tau/gamma/lr/reg for a sweep, grids cleared per cell."""
    taus = config.tau_grid or [config.tau]
    gammas = config.gamma_grid or [config.gamma]
    lrs = config.lr_grid or [config.lr]
    regs = config.reg_grid or [config.l2_reg]
    cells = []
    for tau in taus:
        for gamma in gammas:
            for lr in lrs:
                for reg in regs:
                    cells.append(replace(
                        config, tau=tau, gamma=gamma, lr=lr, l2_reg=reg,
                        tau_grid=None, gamma_grid=None, lr_grid=None, reg_grid=None,
                    ))
    return cells
