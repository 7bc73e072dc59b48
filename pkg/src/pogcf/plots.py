"""Figure rendering for reports, sweeps, and training logs.

Figures are written next to the delimited outputs they visualize; the Agg
backend keeps everything headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport
from .training import LogRecord


def save_report_figure(report: EvalReport, path) -> None:
    """Grouped bars of per-behavior Recall@K and NDCG@K, mean dashed."""
    behaviors = sorted(report.per_behavior)
    ks = sorted(next(iter(report.mean.values()))) if report.mean else []
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    for ax, metric in zip(axes, ("recall", "ndcg")):
        x = np.arange(len(behaviors))
        width = 0.8 / max(len(ks), 1)
        for j, k in enumerate(ks):
            vals = [report.per_behavior[b][metric][k] for b in behaviors]
            ax.bar(x + j * width, vals, width, label=f"@{k}")
            ax.axhline(report.mean[metric][k], ls="--", lw=0.8, color="gray")
        ax.set_xticks(x + 0.4 - width / 2)
        ax.set_xticklabels(behaviors, rotation=20)
        ax.set_title(metric.upper())
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(rows: list[dict], path) -> None:
    """Mean NDCG against gamma, one curve per tau."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    taus = sorted({r["tau"] for r in rows})
    for tau in taus:
        pts = sorted((r["gamma"], r["mean_ndcg"]) for r in rows if r["tau"] == tau)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"tau={tau:g}")
    ax.set_xlabel("gamma")
    ax.set_ylabel("mean NDCG")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_figure(records: list[LogRecord], path) -> None:
    """Training loss per epoch; validation metric on a twin axis if present."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot([r.epoch for r in records], [r.loss for r in records], lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss per triple")
    vals = [(r.epoch, r.val_mean_ndcg) for r in records if r.val_mean_ndcg is not None]
    if vals:
        twin = ax.twinx()
        twin.plot([v[0] for v in vals], [v[1] for v in vals], color="tab:orange",
                  marker=".", lw=0.8)
        twin.set_ylabel("val mean NDCG", color="tab:orange")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
