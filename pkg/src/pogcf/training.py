"""Pairwise-ranking losses with full backpropagation through propagation,
and the Adam training loop.

Scores are computed from the layer-averaged propagated embeddings, so the
gradient of a batch flows back to the layer-0 tables through the same
(symmetric) propagation operator. The objective is the negated sum of
``ln sigmoid(score_pos - score_neg)`` plus an L2 penalty on the layer-0
rows each triple touches.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DivergedError, EmptyGraphError, NonFiniteLossError
from .graph import InteractionLog, PogGraph
from .model import EmbeddingModel, Propagator, init_embeddings
from .rng import substream
from .sampling import BehaviorSampler, TrainTriple, TripleSampler

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    lr: float = 1e-3
    l2_reg: float = 1e-4
    epochs: int = 100
    batch_size: int = 1024
    gamma: float = 1.0
    seed: int = 0
    sampler_mode: str = "pobpr"  # pobpr | uniform | mtl
    mtl_weights: dict[str, float] | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    eval_every: int = 5
    patience: int = 10
    deterministic: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.sampler_mode not in ("pobpr", "uniform", "mtl"):
            raise ValueError(f"unknown sampler_mode {self.sampler_mode!r}")


@dataclass
class LogRecord:
    """One training-log line: epoch, cumulative step, loss, val metric."""

    epoch: int
    step: int
    loss: float
    val_mean_ndcg: float | None = None

    def as_line(self) -> str:
        val = "nan" if self.val_mean_ndcg is None else repr(self.val_mean_ndcg)
        return f"{self.epoch}\t{self.step}\t{self.loss!r}\t{val}"


@dataclass
class TrainResult:
    model: EmbeddingModel
    records: list[LogRecord]
    best_model: EmbeddingModel | None = None
    best_val: float | None = None
    best_epoch: int | None = None


def _bpr_terms(
    final: np.ndarray, num_users: int, triples: list[TrainTriple]
) -> tuple[float, np.ndarray]:
    """Sum of -ln sigmoid(pos - neg) and per-triple grad factor sigma(s)-1."""
    us = np.array([t.u for t in triples])
    ps = np.array([t.i for t in triples]) + num_users
    ns = np.array([t.j for t in triples]) + num_users
    eu, ep, en = final[us], final[ps], final[ns]
    s = np.einsum("td,td->t", eu, ep - en)
    loss = float(np.logaddexp(0.0, -s).sum())
    return loss, expit(s) - 1.0


def _scatter_bpr_grad(
    grad: np.ndarray, final: np.ndarray, num_users: int,
    triples: list[TrainTriple], factors: np.ndarray, weight: float = 1.0,
) -> None:
    us = np.array([t.u for t in triples])
    ps = np.array([t.i for t in triples]) + num_users
    ns = np.array([t.j for t in triples]) + num_users
    f = (weight * factors)[:, None]
    np.add.at(grad, us, f * (final[ps] - final[ns]))
    np.add.at(grad, ps, f * final[us])
    np.add.at(grad, ns, -f * final[us])


def _add_row_penalty(
    loss: float, grad0: np.ndarray, x0: np.ndarray, num_users: int,
    triples: list[TrainTriple], l2_reg: float,
) -> float:
    """L2 penalty on the layer-0 rows each triple touches (per occurrence)."""
    if l2_reg == 0.0 or not triples:
        return loss
    rows = np.concatenate([
        np.array([t.u for t in triples]),
        np.array([t.i for t in triples]) + num_users,
        np.array([t.j for t in triples]) + num_users,
    ])
    loss += l2_reg * float((x0[rows] ** 2).sum())
    np.add.at(grad0, rows, 2.0 * l2_reg * x0[rows])
    return loss


def pobpr_loss(
    model: EmbeddingModel,
    g: PogGraph,
    triples: list[TrainTriple],
    l2_reg: float = 0.0,
    propagator: Propagator | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch loss and gradients w.r.t. the layer-0 tables.

    Returns ``(loss, grad_users, grad_items)``. The gradient is pulled back
    through the full L-layer propagation; since the normalized adjacency is
    symmetric, that pullback is the propagation itself applied to the
    upstream gradient.
    """
    prop = propagator or Propagator(g, model.num_layers)
    prop.check_model(model)
    x0 = np.concatenate([model.users, model.items])
    final = prop.mean_propagate(x0)
    m = model.num_users

    loss, factors = _bpr_terms(final, m, triples)
    grad_final = np.zeros_like(final)
    _scatter_bpr_grad(grad_final, final, m, triples, factors)
    grad0 = prop.mean_propagate(grad_final)
    loss = _add_row_penalty(loss, grad0, x0, m, triples, l2_reg)
    if not math.isfinite(loss):
        raise NonFiniteLossError(f"loss evaluated to {loss}")
    return loss, grad0[:m], grad0[m:]


def mtl_bpr_loss(
    model: EmbeddingModel,
    g: PogGraph,
    triples_by_behavior: dict[str, list[TrainTriple]],
    weights: dict[str, float],
    l2_reg: float = 0.0,
    propagator: Propagator | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted sum of per-behavior pairwise losses (reference objective).

    The regularizer covers all touched rows and is not behavior-weighted,
    so zero weights leave a pure penalty term.
    """
    for b, w in weights.items():
        if w < 0:
            raise ValueError(f"negative weight for behavior {b!r}")
    prop = propagator or Propagator(g, model.num_layers)
    prop.check_model(model)
    x0 = np.concatenate([model.users, model.items])
    final = prop.mean_propagate(x0)
    m = model.num_users

    loss = 0.0
    grad_final = np.zeros_like(final)
    all_triples: list[TrainTriple] = []
    for behavior, triples in triples_by_behavior.items():
        if not triples:
            continue
        w = weights.get(behavior, 1.0)
        part, factors = _bpr_terms(final, m, triples)
        loss += w * part
        _scatter_bpr_grad(grad_final, final, m, triples, factors, weight=w)
        all_triples.extend(triples)
    grad0 = prop.mean_propagate(grad_final)
    loss = _add_row_penalty(loss, grad0, x0, m, all_triples, l2_reg)
    if not math.isfinite(loss):
        raise NonFiniteLossError(f"loss evaluated to {loss}")
    return loss, grad0[:m], grad0[m:]


class Adam:
    """Adaptive-moment optimizer over the two embedding tables."""

    def __init__(self, model: EmbeddingModel, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m_u = np.zeros_like(model.users)
        self.v_u = np.zeros_like(model.users)
        self.m_i = np.zeros_like(model.items)
        self.v_i = np.zeros_like(model.items)

    def step(self, model: EmbeddingModel, grad_u: np.ndarray, grad_i: np.ndarray) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for param, grad, m, v in (
            (model.users, grad_u, self.m_u, self.v_u),
            (model.items, grad_i, self.m_i, self.v_i),
        ):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def train(
    g: PogGraph,
    config: TrainConfig,
    *,
    dim: int = 64,
    num_layers: int = 2,
    init_sigma: float = 0.1,
    logs: list[InteractionLog] | None = None,
    validate=None,
) -> TrainResult:
    """Run the optimization loop and return the trained layer-0 tables.

    One epoch is ``ceil(num_edges / batch_size)`` batches sampled with
    replacement. ``validate``, when given, is a callable mapping an
    EmbeddingModel to a validation mean-NDCG; it is invoked every
    ``eval_every`` epochs and drives patience-based early stopping.
    ``logs`` is required for the "mtl" sampler mode, which draws positives
    per behavior.
    """
    if g.num_edges == 0:
        raise EmptyGraphError("cannot train on an empty graph")
    model = init_embeddings(
        g.num_users, g.num_items, dim,
        substream(config.seed, "init"), num_layers, init_sigma,
    )
    prop = Propagator(g, num_layers)
    rng = substream(config.seed, "sampler")

    if config.sampler_mode == "mtl":
        if logs is None:
            raise ValueError("mtl sampler mode requires the per-behavior logs")
        pairs = {
            l.behavior: np.stack([l.users, l.items], axis=1) for l in
            (lg.deduplicated() for lg in logs)
        }
        behavior_sampler = BehaviorSampler(pairs, g.user_positive_sets(), g.num_items)
        weights = config.mtl_weights or {b: 1.0 for b in pairs}
    else:
        sampler = TripleSampler(g, mode=config.sampler_mode, gamma=config.gamma)

    adam = Adam(model, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
    steps_per_epoch = max(1, math.ceil(g.num_edges / config.batch_size))

    records: list[LogRecord] = []
    best_val, best_epoch, best_model = None, None, None
    evals_since_best = 0
    last_finite = model.copy()
    step = 0

    for epoch in range(1, config.epochs + 1):
        epoch_loss, epoch_triples = 0.0, 0
        for _ in range(steps_per_epoch):
            if config.sampler_mode == "mtl":
                triples_by_b = {
                    b: behavior_sampler.sample_batch(b, config.batch_size, rng)
                    for b in behavior_sampler.behavior_pairs
                }
                loss, gu, gi = mtl_bpr_loss(
                    model, g, triples_by_b, weights, config.l2_reg, propagator=prop
                )
                n_triples = sum(len(t) for t in triples_by_b.values())
            else:
                triples = sampler.sample_batch(config.batch_size, rng)
                try:
                    loss, gu, gi = pobpr_loss(
                        model, g, triples, config.l2_reg, propagator=prop
                    )
                except NonFiniteLossError as exc:
                    raise DivergedError(str(exc), last_model=last_finite) from exc
                n_triples = len(triples)
            if not math.isfinite(loss):
                raise DivergedError(f"loss {loss} at epoch {epoch}", last_model=last_finite)
            adam.step(model, gu, gi)
            epoch_loss += loss
            epoch_triples += n_triples
            step += 1
        if not np.isfinite(model.users).all() or not np.isfinite(model.items).all():
            raise DivergedError(f"embeddings non-finite at epoch {epoch}",
                                last_model=last_finite)
        last_finite = model.copy()

        val_metric = None
        if validate is not None and epoch % config.eval_every == 0:
            val_metric = float(validate(model))
            if best_val is None or val_metric > best_val:
                best_val, best_epoch, best_model = val_metric, epoch, model.copy()
                evals_since_best = 0
            else:
                evals_since_best += 1
        records.append(LogRecord(epoch, step, epoch_loss / max(epoch_triples, 1), val_metric))
        if validate is not None and evals_since_best >= config.patience:
            log.info("early stop at epoch %d (best %0.5f @ %d)", epoch, best_val, best_epoch)
            break

    return TrainResult(model, records, best_model, best_val, best_epoch)
