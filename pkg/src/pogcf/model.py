"""Embedding tables, weighted graph propagation, scoring, and top-K retrieval.

Propagation is parameter-free: at each layer a node receives the
weighted-degree-normalized sum of its neighbors' previous-layer embeddings,
and the final representation is the arithmetic mean over layers 0..L.
Nodes without edges receive nothing, so their averaged output shrinks to
the layer-0 row divided by L+1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    NonFiniteValueError,
    SnapshotFormatError,
)
from .graph import PogGraph

EMB_MAGIC = b"POGE"
EMB_VERSION = 1


@dataclass
class EmbeddingModel:
    """Layer-0 user and item embedding tables plus propagation depth."""

    users: np.ndarray
    items: np.ndarray
    num_layers: int

    @property
    def dim(self) -> int:
        return self.users.shape[1]

    @property
    def num_users(self) -> int:
        return self.users.shape[0]

    @property
    def num_items(self) -> int:
        return self.items.shape[0]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.users.copy(), self.items.copy(), self.num_layers)


@dataclass
class PropagatedEmbeddings:
    """Final (layer-averaged) user and item embeddings."""

    users: np.ndarray
    items: np.ndarray
    per_layer: list[np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return self.users.shape[1]

    @property
    def num_users(self) -> int:
        return self.users.shape[0]

    @property
    def num_items(self) -> int:
        return self.items.shape[0]


def init_embeddings(
    num_users: int, num_items: int, dim: int, seed, num_layers: int = 2,
    sigma: float = 0.1,
) -> EmbeddingModel:
    """Draw layer-0 tables i.i.d. from Normal(0, sigma^2), deterministically.

    ``seed`` may be an int or a numpy Generator/SeedSequence.
    """
    if num_users < 1 or num_items < 1 or dim < 1:
        raise InvalidDimensionError(
            f"need positive sizes, got users={num_users} items={num_items} dim={dim}"
        )
    if num_layers < 0:
        raise InvalidDimensionError("num_layers must be >= 0")
    rng = np.random.default_rng(seed)
    users = rng.normal(0.0, sigma, size=(num_users, dim))
    items = rng.normal(0.0, sigma, size=(num_items, dim))
    return EmbeddingModel(users, items, num_layers)


class Propagator:
    """Normalized adjacency operator for one graph, reused across steps.

    The operator is symmetric, so pulling gradients back through the
    layer-averaged propagation is the same propagation applied to the
    upstream gradient.
    """

    def __init__(self, g: PogGraph, num_layers: int):
        self.num_users = g.num_users
        self.num_items = g.num_items
        self.num_layers = num_layers
        m, n = g.num_users, g.num_items
        deg = np.concatenate([g.user_wdeg, g.item_wdeg])
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        rows = np.concatenate([g.edge_users, g.edge_items + m])
        cols = np.concatenate([g.edge_items + m, g.edge_users])
        vals = np.concatenate([g.edge_weights, g.edge_weights])
        vals = vals * inv_sqrt[rows] * inv_sqrt[cols]
        self.adjacency = sp.csr_matrix((vals, (rows, cols)), shape=(m + n, m + n))

    def check_model(self, model: EmbeddingModel) -> None:
        if model.num_users != self.num_users or model.num_items != self.num_items:
            raise DimensionMismatchError(
                f"embeddings ({model.num_users}x{model.num_items}) do not match "
                f"graph ({self.num_users}x{self.num_items})"
            )

    def layer_outputs(self, x0: np.ndarray) -> list[np.ndarray]:
        layers = [x0]
        x = x0
        for _ in range(self.num_layers):
            x = self.adjacency @ x
            layers.append(x)
        return layers

    def mean_propagate(self, x0: np.ndarray) -> np.ndarray:
        """(1/(L+1)) * sum of powers of the normalized adjacency applied to x0."""
        layers = self.layer_outputs(x0)
        return sum(layers[1:], layers[0]) / (self.num_layers + 1)


def propagate(
    model: EmbeddingModel, g: PogGraph, keep_layers: bool = False
) -> PropagatedEmbeddings:
    """Run L rounds of weighted propagation and average the layers."""
    prop = Propagator(g, model.num_layers)
    prop.check_model(model)
    x0 = np.concatenate([model.users, model.items])
    layers = prop.layer_outputs(x0)
    final = sum(layers[1:], layers[0]) / (model.num_layers + 1)
    if not np.isfinite(final).all():
        raise NonFiniteValueError("propagation produced NaN or Inf")
    m = model.num_users
    return PropagatedEmbeddings(
        final[:m], final[m:], per_layer=layers if keep_layers else None
    )


def propagate_message_passing(
    model: EmbeddingModel, g: PogGraph
) -> PropagatedEmbeddings:
    """Per-node accumulation form of :func:`propagate`.

    Walks the edge list python-side and normalizes every message by the
    square roots of both endpoint weighted degrees. Quadratic bookkeeping
    keeps it honest but slow; intended for verification on small graphs.
    """
    if model.num_users != g.num_users or model.num_items != g.num_items:
        raise DimensionMismatchError("embeddings do not match graph")
    eu = [model.users.copy()]
    ei = [model.items.copy()]
    edges = list(
        zip(g.edge_users.tolist(), g.edge_items.tolist(), g.edge_weights.tolist())
    )
    for _ in range(model.num_layers):
        prev_u, prev_i = eu[-1], ei[-1]
        next_u = np.zeros_like(prev_u)
        next_i = np.zeros_like(prev_i)
        for u, i, w in edges:
            coeff = w / (np.sqrt(g.user_wdeg[u]) * np.sqrt(g.item_wdeg[i]))
            next_u[u] += coeff * prev_i[i]
            next_i[i] += coeff * prev_u[u]
        eu.append(next_u)
        ei.append(next_i)
    final_u = sum(eu[1:], eu[0]) / (model.num_layers + 1)
    final_i = sum(ei[1:], ei[0]) / (model.num_layers + 1)
    return PropagatedEmbeddings(final_u, final_i)


def score(emb: PropagatedEmbeddings, u: int, i: int) -> float:
    """Dot product of the final user and item embeddings."""
    if not 0 <= u < emb.num_users:
        raise IndexError(f"user {u} outside [0, {emb.num_users})")
    if not 0 <= i < emb.num_items:
        raise IndexError(f"item {i} outside [0, {emb.num_items})")
    return float(emb.users[u] @ emb.items[i])


def top_k(
    emb: PropagatedEmbeddings, u: int, k: int, mask: set[int] | None = None
) -> list[int]:
    """The k highest-scoring unmasked items, ties broken by lower index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = emb.items @ emb.users[u]
    if mask:
        scores[list(mask)] = -np.inf
    ranked = np.argsort(-scores, kind="stable")
    n_candidates = emb.num_items - (len(mask) if mask else 0)
    return ranked[: min(k, max(n_candidates, 0))].tolist()


# snapshot io -----------------------------------------------------------------

def save_embeddings(emb: PropagatedEmbeddings, path, *,
                    num_layers: int, tau: float) -> None:
    """Versioned binary snapshot of final embeddings (float32 rows)."""
    header = EMB_MAGIC + struct.pack(
        "<IQQIId", EMB_VERSION, emb.num_users, emb.num_items, emb.dim,
        num_layers, tau,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(emb.users.astype("<f4").tobytes())
        fh.write(emb.items.astype("<f4").tobytes())


def load_embeddings(path) -> tuple[PropagatedEmbeddings, dict]:
    """Read a snapshot written by :func:`save_embeddings`.

    Returns the embeddings (as float64) and a metadata dict holding
    num_layers and tau recorded at save time.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMB_MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        version, m, n, d, num_layers, tau = struct.unpack("<IQQIId", fh.read(36))
        if version != EMB_VERSION:
            raise SnapshotFormatError(f"{path}: unsupported version {version}")
        payload = fh.read((m + n) * d * 4)
        if len(payload) != (m + n) * d * 4:
            raise SnapshotFormatError(f"{path}: truncated embedding section")
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    users = flat[: m * d].reshape(m, d)
    items = flat[m * d :].reshape(n, d)
    emb = PropagatedEmbeddings(users, items)
    return emb, {"num_layers": int(num_layers), "tau": float(tau)}


def write_embedding_tsv(emb: PropagatedEmbeddings, path) -> None:
    """Optional TSV export: ``id<TAB>v1,...,vd`` with u/i prefixed ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for prefix, table in (("u", emb.users), ("i", emb.items)):
            for idx, row in enumerate(table.tolist()):
                fh.write(f"{prefix}{idx}\t" + ",".join(repr(v) for v in row) + "\n")
