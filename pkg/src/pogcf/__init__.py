"""Multi-behavior graph collaborative filtering.

Merges per-behavior interaction logs into one rank-weighted bipartite
graph, trains a single embedding per user/item with weighted propagation
and rank-aware pairwise sampling, and evaluates full-ranking top-K
recommendation per behavior.
"""

from .config import RunConfig
from .errors import PogcfError
from .evaluation import EvalReport, SplitSpec, evaluate, ndcg_at_k, recall_at_k, split
from .graph import (
    CombinationGraph,
    InteractionLog,
    PogGraph,
    build_pog,
    filter_min_interactions,
    load_pog,
    merge_logs,
    save_pog,
)
from .model import (
    EmbeddingModel,
    PropagatedEmbeddings,
    init_embeddings,
    load_embeddings,
    propagate,
    save_embeddings,
    score,
    top_k,
)
from .order import (
    BehaviorOrder,
    CombinationRank,
    Comparison,
    build_rank_function,
    compare_combinations,
    rank_count_vector,
    validate_order,
)
from .sampling import CombinationDistribution, TrainTriple, build_distribution, sample_batch
from .training import TrainConfig, TrainResult, mtl_bpr_loss, pobpr_loss, train

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "PogcfError",
    "EvalReport",
    "SplitSpec",
    "evaluate",
    "ndcg_at_k",
    "recall_at_k",
    "split",
    "CombinationGraph",
    "InteractionLog",
    "PogGraph",
    "build_pog",
    "filter_min_interactions",
    "load_pog",
    "merge_logs",
    "save_pog",
    "EmbeddingModel",
    "PropagatedEmbeddings",
    "init_embeddings",
    "load_embeddings",
    "propagate",
    "save_embeddings",
    "score",
    "top_k",
    "BehaviorOrder",
    "CombinationRank",
    "Comparison",
    "build_rank_function",
    "compare_combinations",
    "rank_count_vector",
    "validate_order",
    "CombinationDistribution",
    "TrainTriple",
    "build_distribution",
    "sample_batch",
    "TrainConfig",
    "TrainResult",
    "mtl_bpr_loss",
    "pobpr_loss",
    "train",
    "__version__",
]
