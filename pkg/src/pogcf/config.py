"""Run configuration: YAML file + flag overrides, stable hashing, substreams.

A run is fully described by one RunConfig; its hash keys manifest entries
and report metadata. Hashing covers everything that can influence results
(the output directory is excluded).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError
from .evaluation import SplitSpec
from .training import TrainConfig


@dataclass
class RunConfig:
    """Everything needed to build, train, and evaluate one run."""

    data: dict[str, str] = field(default_factory=dict)
    levels: list[list[str]] = field(default_factory=list)
    dataset_name: str = ""
    has_header: bool = False
    min_interactions: int = 10
    rank_universe: str = "all-subsets"  # all-subsets | observed

    tau: float = 1.0
    gamma: float = 1.0
    dim: int = 64
    layers: int = 2
    init_sigma: float = 0.1

    lr: float = 1e-3
    l2_reg: float = 1e-4
    epochs: int = 100
    batch_size: int = 1024
    sampler_mode: str = "pobpr"
    mtl_weights: dict[str, float] | None = None

    split_mode: str = "random"
    test_fraction: float = 0.2
    val_fraction: float = 0.0
    eval_every: int = 5
    patience: int = 10

    ks: list[int] = field(default_factory=lambda: [20])
    seed: int = 0
    deterministic: bool = True
    out_dir: str = "runs"

    tau_grid: list[float] | None = None
    gamma_grid: list[float] | None = None
    lr_grid: list[float] | None = None
    reg_grid: list[float] | None = None
    grid_cap: int = 64

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigError("tau must be non-negative")
        if self.rank_universe not in ("all-subsets", "observed"):
            raise ConfigError(f"unknown rank_universe {self.rank_universe!r}")
        if self.min_interactions < 0:
            raise ConfigError("min_interactions must be non-negative")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("ks must be a non-empty list of positive integers")
        for name in ("tau_grid", "gamma_grid", "lr_grid", "reg_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ConfigError(f"{name} must be non-empty when given")

    # derived views ----------------------------------------------------------

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.split_mode, self.test_fraction, self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, l2_reg=self.l2_reg, epochs=self.epochs,
            batch_size=self.batch_size, gamma=self.gamma, seed=self.seed,
            sampler_mode=self.sampler_mode, mtl_weights=self.mtl_weights,
            eval_every=self.eval_every, patience=self.patience,
            deterministic=self.deterministic,
        )

    # serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
        return cls.from_dict(raw)

    def write_yaml(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)

    def with_overrides(self, **overrides) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(d)

    def config_hash(self) -> str:
        """Stable sha256 over everything that affects results."""
        d = self.to_dict()
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()
