"""Experiment configuration: a flat ``key = value`` file plus overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Any, Mapping

from ..artifacts import config_hash
from ..data import read_key_values


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # encoders
    hidden: int = 32
    rgcn_layers: int = 3
    jumps: bool = True
    block_size: int = 30
    bidirectional: bool = True
    mlp_layers: int = 2
    mlp_dropout: float = 0.0
    # DCCA phase
    dcca_lr: float = 1e-3
    dcca_batch: int = 1024
    dcca_epochs: int = 100
    L: int = 20
    r_c: float = 1e-4
    r_a: float = 1e-4
    center: bool = True
    # task fine-tuning
    task_lr: float = 1e-3
    task_batch: int = 256
    task_epochs: int = 100
    patience: int = 10
    # experiment protocol
    task: str = "synthetic"
    views: str = "text,code,both"
    seeds: str = "0"
    k: int = 10
    folds: str = "all"
    labeling_inherit: bool = False
    record_time: bool = False
    # inputs
    data: str = ""
    ontology: str = ""
    vocab_size: int = 0

    def __post_init__(self):
        for name in ("hidden", "rgcn_layers", "block_size", "mlp_layers", "dcca_batch",
                     "dcca_epochs", "L", "task_batch", "task_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("dcca_lr", "task_lr"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.r_c < 0 or self.r_a < 0:
            raise ConfigError("regularizers must be non-negative")
        if not 0.0 <= self.mlp_dropout < 1.0:
            raise ConfigError("mlp_dropout must be in [0, 1)")
        bad = set(self.view_list) - {"text", "code", "both"}
        if bad:
            raise ConfigError(f"unknown views {sorted(bad)}")

    @property
    def view_list(self) -> list[str]:
        return [v.strip() for v in self.views.split(",") if v.strip()]

    @property
    def seed_list(self) -> list[int]:
        return [int(s) for s in self.seeds.split(",") if s.strip()]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        return config_hash(self.as_dict())

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(name: str, ftype, raw):
    if not isinstance(raw, str):
        return raw
    t = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))
    try:
        if t == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def config_from_mapping(values: Mapping[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    changes = {}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _coerce(key, types[key], raw)
    return base.replace(**changes)


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    values: dict[str, Any] = dict(read_key_values(path)) if path else {}
    values.update(overrides or {})
    return config_from_mapping(values)
