"""Model and training hyperparameters, and the ``key=value`` config file."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .errors import ConfigError

MODES = ("fused", "text-only", "graph-only")


@dataclass
class ModelConfig:
    # text
    seq_len: int = 512
    text_dim: int = 128
    min_count: int = 1
    text_source: str = "builtin"
    text_embeddings: str = ""
    # structure
    unit_dim: int = 16
    max_units: int = 15
    num_subscripts: int = 64
    graph_dim: int = 128
    gnn_layers: int = 3
    aggregation: str = "mean"
    readout: str = "sum"
    activation: str = "gelu"
    dropout: float = 0.1
    bn_momentum: float = 0.1
    # head
    mode: str = "fused"
    mlp_hidden: int = 0
    # optimization
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 8
    epochs: int = 200
    seed: int = 0
    val_ratio: float = 0.1

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("seq_len", "text_dim", "unit_dim", "max_units", "num_subscripts",
                     "graph_dim", "gnn_layers", "min_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.readout not in ("sum", "max"):
            raise ConfigError(f"readout must be sum or max, got {self.readout!r}")
        if self.aggregation not in ("mean", "sum"):
            raise ConfigError(f"aggregation must be mean or sum, got {self.aggregation!r}")
        if self.activation not in ("gelu", "relu", "tanh", "identity"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.text_source not in ("builtin", "external"):
            raise ConfigError("text_source must be builtin or external")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (batch normalization)")
        if self.epochs < 0 or self.mlp_hidden < 0:
            raise ConfigError("epochs and mlp_hidden must be non-negative")
        if not 0.0 <= self.val_ratio < 1.0:
            raise ConfigError("val_ratio must be in [0, 1)")

    @property
    def uses_text(self):
        return self.mode != "graph-only"

    @property
    def uses_graph(self):
        return self.mode != "text-only"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


def _coerce(field, raw):
    kind = field.type if isinstance(field.type, type) else {"int": int, "float": float,
                                                            "str": str}[field.type]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{field.name}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> ModelConfig:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    by_name = {f.name: f for f in fields(ModelConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        if key not in by_name:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(by_name[key], raw.strip())
    return ModelConfig(**values)


def load_config(path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: ModelConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())
