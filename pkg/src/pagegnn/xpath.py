"""Node features from XPath units.

Each unit ``(tag, subscript)`` embeds as ``tag_table[tag] + sub_table[sub]``.
A node's unit embeddings are concatenated root to leaf into a fixed
``max_units * unit_dim`` vector (short paths are padded on the leaf side with
``(PAD_TAG, 0)``), then passed through LayerNorm, the activation and dropout.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import UnitOverflow

PAD_TAG = 0
UNK_TAG = 1


@dataclass
class XPathEmbedConfig:
    max_units: int = 15
    unit_dim: int = 16
    num_tags: int = 2
    num_subscripts: int = 64
    dropout: float = 0.1
    activation: str = "gelu"

    @property
    def width(self):
        return self.max_units * self.unit_dim


@dataclass
class TagVocabulary:
    tags: list[str]

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tags)}

    def __len__(self):
        return len(self.tags)

    def id(self, tag):
        return self.index.get(tag, UNK_TAG)

    def to_lines(self):
        return [f"{tag}\t{i}" for i, tag in enumerate(self.tags)]

    @classmethod
    def from_lines(cls, lines):
        pairs = [line.rsplit("\t", 1) for line in lines if line.strip()]
        tags = [None] * len(pairs)
        for tag, i in pairs:
            tags[int(i)] = tag
        if any(t is None for t in tags):
            raise ValueError("tag ids are not dense")
        return cls(tags)


def build_tag_vocab(records) -> TagVocabulary:
    """Tags of the records' nodes, most frequent first, ties alphabetical."""
    counts = Counter(units[-1][0] for r in records for units in r.nodes if units)
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return TagVocabulary(["<pad>", "<unk>", *ordered])


def units_to_ids(units, vocab: TagVocabulary, max_units: int, num_subscripts: int):
    if len(units) > max_units:
        raise UnitOverflow(f"{len(units)} units exceed the maximum of {max_units}")
    tag_ids = np.full(max_units, PAD_TAG, dtype=np.int64)
    sub_ids = np.zeros(max_units, dtype=np.int64)
    for k, (tag, sub) in enumerate(units):
        tag_ids[k] = vocab.id(tag)
        sub_ids[k] = min(int(sub), num_subscripts - 1)
    return tag_ids, sub_ids


def init_params(params: nn.ParameterStore, cfg: XPathEmbedConfig, rng, prefix="xpath"):
    params.add(f"{prefix}.tag_emb", rng.normal(0.0, 0.1, (cfg.num_tags, cfg.unit_dim)))
    params.add(f"{prefix}.sub_emb", rng.normal(0.0, 0.1, (cfg.num_subscripts, cfg.unit_dim)))
    params.add(f"{prefix}.ln_g", np.ones(cfg.width), decay=False)
    params.add(f"{prefix}.ln_b", np.zeros(cfg.width), decay=False)


def embed_nodes(tag_ids, sub_ids, params, cfg: XPathEmbedConfig, train=False, rng=None,
                prefix="xpath"):
    """Batched forward over ``(N, max_units)`` id matrices."""
    tag_tab = params[f"{prefix}.tag_emb"]
    sub_tab = params[f"{prefix}.sub_emb"]
    n = tag_ids.shape[0]
    h0 = (tag_tab[tag_ids] + sub_tab[sub_ids]).reshape(n, cfg.width)
    z, ln_cache = nn.layer_norm(h0, params[f"{prefix}.ln_g"], params[f"{prefix}.ln_b"])
    a, act_cache = nn.activation(z, cfg.activation)
    h, mask = nn.dropout(a, cfg.dropout, train, rng)
    return h, (tag_ids, sub_ids, ln_cache, act_cache, mask)


def embed_nodes_backward(dh, cache, params, cfg: XPathEmbedConfig, prefix="xpath"):
    tag_ids, sub_ids, ln_cache, act_cache, mask = cache
    da = nn.dropout_backward(dh, mask)
    dz = nn.activation_backward(da, act_cache)
    dh0, dg, db = nn.layer_norm_backward(dz, ln_cache)
    params.accumulate(f"{prefix}.ln_g", dg)
    params.accumulate(f"{prefix}.ln_b", db)
    du = dh0.reshape(-1, cfg.unit_dim)
    dtag = np.zeros_like(params[f"{prefix}.tag_emb"])
    dsub = np.zeros_like(params[f"{prefix}.sub_emb"])
    np.add.at(dtag, tag_ids.reshape(-1), du)
    np.add.at(dsub, sub_ids.reshape(-1), du)
    params.accumulate(f"{prefix}.tag_emb", dtag)
    params.accumulate(f"{prefix}.sub_emb", dsub)


def embed_xpath(units, params, cfg: XPathEmbedConfig, vocab: TagVocabulary, train=False,
                rng=None, prefix="xpath"):
    """Feature vector of a single node."""
    tag_ids, sub_ids = units_to_ids(units, vocab, cfg.max_units, cfg.num_subscripts)
    h, _ = embed_nodes(tag_ids[None], sub_ids[None], params, cfg, train, rng, prefix)
    return h[0]
