"""The full page classifier: text path, structure path, fusion, MLP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import graph, head, nn, text, xpath
from .config import ModelConfig
from .errors import DimMismatch, UnknownLabel


@dataclass
class Batch:
    num_pages: int
    ids: np.ndarray | None
    mask_len: np.ndarray | None
    text_vectors: np.ndarray | None
    tag_ids: np.ndarray | None
    sub_ids: np.ndarray | None
    prop: sp.csr_matrix | None
    segments: np.ndarray | None
    targets: np.ndarray | None


class Model:
    """Parameters plus everything needed to turn records into inputs.

    ``labels`` lists class names in id order; ``vocab`` and ``tags`` map
    tokens and tag names to embedding rows.
    """

    def __init__(self, config: ModelConfig, labels, vocab: text.Vocabulary,
                 tags: xpath.TagVocabulary, params: nn.ParameterStore | None = None):
        self.config = config
        self.labels = list(labels)
        self.vocab = vocab
        self.tags = tags
        self.params = params if params is not None else nn.ParameterStore()

    @classmethod
    def initialize(cls, config: ModelConfig, labels, vocab, tags, rng):
        model = cls(config, labels, vocab, tags)
        p = model.params
        if config.uses_text and config.text_source == "builtin":
            p.add("tok_emb", rng.normal(0.0, 0.1, (len(vocab), config.text_dim)))
            p.add("text_W", nn.glorot(rng, config.text_dim, config.text_dim))
            p.add("text_b", np.zeros(config.text_dim), decay=False)
        if config.uses_graph:
            xpath.init_params(p, model.xpath_config, rng)
            graph.init_params(p, model.xpath_config.width, model.gnn_config, rng)
        head.init_params(p, model.fused_width, len(model.labels), rng,
                         hidden=config.mlp_hidden or None)
        return model

    @property
    def xpath_config(self):
        c = self.config
        return xpath.XPathEmbedConfig(
            max_units=c.max_units, unit_dim=c.unit_dim, num_tags=len(self.tags),
            num_subscripts=c.num_subscripts, dropout=c.dropout, activation=c.activation,
        )

    @property
    def gnn_config(self):
        c = self.config
        return graph.GnnConfig(
            num_layers=c.gnn_layers, hidden=c.graph_dim, aggregation=c.aggregation,
            readout=c.readout, activation=c.activation, bn_momentum=c.bn_momentum,
        )

    @property
    def fused_width(self):
        c = self.config
        return c.text_dim * c.uses_text + c.graph_dim * c.uses_graph

    def check_dims(self):
        """Raise ``DimMismatch`` unless the stored arrays fit the config."""
        ref = Model.initialize(self.config, self.labels, self.vocab, self.tags,
                               np.random.default_rng(0)).params
        for name in set(ref.values) | set(ref.buffers) | set(self.params.values) | set(self.params.buffers):
            if name not in ref or name not in self.params:
                raise DimMismatch(f"parameter {name!r} does not match the model config")
            if ref[name].shape != self.params[name].shape:
                raise DimMismatch(f"parameter {name!r} has shape {self.params[name].shape}, "
                                  f"config implies {ref[name].shape}")

    def label_id(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} is not one of {self.labels}") from None

    # inputs ----------------------------------------------------------------

    def make_batch(self, records, text_vectors=None, with_targets=True) -> Batch:
        c = self.config
        ids = mask_len = tvec = tag_ids = sub_ids = prop = segments = None
        if c.uses_text:
            if c.text_source == "external":
                if text_vectors is None:
                    raise DimMismatch("model expects external text vectors")
                tvec = np.stack([np.asarray(text_vectors[r.id], dtype=np.float64) for r in records])
                if tvec.shape[1] != c.text_dim:
                    raise DimMismatch(f"text vectors have width {tvec.shape[1]}, model expects {c.text_dim}")
            else:
                ids, mask_len = text.encode_batch([r.tokens for r in records], self.vocab, c.seq_len)
        if c.uses_graph:
            xc = self.xpath_config
            tags, subs, edges, segs = [], [], [], []
            offset = 0
            for g, r in enumerate(records):
                for units in r.nodes:
                    t, s = xpath.units_to_ids(units[-xc.max_units:], self.tags, xc.max_units,
                                              xc.num_subscripts)
                    tags.append(t)
                    subs.append(s)
                e = np.asarray(r.edges, dtype=np.int64).reshape(-1, 2)
                edges.append(e + offset)
                segs.append(np.full(len(r.nodes), g, dtype=np.int64))
                offset += len(r.nodes)
            tag_ids = np.stack(tags)
            sub_ids = np.stack(subs)
            prop = graph.propagation_matrix(np.concatenate(edges), offset, c.aggregation)
            segments = np.concatenate(segs)
        targets = None
        if with_targets:
            targets = np.array([self.label_id(r.label) for r in records], dtype=np.int64)
        return Batch(len(records), ids, mask_len, tvec, tag_ids, sub_ids, prop, segments, targets)

    # forward / backward ----------------------------------------------------

    def forward(self, batch: Batch, train=False, rng=None, update_stats=True):
        c = self.config
        p = self.params
        cache = {}
        x_text = x_graph = None
        if c.uses_text:
            if batch.text_vectors is not None:
                x_text = batch.text_vectors
            else:
                mean, cache["mean"] = text.masked_mean_forward(p["tok_emb"], batch.ids, batch.mask_len)
                x_text, cache["text_aff"] = nn.affine(mean, p["text_W"], p["text_b"])
        if c.uses_graph:
            gc = self.gnn_config
            H, cache["xpath"] = xpath.embed_nodes(batch.tag_ids, batch.sub_ids, p,
                                                  self.xpath_config, train, rng)
            H, cache["gnn"] = graph.encode_graph(H, batch.prop, p, gc)
            R, cache["readout"] = graph.readout(H, batch.segments, batch.num_pages, gc.readout)
            x_graph, cache["pool"] = graph.pooler(R, p, gc, train, update_stats)
        fused, cache["fuse"] = head.fuse(x_text, x_graph)
        logits, cache["mlp"] = head.mlp(fused, p, c.activation)
        return logits, cache

    def backward(self, dlogits, cache):
        p = self.params
        dfused = head.mlp_backward(dlogits, cache["mlp"], p)
        dtext, dgraph = head.fuse_backward(dfused, cache["fuse"])
        if dtext is not None and "text_aff" in cache:
            dmean, dW, db = nn.affine_backward(dtext, cache["text_aff"])
            p.accumulate("text_W", dW)
            p.accumulate("text_b", db)
            p.accumulate("tok_emb", text.masked_mean_backward(dmean, cache["mean"]))
        if dgraph is not None:
            dR = graph.pooler_backward(dgraph, cache["pool"], p)
            dH = graph.readout_backward(dR, cache["readout"])
            dH = graph.encode_graph_backward(dH, cache["gnn"], p)
            xpath.embed_nodes_backward(dH, cache["xpath"], p, self.xpath_config)

    def loss_and_grad(self, batch: Batch, train=True, rng=None, update_stats=True):
        """Mean cross-entropy over the batch; gradients land in ``params.grads``."""
        self.params.zero_grad()
        logits, cache = self.forward(batch, train, rng, update_stats)
        loss, dlogits = nn.softmax_cross_entropy(logits, batch.targets)
        self.backward(dlogits, cache)
        return loss, logits

    def predict_proba(self, records, text_vectors=None, batch_size=32):
        out = []
        for start in range(0, len(records), batch_size):
            chunk = records[start:start + batch_size]
            batch = self.make_batch(chunk, text_vectors, with_targets=False)
            logits, _ = self.forward(batch, train=False)
            out.append(nn.softmax(logits))
        if not out:
            return np.zeros((0, len(self.labels)))
        return np.concatenate(out)
