"""Message passing over DOM graphs, graph readout and the pooler.

Several pages are encoded together as a disjoint union: node rows of all
pages stacked into one matrix, edges offset into the global index range, and
a segment array naming the page of every node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import nn
from .errors import EmptyGraph, ShapeMismatch


@dataclass
class GnnConfig:
    num_layers: int = 3
    hidden: int = 128
    aggregation: str = "mean"
    readout: str = "sum"
    activation: str = "gelu"
    bn_momentum: float = 0.1


@dataclass
class GraphBatch:
    features: np.ndarray
    edges: np.ndarray
    segments: np.ndarray
    num_graphs: int

    @classmethod
    def from_graphs(cls, graphs):
        """Disjoint union of ``(features, edges)`` pairs."""
        feats, edges, segs = [], [], []
        offset = 0
        for g, (x, e) in enumerate(graphs):
            x = np.asarray(x, dtype=np.float64)
            e = np.asarray(e, dtype=np.int64).reshape(-1, 2)
            feats.append(x)
            edges.append(e + offset)
            segs.append(np.full(len(x), g, dtype=np.int64))
            offset += len(x)
        return cls(
            features=np.concatenate(feats) if feats else np.zeros((0, 0)),
            edges=np.concatenate(edges) if edges else np.zeros((0, 2), np.int64),
            segments=np.concatenate(segs) if segs else np.zeros(0, np.int64),
            num_graphs=len(graphs),
        )


def propagation_matrix(edges, num_nodes, aggregation="mean"):
    """Sparse ``A`` with ``(A @ H)[v]`` aggregating ``v`` and its neighbours."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
        raise ShapeMismatch("edge endpoint outside the node range")
    # edges point src -> dst, so messages are gathered into the dst row
    rows = np.concatenate([edges[:, 1], np.arange(num_nodes)])
    cols = np.concatenate([edges[:, 0], np.arange(num_nodes)])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(num_nodes, num_nodes))
    if aggregation == "mean":
        deg = np.asarray(A.sum(axis=1)).ravel()
        A = sp.diags(1.0 / deg) @ A
    elif aggregation != "sum":
        raise ValueError(f"unknown aggregation {aggregation!r}")
    return A.tocsr()


def init_params(params: nn.ParameterStore, in_dim, cfg: GnnConfig, rng, prefix="gnn"):
    dims = [in_dim] + [cfg.hidden] * cfg.num_layers
    for layer in range(cfg.num_layers):
        params.add(f"{prefix}.{layer}.W", nn.glorot(rng, dims[layer], dims[layer + 1]))
        params.add(f"{prefix}.{layer}.b", np.zeros(dims[layer + 1]), decay=False)
    # no bias: the batch-norm shift right after it makes one redundant
    params.add(f"{prefix}.pool.W", nn.glorot(rng, cfg.hidden, cfg.hidden))
    params.add(f"{prefix}.pool.bn_g", np.ones(cfg.hidden), decay=False)
    params.add(f"{prefix}.pool.bn_b", np.zeros(cfg.hidden), decay=False)
    params.add_buffer(f"{prefix}.pool.bn_mean", np.zeros(cfg.hidden))
    params.add_buffer(f"{prefix}.pool.bn_var", np.ones(cfg.hidden))


def gnn_layer(H, A, W, b, activation="gelu"):
    """``sigma((A @ H) @ W + b)``; ``A`` already includes each node itself."""
    if H.shape[1] != W.shape[0]:
        raise ShapeMismatch(f"layer expects width {W.shape[0]}, got {H.shape[1]}")
    m = A @ H
    z, aff_cache = nn.affine(m, W, b)
    out, act_cache = nn.activation(z, activation)
    return out, (A, aff_cache, act_cache)


def gnn_layer_backward(dout, cache):
    A, aff_cache, act_cache = cache
    dz = nn.activation_backward(dout, act_cache)
    dm, dW, db = nn.affine_backward(dz, aff_cache)
    return A.T @ dm, dW, db


def encode_graph(H, A, params, cfg: GnnConfig, prefix="gnn"):
    caches = []
    for layer in range(cfg.num_layers):
        H, c = gnn_layer(H, A, params[f"{prefix}.{layer}.W"], params[f"{prefix}.{layer}.b"],
                         cfg.activation)
        caches.append(c)
    return H, caches


def encode_graph_backward(dH, caches, params, prefix="gnn"):
    for layer in reversed(range(len(caches))):
        dH, dW, db = gnn_layer_backward(dH, caches[layer])
        params.accumulate(f"{prefix}.{layer}.W", dW)
        params.accumulate(f"{prefix}.{layer}.b", db)
    return dH


def readout(H, segments, num_graphs=None, kind="sum"):
    """Per-graph sum or max of node rows."""
    segments = np.asarray(segments, dtype=np.int64)
    if num_graphs is None:
        num_graphs = int(segments.max()) + 1 if segments.size else 0
    counts = np.bincount(segments, minlength=num_graphs)
    if np.any(counts == 0):
        raise EmptyGraph(f"graph {int(np.argmin(counts))} has no nodes")
    if kind == "sum":
        S = sp.csr_matrix(
            (np.ones(len(segments)), (segments, np.arange(len(segments)))),
            shape=(num_graphs, len(segments)),
        )
        return S @ H, ("sum", S)
    if kind == "max":
        out = np.empty((num_graphs, H.shape[1]))
        arg = np.empty((num_graphs, H.shape[1]), dtype=np.int64)
        for g in range(num_graphs):
            idx = np.flatnonzero(segments == g)
            local = H[idx].argmax(axis=0)
            arg[g] = idx[local]
            out[g] = H[arg[g], np.arange(H.shape[1])]
        return out, ("max", (arg, H.shape))
    raise ValueError(f"unknown readout {kind!r}")


def readout_backward(dout, cache):
    kind, data = cache
    if kind == "sum":
        return data.T @ dout
    arg, shape = data
    dH = np.zeros(shape)
    cols = np.broadcast_to(np.arange(shape[1]), arg.shape)
    np.add.at(dH, (arg, cols), dout)
    return dH


def pooler(x, params, cfg: GnnConfig, train=False, update_stats=True, prefix="gnn.pool"):
    """Linear map, batch normalization over the graphs, activation."""
    W = params[f"{prefix}.W"]
    z, aff_cache = nn.affine(x, W, np.zeros(W.shape[1]))
    y, bn_cache = nn.batch_norm(
        z, params[f"{prefix}.bn_g"], params[f"{prefix}.bn_b"],
        params[f"{prefix}.bn_mean"], params[f"{prefix}.bn_var"],
        train=train, momentum=cfg.bn_momentum, update_stats=update_stats,
    )
    out, act_cache = nn.activation(y, cfg.activation)
    return out, (aff_cache, bn_cache, act_cache)


def pooler_backward(dout, cache, params, prefix="gnn.pool"):
    aff_cache, bn_cache, act_cache = cache
    dy = nn.activation_backward(dout, act_cache)
    dz, dg, db = nn.batch_norm_backward(dy, bn_cache)
    params.accumulate(f"{prefix}.bn_g", dg)
    params.accumulate(f"{prefix}.bn_b", db)
    dx, dW, _ = nn.affine_backward(dz, aff_cache)
    params.accumulate(f"{prefix}.W", dW)
    return dx
