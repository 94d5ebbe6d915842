"""Relational graph convolution over the code ontology plus set pooling."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..ontology import OntologyGraph


class EncoderError(ValueError):
    pass


def init_uniform(rng: np.random.Generator, shape, fan: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan)
    return rng.uniform(-bound, bound, size=shape)


def rgcn_forward(adjacency, initial: np.ndarray, w_rel: Sequence[np.ndarray],
                 w_self: Sequence[np.ndarray]):
    """Run ``T = len(w_self)`` relational convolution layers.

    ``adjacency`` holds one row-normalised ``(n, n)`` matrix per relation,
    ``w_rel[k]`` has shape ``(R, d_in, d_out)`` and ``w_self[k]`` has shape
    ``(d_in, d_out)``; weights act on row vectors (``h @ W``).
    """
    if len(w_self) < 1 or len(w_rel) != len(w_self):
        raise EncoderError("need at least one layer and matching weight lists")
    h = np.asarray(initial, dtype=np.float64)
    cache = []
    for wr, ws in zip(w_rel, w_self):
        if h.shape[1] != ws.shape[0] or wr.shape[0] != len(adjacency):
            raise EncoderError(
                f"layer input width {h.shape[1]} does not match weights {ws.shape}")
        agg = [a @ h for a in adjacency]
        z = h @ ws
        for r, ah in enumerate(agg):
            z += ah @ wr[r]
        out = np.maximum(z, 0.0)
        if not np.all(np.isfinite(out)):
            raise EncoderError("non-finite activation in graph encoder")
        cache.append((h, agg, z))
        h = out
    return h, cache


def rgcn_backward(adjacency, dh_out: np.ndarray, w_rel, w_self, cache):
    """Gradients for :func:`rgcn_forward`: ``(d_initial, d_w_rel, d_w_self)``."""
    if not cache:
        raise EncoderError("missing forward cache")
    dw_rel = [None] * len(w_rel)
    dw_self = [None] * len(w_self)
    dh = dh_out
    for k in reversed(range(len(w_self))):
        h, agg, z = cache[k]
        dz = dh * (z > 0)
        dw_self[k] = h.T @ dz
        dwr = np.empty_like(w_rel[k])
        dh = dz @ w_self[k].T
        for r, (a, ah) in enumerate(zip(adjacency, agg)):
            dwr[r] = ah.T @ dz
            dh += a.T @ (dz @ w_rel[k][r].T)
        dw_rel[k] = dwr
    return dh, dw_rel, dw_self


def pool_codes(code_sets: Sequence[Sequence[int]], node_vecs: np.ndarray,
               leaf_mask: np.ndarray | None = None):
    """Sum and element-wise max over each code set, concatenated.

    Returns the ``(B, 2h)`` pooled matrix and a cache for
    :func:`pool_backward`.
    """
    h = node_vecs.shape[1]
    out = np.empty((len(code_sets), 2 * h))
    argmax = []
    for i, cs in enumerate(code_sets):
        idx = np.asarray(list(cs), dtype=np.int64)
        if idx.size == 0:
            raise EncoderError(f"empty code set at position {i}")
        if leaf_mask is not None and not np.all(leaf_mask[idx]):
            raise EncoderError(f"code set at position {i} contains a non-leaf node")
        rows = node_vecs[idx]
        out[i, :h] = rows.sum(axis=0)
        am = rows.argmax(axis=0)
        out[i, h:] = rows[am, np.arange(h)]
        argmax.append((idx, idx[am]))
    return out, (node_vecs.shape, argmax)


def pool_backward(d_pooled: np.ndarray, cache) -> np.ndarray:
    shape, argmax = cache
    h = shape[1]
    dh = np.zeros(shape)
    cols = np.arange(h)
    for i, (idx, winners) in enumerate(argmax):
        np.add.at(dh, idx, np.broadcast_to(d_pooled[i, :h], (len(idx), h)))
        np.add.at(dh, (winners, cols), d_pooled[i, h:])
    return dh


class GraphEncoder:
    """Code-view encoder: trainable node embeddings, ``n_layers`` relational
    convolutions and sum-max pooling of each code set.

    When ``seen_flags`` is set, a fixed 0/1 column is appended to the node
    embeddings before the first layer (the labeling scheme); the flag column
    itself is never trained.
    """

    def __init__(self, graph: OntologyGraph, hidden: int = 32, n_layers: int = 3,
                 labeling: bool = False, rng: np.random.Generator | None = None):
        if hidden < 1 or n_layers < 1:
            raise EncoderError("hidden and n_layers must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.graph = graph
        self.hidden = hidden
        self.n_layers = n_layers
        self.labeling = labeling
        self.seen_flags = np.zeros(graph.n_nodes) if labeling else None
        n, R = graph.n_nodes, graph.relation_count
        self.params = {"node_init": init_uniform(rng, (n, hidden), hidden)}
        for k in range(n_layers):
            d_in = hidden + 1 if (k == 0 and labeling) else hidden
            self.params[f"w_rel{k}"] = init_uniform(rng, (R, d_in, hidden), hidden)
            self.params[f"w_self{k}"] = init_uniform(rng, (d_in, hidden), hidden)
        self._leaf_mask = np.array([nd.is_leaf for nd in graph.nodes])

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden

    def set_seen(self, seen_flags: np.ndarray) -> None:
        if not self.labeling:
            raise EncoderError("encoder was built without the labeling column")
        flags = np.asarray(seen_flags, dtype=np.float64)
        if flags.shape != (self.graph.n_nodes,):
            raise EncoderError("seen flags must have one entry per node")
        self.seen_flags = flags

    def initial(self) -> np.ndarray:
        h0 = self.params["node_init"]
        if self.labeling:
            return np.hstack([h0, self.seen_flags[:, None]])
        return h0

    def _weights(self):
        w_rel = [self.params[f"w_rel{k}"] for k in range(self.n_layers)]
        w_self = [self.params[f"w_self{k}"] for k in range(self.n_layers)]
        return w_rel, w_self

    def node_embeddings(self):
        w_rel, w_self = self._weights()
        return rgcn_forward(self.graph.adjacency, self.initial(), w_rel, w_self)

    def forward(self, code_sets: Sequence[Sequence[int]]):
        """Encode code sets (lists of leaf node ids) into ``(B, 2h)``."""
        h_out, rcache = self.node_embeddings()
        pooled, pcache = pool_codes(code_sets, h_out, self._leaf_mask)
        return pooled, (rcache, pcache)

    def backward(self, d_out: np.ndarray, cache) -> dict[str, np.ndarray]:
        rcache, pcache = cache
        dh = pool_backward(d_out, pcache)
        w_rel, w_self = self._weights()
        d_init, dw_rel, dw_self = rgcn_backward(self.graph.adjacency, dh, w_rel, w_self, rcache)
        grads = {"node_init": d_init[:, :self.hidden].copy()}
        for k in range(self.n_layers):
            grads[f"w_rel{k}"] = dw_rel[k]
            grads[f"w_self{k}"] = dw_self[k]
        return grads
