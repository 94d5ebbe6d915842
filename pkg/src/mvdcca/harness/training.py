"""DCCA pre-training and per-view task fine-tuning."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dcca import DccaProjection, compute_projections, dcca_gradient, total_correlation
from ..encoders import GraphEncoder, MLPHead, TextEncoder, bce_with_logits
from ..numeric import rng_stream
from ..ontology import OntologyGraph
from .config import ExperimentConfig
from .metrics import auroc

log = logging.getLogger(__name__)

TEXT_CHUNK = 512


class TrainingError(RuntimeError):
    pass


class Adam:
    """Adam over a list of parameter dicts, updated in place."""

    def __init__(self, groups: Sequence[dict], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.groups = list(groups)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [{k: np.zeros_like(v) for k, v in g.items()} for g in self.groups]
        self.v = [{k: np.zeros_like(v) for k, v in g.items()} for g in self.groups]

    def step(self, grads: Sequence[dict]) -> None:
        """One descent step; ``grads[i]`` matches ``groups[i]`` by key."""
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for g, m, v, d in zip(self.groups, self.m, self.v, grads):
            for k, grad in d.items():
                m[k] *= self.beta1
                m[k] += (1 - self.beta1) * grad
                v[k] *= self.beta2
                v[k] += (1 - self.beta2) * grad * grad
                g[k] -= self.lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + self.eps)


def snapshot(*param_dicts):
    return [{k: v.copy() for k, v in p.items()} for p in param_dicts]


def restore(snap, *param_dicts) -> None:
    for saved, p in zip(snap, param_dicts):
        for k, v in saved.items():
            p[k][...] = v


def make_encoders(graph: OntologyGraph, cfg: ExperimentConfig, vocab_size: int, seed: int,
                  labeling: bool = False) -> tuple[GraphEncoder, TextEncoder]:
    ge = GraphEncoder(graph, cfg.hidden, cfg.rgcn_layers, labeling, rng_stream(seed, 10))
    te = TextEncoder(vocab_size, cfg.hidden, cfg.block_size,
                     bidirectional=cfg.bidirectional, rng=rng_stream(seed, 11))
    return ge, te


def encode_text(te: TextEncoder, docs) -> np.ndarray:
    outs = [te.forward(docs[i:i + TEXT_CHUNK])[0] for i in range(0, len(docs), TEXT_CHUNK)]
    return np.vstack(outs) if outs else np.zeros((0, te.output_dim))


def encode_codes(ge: GraphEncoder, code_sets) -> np.ndarray:
    return ge.forward(code_sets)[0]


@dataclass
class DccaResult:
    graph_encoder: GraphEncoder
    text_encoder: TextEncoder
    projection: DccaProjection
    best_epoch: int
    best_corr: float
    history: list[float] = field(default_factory=list)


def _batches(n: int, batch: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return np.array_split(perm, max(1, n // batch))


def train_dcca(train, valid, cfg: ExperimentConfig, seed: int, graph_encoder: GraphEncoder,
               text_encoder: TextEncoder) -> DccaResult:
    """Maximise the total correlation of the two encoders on ``train``.

    ``train`` and ``valid`` are ``(code_sets, token_lists)`` pairs. The
    epoch with the best validation correlation is kept, and the frozen
    projection is solved on the full training set through that snapshot.
    """
    cs, tk = train
    vcs, vtk = valid
    n = len(cs)
    if n < 2 or len(vcs) < 2:
        raise TrainingError("DCCA needs at least two training and two validation records")
    batch = cfg.dcca_batch
    if batch > n:
        log.warning("DCCA batch size %d exceeds training size %d; clamping", batch, n)
        batch = n
    ge, te = graph_encoder, text_encoder
    opt = Adam([ge.params, te.params], cfg.dcca_lr)
    best_corr, best_epoch, best = -np.inf, -1, None
    history = []
    for epoch in range(cfg.dcca_epochs):
        for b, idx in enumerate(_batches(n, batch, rng_stream(seed, 12, epoch))):
            gc, c_cache = ge.forward([cs[i] for i in idx])
            ga, a_cache = te.forward([tk[i] for i in idx])
            corr, d_c, d_a = dcca_gradient(gc, ga, cfg.r_c, cfg.r_a, cfg.L, cfg.center)
            if not (np.isfinite(corr) and np.all(np.isfinite(d_c)) and np.all(np.isfinite(d_a))):
                raise TrainingError(f"DCCA diverged at epoch {epoch}, batch {b}")
            # ascend the correlation
            opt.step([ge.backward(-d_c, c_cache), te.backward(-d_a, a_cache)])
        vcorr = total_correlation(encode_codes(ge, vcs), encode_text(te, vtk),
                                  cfg.r_c, cfg.r_a, cfg.L, cfg.center)
        if not np.isfinite(vcorr):
            raise TrainingError(f"DCCA diverged at epoch {epoch} (validation)")
        history.append(vcorr)
        log.info("dcca epoch %d: valid corr %.4f", epoch, vcorr)
        if vcorr > best_corr:
            best_corr, best_epoch, best = vcorr, epoch, snapshot(ge.params, te.params)
        elif epoch - best_epoch >= cfg.patience:
            break
    restore(best, ge.params, te.params)
    proj = compute_projections(encode_codes(ge, cs), encode_text(te, tk),
                               cfg.r_c, cfg.r_a, cfg.L, cfg.center)
    return DccaResult(ge, te, proj, best_epoch, float(best_corr), history)


class ViewModel:
    """One inference path: encoder(s), optional frozen projection and an MLP
    head. ``view`` is ``'code'``, ``'text'`` or ``'both'``; inputs are code
    id sets, token lists, or a ``(code_sets, token_lists)`` pair."""

    def __init__(self, view: str, graph_encoder: GraphEncoder | None,
                 text_encoder: TextEncoder | None, head: MLPHead,
                 projection: DccaProjection | None = None):
        self.view = view
        self.graph_encoder = graph_encoder
        self.text_encoder = text_encoder
        self.head = head
        self.projection = projection

    @staticmethod
    def feature_dim(view, graph_encoder, text_encoder, projection) -> int:
        if projection is not None:
            return projection.L * (2 if view == "both" else 1)
        dims = {"code": graph_encoder.output_dim if graph_encoder else 0,
                "text": text_encoder.output_dim if text_encoder else 0}
        return dims["code"] + dims["text"] if view == "both" else dims[view]

    def _encoders(self):
        if self.view == "code":
            return [("code", self.graph_encoder)]
        if self.view == "text":
            return [("text", self.text_encoder)]
        return [("code", self.graph_encoder), ("text", self.text_encoder)]

    def _parts(self, inputs):
        xs = inputs if self.view == "both" else (inputs,)
        return [(part, enc, x) for (part, enc), x in zip(self._encoders(), xs)]

    def _weights(self, part):
        p = self.projection
        return (p.U, p.mean_c) if part == "code" else (p.V, p.mean_a)

    def forward(self, inputs, train_mode=False, rng=None):
        feats, caches = [], []
        for part, enc, x in self._parts(inputs):
            g, cache = enc.forward(x)
            if self.projection is not None:
                w, mu = self._weights(part)
                g = (g - mu) @ w
            feats.append(g)
            caches.append(cache)
        z = np.hstack(feats) if len(feats) > 1 else feats[0]
        logits, hcache = self.head.forward(z, train_mode, rng)
        return logits, (caches, [f.shape[1] for f in feats], hcache)

    def backward(self, d_logits, cache) -> list[dict]:
        caches, widths, hcache = cache
        head_grads, dz = self.head.backward(d_logits, hcache)
        grads = [head_grads]
        off = 0
        for (part, enc), c, w in zip(self._encoders(), caches, widths):
            dg = dz[:, off:off + w]
            off += w
            if self.projection is not None:
                dg = dg @ self._weights(part)[0].T
            grads.append(enc.backward(dg, c))
        return grads

    def param_groups(self) -> list[dict]:
        groups = [self.head.params]
        groups.extend(enc.params for _, enc in self._encoders())
        return groups

    def decision_function(self, inputs) -> np.ndarray:
        n = len(inputs[0]) if self.view == "both" else len(inputs)
        out = []
        for i in range(0, n, TEXT_CHUNK):
            chunk = take(self.view, inputs, np.arange(i, min(n, i + TEXT_CHUNK)))
            out.append(self.forward(chunk)[0])
        return np.concatenate(out) if out else np.zeros(0)

    def predict_proba(self, inputs) -> np.ndarray:
        z = self.decision_function(inputs)
        return 0.5 * (1.0 + np.tanh(0.5 * z))


def take(view: str, inputs, idx):
    if view == "both":
        cs, tk = inputs
        return [cs[i] for i in idx], [tk[i] for i in idx]
    return [inputs[i] for i in idx]


def _valid_score(model: ViewModel, inputs, labels) -> float:
    logits = model.decision_function(inputs)
    if labels.min() == labels.max():
        return -bce_with_logits(logits, labels)[0]
    return auroc(logits, labels)


@dataclass
class FinetuneResult:
    model: ViewModel
    best_epoch: int
    best_score: float
    history: list[float] = field(default_factory=list)


def finetune_view(model: ViewModel, train, y_train, valid, y_valid,
                  cfg: ExperimentConfig, seed: int) -> FinetuneResult:
    """End-to-end BCE training of a view's encoder(s) and head.

    The projection (if any) stays frozen. Early stopping tracks validation
    AUROC (negative validation loss when the validation labels are all one
    class) and the best snapshot is restored.
    """
    y_train = np.asarray(y_train)
    y_valid = np.asarray(y_valid)
    n = len(y_train)
    if n < 1 or len(y_valid) < 1:
        raise TrainingError("fine-tuning needs training and validation records")
    batch = cfg.task_batch
    if batch > n:
        log.warning("task batch size %d exceeds training size %d; clamping", batch, n)
        batch = n
    groups = model.param_groups()
    opt = Adam(groups, cfg.task_lr)
    best_score, best_epoch, best = -np.inf, -1, None
    history = []
    for epoch in range(cfg.task_epochs):
        drop_rng = rng_stream(seed, 13, epoch)
        for b, idx in enumerate(_batches(n, batch, rng_stream(seed, 14, epoch))):
            logits, cache = model.forward(take(model.view, train, idx), True, drop_rng)
            loss, d = bce_with_logits(logits, y_train[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"fine-tuning diverged at epoch {epoch}, batch {b}")
            opt.step(model.backward(d, cache))
        score = _valid_score(model, valid, y_valid)
        history.append(score)
        log.info("finetune %s epoch %d: valid %.4f", model.view, epoch, score)
        if score > best_score:
            best_score, best_epoch, best = score, epoch, snapshot(*groups)
        elif epoch - best_epoch >= cfg.patience:
            break
    restore(best, *groups)
    return FinetuneResult(model, best_epoch, float(best_score), history)
