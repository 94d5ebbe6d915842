from __future__ import annotations

import numpy as np

from .graph import EncoderError, init_uniform


class MLPHead:
    """Binary classifier head: ``n_layers`` affine maps with ReLU and
    inverted dropout between them, ending in a single logit."""

    def __init__(self, in_dim: int, hidden: int = 32, n_layers: int = 2,
                 dropout: float = 0.0, rng: np.random.Generator | None = None):
        if n_layers < 1:
            raise EncoderError("an MLP head needs at least one layer")
        if not 0.0 <= dropout < 1.0:
            raise EncoderError(f"dropout must be in [0, 1), got {dropout}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim = in_dim
        self.n_layers = n_layers
        self.dropout = dropout
        sizes = [in_dim] + [hidden] * (n_layers - 1) + [1]
        self.params = {}
        for k in range(n_layers):
            self.params[f"w{k}"] = init_uniform(rng, (sizes[k], sizes[k + 1]), sizes[k])
            self.params[f"b{k}"] = np.zeros(sizes[k + 1])

    def forward(self, x: np.ndarray, train_mode: bool = False,
                rng: np.random.Generator | None = None):
        """Logits of shape ``(B,)`` and the cache for :meth:`backward`."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise EncoderError(f"expected input width {self.in_dim}, got {x.shape[1]}")
        cache = []
        h = x
        for k in range(self.n_layers):
            z = h @ self.params[f"w{k}"] + self.params[f"b{k}"]
            keep = None
            if k < self.n_layers - 1:
                a = np.maximum(z, 0.0)
                if train_mode and self.dropout > 0:
                    if rng is None:
                        raise EncoderError("dropout in train mode needs an rng")
                    keep = (rng.random(a.shape) >= self.dropout) / (1.0 - self.dropout)
                    a = a * keep
                cache.append((h, z, keep))
                h = a
            else:
                cache.append((h, z, None))
                h = z
        return h[:, 0], cache

    def backward(self, d_logit: np.ndarray, cache):
        """Parameter gradients and the gradient w.r.t. the input."""
        if not cache:
            raise EncoderError("missing forward cache")
        grads = {}
        d = np.asarray(d_logit, dtype=np.float64).reshape(-1, 1)
        for k in reversed(range(self.n_layers)):
            h, z, keep = cache[k]
            if k < self.n_layers - 1:
                if keep is not None:
                    d = d * keep
                d = d * (z > 0)
            grads[f"w{k}"] = h.T @ d
            grads[f"b{k}"] = d.sum(axis=0)
            d = d @ self.params[f"w{k}"].T
        return grads, d


def bce_with_logits(logits: np.ndarray, labels: np.ndarray):
    """Mean binary cross-entropy of ``sigmoid(logits)`` and its gradient."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    prob = 0.5 * (1.0 + np.tanh(0.5 * z))
    return float(loss), (prob - y) / z.size
