"""Finite-difference checks of every hand-written backward pass at tiny sizes.

Each check builds a scalar loss ``sum(R * output)`` with a fixed random ``R``
(or the BCE loss for the classifier head) and compares the analytic
gradients with central differences.
"""

from __future__ import annotations

import numpy as np

from .dcca import dcca_gradient
from .encoders import GraphEncoder, MLPHead, TextEncoder, bce_with_logits
from .numeric import grad_check, grad_check_params, rng_stream
from .ontology import build_ontology, random_codes


def check_dcca(seed: int = 0, n: int = 40, d_c: int = 6, d_a: int = 5, L: int = 3) -> float:
    rng = rng_stream(seed, 100)
    shared = rng.standard_normal((n, 2))
    m_c = np.hstack([shared, rng.standard_normal((n, d_c - 2))]) @ rng.standard_normal((d_c, d_c))
    m_a = np.hstack([shared, rng.standard_normal((n, d_a - 2))]) @ rng.standard_normal((d_a, d_a))
    _, g_c, g_a = dcca_gradient(m_c, m_a, L=L)
    err_c = grad_check(lambda x: dcca_gradient(x, m_a, L=L)[0], m_c, g_c)
    err_a = grad_check(lambda x: dcca_gradient(m_c, x, L=L)[0], m_a, g_a)
    return max(err_c, err_a)


def check_graph_encoder(seed: int = 0, jumps: bool = True, labeling: bool = True) -> float:
    g = build_ontology(random_codes([3, 3, 2], seed), jumps=jumps)
    rng = rng_stream(seed, 101)
    enc = GraphEncoder(g, hidden=3, n_layers=2, labeling=labeling, rng=rng)
    if labeling:
        enc.set_seen((rng.random(g.n_nodes) < 0.5).astype(float))
    leaves = list(g.leaves)
    code_sets = [leaves[:3], leaves[-3:], [leaves[-1]], leaves[1::2]]
    r = rng.standard_normal((len(code_sets), enc.output_dim))

    def loss():
        return float(np.sum(r * enc.forward(code_sets)[0]))

    out, cache = enc.forward(code_sets)
    grads = enc.backward(r, cache)
    return max(grad_check_params(loss, enc.params, grads).values())


def check_text_encoder(seed: int = 0, bidirectional: bool = True) -> float:
    rng = rng_stream(seed, 102)
    enc = TextEncoder(vocab_size=10, hidden=3, block_size=3, embed_dim=4,
                      bidirectional=bidirectional, rng=rng)
    for k, v in enc.params.items():
        if k.endswith("b"):
            v += 0.1 * rng.standard_normal(v.shape)
    docs = [list(rng.integers(0, 10, size=m)) for m in (7, 2, 9, 4)]
    r = rng.standard_normal((len(docs), enc.output_dim))

    def loss():
        return float(np.sum(r * enc.forward(docs)[0]))

    out, cache = enc.forward(docs)
    grads = enc.backward(r, cache)
    return max(grad_check_params(loss, enc.params, grads).values())


def check_mlp_head(seed: int = 0, dropout: float = 0.3) -> float:
    rng = rng_stream(seed, 103)
    head = MLPHead(5, hidden=4, n_layers=3, dropout=dropout, rng=rng)
    # non-zero biases keep pre-activations away from the ReLU kink
    for k, v in head.params.items():
        if k.startswith("b"):
            v += rng.uniform(0.2, 0.5, v.shape) * rng.choice([-1, 1], v.shape)
    x = rng.standard_normal((6, 5))
    y = (rng.random(6) < 0.5).astype(float)

    def loss():
        logits, _ = head.forward(x, True, rng_stream(seed, 104))
        return bce_with_logits(logits, y)[0]

    logits, cache = head.forward(x, True, rng_stream(seed, 104))
    grads, dx = head.backward(bce_with_logits(logits, y)[1], cache)

    def loss_x(z):
        return bce_with_logits(head.forward(z, True, rng_stream(seed, 104))[0], y)[0]

    errs = grad_check_params(loss, head.params, grads)
    errs["input"] = grad_check(loss_x, x, dx)
    return max(errs.values())


def run_gradchecks(seed: int = 0) -> dict[str, float]:
    """Max relative error per block, keyed by block name."""
    return {
        "dcca": check_dcca(seed),
        "graph_encoder": check_graph_encoder(seed),
        "graph_encoder_no_jumps": check_graph_encoder(seed, jumps=False, labeling=False),
        "text_encoder": check_text_encoder(seed),
        "text_encoder_unidirectional": check_text_encoder(seed, bidirectional=False),
        "mlp_head": check_mlp_head(seed),
    }
