"""Two-stage recurrent text encoder.

Stage one runs an LSTM over each fixed-size token block; stage two runs an
LSTM over the sequence of block summaries. Both stages are bidirectional by
default and emit ``[h_forward_final, h_backward_final]``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import EncoderError, init_uniform

PAD = 0
UNK = 1
N_SPECIAL = 2


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def split_blocks(tokens: Sequence[int], b: int, pad=PAD) -> list[list]:
    """Chop ``tokens`` into ``ceil(len / b)`` blocks of length ``b``; the last
    block is right-padded. An empty sequence gives one all-pad block."""
    if b < 1:
        raise EncoderError(f"block size must be >= 1, got {b}")
    tokens = list(tokens)
    if not tokens:
        return [[pad] * b]
    blocks = [tokens[i:i + b] for i in range(0, len(tokens), b)]
    blocks[-1] = blocks[-1] + [pad] * (b - len(blocks[-1]))
    return blocks


def lstm_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, bias: np.ndarray,
                 mask: np.ndarray | None = None):
    """Single-direction LSTM over ``x`` of shape ``(B, T, D)``.

    Gate layout along the last axis is input, forget, output, candidate.
    Where ``mask[:, t]`` is 0 the state is carried over unchanged, so with
    valid steps first the result is the state after the last valid step.
    Returns the final hidden state ``(B, H)`` and a cache.
    """
    B, T, D = x.shape
    H = wh.shape[0]
    xw = (x.reshape(B * T, D) @ wx).reshape(B, T, 4 * H) + bias
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    steps = []
    for t in range(T):
        z = xw[:, t] + h @ wh
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        m = None if mask is None else mask[:, t:t + 1]
        steps.append((i, f, o, g, c, tc, h, m))
        if m is None:
            h, c = h_new, c_new
        else:
            h = m * h_new + (1 - m) * h
            c = m * c_new + (1 - m) * c
    return h, (x, wx, wh, steps)


def lstm_backward(dh_final: np.ndarray, cache):
    """Gradients ``(dx, dwx, dwh, dbias)`` for :func:`lstm_forward`."""
    x, wx, wh, steps = cache
    B, T, D = x.shape
    H = wh.shape[0]
    dxw = np.empty((B, T, 4 * H))
    dwh = np.zeros_like(wh)
    dh = dh_final.copy()
    dc = np.zeros_like(dh)
    for t in reversed(range(T)):
        i, f, o, g, c_prev, tc, h_prev, m = steps[t]
        if m is None:
            dh_new, dc_new = dh, dc
        else:
            dh_new, dc_new = m * dh, m * dc
        dc_tot = dc_new + dh_new * o * (1 - tc * tc)
        dz = np.empty((B, 4 * H))
        dz[:, :H] = dc_tot * g * i * (1 - i)
        dz[:, H:2 * H] = dc_tot * c_prev * f * (1 - f)
        dz[:, 2 * H:3 * H] = dh_new * tc * o * (1 - o)
        dz[:, 3 * H:] = dc_tot * i * (1 - g * g)
        dxw[:, t] = dz
        dwh += h_prev.T @ dz
        dh_prev = dz @ wh.T
        dc_prev = dc_tot * f
        if m is not None:
            dh_prev += (1 - m) * dh
            dc_prev += (1 - m) * dc
        dh, dc = dh_prev, dc_prev
    flat = dxw.reshape(B * T, 4 * H)
    dwx = x.reshape(B * T, D).T @ flat
    dx = (flat @ wx.T).reshape(B, T, D)
    return dx, dwx, dwh, flat.sum(axis=0)


def _reverse_valid(lengths: np.ndarray, T: int) -> np.ndarray:
    """Index map that reverses the first ``lengths[i]`` steps of each row
    and leaves the padding positions at the end."""
    t = np.arange(T)[None, :]
    L = lengths[:, None]
    return np.where(t < L, L - 1 - t, t)


class TextEncoder:
    """Block-wise bidirectional LSTM over token-id sequences.

    Token ids ``0..vocab_size-1`` are shifted past the two reserved rows of
    the embedding table (PAD and UNK). The PAD embedding is fixed at zero
    and receives no gradient.
    """

    def __init__(self, vocab_size: int, hidden: int = 32, block_size: int = 30,
                 embed_dim: int | None = None, bidirectional: bool = True,
                 rng: np.random.Generator | None = None):
        if vocab_size < 1 or hidden < 1:
            raise EncoderError("vocab_size and hidden must be positive")
        if block_size < 1:
            raise EncoderError(f"block size must be >= 1, got {block_size}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.vocab_size = vocab_size
        self.hidden = hidden
        self.block_size = block_size
        self.embed_dim = embed_dim or hidden
        self.bidirectional = bidirectional
        self.directions = ("f", "b") if bidirectional else ("f",)
        e, H = self.embed_dim, hidden
        emb = init_uniform(rng, (vocab_size + N_SPECIAL, e), e)
        emb[PAD] = 0.0
        self.params = {"embed": emb}
        s2_in = H * len(self.directions)
        for stage, d_in in (("s1", e), ("s2", s2_in)):
            for dname in self.directions:
                p = f"{stage}{dname}_"
                self.params[p + "wx"] = init_uniform(rng, (d_in, 4 * H), H)
                self.params[p + "wh"] = init_uniform(rng, (H, 4 * H), H)
                bias = init_uniform(rng, (4 * H,), H)
                bias[H:2 * H] += 1.0
                self.params[p + "b"] = bias

    @property
    def output_dim(self) -> int:
        return self.hidden * len(self.directions)

    def token_ids(self, tokens: Sequence[int]) -> list[int]:
        out = []
        for t in tokens:
            t = int(t)
            out.append(t + N_SPECIAL if 0 <= t < self.vocab_size else UNK)
        return out

    def _bi(self, stage: str, x: np.ndarray, lengths: np.ndarray | None):
        T = x.shape[1]
        mask = None
        if lengths is not None:
            mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)
        outs, caches = [], []
        for dname in self.directions:
            p = f"{stage}{dname}_"
            if dname == "f":
                xin = x
            elif lengths is None:
                xin = x[:, ::-1]
            else:
                xin = np.take_along_axis(x, _reverse_valid(lengths, T)[:, :, None], axis=1)
            h, cache = lstm_forward(xin, self.params[p + "wx"], self.params[p + "wh"],
                                    self.params[p + "b"], mask)
            outs.append(h)
            caches.append(cache)
        return np.hstack(outs), caches

    def _bi_backward(self, stage: str, d_out: np.ndarray, caches, lengths, grads):
        H = self.hidden
        dx = None
        for k, (dname, cache) in enumerate(zip(self.directions, caches)):
            p = f"{stage}{dname}_"
            dxin, dwx, dwh, db = lstm_backward(d_out[:, k * H:(k + 1) * H], cache)
            grads[p + "wx"] = dwx
            grads[p + "wh"] = dwh
            grads[p + "b"] = db
            if dname == "b":
                T = dxin.shape[1]
                if lengths is None:
                    dxin = dxin[:, ::-1]
                else:
                    # the valid-reversal map is an involution on each row
                    dxin = np.take_along_axis(dxin, _reverse_valid(lengths, T)[:, :, None], axis=1)
            dx = dxin if dx is None else dx + dxin
        return dx

    def forward(self, docs: Sequence[Sequence[int]]):
        """Encode a batch of token-id sequences into ``(B, output_dim)``."""
        b = self.block_size
        blocks, n_blocks = [], []
        for doc in docs:
            bl = split_blocks(self.token_ids(doc), b)
            blocks.extend(bl)
            n_blocks.append(len(bl))
        ids = np.asarray(blocks, dtype=np.int64).reshape(len(blocks), b)
        lengths = np.asarray(n_blocks, dtype=np.int64)
        x1 = self.params["embed"][ids]
        x1[ids == PAD] = 0.0
        l1, c1 = self._bi("s1", x1, None)

        B, K = len(docs), int(lengths.max()) if len(docs) else 0
        x2 = np.zeros((B, K, l1.shape[1]))
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        rows = np.repeat(np.arange(B), lengths)
        cols = np.arange(len(blocks)) - np.repeat(starts, lengths)
        x2[rows, cols] = l1
        out, c2 = self._bi("s2", x2, lengths)
        if not np.all(np.isfinite(out)):
            raise EncoderError("non-finite text embedding")
        return out, (ids, lengths, rows, cols, c1, c2)

    def backward(self, d_out: np.ndarray, cache) -> dict[str, np.ndarray]:
        if cache is None:
            raise EncoderError("missing forward cache")
        ids, lengths, rows, cols, c1, c2 = cache
        grads: dict[str, np.ndarray] = {}
        dx2 = self._bi_backward("s2", d_out, c2, lengths, grads)
        dl1 = dx2[rows, cols]
        dx1 = self._bi_backward("s1", dl1, c1, None, grads)
        demb = np.zeros_like(self.params["embed"])
        np.add.at(demb, ids.reshape(-1), dx1.reshape(-1, dx1.shape[2]))
        demb[PAD] = 0.0
        grads["embed"] = demb
        return grads
