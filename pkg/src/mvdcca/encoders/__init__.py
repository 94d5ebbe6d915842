from .graph import (EncoderError, GraphEncoder, pool_backward, pool_codes,
                    rgcn_backward, rgcn_forward)
from .mlp import MLPHead, bce_with_logits
from .text import PAD, UNK, TextEncoder, lstm_backward, lstm_forward, split_blocks

__all__ = [
    "EncoderError", "GraphEncoder", "MLPHead", "PAD", "TextEncoder", "UNK",
    "bce_with_logits", "lstm_backward", "lstm_forward", "pool_backward",
    "pool_codes", "rgcn_backward", "rgcn_forward", "split_blocks",
]
