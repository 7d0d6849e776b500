"""Toy decoder-only transformer forward pass (LLaMA-style, no biases).

Bitwise prefix consistency is a hard requirement: logits at position i
must be identical whether the model sees i+1 tokens or the full
sequence. BLAS results for a given row are NOT stable under a changing
row count (an m=1 product takes a different kernel path than the same
row inside a larger matmul), so every matrix product here runs on
fixed-size row blocks of BLOCK tokens, padded with zeros, and the
attention reduction over keys is chunked on absolute key-block
boundaries and accumulated left to right. Every BLAS call therefore has
shapes independent of the sequence length, which makes per-position
results independent of how much context follows.

Activation observation points (for pruning calibration) and activation
transforms (for fake activation quantization) sit at the inputs of the
linear layers, visited in a fixed order per layer:
wq, wk, wv, wo, w_gate, w_up, w_down.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ContextLengthError, IngestionError
from .checkpoint import Checkpoint
from .config import NORM_EPS
from ..tensor_ops import rope_angles

BLOCK = 128

Hook = Callable[[str, np.ndarray], None]
Transform = Callable[[str, np.ndarray], np.ndarray]


def _pad_rows(x: np.ndarray, t_pad: int) -> np.ndarray:
    out = np.zeros((t_pad,) + x.shape[1:], dtype=np.float32)
    out[: x.shape[0]] = x
    return out


def _linear_blocked(x_pad: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x @ w.T with one constant-shape GEMM per BLOCK-row slab."""
    t_pad = x_pad.shape[0]
    out = np.empty((t_pad, w.shape[0]), dtype=np.float32)
    wt = w.T
    for s in range(0, t_pad, BLOCK):
        out[s : s + BLOCK] = x_pad[s : s + BLOCK] @ wt
    return out


def _rms_norm_rows(x_pad: np.ndarray, gain: np.ndarray) -> np.ndarray:
    ms = np.mean(np.square(x_pad), axis=1, keepdims=True)
    return (x_pad / np.sqrt(ms + np.float32(NORM_EPS))) * gain


def _tap(
    name: str,
    x_pad: np.ndarray,
    t: int,
    hook: Optional[Hook],
    transform: Optional[Transform],
) -> np.ndarray:
    """Run the observer and/or transform on the unpadded rows."""
    if hook is None and transform is None:
        return x_pad
    view = x_pad[:t]
    if hook is not None:
        hook(name, view)
    if transform is not None:
        new = np.asarray(transform(name, view), dtype=np.float32)
        if new.shape != view.shape:
            raise ValueError(f"activation transform changed shape at {name}")
        x_pad = _pad_rows(new, x_pad.shape[0])
    return x_pad


def _causal_attention_head(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, t: int
) -> np.ndarray:
    """One attention head over padded [t_pad, d_head] streams.

    Key chunks are addressed by absolute block index and folded left to
    right, so position i sees an identical computation at every padded
    length.
    """
    t_pad, d_head = q.shape
    nb = t_pad // BLOCK
    scale = np.float32(1.0 / np.sqrt(d_head))
    qs = q * scale
    out = np.empty_like(q)
    tri = np.triu(np.ones((BLOCK, BLOCK), dtype=bool), k=1)
    col_idx = np.arange(t_pad)
    for qb in range(nb):
        width = (qb + 1) * BLOCK
        qblk = qs[qb * BLOCK : (qb + 1) * BLOCK]
        scores = np.empty((BLOCK, width), dtype=np.float32)
        for kb in range(qb + 1):
            scores[:, kb * BLOCK : (kb + 1) * BLOCK] = (
                qblk @ k[kb * BLOCK : (kb + 1) * BLOCK].T
            )
        scores[:, -BLOCK:][tri] = -np.inf  # causal mask, diagonal block
        scores[:, col_idx[:width] >= t] = -np.inf  # padding keys
        rowmax = np.max(scores, axis=1, keepdims=True)
        e = np.exp(scores - rowmax)
        chunk_sums = e.reshape(BLOCK, qb + 1, BLOCK).sum(axis=2)
        total = chunk_sums[:, 0].copy()
        for c in range(1, qb + 1):
            total = total + chunk_sums[:, c]
        total = np.where(total > 0.0, total, np.float32(1.0))
        a = e / total[:, None]
        acc = np.zeros((BLOCK, d_head), dtype=np.float32)
        for kb in range(qb + 1):
            acc = acc + a[:, kb * BLOCK : (kb + 1) * BLOCK] @ v[
                kb * BLOCK : (kb + 1) * BLOCK
            ]
        out[qb * BLOCK : (qb + 1) * BLOCK] = acc
    return out


def forward(
    ckpt: Checkpoint,
    tokens: Sequence[int],
    activation_hook: Optional[Hook] = None,
    activation_transform: Optional[Transform] = None,
) -> np.ndarray:
    """Pre-softmax logits at every position, shape [t, vocab_size].

    Deterministic: identical inputs give bit-identical logits, and the
    logits for a prefix equal the leading rows for the full sequence.
    """
    cfg = ckpt.config
    tokens = list(tokens)
    t = len(tokens)
    if t == 0:
        raise IngestionError("token sequence is empty")
    if t > cfg.max_context:
        raise ContextLengthError(
            f"sequence of {t} tokens exceeds max_context {cfg.max_context}"
        )
    for tid in tokens:
        if not 0 <= tid < cfg.vocab_size:
            raise IngestionError(f"token id {tid} outside vocabulary")

    t_pad = -(-t // BLOCK) * BLOCK
    ids = np.asarray(tokens, dtype=np.int64)
    x = _pad_rows(ckpt.tensors["tok_embed"][ids], t_pad)

    positions = np.arange(t_pad)
    ang = rope_angles(positions, cfg.d_head, cfg.rope_theta)
    cos = np.cos(ang).astype(np.float32)
    sin = np.sin(ang).astype(np.float32)

    def rope(h: np.ndarray) -> np.ndarray:
        even, odd = h[:, 0::2], h[:, 1::2]
        out = np.empty_like(h)
        out[:, 0::2] = even * cos - odd * sin
        out[:, 1::2] = even * sin + odd * cos
        return out

    for layer in range(cfg.n_layers):
        p = f"layers.{layer}"
        xn = _rms_norm_rows(x, ckpt.tensors[f"{p}.attn_norm"])
        xn = _tap(f"{p}.attn.wq", xn, t, activation_hook, activation_transform)
        xn = _tap(f"{p}.attn.wk", xn, t, activation_hook, None)
        xn = _tap(f"{p}.attn.wv", xn, t, activation_hook, None)
        q = _linear_blocked(xn, ckpt.tensors[f"{p}.attn.wq"])
        k = _linear_blocked(xn, ckpt.tensors[f"{p}.attn.wk"])
        v = _linear_blocked(xn, ckpt.tensors[f"{p}.attn.wv"])
        heads = []
        for h in range(cfg.n_heads):
            sl = slice(h * cfg.d_head, (h + 1) * cfg.d_head)
            heads.append(
                _causal_attention_head(rope(q[:, sl]), rope(k[:, sl]), v[:, sl], t)
            )
        attn = np.concatenate(heads, axis=1)
        attn = _tap(f"{p}.attn.wo", attn, t, activation_hook, activation_transform)
        x = x + _linear_blocked(attn, ckpt.tensors[f"{p}.attn.wo"])

        xn = _rms_norm_rows(x, ckpt.tensors[f"{p}.ffn_norm"])
        xn = _tap(f"{p}.ffn.w_gate", xn, t, activation_hook, activation_transform)
        xn = _tap(f"{p}.ffn.w_up", xn, t, activation_hook, None)
        g = _linear_blocked(xn, ckpt.tensors[f"{p}.ffn.w_gate"])
        u = _linear_blocked(xn, ckpt.tensors[f"{p}.ffn.w_up"])
        act = (g / (np.float32(1.0) + np.exp(-g))) * u  # SwiGLU
        act = _tap(f"{p}.ffn.w_down", act, t, activation_hook, activation_transform)
        x = x + _linear_blocked(act, ckpt.tensors[f"{p}.ffn.w_down"])

    xn = _rms_norm_rows(x, ckpt.tensors["final_norm"])
    logits = _linear_blocked(xn, ckpt.tensors["lm_head"])
    return logits[:t]
