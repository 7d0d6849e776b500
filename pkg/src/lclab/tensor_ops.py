"""Minimal dense-tensor kernels for the toy transformer.

Tensors are plain numpy float32 arrays. No broadcasting: every operand
shape is explicit, which keeps the bug surface of a verification tool
small. All functions are pure and safe to call from multiple threads.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DimensionError, InputError

FLOAT = np.float32


def as_tensor(data, shape=None) -> np.ndarray:
    """Build a float32 tensor from external input, rejecting NaN/Inf.

    `shape` optionally reshapes the flat row-major data.
    """
    arr = np.asarray(data, dtype=FLOAT)
    if shape is not None:
        expected = int(np.prod(shape))
        if arr.size != expected:
            raise DimensionError(
                f"data has {arr.size} elements, shape {tuple(shape)} needs {expected}"
            )
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise InputError("tensor contains non-finite values")
    return arr


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two 2-D float32 tensors.

    Accumulation happens in at least 32-bit precision; identical inputs
    produce bit-identical output run to run.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return np.matmul(a.astype(FLOAT, copy=False), b.astype(FLOAT, copy=False))


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction.

    Stable for logits up to around +/-40, which the context sweep produces.
    """
    x = np.atleast_2d(np.asarray(x, dtype=FLOAT))
    m = np.max(x, axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=1, keepdims=True)


def rms_norm(x: np.ndarray, gain: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """RMS normalization of a vector (or row-wise for a 2-D input).

    y_i = gain_i * x_i / sqrt(mean(x^2) + eps)
    """
    if eps <= 0:
        raise ConfigurationError("eps must be positive")
    x = np.asarray(x, dtype=FLOAT)
    gain = np.asarray(gain, dtype=FLOAT)
    if x.shape[-1] != gain.shape[-1]:
        raise DimensionError("gain length must match the normalized dimension")
    ms = np.mean(np.square(x), axis=-1, keepdims=True)
    return (x / np.sqrt(ms + FLOAT(eps))) * gain


def rope_angles(positions: np.ndarray, d_head: int, theta: float) -> np.ndarray:
    """Rotation angles per (position, pair): pos * theta**(-2j/d_head)."""
    if d_head % 2 != 0:
        raise ConfigurationError("head dimension must be even for rotary embedding")
    j = np.arange(d_head // 2, dtype=np.float64)
    freqs = np.power(float(theta), -2.0 * j / d_head)
    return np.asarray(positions, dtype=np.float64)[:, None] * freqs[None, :]


def rope_apply(x: np.ndarray, positions, theta: float = 10000.0) -> np.ndarray:
    """Rotate consecutive pairs (x_2j, x_2j+1) by position-dependent angles.

    Preserves the L2 norm of every pair. Positions must be non-negative.
    """
    x = np.asarray(x, dtype=FLOAT)
    if x.ndim != 2:
        raise DimensionError("rope_apply expects a [t, d_head] tensor")
    t, d_head = x.shape
    positions = np.asarray(positions)
    if positions.shape != (t,):
        raise DimensionError("need exactly one position per row")
    if np.any(positions < 0):
        raise ConfigurationError("positions must be non-negative")
    ang = rope_angles(positions, d_head, theta)
    cos = np.cos(ang).astype(FLOAT)
    sin = np.sin(ang).astype(FLOAT)
    even = x[:, 0::2]
    odd = x[:, 1::2]
    out = np.empty_like(x)
    out[:, 0::2] = even * cos - odd * sin
    out[:, 1::2] = even * sin + odd * cos
    return out
