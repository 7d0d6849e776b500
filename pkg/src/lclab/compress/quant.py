"""Fake quantization: per-group weights, per-token activations, and the
mixed-precision salient-group remedy.

Everything is quantize -> dequantize in real arithmetic: the point is to
inject rounding error and measure it, not to run integer kernels.

Bit-exact idempotence matters (fake quantization must be a projection),
so dequantization is written as maxabs * (q / Q) rather than scale * q:
q = +/-Q reconstructs maxabs exactly, which makes a second pass recover
the identical scale and codes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InputError
from ..model import Checkpoint, projection_names
from .specs import QuantSpec, WEIGHT_BITS


def _qmax(bits: int) -> int:
    return 2 ** (bits - 1) - 1


@dataclass
class QuantizedGroup:
    """One symmetric group: dequantized value = scale * q."""

    scale: float
    q: np.ndarray  # integers in [-(2^{b-1}-1), 2^{b-1}-1]
    bits: int

    def dequantize(self) -> np.ndarray:
        qmax = _qmax(self.bits)
        return (self.scale * qmax) * (self.q.astype(np.float64) / qmax)


def quantize_group(w, bits: int) -> QuantizedGroup:
    """Symmetric quantization of one group: scale = max|w| / (2^{b-1}-1),
    q = round-half-to-even(w/scale) clamped. All-zero group -> scale 0."""
    if bits not in WEIGHT_BITS:
        raise ConfigurationError(f"bits must be one of {WEIGHT_BITS}")
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise InputError("group contains non-finite values")
    qmax = _qmax(bits)
    maxabs = float(np.max(np.abs(w))) if w.size else 0.0
    if maxabs == 0.0:
        return QuantizedGroup(scale=0.0, q=np.zeros(w.shape, dtype=np.int32), bits=bits)
    scale = maxabs / qmax
    q = np.clip(np.rint(w / scale), -qmax, qmax).astype(np.int32)
    return QuantizedGroup(scale=scale, q=q, bits=bits)


def _fake_quant_block(x: np.ndarray, bits: int) -> np.ndarray:
    """Vectorized quantize->dequantize over the last axis (one group each).

    Input/output float64; groups with all zeros pass through as zeros.
    """
    qmax = _qmax(bits)
    maxabs = np.max(np.abs(x), axis=-1, keepdims=True)
    safe = np.where(maxabs > 0.0, maxabs, 1.0)
    q = np.clip(np.rint(x / (safe / qmax)), -qmax, qmax)
    return maxabs * (q / qmax)


def _group_view(w: np.ndarray, group_size: int):
    """Split rows into (full-groups view, tail view); tail may be empty."""
    rows, cols = w.shape
    n_full = cols // group_size
    full = w[:, : n_full * group_size].reshape(rows, n_full, group_size)
    tail = w[:, n_full * group_size :]
    return full, tail


def quantize_weights(w: np.ndarray, spec: QuantSpec) -> np.ndarray:
    """Fake-quantize a [out, in] matrix per group along the input dimension.

    The last partial group of each row is allowed. Honors
    spec.salient_fraction by delegating to quantize_mixed.
    """
    if spec.salient_fraction > 0.0:
        return quantize_mixed(w, spec)
    return _quantize_uniform(w, spec.weight_bits, spec.group_size)


def _quantize_uniform(w: np.ndarray, bits: int, group_size: int) -> np.ndarray:
    if w.ndim != 2:
        raise ConfigurationError("weight quantization expects a 2-D matrix")
    dtype = w.dtype
    x = w.astype(np.float64)
    full, tail = _group_view(x, group_size)
    out = np.empty_like(x)
    rows, cols = x.shape
    n_full = cols // group_size
    if n_full:
        out[:, : n_full * group_size] = _fake_quant_block(full, bits).reshape(
            rows, n_full * group_size
        )
    if tail.shape[1]:
        out[:, n_full * group_size :] = _fake_quant_block(tail, bits)
    return out.astype(dtype)


def group_metrics(w: np.ndarray, group_size: int, metric: str = "max_abs") -> np.ndarray:
    """Per-group magnitude, groups enumerated row-major (row by row)."""
    x = np.abs(np.asarray(w, dtype=np.float64))
    full, tail = _group_view(x, group_size)
    if metric == "max_abs":
        vals = [full.max(axis=2)] if full.shape[1] else []
        if tail.shape[1]:
            vals.append(tail.max(axis=1, keepdims=True))
    elif metric == "l2":
        vals = [np.sqrt(np.sum(full**2, axis=2))] if full.shape[1] else []
        if tail.shape[1]:
            vals.append(np.sqrt(np.sum(tail**2, axis=1, keepdims=True)))
    else:
        raise ConfigurationError(f"unknown saliency metric {metric!r}")
    return np.concatenate(vals, axis=1).reshape(-1)


def select_salient_groups(
    w: np.ndarray, group_size: int, fraction: float, metric: str = "max_abs"
) -> np.ndarray:
    """Indices of the top ceil(fraction * n_groups) groups by magnitude.

    Ties select the lower group index first. Returns a sorted index array.
    """
    if not 0.0 <= fraction < 1.0:
        raise ConfigurationError("fraction must be in [0, 1)")
    metrics = group_metrics(w, group_size, metric)
    n_groups = metrics.size
    count = int(np.ceil(fraction * n_groups))
    if count == 0:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(-metrics, kind="stable")[:count]
    return np.sort(order)


def quantize_mixed(w: np.ndarray, spec: QuantSpec) -> np.ndarray:
    """Salient groups at spec.salient_bits, the rest at spec.weight_bits."""
    if spec.salient_fraction == 0.0:
        return _quantize_uniform(w, spec.weight_bits, spec.group_size)
    salient = select_salient_groups(
        w, spec.group_size, spec.salient_fraction, spec.saliency_metric
    )
    low = _quantize_uniform(w, spec.weight_bits, spec.group_size)
    high = _quantize_uniform(w, spec.salient_bits, spec.group_size)
    n_per_row = -(-w.shape[1] // spec.group_size)
    # Expand group mask to element mask (row-major groups, tail included).
    elem = np.zeros(w.shape, dtype=bool)
    for g in salient:
        r, c = divmod(int(g), n_per_row)
        elem[r, c * spec.group_size : (c + 1) * spec.group_size] = True
    return np.where(elem, high, low)


def quantize_activations_per_token(x: np.ndarray, bits: int = 8) -> np.ndarray:
    """Asymmetric min-max fake quantization, one grid per row (token).

    Degenerate constant rows are returned unchanged. The grid is
    anchored so row min and max reconstruct exactly, making the
    transform a bit-exact projection.
    """
    if bits != 8:
        raise ConfigurationError("activation quantization supports 8 bits")
    x = np.atleast_2d(x)
    dtype = x.dtype
    levels = 2**bits - 1
    xf = x.astype(np.float64)
    mn = xf.min(axis=1, keepdims=True)
    mx = xf.max(axis=1, keepdims=True)
    span = mx - mn
    safe = np.where(span > 0.0, span, 1.0)
    scale = safe / levels
    xq = np.clip(np.rint((xf - mn) / scale), 0, levels)
    frac = xq / levels
    deq = np.clip(mn * (1.0 - frac) + mx * frac, mn, mx)
    out = np.where(span > 0.0, deq, xf).astype(dtype)
    return out.reshape(x.shape)


def apply_quant(ckpt: Checkpoint, spec: QuantSpec) -> Checkpoint:
    """Fake-quantize every projection matrix of a checkpoint."""
    new = {}
    for name in projection_names(ckpt.config):
        new[name] = quantize_weights(ckpt.tensors[name], spec)
    return ckpt.replace_tensors(new)


def activation_transform_for(spec: QuantSpec):
    """Forward-pass transform realizing weight-activation quantization mode."""
    if spec.activation_bits is None:
        return None
    bits = spec.activation_bits

    def transform(name: str, x: np.ndarray) -> np.ndarray:
        return quantize_activations_per_token(x, bits)

    return transform
