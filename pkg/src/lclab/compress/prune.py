"""Zero-shot unstructured pruning passes: magnitude, Wanda, random.

All three zero exactly floor(ratio * group_size) entries per comparison
group and leave every surviving weight bit-identical. Ties are broken by
pruning the lower flat/column index first; any fixed rule would do, this
one reproduces everywhere.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, DimensionError
from ..model import Checkpoint, forward, projection_names
from ..model.rng import Xoshiro256StarStar, stream_seed
from .specs import PruneSpec

CalibrationNorms = dict  # weight-matrix name -> column L2 norm vector


def calibrate(ckpt: Checkpoint, calib: Sequence[Sequence[int]]) -> CalibrationNorms:
    """Column L2 norms of the linear-layer inputs over all calibration tokens.

    For each projection matrix, accumulates the squared activations of
    every token of every sequence per input column and returns square
    roots. Deterministic: sequences are visited in order and sums are
    accumulated in float64.
    """
    if not calib:
        raise ConfigurationError("calibration set is empty")
    sums: dict[str, np.ndarray] = {}

    def hook(name: str, x: np.ndarray) -> None:
        sq = np.sum(np.square(x.astype(np.float64)), axis=0)
        if name in sums:
            sums[name] += sq
        else:
            sums[name] = sq

    for seq in calib:
        forward(ckpt, seq, activation_hook=hook)
    return {name: np.sqrt(s) for name, s in sums.items()}


def _prune_lowest(w: np.ndarray, scores: np.ndarray, ratio: float, per_row: bool):
    """Zero the floor(ratio*size) lowest-score entries per group."""
    out = w.copy()
    if per_row:
        n = w.shape[1]
        k = int(ratio * n)
        if k:
            order = np.argsort(scores, axis=1, kind="stable")[:, :k]
            rows = np.arange(w.shape[0])[:, None]
            out[rows, order] = 0.0
    else:
        k = int(ratio * w.size)
        if k:
            order = np.argsort(scores.reshape(-1), kind="stable")[:k]
            out.reshape(-1)[order] = 0.0
    return out


def prune_magnitude(w: np.ndarray, ratio: float, granularity: str = "per_layer"):
    """Zero the smallest-|w| entries within each comparison group."""
    if not 0.0 <= ratio < 1.0:
        raise ConfigurationError("ratio must be in [0, 1)")
    if granularity not in ("per_row", "per_layer"):
        raise ConfigurationError(f"unknown granularity {granularity!r}")
    return _prune_lowest(w, np.abs(w), ratio, per_row=granularity == "per_row")


def prune_wanda(w: np.ndarray, col_norms: np.ndarray, ratio: float):
    """Per output row, zero the entries with lowest |W_ij| * col_norm_j."""
    if not 0.0 <= ratio < 1.0:
        raise ConfigurationError("ratio must be in [0, 1)")
    col_norms = np.asarray(col_norms)
    if w.ndim != 2 or col_norms.shape != (w.shape[1],):
        raise DimensionError(
            f"col_norms length {col_norms.shape} does not match "
            f"weight input dimension {w.shape}"
        )
    scores = np.abs(w) * col_norms[None, :]
    return _prune_lowest(w, scores, ratio, per_row=True)


def prune_random(w: np.ndarray, ratio: float, seed: int):
    """Zero exactly floor(ratio*numel) entries via a seeded Fisher-Yates."""
    if not 0.0 <= ratio < 1.0:
        raise ConfigurationError("ratio must be in [0, 1)")
    out = w.copy()
    flat = out.reshape(-1)
    n = flat.size
    k = int(ratio * n)
    if k:
        rng = Xoshiro256StarStar(seed)
        idx = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + rng.randint_below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        flat[idx[:k]] = 0.0
    return out


def apply_prune(
    ckpt: Checkpoint,
    spec: PruneSpec,
    norms: Optional[CalibrationNorms] = None,
) -> Checkpoint:
    """Prune every targeted weight matrix of a checkpoint.

    By default only attention and feed-forward projections are touched;
    spec.targets="all" extends to the embedding and output head.
    """
    if spec.method == "wanda" and norms is None:
        raise ConfigurationError("wanda pruning requires calibration norms")
    names = list(projection_names(ckpt.config))
    if spec.targets == "all":
        names += ["tok_embed", "lm_head"]
    new = {}
    for name in names:
        w = ckpt.tensors[name]
        if spec.method == "magnitude":
            new[name] = prune_magnitude(w, spec.ratio, spec.granularity)
        elif spec.method == "wanda":
            if name not in norms:
                raise ConfigurationError(f"no calibration norms for {name}")
            new[name] = prune_wanda(w, norms[name], spec.ratio)
        else:
            # Independent mask per matrix: fold the name into the seed.
            new[name] = prune_random(w, spec.ratio, stream_seed(spec.seed, name))
    return ckpt.replace_tensors(new)
