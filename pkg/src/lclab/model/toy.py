"""Deterministic toy-model generator.

Weights are N(0, 0.02^2) draws from the documented splitmix64-seeded
xoshiro256** stream (see rng.py), with one independent stream per tensor
name so the result does not depend on generation order.

Projection matrices additionally get a small fraction of large-magnitude
outliers (default 0.5% of entries scaled x20). A pure Gaussian init has
no heavy tail, and the mixed-precision remedy studied here only bites
when some weight groups carry much larger magnitudes than the rest.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .checkpoint import Checkpoint
from .config import ModelConfig, expected_tensor_shapes, projection_names
from .rng import Xoshiro256StarStar, stream_seed

WEIGHT_STD = 0.02


def _outlier_indices(rng: Xoshiro256StarStar, numel: int, count: int) -> np.ndarray:
    """First `count` elements of a seeded Fisher-Yates shuffle of 0..numel-1."""
    idx = np.arange(numel, dtype=np.int64)
    for i in range(count):
        j = i + rng.randint_below(numel - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:count]


def gen_toy_model(
    config: ModelConfig,
    seed: int,
    outlier_fraction: float = 0.005,
    outlier_scale: float = 20.0,
) -> Checkpoint:
    """Generate a random desk-scale checkpoint, bit-identical per (config, seed)."""
    if not 0.0 <= outlier_fraction < 1.0:
        raise ConfigurationError("outlier_fraction must be in [0, 1)")
    shapes = expected_tensor_shapes(config)
    outlier_targets = set(projection_names(config))
    tensors: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name.endswith("_norm"):
            tensors[name] = np.ones(shape, dtype=np.float32)
            continue
        rng = Xoshiro256StarStar(stream_seed(seed, name))
        numel = int(np.prod(shape))
        w = rng.normals(numel) * WEIGHT_STD
        if name in outlier_targets and outlier_fraction > 0.0:
            count = int(numel * outlier_fraction)
            if count > 0:
                # Outlier draws come from the same stream, after the weights.
                idx = _outlier_indices(rng, numel, count)
                w[idx] *= outlier_scale
        tensors[name] = w.astype(np.float32).reshape(shape)
    return Checkpoint(config=config, tensors=tensors)
