"""Sklearn-style compressor estimators.

Each compressor is a transformer over Checkpoint objects: fit() learns
whatever statistics the method needs (only Wanda needs any), transform()
returns a new compressed checkpoint. get_params/set_params come from
sklearn's BaseEstimator, so compressors clone and grid-search like any
other estimator.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ..errors import ConfigurationError
from ..model import Checkpoint
from .prune import apply_prune, calibrate
from .quant import activation_transform_for, apply_quant
from .specs import PruneSpec, QuantSpec, spec_from_dict


class BaseCompressor(BaseEstimator, TransformerMixin):
    """Common surface: fit(ckpt) -> self, transform(ckpt) -> Checkpoint."""

    def fit(self, X: Checkpoint, y=None, **fit_params):
        return self

    def activation_transform(self):
        """Per-tensor forward-pass transform, or None if not applicable."""
        return None


class IdentityCompressor(BaseCompressor):
    def transform(self, X: Checkpoint) -> Checkpoint:
        return X


class MagnitudePruner(BaseCompressor):
    def __init__(self, ratio: float = 0.5, granularity: str = "per_layer",
                 targets: str = "projections"):
        self.ratio = ratio
        self.granularity = granularity
        self.targets = targets

    def _spec(self) -> PruneSpec:
        return PruneSpec(method="magnitude", ratio=self.ratio,
                         granularity=self.granularity, targets=self.targets)

    def transform(self, X: Checkpoint) -> Checkpoint:
        return apply_prune(X, self._spec())


class RandomPruner(BaseCompressor):
    def __init__(self, ratio: float = 0.1, seed: int = 0,
                 targets: str = "projections"):
        self.ratio = ratio
        self.seed = seed
        self.targets = targets

    def _spec(self) -> PruneSpec:
        return PruneSpec(method="random", ratio=self.ratio, seed=self.seed,
                         targets=self.targets)

    def transform(self, X: Checkpoint) -> Checkpoint:
        return apply_prune(X, self._spec())


class WandaPruner(BaseCompressor):
    """Needs calibration sequences at fit time to collect column norms."""

    def __init__(self, ratio: float = 0.5, targets: str = "projections"):
        self.ratio = ratio
        self.targets = targets

    def fit(self, X: Checkpoint, y=None, calib: Optional[Sequence] = None):
        if calib is None:
            raise ConfigurationError("WandaPruner.fit requires calib sequences")
        self.norms_ = calibrate(X, calib)
        return self

    def _spec(self) -> PruneSpec:
        return PruneSpec(method="wanda", ratio=self.ratio, targets=self.targets)

    def transform(self, X: Checkpoint) -> Checkpoint:
        if not hasattr(self, "norms_"):
            raise NotFittedError("WandaPruner must be fit with calibration data")
        return apply_prune(X, self._spec(), norms=self.norms_)


class GroupQuantizer(BaseCompressor):
    """Per-group weight fake quantization, optionally mixed precision and
    per-token activation quantization."""

    def __init__(self, weight_bits: int = 4, group_size: int = 128,
                 activation_bits: Optional[int] = None,
                 salient_fraction: float = 0.0, salient_bits: int = 8,
                 saliency_metric: str = "max_abs"):
        self.weight_bits = weight_bits
        self.group_size = group_size
        self.activation_bits = activation_bits
        self.salient_fraction = salient_fraction
        self.salient_bits = salient_bits
        self.saliency_metric = saliency_metric

    def _spec(self) -> QuantSpec:
        return QuantSpec(
            weight_bits=self.weight_bits,
            group_size=self.group_size,
            activation_bits=self.activation_bits,
            salient_fraction=self.salient_fraction,
            salient_bits=self.salient_bits,
            saliency_metric=self.saliency_metric,
        )

    def transform(self, X: Checkpoint) -> Checkpoint:
        return apply_quant(X, self._spec())

    def activation_transform(self):
        return activation_transform_for(self._spec())


def compressor_from_spec(spec) -> BaseCompressor:
    """Build an estimator from a PruneSpec/QuantSpec/None or a spec dict."""
    if isinstance(spec, dict):
        spec = spec_from_dict(spec)
    if spec is None:
        return IdentityCompressor()
    if isinstance(spec, PruneSpec):
        if spec.method == "magnitude":
            return MagnitudePruner(ratio=spec.ratio, granularity=spec.granularity,
                                   targets=spec.targets)
        if spec.method == "random":
            return RandomPruner(ratio=spec.ratio, seed=spec.seed,
                                targets=spec.targets)
        return WandaPruner(ratio=spec.ratio, targets=spec.targets)
    if isinstance(spec, QuantSpec):
        return GroupQuantizer(
            weight_bits=spec.weight_bits,
            group_size=spec.group_size,
            activation_bits=spec.activation_bits,
            salient_fraction=spec.salient_fraction,
            salient_bits=spec.salient_bits,
            saliency_metric=spec.saliency_metric,
        )
    raise ConfigurationError(f"cannot build a compressor from {spec!r}")
